//! Translation semigroups that spread a seed ball over compact targets.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bump::BumpTranslation;
use crate::cover::{covering_constant, simplex_directions, Region};
use crate::error::{Error, Result};
use crate::fiber::FiberMap;
use crate::linalg::Vector;
use crate::skew::OneStepSystem;

/// Default translation length `0.9·ε·κ_c`.
pub fn default_translation_length(c: usize, eps: f64) -> Result<f64> {
    Ok(0.9 * eps * covering_constant(&simplex_directions(c)?)?)
}

fn local_bump(u0: &Region, eps: f64, vector: Vector) -> Result<BumpTranslation> {
    let hamiltonian = vector.len() % 2 == 0;
    match u0 {
        Region::Ball { center, radius } => {
            BumpTranslation::new(center.clone(), radius + eps, radius + 2.0 * eps, vector, hamiltonian)
        }
        Region::Box {
            center,
            half_widths,
        } => BumpTranslation::with_box(center.clone(), half_widths.clone(), eps, 2.0 * eps, vector, hamiltonian),
    }
}

/// `c+1` bump translations along simplex directions: translation by `δ·uᵢ`
/// on the `ε`-neighbourhood of `U0`, identity outside its `2ε`-neighbourhood.
/// Hamiltonian in even dimension. `delta` defaults to `0.9·ε·κ_c`.
pub fn local_translation_family(u0: &Region, eps: f64, delta: Option<f64>) -> Result<Vec<FiberMap>> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Param(format!("eps must be positive, got {eps}")));
    }
    let c = u0.dimension();
    let delta = match delta {
        Some(d) => d,
        None => default_translation_length(c, eps)?,
    };
    simplex_directions(c)?
        .into_iter()
        .map(|u| local_bump(u0, eps, u * delta).map(FiberMap::BumpTranslation))
        .collect()
}

/// Chart balls grouped in classes with pairwise disjoint supports, and one
/// glued translation family per class and direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartFamily {
    pub eps: f64,
    pub delta: f64,
    pub classes: Vec<Vec<Region>>,
    pub generators: Vec<FiberMap>,
    /// Translation directions per chart (`m`), so `generators = classes · m`.
    pub directions: usize,
}

/// Lattice geometry: spacing, chart radius, and the coloring of lattice
/// points. Plateau radius `ρ+ε` exceeds the covering radius of the lattice;
/// support radius `ρ+2ε` stays below half the same-class distance.
struct Layout {
    basis: Vec<Vector>,
    rho: f64,
    classes: usize,
    color: fn(&[i64]) -> usize,
}

fn layout(c: usize, eps: f64) -> Result<Layout> {
    match c {
        1 => Ok(Layout {
            basis: vec![Vector::from_element(1, 3.0 * eps)],
            rho: 0.75 * eps,
            classes: 2,
            color: |k| k[0].rem_euclid(2) as usize,
        }),
        2 => {
            let s = 5.0 * eps;
            Ok(Layout {
                basis: vec![
                    Vector::from_row_slice(&[s, 0.0]),
                    Vector::from_row_slice(&[0.5 * s, 0.5 * 3f64.sqrt() * s]),
                ],
                rho: 2.25 * eps,
                classes: 3,
                color: |k| (k[0] - k[1]).rem_euclid(3) as usize,
            })
        }
        3..=8 => {
            // Cubic lattice colored mod 3 per axis.
            let root = (c as f64).sqrt();
            let s = 1.5 * eps / (1.5 - root / 2.0);
            let basis = (0..c)
                .map(|i| {
                    let mut e = Vector::zeros(c);
                    e[i] = s;
                    e
                })
                .collect();
            Ok(Layout {
                basis,
                rho: s * root / 2.0 - 0.75 * eps,
                classes: 3usize.pow(c as u32),
                color: |k| k.iter().fold(0, |acc, x| acc * 3 + x.rem_euclid(3) as usize),
            })
        }
        _ => Err(Error::Dimension(format!("chart layouts are provided for c ≤ 8, got {c}"))),
    }
}

/// Covers the box `domain` by chart balls whose `ε`-neighbourhoods overlap,
/// colored so that same-class `2ε`-neighbourhoods are disjoint, and glues the
/// local translation families of each class.
pub fn chart_family_globalization(domain: &Region, eps: f64, delta: Option<f64>) -> Result<ChartFamily> {
    let Region::Box {
        center,
        half_widths,
    } = domain
    else {
        return Err(Error::Param("chart globalization needs a box domain".into()));
    };
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Param(format!("eps must be positive, got {eps}")));
    }
    let c = center.len();
    let delta = match delta {
        Some(d) => d,
        None => default_translation_length(c, eps)?,
    };
    let lay = layout(c, eps)?;
    let plateau = lay.rho + eps;
    // Lattice anchored at the box center; the range reaches every plateau touching the box.
    let reach = half_widths.norm() + plateau;
    let step = lay.basis.iter().map(|b| b.norm()).fold(f64::INFINITY, f64::min);
    let span = (reach / step).ceil() as i64 + 2;
    let mut classes: Vec<Vec<Region>> = vec![Vec::new(); lay.classes];
    let mut idx = vec![-span; c];
    loop {
        let mut p = center.clone();
        for (k, b) in idx.iter().zip(&lay.basis) {
            p += b * (*k as f64);
        }
        if domain.depth(&p) > -plateau {
            classes[(lay.color)(&idx)].push(Region::ball(p, lay.rho)?);
        }
        let mut i = 0;
        loop {
            if i == c {
                break;
            }
            idx[i] += 1;
            if idx[i] <= span {
                break;
            }
            idx[i] = -span;
            i += 1;
        }
        if i == c {
            break;
        }
    }
    classes.retain(|cl| !cl.is_empty());
    let dirs = simplex_directions(c)?;
    let mut generators = Vec::with_capacity(classes.len() * dirs.len());
    for class in &classes {
        for u in &dirs {
            let parts = class
                .iter()
                .map(|chart| local_bump(chart, eps, u * delta).map(FiberMap::BumpTranslation))
                .collect::<Result<Vec<_>>>()?;
            generators.push(if parts.len() == 1 {
                parts.into_iter().next().unwrap_or_else(|| FiberMap::identity(c))
            } else {
                FiberMap::compose(parts)?
            });
        }
    }
    Ok(ChartFamily {
        eps,
        delta,
        classes,
        generators,
        directions: dirs.len(),
    })
}

/// Smallest distance between supports of two charts in the same class.
pub fn class_separation(family: &ChartFamily) -> f64 {
    let support = |r: &Region| r.outer_radius() + 2.0 * family.eps;
    let mut best = f64::INFINITY;
    for class in &family.classes {
        for (i, a) in class.iter().enumerate() {
            for b in &class[..i] {
                let gap = (a.center() - b.center()).norm() - support(a) - support(b);
                best = best.min(gap);
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitDirection {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BfsOptions {
    /// Maximum number of stored states before failing with a budget error.
    pub budget: usize,
    /// Dedup cell size; defaults to a quarter of the seed radius.
    pub cell: Option<f64>,
    /// States whose centers leave this region are dropped.
    pub bounds: Option<Region>,
    /// States whose inner radius falls below this are dropped.
    pub min_radius: Option<f64>,
}

impl Default for BfsOptions {
    fn default() -> Self {
        Self {
            budget: 2_000_000,
            cell: None,
            bounds: None,
            min_radius: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Generator indices, 1-based, in application order.
    pub word: Vec<usize>,
    pub ball: Region,
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageOutcome {
    pub covered: bool,
    /// Smallest depth over target points of the deepest covering ball.
    pub margin: f64,
    pub witnesses: Vec<Option<Witness>>,
    pub uncovered: Vec<Vec<f64>>,
    pub states: usize,
    pub layers: usize,
}

struct Node {
    parent: u32,
    generator: u32,
    center: Vector,
    radius: f64,
}

/// Spatial buckets of target points for ball queries.
struct PointIndex {
    cell: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl PointIndex {
    fn new(points: &[Vector], cell: f64) -> Self {
        let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(key(p, cell)).or_default().push(i);
        }
        Self { cell, buckets }
    }

    fn near(&self, center: &Vector, radius: f64, mut f: impl FnMut(usize)) {
        let lo: Vec<i64> = center.iter().map(|x| ((x - radius) / self.cell).floor() as i64).collect();
        let hi: Vec<i64> = center.iter().map(|x| ((x + radius) / self.cell).floor() as i64).collect();
        let count: i128 = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as i128).product();
        if count > self.buckets.len() as i128 {
            for list in self.buckets.values() {
                list.iter().for_each(|&i| f(i));
            }
            return;
        }
        let mut k = lo.clone();
        loop {
            if let Some(list) = self.buckets.get(&k) {
                list.iter().for_each(|&i| f(i));
            }
            let mut i = 0;
            while i < k.len() {
                k[i] += 1;
                if k[i] <= hi[i] {
                    break;
                }
                k[i] = lo[i];
                i += 1;
            }
            if i == k.len() {
                break;
            }
        }
    }
}

fn key(p: &Vector, cell: f64) -> Vec<i64> {
    p.iter().map(|x| (x / cell).floor() as i64).collect()
}

/// Breadth-first orbit of a seed ball under a generator set (or the
/// inverses, for backward runs), tracked as sound inner balls.
pub fn semigroup_coverage(
    generators: &[FiberMap],
    seed: &Region,
    target: &[Vector],
    max_word_len: usize,
    direction: OrbitDirection,
    options: &BfsOptions,
) -> Result<CoverageOutcome> {
    if max_word_len == 0 {
        return Err(Error::Param("max_word_len must be at least 1".into()));
    }
    let Region::Ball {
        center: seed_center,
        radius: seed_radius,
    } = seed
    else {
        return Err(Error::Param("seed must be a ball".into()));
    };
    let gens: Vec<FiberMap> = match direction {
        OrbitDirection::Forward => generators.to_vec(),
        OrbitDirection::Backward => generators.iter().map(|g| g.inverse()).collect(),
    };
    let cell = options.cell.unwrap_or(seed_radius / 4.0);
    let min_radius = options.min_radius.unwrap_or(seed_radius / 8.0);
    let index = PointIndex::new(target, seed_radius.max(cell));
    let mut best: Vec<(f64, Option<u32>)> = vec![(f64::NEG_INFINITY, None); target.len()];
    let mut nodes: Vec<Node> = vec![Node {
        parent: u32::MAX,
        generator: u32::MAX,
        center: seed_center.clone(),
        radius: *seed_radius,
    }];
    // Largest radius stored per cell; a state is kept only if it beats it.
    let mut seen: HashMap<Vec<i64>, f64> = HashMap::new();
    seen.insert(key(seed_center, cell), *seed_radius);
    let record = |best: &mut Vec<(f64, Option<u32>)>, id: u32, center: &Vector, radius: f64| {
        index.near(center, radius, |i| {
            let d = radius - (&target[i] - center).norm();
            if d > best[i].0 {
                best[i] = (d, Some(id));
            }
        });
    };
    record(&mut best, 0, seed_center, *seed_radius);
    let mut frontier: Vec<u32> = vec![0];
    let mut layers = 0;
    let mut budget_hit = false;
    while layers < max_word_len && !frontier.is_empty() {
        if best.iter().all(|b| b.0 > 0.0) {
            break;
        }
        layers += 1;
        let children: Vec<(u32, u32, Vector, f64)> = frontier
            .par_iter()
            .flat_map_iter(|&id| {
                let node = &nodes[id as usize];
                gens.iter().enumerate().filter_map(move |(g, map)| {
                    let (c, r) = map.inner_image_ball(&node.center, node.radius);
                    (r >= min_radius && c.iter().all(|x| x.is_finite())).then_some((id, g as u32, c, r))
                })
            })
            .collect();
        let mut next = Vec::new();
        for (parent, g, c, r) in children {
            if let Some(b) = &options.bounds {
                if !b.contains_closed(&c) {
                    continue;
                }
            }
            let best_r = seen.entry(key(&c, cell)).or_insert(0.0);
            if r <= *best_r * (1.0 + 1e-9) {
                continue;
            }
            *best_r = r;
            if nodes.len() >= options.budget {
                budget_hit = true;
                break;
            }
            let id = nodes.len() as u32;
            record(&mut best, id, &c, r);
            nodes.push(Node {
                parent,
                generator: g,
                center: c,
                radius: r,
            });
            next.push(id);
        }
        if budget_hit {
            break;
        }
        frontier = next;
    }
    let word_of = |mut id: u32| {
        let mut w = Vec::new();
        while id != 0 {
            let n = &nodes[id as usize];
            w.push(n.generator as usize + 1);
            id = n.parent;
        }
        w.reverse();
        w
    };
    let witnesses: Vec<Option<Witness>> = best
        .iter()
        .map(|(d, id)| {
            id.filter(|_| *d > 0.0).map(|id| {
                let n = &nodes[id as usize];
                Witness {
                    word: word_of(id),
                    ball: Region::Ball {
                        center: n.center.clone(),
                        radius: n.radius,
                    },
                    depth: *d,
                }
            })
        })
        .collect();
    let uncovered: Vec<Vec<f64>> = best
        .iter()
        .zip(target)
        .filter(|(b, _)| b.0 <= 0.0)
        .map(|(_, p)| p.as_slice().to_vec())
        .collect();
    let margin = best.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
    let outcome = CoverageOutcome {
        covered: uncovered.is_empty(),
        margin: if target.is_empty() { f64::INFINITY } else { margin },
        witnesses,
        uncovered,
        states: nodes.len(),
        layers,
    };
    if budget_hit && !outcome.covered {
        return Err(Error::Budget {
            budget: options.budget,
            partial: Some(Box::new(outcome)),
        });
    }
    Ok(outcome)
}

/// Applies a witness word to a point, using inverses for backward runs.
pub fn replay_word(generators: &[FiberMap], word: &[usize], x: &Vector, direction: OrbitDirection) -> Vector {
    word.iter().fold(x.clone(), |acc, &g| match direction {
        OrbitDirection::Forward => generators[g - 1].apply(&acc),
        OrbitDirection::Backward => generators[g - 1].apply_inverse(&acc),
    })
}

/// The orbit of `B0` under all fiber maps covers the target net.
pub fn check_rt_condition(
    sys: &OneStepSystem,
    b0: &Region,
    k_net: &[Vector],
    n_max: usize,
    options: &BfsOptions,
) -> Result<CoverageOutcome> {
    semigroup_coverage(&sys.maps, b0, k_net, n_max, OrbitDirection::Forward, options)
}
