//! Regions, nets, and sampling-plus-Lipschitz certificates that families of
//! map images form open covers of a region's closure.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::FiberMap;
use crate::linalg::{Mat, Vector};

/// Number of failing net points kept as witnesses.
const MAX_WITNESSES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Ball {
        #[serde(with = "crate::serde_mat::vector")]
        center: Vector,
        radius: f64,
    },
    Box {
        #[serde(with = "crate::serde_mat::vector")]
        center: Vector,
        #[serde(with = "crate::serde_mat::vector")]
        half_widths: Vector,
    },
}

impl Region {
    pub fn ball(center: Vector, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || center.is_empty() {
            return Err(Error::Param(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Region::Ball { center, radius })
    }

    pub fn boxed(center: Vector, half_widths: Vector) -> Result<Self> {
        if center.len() != half_widths.len() || center.is_empty() {
            return Err(Error::Dimension("box center and half-widths differ in length".into()));
        }
        if half_widths.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::Param("box half-widths must be positive".into()));
        }
        Ok(Region::Box {
            center,
            half_widths,
        })
    }

    /// Box `[lo, hi]` given by corners.
    pub fn from_corners(lo: &[f64], hi: &[f64]) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension("corner lengths differ".into()));
        }
        let center = Vector::from_iterator(lo.len(), lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)));
        let hw = Vector::from_iterator(lo.len(), lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)));
        Self::boxed(center, hw)
    }

    pub fn dimension(&self) -> usize {
        self.center().len()
    }

    pub fn center(&self) -> &Vector {
        match self {
            Region::Ball { center, .. } | Region::Box { center, .. } => center,
        }
    }

    /// Distance from `p` to the complement when inside; negative outside.
    pub fn depth(&self, p: &Vector) -> f64 {
        match self {
            Region::Ball { center, radius } => radius - (p - center).norm(),
            Region::Box {
                center,
                half_widths,
            } => {
                let inside = (0..p.len())
                    .map(|i| half_widths[i] - (p[i] - center[i]).abs())
                    .fold(f64::INFINITY, f64::min);
                if inside >= 0.0 {
                    inside
                } else {
                    -(p - self.project(p)).norm()
                }
            }
        }
    }

    pub fn contains_closed(&self, p: &Vector) -> bool {
        match self {
            Region::Ball { center, radius } => (p - center).norm() <= *radius,
            Region::Box {
                center,
                half_widths,
            } => (0..p.len()).all(|i| (p[i] - center[i]).abs() <= half_widths[i]),
        }
    }

    pub fn contains_open(&self, p: &Vector) -> bool {
        match self {
            Region::Ball { center, radius } => (p - center).norm() < *radius,
            Region::Box {
                center,
                half_widths,
            } => (0..p.len()).all(|i| (p[i] - center[i]).abs() < half_widths[i]),
        }
    }

    /// Nearest point of the closure.
    pub fn project(&self, p: &Vector) -> Vector {
        match self {
            Region::Ball { center, radius } => {
                let d = p - center;
                let n = d.norm();
                if n <= *radius {
                    p.clone()
                } else {
                    // Rounding in `center + ...` can land just outside.
                    let mut t = radius / n;
                    let mut q = center + &d * t;
                    while (&q - center).norm() > *radius {
                        t *= 1.0 - 1e-14;
                        q = center + &d * t;
                    }
                    q
                }
            }
            Region::Box {
                center,
                half_widths,
            } => Vector::from_fn(p.len(), |i, _| {
                p[i].clamp(center[i] - half_widths[i], center[i] + half_widths[i])
            }),
        }
    }

    pub fn bounding_box(&self) -> (Vector, Vector) {
        match self {
            Region::Ball { center, radius } => (center.add_scalar(-radius), center.add_scalar(*radius)),
            Region::Box {
                center,
                half_widths,
            } => (center - half_widths, center + half_widths),
        }
    }

    /// Radius of the smallest ball about the center containing the region.
    pub fn outer_radius(&self) -> f64 {
        match self {
            Region::Ball { radius, .. } => *radius,
            Region::Box { half_widths, .. } => half_widths.norm(),
        }
    }

    /// Uniform sample of the closure by rejection from the bounding box.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vector {
        let (lo, hi) = self.bounding_box();
        loop {
            let p = Vector::from_fn(lo.len(), |i, _| rng.gen_range(lo[i]..=hi[i]));
            if self.contains_closed(&p) {
                return p;
            }
        }
    }

    pub fn translated(&self, shift: &Vector) -> Self {
        match self {
            Region::Ball { center, radius } => Region::Ball {
                center: center + shift,
                radius: *radius,
            },
            Region::Box {
                center,
                half_widths,
            } => Region::Box {
                center: center + shift,
                half_widths: half_widths.clone(),
            },
        }
    }
}

/// Points of the region's closure such that every closure point lies within
/// `h` of one of them.
pub fn make_net(region: &Region, h: f64) -> Result<Vec<Vector>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Param(format!("net spacing must be positive, got {h}")));
    }
    let c = region.dimension();
    let (lo, hi) = region.bounding_box();
    // Grid cells of side `s` have half-diagonal `h`.
    let s = 2.0 * h / (c as f64).sqrt();
    let counts: Vec<usize> = (0..c)
        .map(|i| ((hi[i] - lo[i]) / s).floor() as usize + 2)
        .collect();
    let total: usize = counts.iter().product();
    let mut net = Vec::with_capacity(total);
    let mut idx = vec![0usize; c];
    for _ in 0..total {
        let g = Vector::from_fn(c, |i, _| {
            let n = counts[i];
            lo[i] + (hi[i] - lo[i]) * idx[i] as f64 / (n - 1) as f64
        });
        let p = region.project(&g);
        if (&p - &g).norm() <= h {
            net.push(p);
        }
        for i in 0..c {
            idx[i] += 1;
            if idx[i] < counts[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok(net)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCertificate {
    pub pass: bool,
    pub margin: f64,
    pub net_spacing: f64,
    pub lipschitz_bound: f64,
    pub witness_failures: Vec<Vec<f64>>,
}

impl CoverCertificate {
    /// Evaluates the soundness rule `margin > L·h` over per-point depths.
    pub fn from_depths(points: &[Vector], depths: &[f64], lipschitz: f64, h: f64) -> Self {
        let margin = depths.iter().cloned().fold(f64::INFINITY, f64::min);
        let margin = if points.is_empty() { f64::NEG_INFINITY } else { margin };
        let gap = lipschitz * h;
        let pass = margin > gap;
        let mut failing: Vec<(f64, usize)> = depths
            .iter()
            .enumerate()
            .filter(|(_, d)| **d <= gap)
            .map(|(i, d)| (*d, i))
            .collect();
        failing.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let witness_failures = failing
            .iter()
            .take(MAX_WITNESSES)
            .map(|(_, i)| points[*i].as_slice().to_vec())
            .collect();
        Self {
            pass,
            margin,
            net_spacing: h,
            lipschitz_bound: lipschitz,
            witness_failures,
        }
    }

    /// Distance between the margin and the soundness gap `L·h`.
    pub fn slack(&self) -> f64 {
        self.margin - self.lipschitz_bound * self.net_spacing
    }
}

/// Lipschitz constant governing preimage depths for the given direction.
pub fn cover_lipschitz(maps: &[FiberMap], direction: Direction) -> Result<f64> {
    let mut l: f64 = 0.0;
    for m in maps {
        let v = match direction {
            Direction::Forward => m.inverse_lipschitz(),
            Direction::Inverse => m.lipschitz(),
        };
        if !v.is_finite() {
            return Err(Error::Contract("fiber map has no finite Lipschitz bound".into()));
        }
        l = l.max(v);
    }
    Ok(l)
}

/// Best preimage depth of `p` over the family.
pub fn preimage_depth(maps: &[FiberMap], region: &Region, direction: Direction, p: &Vector) -> f64 {
    maps.iter()
        .map(|m| {
            let q = match direction {
                Direction::Forward => m.apply_inverse(p),
                Direction::Inverse => m.apply(p),
            };
            region.depth(&q)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Certifies `closure(B) ⊆ ⋃ φᵢ(B)` (forward) or `⊆ ⋃ φᵢ⁻¹(B)` (inverse).
pub fn verify_open_cover(
    maps: &[FiberMap],
    region: &Region,
    direction: Direction,
    h: f64,
) -> Result<CoverCertificate> {
    let l = cover_lipschitz(maps, direction)?;
    let net = make_net(region, h)?;
    let depths: Vec<f64> = net
        .par_iter()
        .map(|p| preimage_depth(maps, region, direction, p))
        .collect();
    Ok(CoverCertificate::from_depths(&net, &depths, l, h))
}

/// Default net spacing for a margin target and Lipschitz bound.
pub fn default_spacing(margin_target: f64, lipschitz: f64) -> f64 {
    margin_target / (4.0 * lipschitz)
}

/// Vertices of a regular simplex inscribed in the unit sphere of `R^c`.
pub fn simplex_directions(c: usize) -> Result<Vec<Vector>> {
    if c == 0 {
        return Err(Error::Param("simplex dimension must be at least 1".into()));
    }
    fn build(c: usize) -> Vec<Vec<f64>> {
        if c == 0 {
            return vec![vec![]];
        }
        let k = c as f64;
        let scale = (1.0 - 1.0 / (k * k)).sqrt();
        let mut out = Vec::with_capacity(c + 1);
        let mut first = vec![0.0; c];
        first[0] = 1.0;
        out.push(first);
        for v in build(c - 1) {
            let mut w = Vec::with_capacity(c);
            w.push(-1.0 / k);
            w.extend(v.iter().map(|x| x * scale));
            out.push(w);
        }
        out
    }
    Ok(build(c).into_iter().map(Vector::from_vec).collect())
}

/// `κ = min_{|p|=1} maxᵢ ⟨p, uᵢ⟩`, computed as the reciprocal of the largest
/// vertex norm of the polytope `{x : ⟨x, uᵢ⟩ ≤ 1}`. Requires the directions to
/// positively span `R^c`.
pub fn covering_constant(dirs: &[Vector]) -> Result<f64> {
    let c = dirs.first().map_or(0, |d| d.len());
    if c == 0 || dirs.len() <= c {
        return Err(Error::Param("need more than c directions in R^c".into()));
    }
    let mut best: f64 = 0.0;
    let mut found = false;
    let mut subset: Vec<usize> = (0..c).collect();
    loop {
        let a = Mat::from_fn(c, c, |i, j| dirs[subset[i]][j]);
        if let Some(x) = a.lu().solve(&Vector::from_element(c, 1.0)) {
            if dirs.iter().all(|u| u.dot(&x) <= 1.0 + 1e-10) {
                best = best.max(x.norm());
                found = true;
            }
        }
        // Next combination in lexicographic order.
        let m = dirs.len();
        let mut i = c;
        loop {
            if i == 0 {
                return if found {
                    Ok(1.0 / best)
                } else {
                    Err(Error::Param("directions do not positively span".into()))
                };
            }
            i -= 1;
            if subset[i] < m - c + i {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..c {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

/// Certifies that translates `B_ε(0) + δ·uᵢ` cover the closed ball `B̄_ε(0)`.
pub fn cover_ball_by_translates(eps: f64, delta: f64, dirs: &[Vector], h: f64) -> Result<CoverCertificate> {
    if !(eps > 0.0 && delta > 0.0) {
        return Err(Error::Param(format!("need eps > 0 and delta > 0, got {eps}, {delta}")));
    }
    let c = dirs.first().map_or(0, |d| d.len());
    let maps: Vec<FiberMap> = dirs
        .iter()
        .map(|u| FiberMap::translation(u * delta))
        .collect();
    let region = Region::ball(Vector::zeros(c), eps)?;
    verify_open_cover(&maps, &region, Direction::Forward, h)
}

/// Translation offsets placing copies of `Λ·B_R(0)` so they cover `B_R(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePlan {
    #[serde(with = "crate::serde_mat::vectors")]
    pub centers: Vec<Vector>,
    pub spacing: f64,
    /// Smallest semi-axis of the image slice used to size the lattice.
    pub slice_half_width: f64,
    /// Number of contracted directions the lattice spans.
    pub lattice_dimension: usize,
}

impl LatticePlan {
    pub fn count(&self) -> usize {
        self.centers.len()
    }
}

/// Lattice of image centers in the contracted directions of `linear`. Image
/// slices over the expanded coordinates are bounded by their worst case on
/// the target ball.
pub fn lattice_translate_centers(target_radius: f64, linear: &Mat, safety: f64) -> Result<LatticePlan> {
    if !(target_radius > 0.0) || !(safety > 0.0 && safety < 1.0) {
        return Err(Error::Param(format!(
            "need target_radius > 0 and safety in (0,1), got {target_radius}, {safety}"
        )));
    }
    let c = linear.nrows();
    let svd = linear.clone().svd(true, false);
    let u = svd.u.ok_or_else(|| Error::Shape("singular value decomposition failed".into()))?;
    let sv = &svd.singular_values;
    let contracted: Vec<usize> = (0..c).filter(|&i| sv[i] < 1.0 - 1e-9).collect();
    if contracted.is_empty() {
        return Err(Error::Shape("no contracted direction to place translates along".into()));
    }
    let min_expanding = (0..c)
        .filter(|i| !contracted.contains(i))
        .map(|i| sv[i])
        .fold(f64::INFINITY, f64::min);
    let slice = if min_expanding.is_finite() {
        let v = 1.0 - 1.0 / (min_expanding * min_expanding);
        if v <= 0.0 {
            return Err(Error::Shape("neutral direction leaves no slice width".into()));
        }
        v.sqrt()
    } else {
        1.0
    };
    let w = contracted
        .iter()
        .map(|&i| sv[i] * target_radius * slice)
        .fold(f64::INFINITY, f64::min);
    let k = contracted.len();
    let s_max = 2.0 * w * safety / (k as f64).sqrt();
    let n = (2.0 * target_radius / s_max).ceil() as usize;
    let s = 2.0 * target_radius / n as f64;
    let half_diag = s * (k as f64).sqrt() / 2.0;
    let mut centers = Vec::new();
    let mut idx = vec![0usize; k];
    for _ in 0..n.pow(k as u32) {
        let coef: Vec<f64> = idx
            .iter()
            .map(|&j| (j as f64 - (n as f64 - 1.0) / 2.0) * s)
            .collect();
        let norm = coef.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm - half_diag < target_radius {
            let mut center = Vector::zeros(c);
            for (a, &axis) in coef.iter().zip(&contracted) {
                center += u.column(axis) * *a;
            }
            centers.push(center);
        }
        for j in 0..k {
            idx[j] += 1;
            if idx[j] < n {
                break;
            }
            idx[j] = 0;
        }
    }
    Ok(LatticePlan {
        centers,
        spacing: s,
        slice_half_width: w,
        lattice_dimension: k,
    })
}
