//! Lifted dynamics on `R^c × G(ℓ, c)`: cones, tangency blending regions,
//! transitions and codimension bookkeeping.

use std::collections::{HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cover::{make_net, CoverCertificate, Direction, Region};
use crate::error::{Error, Result};
use crate::fiber::FiberMap;
use crate::linalg::{dominant_subspace, orthogonal_complement, singular_range, spectral_norm, Mat, Vector};
use crate::symplectic::{classify_subspace, is_symplectic_matrix, PlaneFrame, SubspaceClass};

const MAX_WITNESSES: usize = 64;

/// `(x, E) ↦ (φ(x), Dφ(x)·E)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedMap {
    pub map: FiberMap,
}

pub fn lift_map(phi: &FiberMap) -> LiftedMap {
    LiftedMap { map: phi.clone() }
}

impl LiftedMap {
    pub fn apply(&self, x: &Vector, e: &PlaneFrame) -> Result<(Vector, PlaneFrame)> {
        check_pair(&self.map, x, e)?;
        let plane = e.transformed(&self.map.jacobian(x))?;
        Ok((self.map.apply(x), plane))
    }

    pub fn apply_inverse(&self, y: &Vector, f: &PlaneFrame) -> Result<(Vector, PlaneFrame)> {
        check_pair(&self.map, y, f)?;
        let x = self.map.apply_inverse(y);
        let j = self.map.jacobian(&x);
        let inv = j
            .try_inverse()
            .ok_or_else(|| Error::Rank("Jacobian is singular".into()))?;
        Ok((x, f.transformed(&inv)?))
    }
}

fn check_pair(map: &FiberMap, x: &Vector, e: &PlaneFrame) -> Result<()> {
    let c = map.dimension();
    if x.len() != c || e.ambient() != c {
        return Err(Error::Dimension(format!(
            "map acts on R^{c}, got point in R^{} and plane in R^{}",
            x.len(),
            e.ambient()
        )));
    }
    Ok(())
}

/// Largest principal angle between two planes.
pub fn grassmann_distance(e: &PlaneFrame, f: &PlaneFrame) -> Result<f64> {
    if e.ambient() != f.ambient() || e.dim() != f.dim() {
        return Err(Error::Param(format!(
            "planes differ in shape: {}-plane in R^{} vs {}-plane in R^{}",
            e.dim(),
            e.ambient(),
            f.dim(),
            f.ambient()
        )));
    }
    let c = e.ambient();
    let residual = (Mat::identity(c, c) - e.projector()) * f.frame();
    Ok(spectral_norm(&residual).min(1.0).asin())
}

/// Graph coordinates over a base plane: `L ↦ span(Q + Q⊥·L)`.
#[derive(Debug, Clone)]
pub struct PlaneChart {
    base: Mat,
    complement: Mat,
}

impl PlaneChart {
    pub fn new(base: &PlaneFrame) -> Self {
        let q = base.frame().clone();
        let complement = if q.nrows() == 2 && q.ncols() == 1 {
            // Positive quarter turn, so planar rotations shift the angle coordinate.
            Mat::from_column_slice(2, 1, &[-q[(1, 0)], q[(0, 0)]])
        } else {
            orthogonal_complement(&q)
        };
        Self { base: q, complement }
    }

    /// Number of chart coordinates `ℓ·(c−ℓ)`.
    pub fn coordinate_count(&self) -> usize {
        self.base.ncols() * self.complement.ncols()
    }

    pub fn plane(&self, l: &Mat) -> Result<PlaneFrame> {
        PlaneFrame::from_span(&(&self.base + &self.complement * l))
    }

    /// Graph matrix of `f`, or `None` when `f` is not a graph over the base.
    pub fn coordinates(&self, f: &PlaneFrame) -> Option<Mat> {
        let a = self.base.transpose() * f.frame();
        let b = self.complement.transpose() * f.frame();
        let (lo, _) = singular_range(&a);
        if lo < 1e-12 {
            return None;
        }
        a.try_inverse().map(|inv| b * inv)
    }

    fn unflatten(&self, v: &Vector) -> Mat {
        Mat::from_column_slice(self.complement.ncols(), self.base.ncols(), v.as_slice())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeKind {
    Uu,
    Ss,
}

/// Planes that are graphs of `L: base → base⊥` with `‖L‖ ≤ opening`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub base: PlaneFrame,
    pub opening: f64,
    pub kind: ConeKind,
    /// Claimed expansion `λ⁻¹` of cone vectors.
    pub expansion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeCertificate {
    pub pass: bool,
    /// `opening − max‖L'‖` over sampled image planes.
    pub invariance_margin: f64,
    pub min_expansion: f64,
    pub points: usize,
}

fn cone_graphs(chart: &PlaneChart, opening: f64, rng: &mut ChaCha8Rng, count: usize) -> Vec<(Mat, bool)> {
    let rows = chart.complement.ncols();
    let cols = chart.base.ncols();
    if rows * cols == 1 {
        let mut out = vec![
            (Mat::from_element(1, 1, opening), true),
            (Mat::from_element(1, 1, -opening), true),
        ];
        out.extend((0..10).map(|i| (Mat::from_element(1, 1, opening * (2.0 * (i as f64 + 0.5) / 10.0 - 1.0)), false)));
        return out;
    }
    let mut out = Vec::with_capacity(count * 11);
    for _ in 0..count {
        let m = Mat::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0));
        let boundary = &m * (opening / spectral_norm(&m).max(1e-300));
        for _ in 0..10 {
            let t: f64 = rng.gen_range(0.0..1.0);
            out.push((&boundary * t, false));
        }
        out.push((boundary, true));
    }
    out
}

/// Samples cone invariance and expansion for every map at points of
/// `R ∩ φ⁻¹(R)`. Stable cones are checked against the inverse maps.
pub fn verify_unstable_cone(maps: &[FiberMap], cone: &ConeSpec, region: &Region, samples: usize) -> Result<ConeCertificate> {
    if !(cone.opening > 0.0) {
        return Err(Error::Param("cone opening must be positive".into()));
    }
    let c = cone.base.ambient();
    if region.dimension() != c {
        return Err(Error::Dimension(format!("region is in R^{}, cone in R^{c}", region.dimension())));
    }
    let family: Vec<FiberMap> = match cone.kind {
        ConeKind::Uu => maps.to_vec(),
        ConeKind::Ss => maps.iter().map(|m| m.inverse()).collect(),
    };
    let chart = PlaneChart::new(&cone.base);
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0DE);
    let graphs = cone_graphs(&chart, cone.opening, &mut rng, samples.clamp(4, 64));
    let mut worst_graph: f64 = 0.0;
    let mut min_expansion = f64::INFINITY;
    let mut points = 0;
    for map in &family {
        let mut xs = vec![region.center().clone()];
        xs.extend((0..samples).map(|_| region.sample(&mut rng)));
        for x in xs.iter().filter(|x| region.contains_closed(&map.apply(x))) {
            points += 1;
            let d = map.jacobian(x);
            for (l, boundary) in &graphs {
                let frame = &chart.base + &chart.complement * l;
                let image = PlaneFrame::from_span(&(&d * &frame))?;
                match chart.coordinates(&image) {
                    Some(li) => worst_graph = worst_graph.max(spectral_norm(&li)),
                    None => worst_graph = f64::INFINITY,
                }
                // Boundary planes contribute their most tilted vector.
                let a = if *boundary && l.ncols() > 1 {
                    l.clone().svd(false, true).v_t.map(|vt| vt.row(0).transpose()).unwrap_or_else(|| Vector::from_element(l.ncols(), 1.0))
                } else {
                    let v = Vector::from_fn(l.ncols(), |_, _| rng.gen_range(-1.0..1.0));
                    if l.ncols() == 1 { Vector::from_element(1, 1.0) } else { v }
                };
                let v = &frame * a;
                let n = v.norm();
                if n > 0.0 {
                    min_expansion = min_expansion.min((&d * &v).norm() / n);
                }
            }
        }
    }
    let invariance_margin = cone.opening - worst_graph;
    Ok(ConeCertificate {
        pass: points > 0 && invariance_margin > 0.0 && min_expansion >= cone.expansion,
        invariance_margin,
        min_expansion,
        points,
    })
}

/// Plane ball `{F : ∠(F, base) ≤ radius_angle}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneCap {
    #[serde(with = "crate::serde_mat::mat")]
    pub base_frame: Mat,
    pub radius_angle: f64,
}

impl PlaneCap {
    pub fn new(base: &PlaneFrame, radius_angle: f64) -> Result<Self> {
        if !(radius_angle > 0.0 && radius_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Param(format!("cap radius must lie in (0, π/2), got {radius_angle}")));
        }
        Ok(Self {
            base_frame: base.frame().clone(),
            radius_angle,
        })
    }

    pub fn base(&self) -> Result<PlaneFrame> {
        PlaneFrame::new(self.base_frame.clone())
    }

    /// `radius − ∠(F, base)`.
    pub fn depth(&self, f: &PlaneFrame) -> Result<f64> {
        Ok(self.radius_angle - grassmann_distance(&self.base()?, f)?)
    }

    /// Chart points of the cap, `h`-dense in the angle metric.
    pub fn net(&self, h: f64) -> Result<(PlaneChart, Vec<Vector>, Vec<PlaneFrame>)> {
        let chart = PlaneChart::new(&self.base()?);
        let k = chart.coordinate_count();
        let bound = self.radius_angle.tan();
        let ball = Region::ball(Vector::zeros(k), bound * (chart.base.ncols().min(chart.complement.ncols()) as f64).sqrt())?;
        let mut coords = Vec::new();
        let mut planes = Vec::new();
        for p in make_net(&ball, h)? {
            // Clamping singular values is the nearest-point map onto the cap.
            let mut svd = chart.unflatten(&p).svd(true, true);
            svd.singular_values.iter_mut().for_each(|s| *s = s.min(bound));
            let l = svd.recompose().map_err(|e| Error::NumericalRank(e.into()))?;
            planes.push(chart.plane(&l)?);
            coords.push(Vector::from_column_slice(l.as_slice()));
        }
        Ok((chart, coords, planes))
    }
}

/// `B̂ = B × G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedRegion {
    pub base: Region,
    pub cap: PlaneCap,
}

impl LiftedRegion {
    pub fn contains(&self, x: &Vector, f: &PlaneFrame) -> Result<bool> {
        Ok(self.base.contains_open(x) && self.cap.depth(f)? > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangencyBlendingSpec {
    pub region: LiftedRegion,
    pub maps: Vec<FiberMap>,
    pub ell: usize,
    /// `Forward`: images cover `closure(B̂)`; `Inverse`: preimages do.
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangencyRotations {
    pub e_uu: PlaneFrame,
    pub cap: PlaneCap,
    pub rotations: Vec<Mat>,
    /// Contraction factor `σ_{ℓ+1}/σ_ℓ` of the induced plane map at `E^{uu}`.
    pub contraction: f64,
    pub certificate: CoverCertificate,
}

/// Class `E^{uu}` must have: symplectic for even `ℓ`, coisotropic for odd `ℓ`.
pub fn required_uu_class(ell: usize, c: usize) -> Result<SubspaceClass> {
    if ell == 0 || ell >= c {
        return Err(Error::Param(format!("need 0 < ℓ < c, got ℓ = {ell}, c = {c}")));
    }
    if ell % 2 == 0 {
        Ok(SubspaceClass::Symplectic)
    } else if 2 * ell >= c {
        Ok(SubspaceClass::Coisotropic)
    } else {
        Err(Error::SubspaceClass(format!(
            "odd ℓ = {ell} < c/2 admits no coisotropic {ell}-plane in R^{c}"
        )))
    }
}

pub fn check_uu_class(e_uu: &PlaneFrame) -> Result<SubspaceClass> {
    let want = required_uu_class(e_uu.dim(), e_uu.ambient())?;
    let got = classify_subspace(e_uu)?.class;
    if got != want {
        return Err(Error::SubspaceClass(format!("E^uu is {got:?}, need {want:?}")));
    }
    Ok(got)
}

fn rotation(angle: f64) -> Mat {
    let (s, c) = angle.sin_cos();
    Mat::from_row_slice(2, 2, &[c, -s, s, c])
}

fn line_angle(chart: &PlaneChart, f: &PlaneFrame) -> f64 {
    let v = f.frame().column(0);
    let a = chart.base.column(0).dot(&v);
    let b = chart.complement.column(0).dot(&v);
    (b / a).atan()
}

/// Near-identity symplectic rotations `A_j` such that the lifts of `A_j·Λ`
/// cover the cap of angular radius `r` about `E^{uu}`.
pub fn build_tangency_rotations(lambda: &Mat, ell: usize, r: f64) -> Result<TangencyRotations> {
    let c = lambda.nrows();
    required_uu_class(ell, c)?;
    if !is_symplectic_matrix(lambda, 1e-8)?.pass {
        return Err(Error::Param("Λ is not symplectic".into()));
    }
    let sv = lambda.singular_values();
    let mut sorted: Vec<f64> = sv.iter().cloned().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let contraction = sorted[ell] / sorted[ell - 1];
    if contraction > 1.0 - 1e-6 || sorted[ell - 1] <= 1.0 {
        return Err(Error::Param("Λ has no dominated expanding ℓ-splitting".into()));
    }
    let frame = dominant_subspace(lambda, ell, 400)
        .ok_or_else(|| Error::NumericalRank("dominant subspace iteration failed".into()))?;
    let e_uu = PlaneFrame::new(frame)?;
    check_uu_class(&e_uu)?;
    if c != 2 {
        return Err(Error::Dimension(format!(
            "rotation families are constructed for c = 2, got c = {c}"
        )));
    }
    let cap = PlaneCap::new(&e_uu, r)?;
    let chart = PlaneChart::new(&e_uu);
    let edge = |t: f64| -> Result<f64> {
        let f = chart.plane(&Mat::from_element(1, 1, t.tan()))?.transformed(lambda)?;
        Ok(line_angle(&chart, &f))
    };
    let (lo, hi) = (edge(-r)?, edge(r)?);
    let (lo, hi) = (lo.min(hi), lo.max(hi));
    let width = hi - lo;
    let step = 0.9 * width;
    let n = ((2.0 * r - 0.6 * width) / step).ceil().max(0.0) as usize + 1;
    let mid = 0.5 * (lo + hi);
    let rotations: Vec<Mat> = (0..n)
        .map(|j| rotation(-mid + (j as f64 - (n as f64 - 1.0) / 2.0) * step))
        .collect();
    let linears: Vec<Mat> = rotations.iter().map(|a| a * lambda).collect();
    let h = 0.1 * width / (linears.iter().map(condition).fold(1.0, f64::max) * 8.0);
    let certificate = verify_plane_cover(&linears, &cap, h)?;
    Ok(TangencyRotations {
        e_uu,
        cap,
        rotations,
        contraction,
        certificate,
    })
}

fn condition(m: &Mat) -> f64 {
    let (lo, hi) = singular_range(m);
    hi / lo
}

fn plane_depths(linears: &[Mat], cap: &PlaneCap, planes: &[PlaneFrame]) -> Result<Vec<Vec<f64>>> {
    let inverses: Vec<Mat> = linears
        .iter()
        .map(|m| m.clone().try_inverse().ok_or_else(|| Error::Rank("singular linear part".into())))
        .collect::<Result<_>>()?;
    planes
        .par_iter()
        .map(|f| {
            inverses
                .iter()
                .map(|inv| cap.depth(&f.transformed(inv)?))
                .collect::<Result<Vec<f64>>>()
        })
        .collect()
}

/// Cover of the cap closure by induced images of linear maps, with
/// Lipschitz bound `max κ(M)` on preimage plane maps.
pub fn verify_plane_cover(linears: &[Mat], cap: &PlaneCap, h: f64) -> Result<CoverCertificate> {
    let (_, coords, planes) = cap.net(h)?;
    let depths: Vec<f64> = plane_depths(linears, cap, &planes)?
        .into_iter()
        .map(|d| d.into_iter().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let l = linears.iter().map(condition).fold(0.0, f64::max);
    Ok(CoverCertificate::from_depths(&coords, &depths, l, h))
}

/// Product-net cover of `closure(B × G)` by lifted images of maps that are
/// affine over `B` after inversion; depth is the smaller of the base and
/// plane depths of the preimage.
pub fn verify_tangency_blending(spec: &TangencyBlendingSpec, h_base: f64, h_plane: f64) -> Result<CoverCertificate> {
    if spec.maps.is_empty() {
        return Err(Error::Param("empty map family".into()));
    }
    if spec.cap_dim_mismatch() {
        return Err(Error::Dimension("cap plane dimension differs from ℓ".into()));
    }
    let family: Vec<FiberMap> = match spec.direction {
        Direction::Forward => spec.maps.clone(),
        Direction::Inverse => spec.maps.iter().map(|m| m.inverse()).collect(),
    };
    let base = &spec.region.base;
    // Preimage maps restricted to B, which must be affine there.
    let preimages: Vec<(Mat, Vector)> = family
        .iter()
        .map(|m| {
            m.inverse()
                .affine_on_ball(base.center(), base.outer_radius())
                .ok_or_else(|| Error::Param("tangency maps must be affine over the base region".into()))
        })
        .collect::<Result<_>>()?;
    let linears: Vec<Mat> = preimages
        .iter()
        .map(|(l, _)| l.clone().try_inverse().ok_or_else(|| Error::Rank("singular linear part".into())))
        .collect::<Result<_>>()?;
    let base_net = make_net(base, h_base)?;
    let base_depths: Vec<Vec<f64>> = base_net
        .par_iter()
        .map(|x| preimages.iter().map(|(l, o)| base.depth(&(l * x + o))).collect())
        .collect();
    let (_, coords, planes) = spec.region.cap.net(h_plane)?;
    let plane_d = plane_depths(&linears, &spec.region.cap, &planes)?;
    let lb = preimages.iter().map(|(l, _)| spectral_norm(l)).fold(0.0, f64::max);
    let lp = linears.iter().map(condition).fold(0.0, f64::max);
    let lipschitz = lb.max(lp);
    let h = h_base.max(h_plane);
    let gap = lipschitz * h;
    // (depth, base index, plane index) per base point, worst plane first.
    let rows: Vec<Vec<(f64, usize)>> = base_depths
        .par_iter()
        .map(|bd| {
            plane_d
                .iter()
                .enumerate()
                .map(|(j, pd)| {
                    let d = bd.iter().zip(pd).map(|(a, b)| a.min(*b)).fold(f64::NEG_INFINITY, f64::max);
                    (d, j)
                })
                .collect()
        })
        .collect();
    let mut margin = f64::INFINITY;
    let mut failing: Vec<(f64, usize, usize)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        for &(d, j) in row {
            margin = margin.min(d);
            if d <= gap {
                failing.push((d, i, j));
            }
        }
    }
    if base_net.is_empty() || planes.is_empty() {
        margin = f64::NEG_INFINITY;
    }
    failing.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let witness_failures = failing
        .iter()
        .take(MAX_WITNESSES)
        .map(|&(_, i, j)| base_net[i].iter().chain(coords[j].iter()).cloned().collect())
        .collect();
    Ok(CoverCertificate {
        pass: margin > gap,
        margin,
        net_spacing: h,
        lipschitz_bound: lipschitz,
        witness_failures,
    })
}

impl TangencyBlendingSpec {
    fn cap_dim_mismatch(&self) -> bool {
        self.region.cap.base_frame.ncols() != self.ell
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionWitness {
    /// Generator indices, 1-based, in application order.
    pub word: Vec<usize>,
    #[serde(with = "crate::serde_mat::vector")]
    pub point: Vector,
    pub plane: PlaneFrame,
}

/// Breadth-first search for a word carrying `(x, E)` into `B̂₂`.
pub fn find_transition(
    generators: &[FiberMap],
    from: (&Vector, &PlaneFrame),
    to: &LiftedRegion,
    max_len: usize,
    budget: usize,
) -> Result<Option<TransitionWitness>> {
    if max_len == 0 {
        return Err(Error::Param("max_len must be at least 1".into()));
    }
    let lifted: Vec<LiftedMap> = generators.iter().map(lift_map).collect();
    let key = |x: &Vector, f: &PlaneFrame| -> Vec<i64> {
        x.iter()
            .chain(f.projector().iter())
            .map(|v| (v * 1e9).round() as i64)
            .collect()
    };
    let mut seen: HashSet<Vec<i64>> = HashSet::new();
    seen.insert(key(from.0, from.1));
    let mut queue: VecDeque<(Vec<usize>, Vector, PlaneFrame)> = VecDeque::new();
    queue.push_back((Vec::new(), from.0.clone(), from.1.clone()));
    while let Some((word, x, f)) = queue.pop_front() {
        if word.len() == max_len {
            continue;
        }
        for (g, map) in lifted.iter().enumerate() {
            let Ok((y, e)) = map.apply(&x, &f) else { continue };
            let mut next = word.clone();
            next.push(g + 1);
            if to.contains(&y, &e)? {
                return Ok(Some(TransitionWitness {
                    word: next,
                    point: y,
                    plane: e,
                }));
            }
            if seen.insert(key(&y, &e)) {
                if seen.len() > budget {
                    return Err(Error::Budget {
                        budget,
                        partial: None,
                    });
                }
                queue.push_back((next, y, e));
            }
        }
    }
    Ok(None)
}

/// Replays a witness word on `(x, E)`.
pub fn replay_lifted(generators: &[FiberMap], word: &[usize], x: &Vector, e: &PlaneFrame) -> Result<(Vector, PlaneFrame)> {
    word.iter().try_fold((x.clone(), e.clone()), |(x, e), &g| {
        let map = generators
            .get(g.wrapping_sub(1))
            .ok_or_else(|| Error::Param(format!("symbol {g} out of range")))?;
        lift_map(map).apply(&x, &e)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codimension {
    pub c_t: i64,
    pub admissible: bool,
}

/// `c_T = c − (ind^{cu}_1 + ind^{cs}_2 − ℓ)`, admissible iff
/// `max{0, i₂ − i₁} < ℓ ≤ min{c − i₁, i₂}` with `i₁ = c − ind^{cu}_1`, `i₂ = ind^{cs}_2`.
pub fn tangency_codimension(ind_cu_1: usize, ind_cs_2: usize, ell: usize, c: usize) -> Result<Codimension> {
    for (name, v) in [("ind_cu_1", ind_cu_1), ("ind_cs_2", ind_cs_2)] {
        if v == 0 || v >= c {
            return Err(Error::Param(format!("{name} = {v} must lie in (0, {c})")));
        }
    }
    let (c_i, cu1, cs2, l) = (c as i64, ind_cu_1 as i64, ind_cs_2 as i64, ell as i64);
    let i1 = c_i - cu1;
    let i2 = cs2;
    Ok(Codimension {
        c_t: c_i - (cu1 + cs2 - l),
        admissible: 0.max(i2 - i1) < l && l <= (c_i - i1).min(i2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn v(x: &[f64]) -> Vector {
        Vector::from_row_slice(x)
    }

    fn diag(x: &[f64]) -> Mat {
        Mat::from_diagonal(&v(x))
    }

    fn line(x: f64, y: f64) -> PlaneFrame {
        PlaneFrame::from_vectors(&[v(&[x, y])]).unwrap()
    }

    fn slope(f: &PlaneFrame) -> f64 {
        f.frame()[(1, 0)] / f.frame()[(0, 0)]
    }

    #[test]
    fn lift_of_diagonal_map() {
        let lifted = lift_map(&FiberMap::linear(diag(&[2.0, 0.5])).unwrap());
        let o = v(&[0.0, 0.0]);
        let (_, e) = lifted.apply(&o, &line(1.0, 0.0)).unwrap();
        assert!(e.same_plane(&line(1.0, 0.0), 1e-12));
        let (_, e) = lifted.apply(&o, &line(1.0, 0.3)).unwrap();
        assert!((slope(&e) - 0.3 / 4.0).abs() < 1e-12);
        let squared = lift_map(&FiberMap::linear(diag(&[4.0, 0.25])).unwrap());
        let f0 = line(0.7, -0.4);
        let (_, once) = lifted.apply(&o, &f0).unwrap();
        let (_, twice) = lifted.apply(&o, &once).unwrap();
        let (_, direct) = squared.apply(&o, &f0).unwrap();
        assert!(twice.same_plane(&direct, 1e-12));
        let (_, back) = lifted.apply_inverse(&o, &once).unwrap();
        assert!(back.same_plane(&f0, 1e-12));
    }

    #[test]
    fn lift_ignores_frame_representative() {
        let lifted = lift_map(&FiberMap::linear(Mat::from_row_slice(4, 4, &[
            2.0, 0.3, 0.0, 0.1, 0.0, 1.5, 0.2, 0.0, 0.0, 0.0, 0.5, 0.0, 0.1, 0.0, 0.0, 0.8,
        ]))
        .unwrap());
        let x = v(&[0.1, 0.2, 0.3, 0.4]);
        let e = PlaneFrame::from_vectors(&[v(&[1.0, 0.0, 0.2, 0.0]), v(&[0.0, 1.0, 0.0, 0.3])]).unwrap();
        let rot = Mat::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
        let e2 = PlaneFrame::new(e.frame() * rot).unwrap();
        let (_, a) = lifted.apply(&x, &e).unwrap();
        let (_, b) = lifted.apply(&x, &e2).unwrap();
        assert!(a.same_plane(&b, 1e-9));
    }

    #[test]
    fn rank_loss_is_reported() {
        let lifted = lift_map(&FiberMap::Affine(crate::fiber::AffineMap::new(diag(&[1.0, 1.0]), v(&[0.0, 0.0])).unwrap()));
        assert!(lifted.apply(&v(&[0.0]), &line(1.0, 0.0)).is_err());
    }

    #[test]
    fn principal_angles() {
        let d = grassmann_distance(&line(1.0, 0.0), &line(0.0, 1.0)).unwrap();
        assert!((d - FRAC_PI_2).abs() < 1e-12);
        assert!(grassmann_distance(&line(1.0, 2.0), &line(1.0, 2.0)).unwrap() < 1e-12);
        let d = grassmann_distance(&line(1.0, 0.0), &line(1.0, 0.1)).unwrap();
        assert!((d - 0.1f64.atan()).abs() < 1e-12);
        let plane = PlaneFrame::coordinate(3, &[0, 1]).unwrap();
        assert!(matches!(grassmann_distance(&line(1.0, 0.0), &plane), Err(Error::Param(_))));
    }

    #[test]
    fn cone_examples() {
        let map = FiberMap::linear(diag(&[2.0, 0.5])).unwrap();
        let region = Region::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        let cone = |opening, expansion| ConeSpec {
            base: line(1.0, 0.0),
            opening,
            kind: ConeKind::Uu,
            expansion,
        };
        let cert = verify_unstable_cone(std::slice::from_ref(&map), &cone(0.5, 1.8), &region, 20).unwrap();
        assert!(cert.pass, "{cert:?}");
        assert!((cert.invariance_margin - (0.5 - 0.125)).abs() < 1e-12);
        assert!((cert.min_expansion - 4.0625f64.sqrt() / 1.25f64.sqrt()).abs() < 1e-12);
        let cert = verify_unstable_cone(std::slice::from_ref(&map), &cone(3.0, 2.0), &region, 20).unwrap();
        assert!(!cert.pass);
        assert!((cert.min_expansion - 2.5 / 10f64.sqrt()).abs() < 1e-12);
        let id = FiberMap::identity(2);
        assert!(!verify_unstable_cone(&[id], &cone(0.5, 1.1), &region, 20).unwrap().pass);
        let ss = ConeSpec {
            base: line(0.0, 1.0),
            kind: ConeKind::Ss,
            ..cone(0.5, 1.8)
        };
        assert!(verify_unstable_cone(&[map], &ss, &region, 20).unwrap().pass);
    }

    #[test]
    fn planar_rotation_family() {
        let r = 0.25;
        let rot = build_tangency_rotations(&diag(&[2.0, 0.5]), 1, r).unwrap();
        assert_eq!(rot.rotations.len(), 5);
        assert!((rot.contraction - 0.25).abs() < 1e-12);
        assert!(rot.e_uu.same_plane(&line(1.0, 0.0), 1e-9));
        assert!(rot.certificate.pass, "{:?}", rot.certificate);
        let w = (r.tan() / 4.0).atan();
        let mut angles: Vec<f64> = rot.rotations.iter().map(|a| a[(1, 0)].atan2(a[(0, 0)])).collect();
        angles.sort_by(f64::total_cmp);
        for (a, j) in angles.iter().zip(-2..=2) {
            assert!((a - j as f64 * 1.8 * w).abs() < 1e-9);
        }
        for a in &rot.rotations {
            assert!(crate::symplectic::symplectic_defect(a).unwrap() < 1e-12);
        }
        // The single induced image is too small to cover the cap.
        let lone = verify_plane_cover(&[diag(&[2.0, 0.5])], &rot.cap, 1e-3).unwrap();
        assert!(!lone.pass);
    }

    #[test]
    fn class_requirements() {
        let e = PlaneFrame::coordinate(4, &[0, 2]).unwrap();
        assert_eq!(check_uu_class(&e).unwrap(), SubspaceClass::Symplectic);
        assert!(matches!(required_uu_class(1, 4), Err(Error::SubspaceClass(_))));
        let lambda = diag(&[4.0, 2.0, 0.25, 0.5]);
        assert!(matches!(build_tangency_rotations(&lambda, 1, 0.2), Err(Error::SubspaceClass(_))));
        // Unstable eigenspaces of symplectic maps are isotropic.
        assert!(matches!(build_tangency_rotations(&lambda, 2, 0.2), Err(Error::SubspaceClass(_))));
    }

    fn tangency_spec(r: f64) -> (TangencyBlendingSpec, usize, usize) {
        use crate::blender::{build_blending_region, BlendingKind};
        let lambda = diag(&[0.5, 2.0]);
        let br = build_blending_region(&FiberMap::linear(lambda.clone()).unwrap(), 0.5, BlendingKind::Cs).unwrap();
        let rot = build_tangency_rotations(&lambda, 1, r).unwrap();
        let shifts: Vec<Vector> = br.maps[1..].iter().map(|m| m.affine_parts().unwrap().1).collect();
        let mut maps = Vec::new();
        for a in &rot.rotations {
            for t in &shifts {
                maps.push(FiberMap::affine(a * &lambda, a * t).unwrap());
            }
        }
        let spec = TangencyBlendingSpec {
            region: LiftedRegion {
                base: br.spec.b.clone(),
                cap: rot.cap.clone(),
            },
            maps,
            ell: 1,
            direction: Direction::Forward,
        };
        (spec, shifts.len(), rot.rotations.len())
    }

    #[test]
    fn product_cover_and_its_factors() {
        let (spec, k1, k2) = tangency_spec(0.25);
        assert_eq!((k1, k2), (4, 5));
        assert_eq!(spec.maps.len(), 20);
        let cert = verify_tangency_blending(&spec, 0.004, 0.004).unwrap();
        assert!(cert.pass, "margin {} gap {}", cert.margin, cert.lipschitz_bound * cert.net_spacing);
        // Keep only the unrotated maps: plane factor fails.
        let mut no_rot = spec.clone();
        no_rot.maps = spec.maps[2 * k1..3 * k1].to_vec();
        assert!(!verify_tangency_blending(&no_rot, 0.004, 0.004).unwrap().pass);
        // One base translate per rotation: base factor fails.
        let mut no_base = spec.clone();
        no_base.maps = spec.maps.iter().step_by(k1).cloned().collect();
        assert!(!verify_tangency_blending(&no_base, 0.004, 0.004).unwrap().pass);
    }

    #[test]
    fn transitions() {
        let cap = PlaneCap::new(&line(0.0, 1.0), 0.2).unwrap();
        let to = LiftedRegion {
            base: Region::ball(v(&[1.5, 0.0]), 0.25).unwrap(),
            cap: cap.clone(),
        };
        let gens = vec![
            FiberMap::linear(diag(&[0.5, 2.0])).unwrap(),
            FiberMap::translation(v(&[1.5, 0.0])),
        ];
        let from = (v(&[0.0, 0.0]), line(0.05, 1.0));
        let w = find_transition(&gens, (&from.0, &from.1), &to, 5, 10_000).unwrap().unwrap();
        assert_eq!(w.word, vec![2]);
        let (x, e) = replay_lifted(&gens, &w.word, &from.0, &from.1).unwrap();
        assert!((x - &w.point).norm() < 1e-9 && e.same_plane(&w.plane, 1e-9));
        assert!(find_transition(&[], (&from.0, &from.1), &to, 5, 100).unwrap().is_none());
        // A quarter turn swaps the unstable and stable axes.
        let swap = LiftedRegion {
            base: Region::ball(v(&[0.0, 0.0]), 0.25).unwrap(),
            cap: PlaneCap::new(&line(0.0, 1.0), 0.1).unwrap(),
        };
        let quarter = vec![FiberMap::linear(rotation(FRAC_PI_2)).unwrap()];
        let w = find_transition(&quarter, (&v(&[0.0, 0.0]), &line(1.0, 0.0)), &swap, 1, 10).unwrap().unwrap();
        assert_eq!(w.word, vec![1]);
    }

    #[test]
    fn codimension_examples() {
        assert_eq!(
            tangency_codimension(1, 1, 1, 2).unwrap(),
            Codimension { c_t: 1, admissible: true }
        );
        assert_eq!(tangency_codimension(2, 2, 2, 4).unwrap().c_t, 2);
        let ok: Vec<usize> = (1..=4)
            .filter(|&l| tangency_codimension(2, 2, l, 4).unwrap().admissible)
            .collect();
        assert_eq!(ok, vec![1, 2]);
        assert!(tangency_codimension(0, 1, 1, 2).is_err());
    }

    #[test]
    fn dominated_contraction_rate() {
        let lambda = diag(&[3.0, 1.5, 1.0 / 3.0, 1.0 / 1.5]);
        let lifted = lift_map(&FiberMap::linear(lambda).unwrap());
        let e_uu = PlaneFrame::coordinate(4, &[0, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let m = Mat::from_fn(4, 2, |_, _| rng.gen_range(-1.0..1.0));
            let mut e = PlaneFrame::from_span(&m).unwrap();
            let o = Vector::zeros(4);
            for _ in 0..20 {
                e = lifted.apply(&o, &e).unwrap().1;
            }
            let d0 = grassmann_distance(&e_uu, &e).unwrap();
            let d1 = grassmann_distance(&e_uu, &lifted.apply(&o, &e).unwrap().1).unwrap();
            // σ₃/σ₂ = (1/1.5)/1.5.
            assert!((d1 / d0 / (1.0 / 2.25) - 1.0).abs() < 0.1, "{d0} {d1}");
        }
    }
}
