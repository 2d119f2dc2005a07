//! Canonical symplectic structure on `R^{2n}`, plane frames, subspace
//! classification and transitive-action constructions.
//!
//! Coordinates are ordered `(x_1..x_n, y_1..y_n)` and the form is
//! `ω = Σ dx_i ∧ dy_i`, i.e. `ω(u, v) = uᵀ J v` with `J = [[0, I], [-I, 0]]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat, Vector};

const FRAME_TOL: f64 = 1e-12;
const PAIRING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticForm {
    n: usize,
}

impl SymplecticForm {
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 || dimension % 2 != 0 {
            return Err(Error::Dimension(format!(
                "symplectic form needs an even positive dimension, got {dimension}"
            )));
        }
        Ok(Self { n: dimension / 2 })
    }

    pub fn half_dimension(&self) -> usize {
        self.n
    }

    pub fn dimension(&self) -> usize {
        2 * self.n
    }

    pub fn j(&self) -> Mat {
        canonical_j(self.dimension())
    }

    pub fn omega(&self, u: &Vector, v: &Vector) -> f64 {
        omega(u, v)
    }
}

/// `J = [[0, I], [-I, 0]]` for even `c`.
pub fn canonical_j(c: usize) -> Mat {
    let n = c / 2;
    let mut j = Mat::zeros(c, c);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// `J⁻¹ = Jᵀ`; applied to a gradient it gives the Hamiltonian vector field.
pub fn j_inverse_apply(v: &Vector) -> Vector {
    let n = v.len() / 2;
    let mut out = Vector::zeros(v.len());
    for i in 0..n {
        out[i] = -v[n + i];
        out[n + i] = v[i];
    }
    out
}

pub fn omega(u: &Vector, v: &Vector) -> f64 {
    let n = u.len() / 2;
    (0..n).map(|i| u[i] * v[n + i] - u[n + i] * v[i]).sum()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SymplecticCheck {
    pub pass: bool,
    pub defect: f64,
}

/// Max-norm of `MᵀJM − J`.
pub fn symplectic_defect(m: &Mat) -> Result<f64> {
    if m.nrows() != m.ncols() || m.nrows() % 2 != 0 || m.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "expected an even square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let j = canonical_j(m.nrows());
    Ok(linalg::max_abs(&(m.transpose() * &j * m - j)))
}

pub fn is_symplectic_matrix(m: &Mat, tol: f64) -> Result<SymplecticCheck> {
    let defect = symplectic_defect(m)?;
    Ok(SymplecticCheck {
        pass: defect <= tol,
        defect,
    })
}

/// An ℓ-plane in `R^c` stored as an orthonormal frame (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneFrame {
    #[serde(with = "crate::serde_mat::mat")]
    frame: Mat,
}

impl PlaneFrame {
    /// Wraps an already orthonormal frame.
    pub fn new(frame: Mat) -> Result<Self> {
        let defect = orthonormality_defect(&frame);
        if frame.ncols() == 0 || frame.ncols() > frame.nrows() || defect > FRAME_TOL {
            return Err(Error::Frame { defect });
        }
        Ok(Self { frame })
    }

    /// Orthonormalises the given spanning columns.
    pub fn from_span(vectors: &Mat) -> Result<Self> {
        let frame = linalg::orthonormalize(vectors, 1e-10)
            .ok_or_else(|| Error::Rank("spanning vectors are dependent".into()))?;
        Ok(Self { frame })
    }

    pub fn from_vectors(vectors: &[Vector]) -> Result<Self> {
        Self::from_span(&Mat::from_columns(vectors))
    }

    /// The plane spanned by the listed standard basis vectors.
    pub fn coordinate(c: usize, axes: &[usize]) -> Result<Self> {
        let mut m = Mat::zeros(c, axes.len());
        for (j, &a) in axes.iter().enumerate() {
            if a >= c {
                return Err(Error::Param(format!("axis {a} out of range for R^{c}")));
            }
            m[(a, j)] = 1.0;
        }
        Self::new(m)
    }

    pub fn frame(&self) -> &Mat {
        &self.frame
    }

    pub fn dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.frame.nrows()
    }

    pub fn projector(&self) -> Mat {
        linalg::projector(&self.frame)
    }

    /// Same plane as `other` in the Frobenius projector metric.
    pub fn same_plane(&self, other: &PlaneFrame, tol: f64) -> bool {
        self.ambient() == other.ambient()
            && self.dim() == other.dim()
            && (self.projector() - other.projector()).norm() <= tol
    }

    /// Image plane `M·E`.
    pub fn transformed(&self, m: &Mat) -> Result<Self> {
        Self::from_span(&(m * &self.frame))
    }
}

fn orthonormality_defect(frame: &Mat) -> f64 {
    let k = frame.ncols();
    linalg::max_abs(&(frame.transpose() * frame - Mat::identity(k, k)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubspaceClass {
    Symplectic,
    Isotropic,
    Coisotropic,
    Mixed,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Classification {
    pub class: SubspaceClass,
    /// Smallest singular value of the restricted form for symplectic planes,
    /// containment defect for isotropic/coisotropic ones, rank of the
    /// restricted form for mixed ones.
    pub witness: f64,
    pub form_rank: usize,
}

/// Symplectic complement `E^ω` as an orthonormal frame (empty when `E = R^c`).
pub fn symplectic_complement(e: &PlaneFrame) -> Mat {
    let perp = linalg::orthogonal_complement(e.frame());
    let cols: Vec<Vector> = (0..perp.ncols())
        .map(|k| j_inverse_apply(&perp.column(k).clone_owned()))
        .collect();
    if cols.is_empty() {
        Mat::zeros(e.ambient(), 0)
    } else {
        Mat::from_columns(&cols)
    }
}

pub fn classify_subspace(e: &PlaneFrame) -> Result<Classification> {
    let c = e.ambient();
    if c % 2 != 0 {
        return Err(Error::Dimension(format!("ambient dimension {c} is odd")));
    }
    let defect = orthonormality_defect(e.frame());
    if defect > FRAME_TOL {
        return Err(Error::Frame { defect });
    }
    let q = e.frame();
    let gram = q.transpose() * canonical_j(c) * q;
    let sv = gram.singular_values();
    let form_rank = sv.iter().filter(|s| **s > PAIRING_TOL).count();
    let smallest = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if form_rank == e.dim() {
        return Ok(Classification {
            class: SubspaceClass::Symplectic,
            witness: smallest,
            form_rank,
        });
    }
    let w = symplectic_complement(e);
    let coiso_defect = if w.ncols() == 0 {
        0.0
    } else {
        linalg::max_abs(&(&w - e.projector() * &w))
    };
    if coiso_defect <= PAIRING_TOL {
        return Ok(Classification {
            class: SubspaceClass::Coisotropic,
            witness: coiso_defect,
            form_rank,
        });
    }
    let iso_defect = linalg::max_abs(&gram);
    if iso_defect <= PAIRING_TOL {
        return Ok(Classification {
            class: SubspaceClass::Isotropic,
            witness: iso_defect,
            form_rank,
        });
    }
    Ok(Classification {
        class: SubspaceClass::Mixed,
        witness: form_rank as f64,
        form_rank,
    })
}

/// Pivot decisions of a symplectic Gram–Schmidt run, replayed on a nearby
/// plane so that the two adapted bases vary continuously.
#[derive(Debug, Clone, Default)]
struct Plan {
    inner: Vec<(usize, usize)>,
    isotropic: Vec<usize>,
    outer: Vec<(usize, usize)>,
}

struct AdaptedBasis {
    e: Vec<Vector>,
    f: Vec<Vector>,
}

impl AdaptedBasis {
    fn matrix(&self) -> Mat {
        let cols: Vec<Vector> = self.e.iter().chain(self.f.iter()).cloned().collect();
        Mat::from_columns(&cols)
    }
}

fn project_off(w: &mut Vector, e: &Vector, f: &Vector) {
    let a = omega(w, f);
    let b = -omega(w, e);
    w.axpy(-a, e, 1.0);
    w.axpy(-b, f, 1.0);
}

/// Picks the best-pairing couple among `active` indices, or follows `fixed`.
fn pick_pair(
    work: &[Vector],
    active: &[usize],
    fixed: Option<(usize, usize)>,
) -> Option<(usize, usize, f64)> {
    if let Some((i, j)) = fixed {
        return Some((i, j, omega(&work[i], &work[j])));
    }
    let mut best: Option<(usize, usize, f64)> = None;
    for (a, &i) in active.iter().enumerate() {
        for &j in &active[a + 1..] {
            let w = omega(&work[i], &work[j]);
            if best.is_none_or(|b| w.abs() > b.2.abs()) {
                best = Some((i, j, w));
            }
        }
    }
    best
}

/// Symplectic Gram–Schmidt: a symplectic basis whose leading vectors span
/// the plane spanned by `vectors`.
fn adapted_basis(vectors: &[Vector], c: usize, replay: Option<&Plan>) -> Result<(AdaptedBasis, Plan)> {
    let n = c / 2;
    let mut plan = Plan::default();
    let mut basis = AdaptedBasis { e: Vec::new(), f: Vec::new() };
    let scale = vectors.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);

    // Pairs inside the plane.
    let mut work: Vec<Vector> = vectors.to_vec();
    let mut active: Vec<usize> = (0..work.len()).collect();
    let mut step = 0;
    loop {
        let fixed = match replay {
            Some(p) => match p.inner.get(step) {
                Some(&pair) => Some(pair),
                None => break,
            },
            None => None,
        };
        if active.len() < 2 {
            if fixed.is_some() {
                return Err(Error::NumericalRank("plane lost a symplectic pair".into()));
            }
            break;
        }
        let Some((i, j, w)) = pick_pair(&work, &active, fixed) else { break };
        if w.abs() <= PAIRING_TOL * scale * scale {
            if fixed.is_some() {
                return Err(Error::NumericalRank(format!(
                    "restricted form degenerate (pairing {w:.3e})"
                )));
            }
            break;
        }
        let e = work[i].clone();
        let f = &work[j] / w;
        active.retain(|&k| k != i && k != j);
        for &k in &active {
            project_off(&mut work[k], &e, &f);
        }
        plan.inner.push((i, j));
        basis.e.push(e);
        basis.f.push(f);
        step += 1;
    }
    if let Some(p) = replay {
        if p.inner.len() != plan.inner.len() {
            return Err(Error::NumericalRank("different symplectic rank".into()));
        }
    }

    // Isotropic remainder, each vector paired with a partner outside the plane.
    let order: Vec<usize> = match replay {
        Some(p) => p.isotropic.clone(),
        None => {
            let mut o = active.clone();
            o.sort_by(|a, b| work[*b].norm().total_cmp(&work[*a].norm()));
            o
        }
    };
    if order.len() != active.len() {
        return Err(Error::NumericalRank("isotropic part changed dimension".into()));
    }
    let mut remaining = order.clone();
    while let Some(g_idx) = remaining.first().copied() {
        remaining.remove(0);
        let norm = work[g_idx].norm();
        if norm <= 1e-10 * scale {
            return Err(Error::NumericalRank("dependent frame vectors".into()));
        }
        let g = &work[g_idx] / norm;
        // ω(g, J⁻¹g) = |g|² > 0.
        let mut h = j_inverse_apply(&g);
        for (e, f) in basis.e.iter().zip(basis.f.iter()) {
            project_off(&mut h, e, f);
        }
        let w = omega(&g, &h);
        if w.abs() <= PAIRING_TOL * scale * scale {
            return Err(Error::NumericalRank("cannot pair isotropic vector".into()));
        }
        let h = h / w;
        for &k in &remaining {
            project_off(&mut work[k], &g, &h);
        }
        basis.e.push(g);
        basis.f.push(h);
    }
    plan.isotropic = order;

    // Complete with standard basis vectors, largest-pivot first.
    let mut cand: Vec<Vector> = (0..c)
        .map(|i| {
            let mut v = Vector::zeros(c);
            v[i] = 1.0;
            v
        })
        .collect();
    for v in cand.iter_mut() {
        for (e, f) in basis.e.iter().zip(basis.f.iter()) {
            project_off(v, e, f);
        }
    }
    let mut active: Vec<usize> = (0..c).collect();
    let mut step = 0;
    while basis.e.len() < n {
        let fixed = replay.and_then(|p| p.outer.get(step).copied());
        let Some((i, j, w)) = pick_pair(&cand, &active, fixed) else {
            return Err(Error::NumericalRank("could not complete symplectic basis".into()));
        };
        if w.abs() <= PAIRING_TOL {
            return Err(Error::NumericalRank("could not complete symplectic basis".into()));
        }
        let e = cand[i].clone();
        let f = &cand[j] / w;
        active.retain(|&k| k != i && k != j);
        for &k in &active {
            project_off(&mut cand[k], &e, &f);
        }
        plan.outer.push((i, j));
        basis.e.push(e);
        basis.f.push(f);
        step += 1;
    }
    Ok((basis, plan))
}

fn classes_compatible(a: &Classification, b: &Classification) -> bool {
    a.class == b.class && (a.class != SubspaceClass::Mixed || a.form_rank == b.form_rank)
}

/// A symplectic matrix `S` with `S·E = F`, close to the identity when the
/// planes are close.
pub fn symplectic_map_between_planes(e: &PlaneFrame, f: &PlaneFrame) -> Result<Mat> {
    if e.ambient() != f.ambient() || e.dim() != f.dim() {
        return Err(Error::NotSameClass(format!(
            "dimensions differ: {}-plane in R^{} vs {}-plane in R^{}",
            e.dim(),
            e.ambient(),
            f.dim(),
            f.ambient()
        )));
    }
    let ce = classify_subspace(e)?;
    let cf = classify_subspace(f)?;
    if !classes_compatible(&ce, &cf) {
        return Err(Error::NotSameClass(format!("{:?} vs {:?}", ce.class, cf.class)));
    }
    let c = e.ambient();
    let e_vecs: Vec<Vector> = (0..e.dim()).map(|k| e.frame().column(k).clone_owned()).collect();
    let (be, plan) = adapted_basis(&e_vecs, c, None)?;

    // Represent F by the projections of E's frame when they still span F.
    let overlap = f.frame().transpose() * e.frame();
    let (smin, _) = linalg::singular_range(&overlap);
    let f_vecs: Vec<Vector> = if smin > 1e-6 {
        let p = f.projector();
        e_vecs.iter().map(|v| &p * v).collect()
    } else {
        (0..f.dim()).map(|k| f.frame().column(k).clone_owned()).collect()
    };
    let (bf, _) = adapted_basis(&f_vecs, c, Some(&plan)).or_else(|_| adapted_basis(&f_vecs, c, None))?;
    let be_m = be.matrix();
    let bf_m = bf.matrix();
    let inv = be_m
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NumericalRank("adapted basis is singular".into()))?;
    Ok(bf_m * inv)
}

/// `exp(J⁻¹ S)` for a seeded random symmetric `S` scaled so that the
/// Hamiltonian generator has Frobenius norm `scale`.
pub fn random_near_identity_symplectic(c: usize, scale: f64, seed: u64) -> Result<Mat> {
    SymplecticForm::new(c)?;
    if !(0.0..=0.5).contains(&scale) {
        return Err(Error::Param(format!("scale must lie in [0, 0.5], got {scale}")));
    }
    if scale == 0.0 {
        return Ok(Mat::identity(c, c));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = Mat::zeros(c, c);
    for i in 0..c {
        for k in i..c {
            let v: f64 = rng.gen_range(-1.0..1.0);
            s[(i, k)] = v;
            s[(k, i)] = v;
        }
    }
    let generator = hamiltonian_matrix(&s);
    let norm = generator.norm();
    if norm == 0.0 {
        return Ok(Mat::identity(c, c));
    }
    Ok(linalg::expm(&(generator * (scale / norm))))
}

/// `J⁻¹ S`, a Hamiltonian matrix for symmetric `S`.
pub fn hamiltonian_matrix(s: &Mat) -> Mat {
    let cols: Vec<Vector> = (0..s.ncols())
        .map(|k| j_inverse_apply(&s.column(k).clone_owned()))
        .collect();
    Mat::from_columns(&cols)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> Mat {
        Mat::from_diagonal(&Vector::from_row_slice(v))
    }

    #[test]
    fn determinant_one_diagonal_is_symplectic() {
        let r = is_symplectic_matrix(&diag(&[2.0, 0.5]), 1e-10).unwrap();
        assert!(r.pass);
        assert_eq!(r.defect, 0.0);
    }

    #[test]
    fn uniform_scaling_is_not() {
        let r = is_symplectic_matrix(&diag(&[2.0, 2.0]), 1e-10).unwrap();
        assert!(!r.pass);
        assert!((r.defect - 3.0).abs() < 1e-15);
    }

    #[test]
    fn odd_dimension_rejected() {
        assert!(matches!(
            is_symplectic_matrix(&Mat::identity(3, 3), 1e-9),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn j_squares_to_minus_identity() {
        let j = canonical_j(6);
        assert_eq!(&j * &j, -Mat::identity(6, 6));
        assert_eq!(j.transpose(), -j.clone());
        let u = Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let v = Vector::from_vec(vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(omega(&u, &v), 1.0);
        assert_eq!((u.transpose() * &j * &v)[0], 1.0);
    }

    #[test]
    fn canonical_planes_classified() {
        let sym = classify_subspace(&PlaneFrame::coordinate(4, &[0, 2]).unwrap()).unwrap();
        assert_eq!(sym.class, SubspaceClass::Symplectic);
        assert!((sym.witness - 1.0).abs() < 1e-15);
        let co = classify_subspace(&PlaneFrame::coordinate(4, &[0, 2, 1]).unwrap()).unwrap();
        assert_eq!(co.class, SubspaceClass::Coisotropic);
        let iso = classify_subspace(&PlaneFrame::coordinate(4, &[0]).unwrap()).unwrap();
        assert_eq!(iso.class, SubspaceClass::Isotropic);
        let mixed = classify_subspace(
            &PlaneFrame::from_vectors(&[
                Vector::from_vec(vec![1.0, 0.0, 0.0, 0.0]),
                Vector::from_vec(vec![0.0, 1.0, 1.0, 0.0]),
            ])
            .unwrap(),
        )
        .unwrap();
        // ω(e_x1, e_x2 + e_y1) = 1, so this 2-plane is symplectic.
        assert_eq!(mixed.class, SubspaceClass::Symplectic);
    }

    #[test]
    fn non_orthonormal_frame_rejected() {
        let m = Mat::from_row_slice(2, 1, &[2.0, 0.0]);
        assert!(matches!(PlaneFrame::new(m), Err(Error::Frame { .. })));
    }

    #[test]
    fn block_swap_between_symplectic_planes() {
        let e = PlaneFrame::coordinate(4, &[0, 2]).unwrap();
        let f = PlaneFrame::coordinate(4, &[1, 3]).unwrap();
        let s = symplectic_map_between_planes(&e, &f).unwrap();
        assert!(symplectic_defect(&s).unwrap() <= 1e-9);
        assert!(e.transformed(&s).unwrap().same_plane(&f, 1e-9));
    }

    #[test]
    fn identical_planes_give_identity() {
        let e = PlaneFrame::from_vectors(&[Vector::from_vec(vec![1.0, 0.3, -0.2, 0.5])]).unwrap();
        let s = symplectic_map_between_planes(&e, &e).unwrap();
        assert!(linalg::max_abs(&(s - Mat::identity(4, 4))) < 1e-12);
    }

    #[test]
    fn class_mismatch_rejected() {
        let e = PlaneFrame::coordinate(4, &[0, 2]).unwrap();
        let lagrangian = PlaneFrame::coordinate(4, &[0, 1]).unwrap();
        assert!(matches!(
            symplectic_map_between_planes(&e, &lagrangian),
            Err(Error::NotSameClass(_))
        ));
    }

    #[test]
    fn lines_in_the_plane_are_mapped_by_rotations() {
        let a = 0.3f64;
        let e = PlaneFrame::coordinate(2, &[1]).unwrap();
        let f = PlaneFrame::from_vectors(&[Vector::from_vec(vec![-a.sin(), a.cos()])]).unwrap();
        let s = symplectic_map_between_planes(&e, &f).unwrap();
        let rot = Mat::from_row_slice(2, 2, &[a.cos(), -a.sin(), a.sin(), a.cos()]);
        assert!(linalg::max_abs(&(s - rot)) < 1e-12);
    }

    #[test]
    fn random_near_identity_properties() {
        assert_eq!(random_near_identity_symplectic(4, 0.0, 3).unwrap(), Mat::identity(4, 4));
        let s = random_near_identity_symplectic(4, 0.1, 7).unwrap();
        assert!(symplectic_defect(&s).unwrap() <= 1e-9);
        assert!(linalg::spectral_norm(&(&s - Mat::identity(4, 4))) <= 0.2);
        assert_eq!(s, random_near_identity_symplectic(4, 0.1, 7).unwrap());
        assert!(random_near_identity_symplectic(4, 0.6, 7).is_err());
    }
}
