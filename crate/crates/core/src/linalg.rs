//! Small dense linear-algebra helpers shared by the geometric modules.

use nalgebra::{DMatrix, DVector};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn spectral_norm(m: &Mat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Smallest and largest singular values.
pub fn singular_range(m: &Mat) -> (f64, f64) {
    let s = m.singular_values();
    let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = s.iter().cloned().fold(0.0, f64::max);
    (lo, hi)
}

/// Modified Gram–Schmidt with re-orthogonalisation. Returns `None` when a
/// column falls below `tol` relative to the largest input column.
pub fn orthonormalize(m: &Mat, tol: f64) -> Option<Mat> {
    let scale = (0..m.ncols())
        .map(|j| m.column(j).norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let mut q = m.clone();
    for j in 0..q.ncols() {
        for _ in 0..2 {
            for k in 0..j {
                let proj = q.column(k).dot(&q.column(j));
                let qk = q.column(k).clone_owned();
                let mut cj = q.column_mut(j);
                cj.axpy(-proj, &qk, 1.0);
            }
        }
        let n = q.column(j).norm();
        if n <= tol * scale {
            return None;
        }
        q.column_mut(j).scale_mut(1.0 / n);
    }
    Some(q)
}

/// Orthogonal projector onto the column span of an orthonormal frame.
pub fn projector(frame: &Mat) -> Mat {
    frame * frame.transpose()
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &Mat) -> Mat {
    let n = a.nrows();
    let norm = a.iter().map(|v| v.abs()).sum::<f64>().max(0.0);
    let mut squarings = 0u32;
    let mut scaled = a.clone();
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
        scaled /= 2f64.powi(squarings as i32);
    }
    let mut result = Mat::identity(n, n);
    let mut term = Mat::identity(n, n);
    for k in 1..=20 {
        term = &term * &scaled / k as f64;
        result += &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Orthonormal frame of the dominant `ell`-dimensional invariant subspace of
/// `a`, computed by QR subspace iteration.
pub fn dominant_subspace(a: &Mat, ell: usize, iterations: usize) -> Option<Mat> {
    let n = a.nrows();
    let mut q = Mat::zeros(n, ell);
    // Deterministic start that is generically transverse to any (n-ell)-plane.
    for j in 0..ell {
        for i in 0..n {
            q[(i, j)] = 1.0 / (1.0 + (i as f64) + 0.37 * (j as f64) * (i as f64 + 1.0)).sqrt()
                + if i == j { 1.0 } else { 0.0 };
        }
    }
    q = orthonormalize(&q, 1e-12)?;
    for _ in 0..iterations {
        q = orthonormalize(&(a * &q), 1e-14)?;
    }
    Some(q)
}

/// Orthonormal basis of the orthogonal complement of an orthonormal frame.
pub fn orthogonal_complement(frame: &Mat) -> Mat {
    let n = frame.nrows();
    let p = Mat::identity(n, n) - projector(frame);
    let mut cols: Vec<Vector> = Vec::new();
    // Pick columns of the complementary projector by largest remaining norm.
    let mut candidates: Vec<Vector> = (0..n).map(|i| p.column(i).clone_owned()).collect();
    while cols.len() < n - frame.ncols() {
        for c in candidates.iter_mut() {
            for q in &cols {
                let d = q.dot(c);
                c.axpy(-d, q, 1.0);
            }
        }
        let (idx, best) = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| (i, c.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best < 1e-12 {
            break;
        }
        let v = candidates[idx].clone() / best;
        cols.push(v);
    }
    Mat::from_columns(&cols)
}
