//! Symbolic skew-products over finite symbol windows.

use nalgebra::linalg::LU;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bump::{hamiltonian_bump_translation, BumpTranslation};
use crate::cover::Region;
use crate::error::{Error, Result};
use crate::fiber::FiberMap;
use crate::linalg::{singular_range, Mat, Vector};

pub const DEFAULT_WINDOW: usize = 32;

/// Symbols `ξ_first, …, ξ_{first+len−1}`, each in `1..=d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    first: i64,
    symbols: Vec<usize>,
}

impl Word {
    /// Word over `[−N, N]` from `2N+1` symbols.
    pub fn centered(symbols: Vec<usize>) -> Result<Self> {
        if symbols.len() % 2 == 0 {
            return Err(Error::Param("a centered window needs an odd symbol count".into()));
        }
        if symbols.contains(&0) {
            return Err(Error::Param("symbols are numbered from 1".into()));
        }
        let n = (symbols.len() / 2) as i64;
        Ok(Self { first: -n, symbols })
    }

    /// Word over `[−N, N]` built from a function of the index.
    pub fn from_fn(window: usize, f: impl Fn(i64) -> usize) -> Result<Self> {
        let n = window as i64;
        Self::centered((-n..=n).map(f).collect())
    }

    pub fn constant(window: usize, symbol: usize) -> Result<Self> {
        Self::from_fn(window, |_| symbol)
    }

    pub fn random<R: Rng>(window: usize, alphabet: usize, rng: &mut R) -> Self {
        let n = 2 * window + 1;
        Self {
            first: -(window as i64),
            symbols: (0..n).map(|_| rng.gen_range(1..=alphabet)).collect(),
        }
    }

    pub fn first(&self) -> i64 {
        self.first
    }

    pub fn last(&self) -> i64 {
        self.first + self.symbols.len() as i64 - 1
    }

    /// Half-width `N` when the window is `[−N, N]`.
    pub fn window(&self) -> Option<usize> {
        (self.first == -self.last()).then_some(self.last() as usize)
    }

    pub fn symbol(&self, i: i64) -> Result<usize> {
        if i < self.first || i > self.last() {
            return Err(Error::Window {
                needed: i,
                window: self.window().unwrap_or((-self.first).max(self.last()).max(0) as usize),
            });
        }
        Ok(self.symbols[(i - self.first) as usize])
    }

    /// `τ^k ξ`, whose symbol at `i` is `ξ_{i+k}`.
    pub fn shifted(&self, k: i64) -> Self {
        Self {
            first: self.first - k,
            symbols: self.symbols.clone(),
        }
    }

    /// Replace `ξ_i` by `symbol`.
    pub fn with_symbol(&self, i: i64, symbol: usize) -> Result<Self> {
        self.symbol(i)?;
        let mut out = self.clone();
        out.symbols[(i - self.first) as usize] = symbol;
        Ok(out)
    }

    pub fn max_symbol(&self) -> usize {
        self.symbols.iter().copied().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub value: f64,
    /// True when the windows agree everywhere, so `value` only bounds the
    /// distance from above.
    pub bound_only: bool,
}

/// `d(ξ, ζ) = ν^ℓ` with `ℓ` the first `i ≥ 0` where `ξ_{±i}` and `ζ_{±i}` differ.
pub fn sequence_metric(xi: &Word, zeta: &Word, nu: f64) -> Result<MetricValue> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::Param(format!("nu must lie in (0,1), got {nu}")));
    }
    let n = match (xi.window(), zeta.window()) {
        (Some(a), Some(b)) if a == b => a as i64,
        _ => return Err(Error::Param("words must share a centered window".into())),
    };
    for i in 0..=n {
        if xi.symbol(i)? != zeta.symbol(i)? || xi.symbol(-i)? != zeta.symbol(-i)? {
            return Ok(MetricValue {
                value: nu.powi(i as i32),
                bound_only: false,
            });
        }
    }
    Ok(MetricValue {
        value: nu.powi(n as i32 + 1),
        bound_only: true,
    })
}

/// Fiber dynamics of a skew-product `Φ(ξ, x) = (τξ, φ_ξ(x))`.
pub trait SkewProduct {
    fn nu(&self) -> f64;
    fn alpha(&self) -> f64;
    fn fiber_dimension(&self) -> usize;
    /// `φ_{τ^k ξ}(x)`.
    fn fiber_apply(&self, w: &Word, k: i64, x: &Vector) -> Result<Vector>;
    /// `φ_{τ^k ξ}^{-1}(y)`.
    fn fiber_apply_inverse(&self, w: &Word, k: i64, y: &Vector) -> Result<Vector>;
    /// Hölder constant `C₀` of `ξ ↦ φ_ξ` along local stable sets.
    fn holder_constant(&self) -> f64;
    /// Uniform Lipschitz bound of the inverse fiber maps.
    fn inverse_lipschitz(&self) -> f64;
}

/// `φ^n_ξ(x)`; negative `n` iterates backwards.
pub fn iterate<S: SkewProduct + ?Sized>(sys: &S, w: &Word, x: &Vector, n: i64) -> Result<Vector> {
    let mut cur = x.clone();
    if n >= 0 {
        for k in 0..n {
            cur = sys.fiber_apply(w, k, &cur)?;
        }
    } else {
        for k in (n..0).rev() {
            cur = sys.fiber_apply_inverse(w, k, &cur)?;
        }
    }
    Ok(cur)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneStepSystem {
    pub dimension: usize,
    pub nu: f64,
    pub alpha: f64,
    pub maps: Vec<FiberMap>,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<usize>>,
    /// Region of interest used to place perturbations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Region>,
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}

fn check_rates(nu: f64, alpha: f64) -> Result<()> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::Param(format!("nu must lie in (0,1), got {nu}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Param(format!("alpha must lie in (0,1], got {alpha}")));
    }
    Ok(())
}

impl OneStepSystem {
    pub fn new(nu: f64, alpha: f64, maps: Vec<FiberMap>) -> Result<Self> {
        let dimension = maps.first().map_or(0, |m| m.dimension());
        let sys = Self {
            dimension,
            nu,
            alpha,
            maps,
            window: DEFAULT_WINDOW,
            subset: None,
            domain: None,
        };
        sys.validate()?;
        Ok(sys)
    }

    pub fn with_domain(mut self, domain: Region) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_rates(self.nu, self.alpha)?;
        if self.maps.len() < 2 {
            return Err(Error::Param(format!(
                "alphabet needs at least 2 symbols, got {}",
                self.maps.len()
            )));
        }
        if let Some(m) = self.maps.iter().find(|m| m.dimension() != self.dimension) {
            return Err(Error::Dimension(format!(
                "fiber map of dimension {} in a system of dimension {}",
                m.dimension(),
                self.dimension
            )));
        }
        if let Some(s) = &self.subset {
            if s.iter().any(|&i| i == 0 || i > self.maps.len()) {
                return Err(Error::Param("symbol subset out of range".into()));
            }
        }
        Ok(())
    }

    pub fn alphabet(&self) -> usize {
        self.maps.len()
    }

    fn map_for(&self, symbol: usize) -> Result<&FiberMap> {
        self.maps
            .get(symbol.wrapping_sub(1))
            .ok_or_else(|| Error::Param(format!("symbol {symbol} outside 1..={}", self.maps.len())))
    }
}

impl SkewProduct for OneStepSystem {
    fn nu(&self) -> f64 {
        self.nu
    }

    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn fiber_dimension(&self) -> usize {
        self.dimension
    }

    fn fiber_apply(&self, w: &Word, k: i64, x: &Vector) -> Result<Vector> {
        Ok(self.map_for(w.symbol(k)?)?.apply(x))
    }

    fn fiber_apply_inverse(&self, w: &Word, k: i64, y: &Vector) -> Result<Vector> {
        Ok(self.map_for(w.symbol(k)?)?.apply_inverse(y))
    }

    fn holder_constant(&self) -> f64 {
        0.0
    }

    fn inverse_lipschitz(&self) -> f64 {
        self.maps.iter().map(|m| m.inverse_lipschitz()).fold(0.0, f64::max)
    }
}

/// Non-one-step demo system whose fiber maps remember past symbols:
/// `φ_ξ(x) = φ_{ξ₀}(x) + Σ_{j=1}^{memory} ν^{αj}·s_{ξ_{−j}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemorySystem {
    pub nu: f64,
    pub alpha: f64,
    pub maps: Vec<FiberMap>,
    #[serde(with = "crate::serde_mat::vectors")]
    pub shifts: Vec<Vector>,
    pub memory: usize,
    #[serde(skip)]
    holder: f64,
}

impl MemorySystem {
    pub fn new(nu: f64, alpha: f64, maps: Vec<FiberMap>, shifts: Vec<Vector>, memory: usize) -> Result<Self> {
        check_rates(nu, alpha)?;
        if maps.len() < 2 || shifts.len() != maps.len() {
            return Err(Error::Param("need one shift per fiber map and at least 2 symbols".into()));
        }
        let c = maps[0].dimension();
        if maps.iter().any(|m| m.dimension() != c) || shifts.iter().any(|s| s.len() != c) {
            return Err(Error::Dimension("memory system components differ in dimension".into()));
        }
        let mut sys = Self {
            nu,
            alpha,
            maps,
            shifts,
            memory,
            holder: 0.0,
        };
        sys.holder = sys.estimate_holder_constant(10_000, 0x5eed);
        Ok(sys)
    }

    fn memory_offset(&self, w: &Word, k: i64) -> Result<Vector> {
        let na = self.nu.powf(self.alpha);
        let mut off = Vector::zeros(self.fiber_dimension());
        let mut weight = 1.0;
        for j in 1..=self.memory as i64 {
            weight *= na;
            let s = w.symbol(k - j)?;
            off += &self.shifts[s - 1] * weight;
        }
        Ok(off)
    }

    /// `max |φ_ξ(x) − φ_ζ(x)| / d(ξ,ζ)^α` over random pairs with `ξ₀ = ζ₀`.
    pub fn estimate_holder_constant(&self, pairs: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let window = self.memory + 1;
        let d = self.maps.len();
        let x = Vector::zeros(self.fiber_dimension());
        let mut best: f64 = 0.0;
        for _ in 0..pairs {
            let xi = Word::random(window, d, &mut rng);
            let mut zeta = Word::random(window, d, &mut rng);
            zeta = zeta.with_symbol(0, xi.symbol(0).unwrap_or(1)).unwrap_or(zeta);
            let (Ok(a), Ok(b)) = (self.fiber_apply(&xi, 0, &x), self.fiber_apply(&zeta, 0, &x)) else {
                continue;
            };
            let Ok(dist) = sequence_metric(&xi, &zeta, self.nu) else {
                continue;
            };
            if dist.bound_only {
                continue;
            }
            best = best.max((a - b).norm() / dist.value.powf(self.alpha));
        }
        best
    }
}

impl SkewProduct for MemorySystem {
    fn nu(&self) -> f64 {
        self.nu
    }

    fn alpha(&self) -> f64 {
        self.alpha
    }

    fn fiber_dimension(&self) -> usize {
        self.maps[0].dimension()
    }

    fn fiber_apply(&self, w: &Word, k: i64, x: &Vector) -> Result<Vector> {
        let s = w.symbol(k)?;
        let m = self
            .maps
            .get(s - 1)
            .ok_or_else(|| Error::Param(format!("symbol {s} out of range")))?;
        Ok(m.apply(x) + self.memory_offset(w, k)?)
    }

    fn fiber_apply_inverse(&self, w: &Word, k: i64, y: &Vector) -> Result<Vector> {
        let s = w.symbol(k)?;
        let m = self
            .maps
            .get(s - 1)
            .ok_or_else(|| Error::Param(format!("symbol {s} out of range")))?;
        Ok(m.apply_inverse(&(y - self.memory_offset(w, k)?)))
    }

    fn holder_constant(&self) -> f64 {
        self.holder
    }

    fn inverse_lipschitz(&self) -> f64 {
        self.maps.iter().map(|m| m.inverse_lipschitz()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    pub gamma: f64,
    /// `γ̂⁻¹`, the largest fiber expansion.
    pub gamma_hat_inv: f64,
    pub nu_alpha: f64,
    pub partially_hyperbolic: bool,
    pub fiber_bunched: bool,
    /// Jacobian samples per non-affine map; zero when every map is affine.
    pub samples: usize,
    pub exact: bool,
}

impl HyperbolicityReport {
    pub fn gamma_hat(&self) -> f64 {
        1.0 / self.gamma_hat_inv
    }
}

/// Fiber contraction and expansion rates and the partial hyperbolicity and
/// bunching flags. The upper bound in the partial hyperbolicity chain is
/// `γ̂⁻¹ < ν^{−α}`.
pub fn hyperbolicity_constants(sys: &OneStepSystem, region: &Region, samples: usize) -> HyperbolicityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7ac0b1a);
    let points: Vec<Vector> = std::iter::once(region.center().clone())
        .chain((0..samples).map(|_| region.sample(&mut rng)))
        .collect();
    let mut gamma = f64::INFINITY;
    let mut expand: f64 = 0.0;
    let mut exact = true;
    for m in &sys.maps {
        if let Some((lin, _)) = m.affine_parts() {
            let (lo, hi) = singular_range(&lin);
            gamma = gamma.min(lo);
            expand = expand.max(hi);
        } else {
            exact = false;
            for p in &points {
                let (lo, hi) = singular_range(&m.jacobian(p));
                gamma = gamma.min(lo);
                expand = expand.max(hi);
            }
        }
    }
    let na = sys.nu.powf(sys.alpha);
    HyperbolicityReport {
        gamma,
        gamma_hat_inv: expand,
        nu_alpha: na,
        partially_hyperbolic: na < gamma && gamma <= 1.0 && 1.0 <= expand && expand < 1.0 / na,
        fiber_bunched: na < gamma / expand,
        samples: if exact { 0 } else { points.len() },
        exact,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPoint {
    #[serde(with = "crate::serde_mat::vector")]
    pub point: Vector,
    /// Eigenvalues as `[re, im]` pairs.
    pub eigenvalues: Vec<[f64; 2]>,
    pub hyperbolic: bool,
    pub s_index: usize,
}

fn classify_fixed_point(point: Vector, lin: &Mat) -> FixedPoint {
    let eig = lin.complex_eigenvalues();
    let eigenvalues: Vec<[f64; 2]> = eig.iter().map(|z| [z.re, z.im]).collect();
    let moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
    FixedPoint {
        point,
        eigenvalues,
        hyperbolic: moduli.iter().all(|m| (m - 1.0).abs() > 1e-9),
        s_index: moduli.iter().filter(|m| **m < 1.0 - 1e-9).count(),
    }
}

/// Fixed point of an affine map `x ↦ Λx + b`. `Ok(None)` when no fixed point
/// exists; an error when fixed points are not isolated.
pub fn hyperbolic_fixed_point(phi: &FiberMap) -> Result<Option<FixedPoint>> {
    let (lin, off) = phi
        .affine_parts()
        .ok_or_else(|| Error::Param("fixed point search needs an affine map or a seed".into()))?;
    let c = lin.nrows();
    let a = Mat::identity(c, c) - &lin;
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max().max(1.0);
    let rank = svd.rank(1e-12 * smax);
    if rank == c {
        let x = LU::new(a)
            .solve(&off)
            .ok_or(Error::NoIsolatedFixedPoint)?;
        return Ok(Some(classify_fixed_point(x, &lin)));
    }
    let x = svd
        .solve(&off, 1e-12 * smax)
        .map_err(|_| Error::NoIsolatedFixedPoint)?;
    let resid = (&a * &x - &off).norm();
    if resid > 1e-9 * (1.0 + off.norm()) {
        Ok(None)
    } else {
        Err(Error::NoIsolatedFixedPoint)
    }
}

/// Newton search for a fixed point of a general fiber map.
pub fn hyperbolic_fixed_point_near(phi: &FiberMap, seed: &Vector) -> Result<Option<FixedPoint>> {
    let c = seed.len();
    let mut x = seed.clone();
    for _ in 0..60 {
        let r = phi.apply(&x) - &x;
        if r.norm() < 1e-13 {
            let jac = phi.jacobian(&x);
            if LU::new(&jac - Mat::identity(c, c)).determinant().abs() < 1e-12 {
                return Err(Error::NoIsolatedFixedPoint);
            }
            return Ok(Some(classify_fixed_point(x, &jac)));
        }
        let a = phi.jacobian(&x) - Mat::identity(c, c);
        let Some(step) = LU::new(a).solve(&r) else {
            return Err(Error::NoIsolatedFixedPoint);
        };
        x -= step;
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolonomyResult {
    #[serde(with = "crate::serde_mat::vector")]
    pub point: Vector,
    pub error_bound: f64,
}

/// `(φ^n_ζ)⁻¹(φ^n_ξ(x))` at `n = depth`, with `ζ` agreeing with `ξ` on
/// indices `0..depth`.
pub fn strong_stable_holonomy<S: SkewProduct + ?Sized>(
    sys: &S,
    xi: &Word,
    zeta: &Word,
    x: &Vector,
    depth: usize,
) -> Result<HolonomyResult> {
    for i in 0..depth as i64 {
        if xi.symbol(i)? != zeta.symbol(i)? {
            return Err(Error::Param(format!(
                "words differ at forward index {i}; not on a common local stable set"
            )));
        }
    }
    let forward = iterate(sys, xi, x, depth as i64)?;
    let point = iterate(sys, &zeta.shifted(depth as i64), &forward, -(depth as i64))?;
    let q = sys.nu().powf(sys.alpha()) * sys.inverse_lipschitz();
    let c0 = sys.holder_constant();
    let error_bound = if c0 == 0.0 {
        0.0
    } else if q < 1.0 {
        c0 * q.powi(depth as i32 + 1) / (1.0 - q)
    } else {
        f64::INFINITY
    };
    Ok(HolonomyResult { point, error_bound })
}

/// Post-composes every fiber map with a bump translation of length `eta`
/// whose plateau contains the image of the system's domain, so each
/// perturbed map equals the original plus a constant shift there.
pub fn perturb_system(sys: &OneStepSystem, eta: f64, seed: u64, symplectic: bool) -> Result<OneStepSystem> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::Param(format!("eta must be nonnegative, got {eta}")));
    }
    if eta == 0.0 {
        return Ok(sys.clone());
    }
    let c = sys.dimension;
    let domain = sys
        .domain
        .clone()
        .unwrap_or(Region::Ball {
            center: Vector::zeros(c),
            radius: 10.0,
        });
    let reach = domain.outer_radius();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut maps = Vec::with_capacity(sys.maps.len());
    for m in &sys.maps {
        let dir = Vector::from_fn(c, |_, _| rng.gen_range(-1.0..1.0));
        let dir = if dir.norm() > 1e-12 { dir.normalize() } else { Vector::from_element(c, 1.0).normalize() };
        let jitter = Vector::from_fn(c, |_, _| rng.gen_range(-0.1..0.1) * reach);
        let center = m.apply(domain.center()) + &jitter;
        let r_inner = 1.2 * m.lipschitz() * reach + jitter.norm();
        let r_outer = 2.0 * r_inner;
        let vector = dir * eta;
        let bump = if symplectic && c % 2 == 0 {
            hamiltonian_bump_translation(center, r_inner, r_outer, vector)?
        } else {
            BumpTranslation::new(center, r_inner, r_outer, vector, false)?
        };
        maps.push(m.then(&FiberMap::BumpTranslation(bump))?);
    }
    Ok(OneStepSystem {
        maps,
        ..sys.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::symplectic_defect;

    fn v(x: &[f64]) -> Vector {
        Vector::from_row_slice(x)
    }

    fn diag(x: &[f64]) -> Mat {
        Mat::from_diagonal(&v(x))
    }

    fn word_agreeing_until(n: usize, k: i64) -> (Word, Word) {
        let xi = Word::constant(n, 1).unwrap();
        let zeta = xi.with_symbol(k, 2).unwrap();
        (xi, zeta)
    }

    #[test]
    fn metric_examples() {
        let (xi, zeta) = word_agreeing_until(8, 0);
        assert_eq!(sequence_metric(&xi, &zeta, 0.5).unwrap().value, 1.0);
        let (xi, zeta) = word_agreeing_until(8, 3);
        assert_eq!(sequence_metric(&xi, &zeta, 0.5).unwrap().value, 0.125);
        let (xi, zeta) = word_agreeing_until(8, -3);
        assert_eq!(sequence_metric(&xi, &zeta, 0.5).unwrap().value, 0.125);
        let same = sequence_metric(&xi, &xi, 0.5).unwrap();
        assert!(same.bound_only);
        assert_eq!(same.value, 0.5f64.powi(9));
        let short = Word::constant(4, 1).unwrap();
        assert!(matches!(sequence_metric(&xi, &short, 0.5), Err(Error::Param(_))));
    }

    fn halving_system() -> OneStepSystem {
        let m = Mat::from_element(1, 1, 0.5);
        OneStepSystem::new(
            0.5,
            1.0,
            vec![
                FiberMap::linear(m.clone()).unwrap(),
                FiberMap::affine(m, v(&[0.5])).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn iterate_examples() {
        let sys = halving_system();
        let w = Word::from_fn(2, |i| if i == 1 { 2 } else { 1 }).unwrap();
        assert!((iterate(&sys, &w, &v(&[1.0]), 2).unwrap()[0] - 0.75).abs() < 1e-15);
        assert_eq!(iterate(&sys, &w, &v(&[0.3]), 0).unwrap(), v(&[0.3]));
        assert!((iterate(&sys, &w, &v(&[0.25]), -1).unwrap()[0] - 0.5).abs() < 1e-15);
        assert!(matches!(iterate(&sys, &w, &v(&[0.0]), 4), Err(Error::Window { .. })));
    }

    #[test]
    fn hyperbolicity_examples() {
        let lin = diag(&[0.5, 2.0]);
        let maps = vec![
            FiberMap::linear(lin.clone()).unwrap(),
            FiberMap::affine(lin, v(&[1.0, 0.0])).unwrap(),
        ];
        let region = Region::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        let r = hyperbolicity_constants(&OneStepSystem::new(0.4, 1.0, maps.clone()).unwrap(), &region, 10);
        assert_eq!(r.gamma, 0.5);
        assert_eq!(r.gamma_hat_inv, 2.0);
        assert!(r.partially_hyperbolic && !r.fiber_bunched && r.exact);
        let r = hyperbolicity_constants(&OneStepSystem::new(0.2, 1.0, maps.clone()).unwrap(), &region, 10);
        assert!(r.partially_hyperbolic && r.fiber_bunched);
        let r = hyperbolicity_constants(&OneStepSystem::new(0.9, 1.0, maps).unwrap(), &region, 10);
        assert!(!r.partially_hyperbolic);
    }

    #[test]
    fn fixed_point_examples() {
        let f = FiberMap::affine(diag(&[0.5, 2.0]), v(&[1.0, 1.0])).unwrap();
        let fp = hyperbolic_fixed_point(&f).unwrap().unwrap();
        assert!((fp.point - v(&[2.0, -1.0])).norm() < 1e-12);
        assert!(fp.hyperbolic);
        assert_eq!(fp.s_index, 1);
        assert!(matches!(
            hyperbolic_fixed_point(&FiberMap::identity(2)),
            Err(Error::NoIsolatedFixedPoint)
        ));
        assert!(hyperbolic_fixed_point(&FiberMap::translation(v(&[1.0, 0.0])))
            .unwrap()
            .is_none());
        let near = hyperbolic_fixed_point_near(&f, &v(&[0.0, 0.0])).unwrap().unwrap();
        assert!((near.point - v(&[2.0, -1.0])).norm() < 1e-10);
    }

    #[test]
    fn one_step_holonomy_is_identity() {
        let sys = halving_system();
        let (xi, zeta) = word_agreeing_until(16, -2);
        let x = v(&[0.3]);
        for depth in [0, 4, 8] {
            let h = strong_stable_holonomy(&sys, &xi, &zeta, &x, depth).unwrap();
            assert!((h.point[0] - 0.3).abs() < 1e-12);
            assert_eq!(h.error_bound, 0.0);
        }
        let (xi, zeta) = word_agreeing_until(16, 2);
        assert!(matches!(
            strong_stable_holonomy(&sys, &xi, &zeta, &x, 4),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn perturbation_examples() {
        let lin = diag(&[0.5, 2.0]);
        let sys = OneStepSystem::new(
            0.2,
            1.0,
            vec![FiberMap::linear(lin.clone()).unwrap(), FiberMap::affine(lin, v(&[0.1, 0.0])).unwrap()],
        )
        .unwrap()
        .with_domain(Region::ball(v(&[0.0, 0.0]), 1.0).unwrap());
        assert_eq!(perturb_system(&sys, 0.0, 3, true).unwrap(), sys);
        let a = perturb_system(&sys, 0.01, 3, true).unwrap();
        let b = perturb_system(&sys, 0.01, 3, true).unwrap();
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let domain = sys.domain.clone().unwrap();
        for _ in 0..100 {
            let p = domain.sample(&mut rng);
            for (m0, m1) in sys.maps.iter().zip(&a.maps) {
                assert!((m0.apply(&p) - m1.apply(&p)).norm() <= 0.01 + 1e-12);
                assert!(symplectic_defect(&m1.jacobian(&p)).unwrap() <= 1e-8);
            }
        }
    }
}
