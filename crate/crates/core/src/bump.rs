//! Compactly supported translations realised as time-one maps of flows.
//!
//! The Hamiltonian variant integrates `H = χ(|z − z₀|)·⟨J w, z − z₀⟩`, whose
//! vector field `J⁻¹∇H` equals `w` wherever `χ ≡ 1`. The plain variant
//! integrates `χ(|z − z₀|)·w` and works in any dimension. Both use a
//! fourth-order triple-jump composition of the implicit midpoint rule, which
//! is symmetric (so the reverse-time map is the exact discrete inverse) and
//! symplectic for Hamiltonian fields.

use nalgebra::linalg::LU;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat, Vector};
use crate::symplectic::j_inverse_apply;

const SMOOTHSTEP_D1_MAX: f64 = 2.460_937_5; // 630/256
const SMOOTHSTEP_D2_MAX: f64 = 9.372;
const DEFAULT_TOLERANCE: f64 = 1e-10;
const MAX_STEPS: usize = 1 << 14;
// Fourth-order symmetric composition of the midpoint rule.
const TRIPLE_JUMP: [f64; 3] = [
    1.351_207_191_959_657_6,
    -1.702_414_383_919_315_3,
    1.351_207_191_959_657_6,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BumpSpec", into = "BumpSpec")]
pub struct BumpTranslation {
    center: Vector,
    half_widths: Option<Vector>,
    r_inner: f64,
    r_outer: f64,
    vector: Vector,
    hamiltonian: bool,
    steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct BumpSpec {
    #[serde(with = "crate::serde_mat::vector")]
    center: Vector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    half_widths: Option<Vec<f64>>,
    r_inner: f64,
    r_outer: f64,
    #[serde(with = "crate::serde_mat::vector")]
    vector: Vector,
    #[serde(default = "default_true")]
    hamiltonian: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
}

fn default_true() -> bool {
    true
}

impl TryFrom<BumpSpec> for BumpTranslation {
    type Error = Error;

    fn try_from(s: BumpSpec) -> Result<Self> {
        let mut b = match s.half_widths {
            Some(hw) => BumpTranslation::with_box(
                s.center,
                Vector::from_vec(hw),
                s.r_inner,
                s.r_outer,
                s.vector,
                s.hamiltonian,
            )?,
            None => BumpTranslation::new(s.center, s.r_inner, s.r_outer, s.vector, s.hamiltonian)?,
        };
        if let Some(n) = s.steps {
            if n == 0 {
                return Err(Error::Param("bump step count must be positive".into()));
            }
            b.steps = n;
        }
        Ok(b)
    }
}

impl From<BumpTranslation> for BumpSpec {
    fn from(b: BumpTranslation) -> Self {
        BumpSpec {
            center: b.center,
            half_widths: b.half_widths.map(|h| h.as_slice().to_vec()),
            r_inner: b.r_inner,
            r_outer: b.r_outer,
            vector: b.vector,
            hamiltonian: b.hamiltonian,
            steps: Some(b.steps),
        }
    }
}

impl BumpTranslation {
    /// Translation by `vector` on `B(center, r_inner)`, identity outside
    /// `B(center, r_outer)`. Requires `|vector| < r_outer − r_inner` so that
    /// the cutoff has room to decay after the plateau.
    pub fn new(center: Vector, r_inner: f64, r_outer: f64, vector: Vector, hamiltonian: bool) -> Result<Self> {
        Self::build(center, None, r_inner, r_outer, vector, hamiltonian)
    }

    /// Same as [`BumpTranslation::new`] with radii measured as distance to
    /// the box `center ± half_widths` instead of distance to `center`.
    pub fn with_box(
        center: Vector,
        half_widths: Vector,
        r_inner: f64,
        r_outer: f64,
        vector: Vector,
        hamiltonian: bool,
    ) -> Result<Self> {
        if half_widths.len() != center.len() || half_widths.iter().any(|h| !(*h >= 0.0)) {
            return Err(Error::Param("box half-widths must be nonnegative, one per axis".into()));
        }
        Self::build(center, Some(half_widths), r_inner, r_outer, vector, hamiltonian)
    }

    fn build(
        center: Vector,
        half_widths: Option<Vector>,
        r_inner: f64,
        r_outer: f64,
        vector: Vector,
        hamiltonian: bool,
    ) -> Result<Self> {
        let c = center.len();
        if vector.len() != c || c == 0 {
            return Err(Error::Dimension(format!(
                "center has dimension {c}, vector {}",
                vector.len()
            )));
        }
        if hamiltonian && c % 2 != 0 {
            return Err(Error::Dimension(format!("Hamiltonian bump needs even dimension, got {c}")));
        }
        if !(r_inner > 0.0 && r_outer > r_inner && r_outer.is_finite()) {
            return Err(Error::Param(format!(
                "need 0 < r_inner < r_outer, got {r_inner}, {r_outer}"
            )));
        }
        let norm = vector.norm();
        if norm >= r_outer - r_inner {
            return Err(Error::StepSize {
                norm,
                allowed: r_outer - r_inner,
            });
        }
        let mut bump = Self {
            center,
            half_widths,
            r_inner,
            r_outer,
            vector,
            hamiltonian,
            steps: 1,
        };
        bump.steps = bump.calibrate_steps(DEFAULT_TOLERANCE);
        Ok(bump)
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn half_widths(&self) -> Option<&Vector> {
        self.half_widths.as_ref()
    }

    /// Displacement from the nearest core point, and the set of axes on
    /// which the box constraint is active.
    fn offset(&self, z: &Vector) -> (Vector, Vec<bool>) {
        let d = z - &self.center;
        match &self.half_widths {
            None => (d, vec![true; z.len()]),
            Some(hw) => {
                let mut out = d.clone();
                let mut active = vec![false; z.len()];
                for i in 0..z.len() {
                    let excess = d[i].abs() - hw[i];
                    if excess > 0.0 {
                        out[i] = excess * d[i].signum();
                        active[i] = true;
                    } else {
                        out[i] = 0.0;
                    }
                }
                (out, active)
            }
        }
    }

    /// Distance from `z` to the core (the center point or the box).
    pub fn core_distance(&self, z: &Vector) -> f64 {
        self.offset(z).0.norm()
    }

    fn core_extent(&self) -> f64 {
        self.half_widths.as_ref().map_or(0.0, |h| h.norm())
    }

    pub fn r_inner(&self) -> f64 {
        self.r_inner
    }

    pub fn r_outer(&self) -> f64 {
        self.r_outer
    }

    pub fn vector(&self) -> &Vector {
        &self.vector
    }

    pub fn is_hamiltonian(&self) -> bool {
        self.hamiltonian
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dimension(&self) -> usize {
        self.center.len()
    }

    fn plateau(&self) -> f64 {
        self.r_inner + self.vector.norm()
    }

    /// Reverse-time flow with the same step count.
    pub fn inverse(&self) -> Self {
        Self {
            vector: -&self.vector,
            ..self.clone()
        }
    }

    fn cutoff(&self, r: f64) -> (f64, f64, f64) {
        let a = self.plateau();
        let b = self.r_outer;
        if r <= a {
            return (1.0, 0.0, 0.0);
        }
        if r >= b {
            return (0.0, 0.0, 0.0);
        }
        let w = b - a;
        let t = (r - a) / w;
        // Degree-9 smoothstep: C⁴ at both ends, so the field is C³ and the
        // fourth-order composition converges at its nominal rate.
        let u = 1.0 - t;
        let t2 = t * t;
        let s = t2 * t2 * t * (126.0 + t * (-420.0 + t * (540.0 + t * (-315.0 + 70.0 * t))));
        let s1 = 630.0 * t2 * t2 * u * u * u * u;
        let s2 = 2520.0 * t2 * t * u * u * u * (1.0 - 2.0 * t);
        (1.0 - s, -s1 / w, -s2 / (w * w))
    }

    fn field(&self, z: &Vector) -> Vector {
        let (d, _) = self.offset(z);
        let r = d.norm();
        let (chi, chi1, _) = self.cutoff(r);
        if chi1 == 0.0 {
            return &self.vector * chi;
        }
        let mut x = &self.vector * chi;
        if self.hamiltonian {
            let g = j_apply(&self.vector);
            let l = g.dot(&(z - &self.center));
            let rhat = d / r;
            x += j_inverse_apply(&rhat) * (l * chi1);
        }
        x
    }

    fn field_jacobian(&self, z: &Vector) -> Mat {
        let c = z.len();
        let (d, active) = self.offset(z);
        let r = d.norm();
        let (_, chi1, chi2) = self.cutoff(r);
        if chi1 == 0.0 && chi2 == 0.0 {
            return Mat::zeros(c, c);
        }
        let rhat = &d / r;
        if !self.hamiltonian {
            return &self.vector * rhat.transpose() * chi1;
        }
        let g = j_apply(&self.vector);
        let l = g.dot(&(z - &self.center));
        let rr = &rhat * rhat.transpose();
        let free = Mat::from_fn(c, c, |i, j| if i == j && active[i] { 1.0 } else { 0.0 });
        let hess = (&rhat * g.transpose() + &g * rhat.transpose()) * chi1
            + (&rr * chi2 + (free - &rr) * (chi1 / r)) * l;
        let cols: Vec<Vector> = (0..c)
            .map(|k| j_inverse_apply(&hess.column(k).clone_owned()))
            .collect();
        Mat::from_columns(&cols)
    }

    /// Upper bound for `‖DX‖` over the annulus.
    pub fn field_derivative_bound(&self) -> f64 {
        let a = self.plateau();
        let b = self.r_outer;
        let w = b - a;
        let v = self.vector.norm();
        let d1 = SMOOTHSTEP_D1_MAX / w;
        if !self.hamiltonian {
            return v * d1;
        }
        let d2 = SMOOTHSTEP_D2_MAX / (w * w);
        2.0 * d1 * v + v * (b + self.core_extent()) * (d2 + d1 / a)
    }

    /// Grönwall bound on the Lipschitz constant of the time-one map.
    pub fn lipschitz_bound(&self) -> f64 {
        self.field_derivative_bound().exp()
    }

    fn midpoint_step(&self, z0: &Vector, h: f64) -> Vector {
        let c = z0.len();
        let mut z1 = z0 + self.field(z0) * h;
        let floor = 4.0 * f64::EPSILON * (1.0 + z0.norm());
        for _ in 0..12 {
            let m = (z0 + &z1) * 0.5;
            let resid = &z1 - z0 - self.field(&m) * h;
            if resid.norm() <= floor {
                break;
            }
            let jac = Mat::identity(c, c) - self.field_jacobian(&m) * (0.5 * h);
            let delta = LU::new(jac).solve(&resid).unwrap_or(resid);
            z1 -= &delta;
            if delta.norm() <= floor {
                break;
            }
        }
        z1
    }

    fn integrate(&self, z: &Vector, steps: usize) -> Vector {
        self.integrate_for(z, steps, 1.0)
    }

    fn integrate_for(&self, z: &Vector, steps: usize, time: f64) -> Vector {
        let h = time / steps as f64;
        let mut cur = z.clone();
        for _ in 0..steps {
            for g in TRIPLE_JUMP {
                cur = self.midpoint_step(&cur, g * h);
            }
        }
        cur
    }

    #[doc(hidden)]
    pub fn richardson_gap(&self, n: usize) -> f64 {
        self.annulus_samples()
            .iter()
            .map(|z| (self.integrate(z, n) - self.integrate(z, 2 * n)).norm())
            .fold(0.0, f64::max)
    }

    /// Smallest power-of-two step count whose Richardson estimate
    /// `|Φ_N − Φ_2N| / 15` meets `tol`; returns `2N`.
    fn calibrate_steps(&self, tol: f64) -> usize {
        let bound = self.field_derivative_bound();
        let mut n = ((bound).ceil() as usize).max(8).next_power_of_two();
        let first = self.richardson_gap(n);
        if first / 15.0 > tol {
            // Fourth-order decay predicts the count; verify before accepting.
            let ratio = (first / (15.0 * tol)).powf(0.25);
            n = ((n as f64 * ratio).ceil() as usize).next_power_of_two();
            while n < MAX_STEPS / 2 && self.richardson_gap(n) / 15.0 > tol {
                n *= 2;
            }
        }
        (2 * n).min(MAX_STEPS)
    }

    /// Deterministic points spread across the annulus, along `±w` and a
    /// perpendicular direction.
    pub fn annulus_samples(&self) -> Vec<Vector> {
        let c = self.dimension();
        let v = self.vector.norm();
        let mut dirs: Vec<Vector> = Vec::new();
        let u = if v > 0.0 {
            &self.vector / v
        } else {
            let mut e = Vector::zeros(c);
            e[0] = 1.0;
            e
        };
        dirs.push(u.clone());
        dirs.push(-&u);
        if c >= 2 {
            let mut p = Vector::zeros(c);
            let k = if u[0].abs() < 0.9 { 0 } else { 1 };
            p[k] = 1.0;
            p -= &u * u.dot(&p);
            let p = p.normalize();
            dirs.push(&p + &u);
            dirs.push(&p - &u);
            dirs.push(p.clone());
            dirs.push(-p);
        }
        let a = self.r_inner;
        let b = self.r_outer;
        let mut pts = Vec::new();
        for d in dirs {
            let d = d.normalize();
            // Exit point of the ray through the core.
            let exit = match &self.half_widths {
                None => 0.0,
                Some(hw) => (0..c)
                    .filter(|&i| d[i].abs() > 1e-12)
                    .map(|i| hw[i] / d[i].abs())
                    .fold(f64::INFINITY, f64::min),
            };
            for f in [0.15, 0.5, 0.85] {
                let p = &self.center + &d * (exit + a + f * (b - a));
                let r = self.core_distance(&p);
                if r > a && r < b {
                    pts.push(p);
                }
            }
        }
        pts
    }

    pub fn apply(&self, z: &Vector) -> Vector {
        let r = self.core_distance(z);
        if r <= self.r_inner {
            return z + &self.vector;
        }
        if r >= self.r_outer {
            return z.clone();
        }
        self.integrate(z, self.steps)
    }

    pub fn apply_inverse(&self, z: &Vector) -> Vector {
        self.inverse().apply(z)
    }

    /// Jacobian of the discrete flow (exact derivative of the scheme).
    pub fn jacobian(&self, z: &Vector) -> Mat {
        self.flow_jacobian(z, 1.0)
    }

    fn steps_for(&self, time: f64) -> usize {
        ((self.steps as f64 * time.abs()).ceil() as usize).max(1)
    }

    /// Time-`t` map of the bump flow for `t ∈ [0, 1]`; `t = 1` is [`Self::apply`].
    pub fn flow(&self, z: &Vector, time: f64) -> Vector {
        let r = self.core_distance(z);
        if r <= self.r_inner {
            return z + &self.vector * time;
        }
        if r >= self.r_outer {
            return z.clone();
        }
        self.integrate_for(z, self.steps_for(time), time)
    }

    /// Generating vector field, `d/dt` of the flow.
    pub fn velocity(&self, z: &Vector) -> Vector {
        self.field(z)
    }

    pub fn flow_jacobian(&self, z: &Vector, time: f64) -> Mat {
        let c = z.len();
        let r = self.core_distance(z);
        if r <= self.r_inner || r >= self.r_outer {
            return Mat::identity(c, c);
        }
        let steps = self.steps_for(time);
        let h = time / steps as f64;
        let mut cur = z.clone();
        let mut jac = Mat::identity(c, c);
        for _ in 0..steps {
            for g in TRIPLE_JUMP {
                let next = self.midpoint_step(&cur, g * h);
                let m = (&cur + &next) * 0.5;
                let a = self.field_jacobian(&m) * (0.5 * g * h);
                let lhs = Mat::identity(c, c) - &a;
                let rhs = (Mat::identity(c, c) + &a) * &jac;
                jac = LU::new(lhs).solve(&rhs).unwrap_or(rhs);
                cur = next;
            }
        }
        jac
    }

    /// True when the whole ball lies where the map is an exact translation.
    pub fn translates_ball(&self, c: &Vector, r: f64) -> bool {
        self.core_distance(c) + r <= self.r_inner
    }

    /// True when the ball misses the support.
    pub fn fixes_ball(&self, c: &Vector, r: f64) -> bool {
        self.core_distance(c) - r >= self.r_outer
    }
}

/// `J·v` for the canonical `J = [[0, I], [-I, 0]]`.
fn j_apply(v: &Vector) -> Vector {
    -j_inverse_apply(v)
}

/// Time-one map of the compactly supported Hamiltonian `χ·(v·x − u·y)`,
/// with the displacement limited to a quarter of the annulus width.
pub fn hamiltonian_bump_translation(
    center: Vector,
    r_inner: f64,
    r_outer: f64,
    vector: Vector,
) -> Result<BumpTranslation> {
    if !(r_inner > 0.0 && r_outer > r_inner) {
        return Err(Error::Param(format!(
            "need 0 < r_inner < r_outer, got {r_inner}, {r_outer}"
        )));
    }
    let allowed = (r_outer - r_inner) / 4.0;
    let norm = vector.norm();
    if norm > allowed {
        return Err(Error::StepSize { norm, allowed });
    }
    BumpTranslation::new(center, r_inner, r_outer, vector, true)
}
