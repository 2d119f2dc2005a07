//! Invertible fiber maps of `R^c`: affine maps, bump translations and finite
//! compositions, each with an exact inverse, a Jacobian and Lipschitz bounds.

use nalgebra::linalg::LU;
use serde::{Deserialize, Serialize};

use crate::bump::BumpTranslation;
use crate::error::{Error, Result};
use crate::linalg::{singular_range, spectral_norm, Mat, Vector};

/// `x ↦ linear·x + offset` with the inverse matrix cached at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AffineSpec", into = "AffineSpec")]
pub struct AffineMap {
    linear: Mat,
    offset: Vector,
    inverse: Mat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AffineSpec {
    #[serde(with = "crate::serde_mat::mat")]
    linear: Mat,
    #[serde(with = "crate::serde_mat::vector")]
    offset: Vector,
}

impl TryFrom<AffineSpec> for AffineMap {
    type Error = Error;

    fn try_from(s: AffineSpec) -> Result<Self> {
        AffineMap::new(s.linear, s.offset)
    }
}

impl From<AffineMap> for AffineSpec {
    fn from(a: AffineMap) -> Self {
        AffineSpec {
            linear: a.linear,
            offset: a.offset,
        }
    }
}

impl AffineMap {
    pub fn new(linear: Mat, offset: Vector) -> Result<Self> {
        let c = linear.nrows();
        if linear.ncols() != c || offset.len() != c || c == 0 {
            return Err(Error::Dimension(format!(
                "affine map needs a square matrix and matching offset, got {}x{} and {}",
                linear.nrows(),
                linear.ncols(),
                offset.len()
            )));
        }
        if linear.iter().chain(offset.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Param("affine map has non-finite entries".into()));
        }
        let (lo, hi) = singular_range(&linear);
        if lo <= 1e-14 * hi.max(1.0) {
            return Err(Error::NumericalRank("affine linear part is singular".into()));
        }
        let inverse = LU::new(linear.clone())
            .try_inverse()
            .ok_or_else(|| Error::NumericalRank("affine linear part is singular".into()))?;
        Ok(Self {
            linear,
            offset,
            inverse,
        })
    }

    pub fn linear(&self) -> &Mat {
        &self.linear
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }

    pub fn inverse_linear(&self) -> &Mat {
        &self.inverse
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.linear * x + &self.offset
    }

    pub fn apply_inverse(&self, y: &Vector) -> Vector {
        &self.inverse * (y - &self.offset)
    }

    pub fn inverse(&self) -> Self {
        Self {
            linear: self.inverse.clone(),
            offset: -(&self.inverse * &self.offset),
            inverse: self.linear.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FiberMap {
    Affine(AffineMap),
    BumpTranslation(BumpTranslation),
    /// Applied left to right: `maps[0]` acts first.
    Composite { maps: Vec<FiberMap> },
}

impl FiberMap {
    pub fn affine(linear: Mat, offset: Vector) -> Result<Self> {
        Ok(FiberMap::Affine(AffineMap::new(linear, offset)?))
    }

    pub fn linear(linear: Mat) -> Result<Self> {
        let c = linear.nrows();
        Self::affine(linear, Vector::zeros(c))
    }

    pub fn translation(offset: Vector) -> Self {
        let c = offset.len();
        FiberMap::Affine(AffineMap {
            linear: Mat::identity(c, c),
            offset,
            inverse: Mat::identity(c, c),
        })
    }

    pub fn identity(c: usize) -> Self {
        Self::translation(Vector::zeros(c))
    }

    /// `x ↦ linear·(x − fixed) + fixed + shift`.
    pub fn affine_about(linear: Mat, fixed: &Vector, shift: &Vector) -> Result<Self> {
        let offset = fixed - &linear * fixed + shift;
        Self::affine(linear, offset)
    }

    pub fn compose(maps: Vec<FiberMap>) -> Result<Self> {
        let dims: Vec<usize> = maps.iter().map(|m| m.dimension()).collect();
        if dims.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Dimension(format!("composite of mismatched dimensions {dims:?}")));
        }
        if maps.is_empty() {
            return Err(Error::Param("empty composite".into()));
        }
        Ok(FiberMap::Composite { maps })
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &FiberMap) -> Result<Self> {
        Self::compose(vec![self.clone(), next.clone()])
    }

    pub fn dimension(&self) -> usize {
        match self {
            FiberMap::Affine(a) => a.offset.len(),
            FiberMap::BumpTranslation(b) => b.dimension(),
            FiberMap::Composite { maps } => maps.first().map_or(0, |m| m.dimension()),
        }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        match self {
            FiberMap::Affine(a) => a.apply(x),
            FiberMap::BumpTranslation(b) => b.apply(x),
            FiberMap::Composite { maps } => maps.iter().fold(x.clone(), |acc, m| m.apply(&acc)),
        }
    }

    pub fn apply_inverse(&self, y: &Vector) -> Vector {
        match self {
            FiberMap::Affine(a) => a.apply_inverse(y),
            FiberMap::BumpTranslation(b) => b.apply_inverse(y),
            FiberMap::Composite { maps } => maps
                .iter()
                .rev()
                .fold(y.clone(), |acc, m| m.apply_inverse(&acc)),
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            FiberMap::Affine(a) => FiberMap::Affine(a.inverse()),
            FiberMap::BumpTranslation(b) => FiberMap::BumpTranslation(b.inverse()),
            FiberMap::Composite { maps } => FiberMap::Composite {
                maps: maps.iter().rev().map(|m| m.inverse()).collect(),
            },
        }
    }

    pub fn jacobian(&self, x: &Vector) -> Mat {
        match self {
            FiberMap::Affine(a) => a.linear.clone(),
            FiberMap::BumpTranslation(b) => b.jacobian(x),
            FiberMap::Composite { maps } => {
                let c = x.len();
                let mut jac = Mat::identity(c, c);
                let mut cur = x.clone();
                for m in maps {
                    jac = m.jacobian(&cur) * jac;
                    cur = m.apply(&cur);
                }
                jac
            }
        }
    }

    /// Constant linear part and offset when the map is affine.
    pub fn affine_parts(&self) -> Option<(Mat, Vector)> {
        match self {
            FiberMap::Affine(a) => Some((a.linear.clone(), a.offset.clone())),
            FiberMap::BumpTranslation(_) => None,
            FiberMap::Composite { maps } => {
                let c = self.dimension();
                let mut lin = Mat::identity(c, c);
                let mut off = Vector::zeros(c);
                for m in maps {
                    let (l, o) = m.affine_parts()?;
                    off = &l * off + o;
                    lin = l * lin;
                }
                Some((lin, off))
            }
        }
    }

    /// Affine form of the map restricted to `B(center, radius)`, when bump
    /// components act there as pure translations or the identity.
    pub fn affine_on_ball(&self, center: &Vector, radius: f64) -> Option<(Mat, Vector)> {
        let c = self.dimension();
        match self {
            FiberMap::Affine(a) => Some((a.linear.clone(), a.offset.clone())),
            FiberMap::BumpTranslation(b) => {
                if b.translates_ball(center, radius) {
                    Some((Mat::identity(c, c), b.vector().clone()))
                } else if b.fixes_ball(center, radius) {
                    Some((Mat::identity(c, c), Vector::zeros(c)))
                } else {
                    None
                }
            }
            FiberMap::Composite { maps } => {
                let mut lin = Mat::identity(c, c);
                let mut off = Vector::zeros(c);
                let (mut cur, mut r) = (center.clone(), radius);
                for m in maps {
                    let (l, o) = m.affine_on_ball(&cur, r)?;
                    cur = &l * cur + &o;
                    r *= spectral_norm(&l);
                    off = &l * off + o;
                    lin = l * lin;
                }
                Some((lin, off))
            }
        }
    }

    pub fn is_affine(&self) -> bool {
        self.affine_parts().is_some()
    }

    /// Global Lipschitz bound of the map.
    pub fn lipschitz(&self) -> f64 {
        match self {
            FiberMap::Affine(a) => spectral_norm(&a.linear),
            FiberMap::BumpTranslation(b) => b.lipschitz_bound(),
            FiberMap::Composite { maps } => match self.affine_parts() {
                Some((l, _)) => spectral_norm(&l),
                None => maps.iter().map(|m| m.lipschitz()).product(),
            },
        }
    }

    /// Global Lipschitz bound of the inverse map.
    pub fn inverse_lipschitz(&self) -> f64 {
        match self {
            FiberMap::Affine(a) => spectral_norm(&a.inverse),
            FiberMap::BumpTranslation(b) => b.lipschitz_bound(),
            FiberMap::Composite { maps } => match self.affine_parts() {
                Some((l, _)) => {
                    let (lo, _) = singular_range(&l);
                    1.0 / lo
                }
                None => maps.iter().map(|m| m.inverse_lipschitz()).product(),
            },
        }
    }

    /// Sound ball image: returns `(center', r')` with
    /// `B(center', r') ⊆ f(B(center, r))`. Bump components act exactly when
    /// the ball sits in their plateau or misses their support.
    pub fn inner_image_ball(&self, center: &Vector, radius: f64) -> (Vector, f64) {
        match self {
            FiberMap::Affine(a) => {
                let (lo, _) = singular_range(&a.linear);
                (a.apply(center), radius * lo)
            }
            FiberMap::BumpTranslation(b) => {
                if b.translates_ball(center, radius) {
                    (center + b.vector(), radius)
                } else if b.fixes_ball(center, radius) {
                    (center.clone(), radius)
                } else {
                    (b.apply(center), radius / b.lipschitz_bound())
                }
            }
            FiberMap::Composite { maps } => maps
                .iter()
                .fold((center.clone(), radius), |(c, r), m| m.inner_image_ball(&c, r)),
        }
    }

    /// Largest sampled displacement `|f(x) − x|`.
    pub fn sup_displacement(&self, points: &[Vector]) -> f64 {
        points
            .iter()
            .map(|p| (self.apply(p) - p).norm())
            .fold(0.0, f64::max)
    }
}
