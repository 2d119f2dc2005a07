//! Bookkeeping for realizing the symbolic system on a base with a Markov
//! partition, and a numeric audit of the glued product map.

use serde::{Deserialize, Serialize};

use crate::bump::BumpTranslation;
use crate::error::{Error, Result};
use crate::fiber::FiberMap;
use crate::linalg::{Mat, Vector};
use crate::symplectic::canonical_j;

/// Symbol `kᵢ ∈ {1..d}` carried by rectangle `i`: the zeroth symbol of the
/// `i`-th block of length `cylinder_len`, blocks in lexicographic order.
pub fn assign_cylinders_to_rectangles(d: usize, num_rectangles: usize, cylinder_len: usize) -> Result<Vec<usize>> {
    if d == 0 || cylinder_len == 0 {
        return Err(Error::Param("need d ≥ 1 and cylinder_len ≥ 1".into()));
    }
    let expected = u32::try_from(cylinder_len)
        .ok()
        .and_then(|k| d.checked_pow(k))
        .ok_or_else(|| Error::Param("d^cylinder_len overflows".into()))?;
    if num_rectangles != expected {
        return Err(Error::Param(format!(
            "{num_rectangles} rectangles cannot carry {d}^{cylinder_len} = {expected} cylinders"
        )));
    }
    let block = expected / d;
    let k: Vec<usize> = (0..num_rectangles).map(|i| i / block + 1).collect();
    let mut seen = vec![false; d];
    k.iter().for_each(|&s| seen[s - 1] = true);
    if seen.iter().any(|s| !s) {
        return Err(Error::Contract("cylinder assignment is not onto".into()));
    }
    Ok(k)
}

/// Radial weight `ρ(r)`: `1` for `r ≤ inner`, `0` for `r ≥ outer`, cubic smoothstep between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfaceProfile {
    pub inner: f64,
    pub outer: f64,
}

impl InterfaceProfile {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(0.0 < inner && inner < outer && outer.is_finite()) {
            return Err(Error::Param(format!("need 0 < inner < outer, got {inner}, {outer}")));
        }
        Ok(Self { inner, outer })
    }

    /// `(ρ(r), ρ'(r))`.
    pub fn weight(&self, r: f64) -> (f64, f64) {
        if r <= self.inner {
            return (1.0, 0.0);
        }
        if r >= self.outer {
            return (0.0, 0.0);
        }
        let w = self.outer - self.inner;
        let t = (r - self.inner) / w;
        (1.0 - t * t * (3.0 - 2.0 * t), -6.0 * t * (1.0 - t) / w)
    }

    pub fn zone(&self, r: f64) -> Zone {
        if r <= self.inner {
            Zone::Inner
        } else if r < self.outer {
            Zone::Annulus
        } else {
            Zone::Outer
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    /// `U₁`, where the map is the product `F × φ`.
    Inner,
    Annulus,
    Outer,
}

/// Fiber isotopy `s ↦ φ_s` joining the identity to a fiber map.
#[derive(Debug, Clone, PartialEq)]
pub enum FiberIsotopy {
    Identity(usize),
    /// `φ_s(y) = y + s·w`.
    Translation(Vector),
    /// Time-`s` map of the bump's Hamiltonian flow.
    Bump(BumpTranslation),
}

impl FiberIsotopy {
    /// Canonical isotopy of a translation, identity or bump translation.
    pub fn of(map: &FiberMap) -> Result<Self> {
        let c = map.dimension();
        match map {
            FiberMap::BumpTranslation(b) => Ok(Self::Bump(b.clone())),
            _ => match map.affine_parts() {
                Some((l, off)) if (&l - Mat::identity(c, c)).amax() < 1e-15 => Ok(if off.amax() == 0.0 {
                    Self::Identity(c)
                } else {
                    Self::Translation(off)
                }),
                _ => Err(Error::Param("no canonical isotopy for this fiber map".into())),
            },
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Self::Identity(c) => *c,
            Self::Translation(w) => w.len(),
            Self::Bump(b) => b.dimension(),
        }
    }

    fn at(&self, y: &Vector, s: f64) -> Vector {
        match self {
            Self::Identity(_) => y.clone(),
            Self::Translation(w) => y + w * s,
            Self::Bump(b) => b.flow(y, s),
        }
    }

    /// `∂φ_s/∂s` at `y`.
    fn speed(&self, y: &Vector, s: f64) -> Vector {
        match self {
            Self::Identity(c) => Vector::zeros(*c),
            Self::Translation(w) => w.clone(),
            Self::Bump(b) => b.velocity(&b.flow(y, s)),
        }
    }

    fn jacobian(&self, y: &Vector, s: f64) -> Mat {
        let c = self.dimension();
        match self {
            Self::Bump(b) => b.flow_jacobian(y, s),
            _ => Mat::identity(c, c),
        }
    }
}

/// Glued map `f(x, y) = (F x, φ_{ρ(‖x‖)}(y))` on `R^b × R^c`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMap {
    pub base: Mat,
    pub fiber: FiberIsotopy,
    pub profile: InterfaceProfile,
}

impl ProductMap {
    pub fn new(base: Mat, fiber: FiberIsotopy, profile: InterfaceProfile) -> Result<Self> {
        let b = base.nrows();
        if b == 0 || b % 2 != 0 || base.ncols() != b || fiber.dimension() % 2 != 0 {
            return Err(Error::Dimension("base and fiber must be even-dimensional and square".into()));
        }
        Ok(Self { base, fiber, profile })
    }

    fn split(&self, z: &Vector) -> (Vector, Vector) {
        let b = self.base.nrows();
        (z.rows(0, b).into_owned(), z.rows(b, z.len() - b).into_owned())
    }

    pub fn apply(&self, z: &Vector) -> Vector {
        let (x, y) = self.split(z);
        let (rho, _) = self.profile.weight(x.norm());
        let fx = &self.base * &x;
        let fy = self.fiber.at(&y, rho);
        Vector::from_iterator(z.len(), fx.iter().chain(fy.iter()).copied())
    }

    /// Block Jacobian; the lower-left block carries the interface cross term.
    pub fn jacobian(&self, z: &Vector) -> Mat {
        let (x, y) = self.split(z);
        let (b, c) = (x.len(), y.len());
        let r = x.norm();
        let (rho, drho) = self.profile.weight(r);
        let mut jac = Mat::zeros(b + c, b + c);
        jac.view_mut((0, 0), (b, b)).copy_from(&self.base);
        jac.view_mut((b, b), (c, c)).copy_from(&self.fiber.jacobian(&y, rho));
        if drho != 0.0 && r > 0.0 {
            let cross = self.fiber.speed(&y, rho) * (x / r).transpose() * drho;
            jac.view_mut((b, 0), (c, b)).copy_from(&cross);
        }
        jac
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    pub base_radius: f64,
    pub zone: Zone,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneMax {
    pub zone: Zone,
    pub samples: usize,
    pub max_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductAudit {
    pub rows: Vec<AuditRow>,
    pub zones: Vec<ZoneMax>,
    pub max_defect: f64,
}

/// Reports `‖DfᵀJDf − J‖` of the glued product map at each sample point.
pub fn audit_product_map_symplecticity(
    base: &Mat,
    fiber: &FiberMap,
    profile: InterfaceProfile,
    points: &[Vector],
) -> Result<ProductAudit> {
    let map = ProductMap::new(base.clone(), FiberIsotopy::of(fiber)?, profile)?;
    let n = base.nrows() + fiber.dimension();
    let mut rows = Vec::with_capacity(points.len());
    for p in points {
        if p.len() != n {
            return Err(Error::Dimension(format!("sample point has length {}, expected {n}", p.len())));
        }
        let r = p.rows(0, base.nrows()).norm();
        rows.push(AuditRow {
            base_radius: r,
            zone: profile.zone(r),
            defect: product_defect(&map.jacobian(p), base.nrows())?,
        });
    }
    let zones = [Zone::Inner, Zone::Annulus, Zone::Outer]
        .into_iter()
        .map(|zone| {
            let hits: Vec<f64> = rows.iter().filter(|r| r.zone == zone).map(|r| r.defect).collect();
            ZoneMax {
                zone,
                samples: hits.len(),
                max_defect: hits.into_iter().fold(0.0, f64::max),
            }
        })
        .collect();
    let max_defect = rows.iter().map(|r| r.defect).fold(0.0, f64::max);
    Ok(ProductAudit {
        rows,
        zones,
        max_defect,
    })
}

/// Defect against the product form `J_b ⊕ J_c`.
pub fn product_defect(jac: &Mat, base_dim: usize) -> Result<f64> {
    let n = jac.nrows();
    let c = n - base_dim;
    let mut form = Mat::zeros(n, n);
    form.view_mut((0, 0), (base_dim, base_dim)).copy_from(&canonical_j(base_dim));
    form.view_mut((base_dim, base_dim), (c, c)).copy_from(&canonical_j(c));
    Ok((jac.transpose() * &form * jac - &form).amax())
}
