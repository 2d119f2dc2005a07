//! The arc `ε ↦ Φ_ε` of one-step maps: two blending regions with a
//! tangency, a transition between them and a globalizing translation family.

use serde::{Deserialize, Serialize};

use crate::blender::{build_blending_region, BlendingKind, BlendingRegionSpec, LATTICE_SAFETY};
use crate::cover::{lattice_translate_centers, Direction, Region};
use crate::error::{Error, Result};
use crate::fiber::FiberMap;
use crate::globalization::chart_family_globalization;
use crate::grassmann::{build_tangency_rotations, ConeKind, ConeSpec, LiftedRegion, TangencyBlendingSpec};
use crate::linalg::{Mat, Vector};
use crate::skew::OneStepSystem;

use super::config::PipelineConfig;

/// Arc parameter whose alphabet the identity endpoint reuses.
pub const REFERENCE_EPS: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapGroup {
    pub name: String,
    /// 0-based index of the first map.
    pub start: usize,
    pub len: usize,
}

impl MapGroup {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcLayout {
    pub b1: BlendingRegionSpec,
    pub b2: BlendingRegionSpec,
    pub tangency1: TangencyBlendingSpec,
    pub tangency2: TangencyBlendingSpec,
    pub cone: ConeSpec,
    pub rotations: usize,
    pub chart_classes: usize,
    pub charts: usize,
    /// Box containing every map's support, for sampling derivatives.
    pub fiber_region: Region,
    pub compact: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArcSystem {
    pub eps: f64,
    pub system: OneStepSystem,
    pub groups: Vec<MapGroup>,
    /// `None` at the identity endpoint.
    pub layout: Option<ArcLayout>,
}

impl ArcSystem {
    pub fn group(&self, name: &str) -> Option<&MapGroup> {
        self.groups.iter().find(|g| g.name == name)
    }

    pub fn maps_of(&self, name: &str) -> Vec<FiberMap> {
        self.group(name)
            .map(|g| self.system.maps[g.range()].to_vec())
            .unwrap_or_default()
    }
}

fn diag(x: &[f64]) -> Mat {
    Mat::from_diagonal(&Vector::from_row_slice(x))
}

pub fn compact_region(cfg: &PipelineConfig) -> Result<Region> {
    Region::from_corners(&cfg.globalization.domain[0], &cfg.globalization.domain[1])
}

/// Assembles the one-step system at `cfg.eps`. At `ε = 0` every fiber map is
/// the identity, with the alphabet of the reference parameter.
pub fn build_arc_system(cfg: &PipelineConfig) -> Result<ArcSystem> {
    cfg.validate()?;
    if cfg.dimension != 2 || cfg.ell != 1 {
        return Err(Error::Param(format!(
            "arc layouts are provided for c = 2, ℓ = 1; got c = {}, ℓ = {}",
            cfg.dimension, cfg.ell
        )));
    }
    if cfg.eps == 0.0 {
        let reference = build_arc_system(&PipelineConfig {
            eps: REFERENCE_EPS,
            ..cfg.clone()
        })?;
        let c = cfg.dimension;
        let maps = vec![FiberMap::identity(c); reference.system.maps.len()];
        let system = OneStepSystem::new(cfg.nu, cfg.alpha, maps)?
            .with_window(cfg.window)
            .with_domain(compact_region(cfg)?);
        return Ok(ArcSystem {
            eps: 0.0,
            system,
            groups: reference.groups,
            layout: None,
        });
    }
    let eps = cfg.eps;
    let s = 2f64.powf(2.0 * eps);
    let lam1 = diag(&[1.0 / s, s]);
    let lam2 = diag(&[s, 1.0 / s]);
    let zero = Vector::zeros(2);
    let p1 = Vector::from_row_slice(&cfg.anchor);
    let p2 = &p1 + Vector::from_row_slice(&[3.0 * eps, 0.0]);

    let phi1 = FiberMap::affine_about(lam1.clone(), &p1, &zero)?;
    let phi2 = FiberMap::affine_about(lam2.clone(), &p2, &zero)?;
    let b1 = build_blending_region(&phi1, eps, BlendingKind::Double)?;
    let b2 = build_blending_region(&phi2, eps, BlendingKind::Cu)?;

    // Tangency families `A_j(Λ₁(x − p) + t_i) + p`; the second is inverted so
    // that its preimages cover `B̂₂`.
    let r = eps / 2.0;
    let rot = build_tangency_rotations(&lam1, cfg.ell, r)?;
    let shifts = lattice_translate_centers(eps / 2.0, &lam1, LATTICE_SAFETY)?.centers;
    let tangency_maps = |p: &Vector| -> Result<Vec<FiberMap>> {
        let mut out = Vec::new();
        for a in &rot.rotations {
            for t in &shifts {
                out.push(FiberMap::affine(a * &lam1, a * (t - &lam1 * p) + p)?);
            }
        }
        Ok(out)
    };
    let t1 = tangency_maps(&p1)?;
    let t2: Vec<FiberMap> = tangency_maps(&p2)?.iter().map(|m| m.inverse()).collect();

    let transition = FiberMap::translation(Vector::from_row_slice(&[3.0 * eps, 0.0]));
    let compact = compact_region(cfg)?;
    let family = chart_family_globalization(
        &compact,
        cfg.globalization.chart_eps,
        Some(cfg.globalization.step_per_eps * eps),
    )?;

    let mut maps = Vec::new();
    let mut groups = Vec::new();
    let mut push = |name: &str, list: Vec<FiberMap>| {
        groups.push(MapGroup {
            name: name.into(),
            start: maps.len(),
            len: list.len(),
        });
        maps.extend(list);
    };
    push("blender_b1", b1.maps.clone());
    push("blender_b2", b2.maps.clone());
    push("tangency_b1", t1.clone());
    push("tangency_b2", t2.clone());
    push("transition", vec![transition]);
    push("globalization", family.generators.clone());

    let cap = rot.cap.clone();
    let tangency1 = TangencyBlendingSpec {
        region: LiftedRegion {
            base: b1.spec.b.clone(),
            cap: cap.clone(),
        },
        maps: t1,
        ell: cfg.ell,
        direction: Direction::Forward,
    };
    let tangency2 = TangencyBlendingSpec {
        region: LiftedRegion {
            base: b2.spec.b.clone(),
            cap,
        },
        maps: t2,
        ell: cfg.ell,
        direction: Direction::Inverse,
    };
    let cone = ConeSpec {
        base: rot.e_uu.clone(),
        opening: 2.0 * r.tan(),
        kind: ConeKind::Uu,
        expansion: 1.0 + 0.5 * (s - 1.0),
    };
    let support = family
        .classes
        .iter()
        .flatten()
        .map(|ch| (ch.center() - compact.center()).norm() + ch.outer_radius() + 2.0 * family.eps)
        .fold(compact.outer_radius(), f64::max);
    let fiber_region = Region::boxed(compact.center().clone(), Vector::from_element(2, support))?;
    let system = OneStepSystem::new(cfg.nu, cfg.alpha, maps)?
        .with_window(cfg.window)
        .with_domain(compact.clone());
    Ok(ArcSystem {
        eps,
        system,
        groups,
        layout: Some(ArcLayout {
            b1: b1.spec,
            b2: b2.spec,
            tangency1,
            tangency2,
            cone,
            rotations: rot.rotations.len(),
            chart_classes: family.classes.len(),
            charts: family.classes.iter().map(Vec::len).sum(),
            fiber_region,
            compact,
        }),
    })
}
