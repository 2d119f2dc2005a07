//! Re-certification of the cover checks under small symplectic perturbations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blender::{default_blending_spacing, BlendingRegionSpec};
use crate::cover::{verify_open_cover, CoverCertificate, Direction};
use crate::error::{Error, Result};
use crate::fiber::FiberMap;
use crate::grassmann::{verify_tangency_blending, TangencyBlendingSpec};
use crate::skew::perturb_system;

use super::arc::{build_arc_system, ArcSystem};
use super::config::PipelineConfig;

/// The cover checks re-run by the sweep.
pub const SWEEP_CHECKS: [&str; 4] = [
    "blending_b1_double",
    "blending_b2_cu",
    "tangency_blending_b1",
    "tangency_blending_b2",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCheck {
    pub name: String,
    pub pass: bool,
    pub margin: f64,
    pub lipschitz_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eta: f64,
    pub trial: usize,
    pub seed: u64,
    pub pass: bool,
    pub checks: Vec<SweepCheck>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    /// Smallest margin over the unperturbed cover checks.
    pub base_margin: f64,
    /// Largest Lipschitz bound among the unperturbed checks.
    pub lipschitz: f64,
    /// Net spacings used for every trial, one per check per direction.
    pub spacings: Vec<f64>,
    pub rows: Vec<SweepRow>,
    /// Largest `η` at which every trial passed.
    pub eta_pass_max: Option<f64>,
    /// Smallest `η` at which some trial failed.
    pub eta_fail_min: Option<f64>,
}

/// Blender spacings per direction at the unperturbed maps, or the configured override.
fn blender_spacings(cfg: &PipelineConfig, maps: &[FiberMap], spec: &BlendingRegionSpec) -> Result<Vec<(Direction, f64)>> {
    let mut out = Vec::new();
    for (needed, dir) in [
        (spec.kind.needs_forward(), Direction::Forward),
        (spec.kind.needs_inverse(), Direction::Inverse),
    ] {
        if needed {
            let h = match cfg.net.blender {
                Some(h) => h,
                None => default_blending_spacing(maps, spec, dir)?,
            };
            out.push((dir, h));
        }
    }
    Ok(out)
}

struct Plan {
    b1: (BlendingRegionSpec, Vec<(Direction, f64)>),
    b2: (BlendingRegionSpec, Vec<(Direction, f64)>),
    t1: TangencyBlendingSpec,
    t2: TangencyBlendingSpec,
}

fn run_checks(cfg: &PipelineConfig, arc: &ArcSystem, plan: &Plan) -> Result<Vec<SweepCheck>> {
    let mut out = Vec::new();
    for (name, group, (spec, spacings)) in [
        (SWEEP_CHECKS[0], "blender_b1", &plan.b1),
        (SWEEP_CHECKS[1], "blender_b2", &plan.b2),
    ] {
        let maps = arc.maps_of(group);
        let certs: Vec<CoverCertificate> = spacings
            .iter()
            .map(|(dir, h)| verify_open_cover(&maps, &spec.b, *dir, *h))
            .collect::<Result<_>>()?;
        out.push(SweepCheck {
            name: name.into(),
            pass: certs.iter().all(|c| c.pass),
            margin: certs.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min),
            lipschitz_bound: certs.iter().map(|c| c.lipschitz_bound).fold(0.0, f64::max),
        });
    }
    for (name, group, spec) in [
        (SWEEP_CHECKS[2], "tangency_b1", &plan.t1),
        (SWEEP_CHECKS[3], "tangency_b2", &plan.t2),
    ] {
        let spec = TangencyBlendingSpec {
            maps: arc.maps_of(group),
            ..spec.clone()
        };
        let cert = verify_tangency_blending(&spec, cfg.net.tangency_base, cfg.net.tangency_plane)?;
        out.push(SweepCheck {
            name: name.into(),
            pass: cert.pass,
            margin: cert.margin,
            lipschitz_bound: cert.lipschitz_bound,
        });
    }
    Ok(out)
}

/// Perturbs the arc system by Hamiltonian bump translations of size `η`
/// and re-runs the four cover checks with the unperturbed net spacings.
pub fn robustness_sweep(cfg: &PipelineConfig, etas: &[f64], trials: usize) -> Result<SweepReport> {
    if trials == 0 {
        return Err(Error::Param("need at least one trial".into()));
    }
    let base = build_arc_system(cfg)?;
    let lay = base
        .layout
        .as_ref()
        .ok_or_else(|| Error::Param("the identity endpoint has nothing to perturb".into()))?;
    let plan = Plan {
        b1: (lay.b1.clone(), blender_spacings(cfg, &base.maps_of("blender_b1"), &lay.b1)?),
        b2: (lay.b2.clone(), blender_spacings(cfg, &base.maps_of("blender_b2"), &lay.b2)?),
        t1: lay.tangency1.clone(),
        t2: lay.tangency2.clone(),
    };
    let baseline = run_checks(cfg, &base, &plan)?;
    let base_margin = baseline.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
    let lipschitz = baseline.iter().map(|c| c.lipschitz_bound).fold(0.0, f64::max);

    let jobs: Vec<(f64, usize)> = etas
        .iter()
        .flat_map(|&eta| (0..trials).map(move |t| (eta, t)))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(eta, trial)| -> Result<SweepRow> {
            let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add(trial as u64);
            let system = perturb_system(&base.system, eta, seed, true)?;
            let arc = ArcSystem {
                system,
                ..base.clone()
            };
            let checks = run_checks(cfg, &arc, &plan)?;
            Ok(SweepRow {
                eta,
                trial,
                seed,
                pass: checks.iter().all(|c| c.pass),
                checks,
            })
        })
        .collect::<Result<_>>()?;

    let mut eta_pass_max: Option<f64> = None;
    let mut eta_fail_min: Option<f64> = None;
    for &eta in etas {
        let all = rows.iter().filter(|r| r.eta == eta).all(|r| r.pass);
        if all {
            eta_pass_max = Some(eta_pass_max.map_or(eta, |m| m.max(eta)));
        } else {
            eta_fail_min = Some(eta_fail_min.map_or(eta, |m| m.min(eta)));
        }
    }
    let spacings = plan
        .b1
        .1
        .iter()
        .chain(plan.b2.1.iter())
        .map(|(_, h)| *h)
        .chain([cfg.net.tangency_base, cfg.net.tangency_plane])
        .collect();
    Ok(SweepReport {
        base_margin,
        lipschitz,
        spacings,
        rows,
        eta_pass_max,
        eta_fail_min,
    })
}
