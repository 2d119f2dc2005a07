//! End-to-end certification of the arc system.

use serde_json::{json, Value};

use crate::blender::verify_blending_region;
use crate::cover::{make_net, Region};
use crate::error::Result;
use crate::globalization::{semigroup_coverage, BfsOptions, CoverageOutcome, OrbitDirection};
use crate::grassmann::{find_transition, grassmann_distance, tangency_codimension, verify_tangency_blending, verify_unstable_cone};
use crate::linalg::Vector;
use crate::skew::{hyperbolic_fixed_point, hyperbolicity_constants};
use crate::symplectic::symplectic_defect;

use super::arc::{build_arc_system, ArcLayout, ArcSystem};
use super::certificate::{Certificate, CheckRecord, CheckStatus, Verdict};
use super::config::PipelineConfig;

/// Jacobian symplectic defect accepted for constructed maps.
pub const DEFECT_TOLERANCE: f64 = 1e-8;

const BOTH: &[Verdict] = &[Verdict::Transitivity, Verdict::Tangency];
const TRANSITIVITY: &[Verdict] = &[Verdict::Transitivity];
const TANGENCY: &[Verdict] = &[Verdict::Tangency];

/// Check names, hypothesis labels and the verdicts requiring them, in run order.
pub const CHECKS: &[(&str, &str, &[Verdict])] = &[
    ("partial_hyperbolicity", "partially hyperbolic skew-product", BOTH),
    ("fiber_bunching", "fiber bunched one-step map", TANGENCY),
    ("symplectic_maps", "arc of symplectic one-step maps", BOTH),
    ("hyperbolic_fixed_point", "hyperbolic fixed point in B", TRANSITIVITY),
    ("blending_b1_double", "B1 is a double-blending region", BOTH),
    ("blending_b2_cu", "B2 is a cu-blending region", TANGENCY),
    ("unstable_cone", "unstable l-cone around E^uu", TANGENCY),
    ("tangency_blending_b1", "blending region with tangency B1-hat", TANGENCY),
    ("tangency_blending_b2", "blending region with tangency B2-hat", TANGENCY),
    ("transition", "transition from B1-hat to B2-hat", TANGENCY),
    ("globalization", "B1 is globalized forward and backward", TRANSITIVITY),
    ("codimension", "admissible tangency dimension", TANGENCY),
];

/// Result of one check before it is wrapped in a record.
pub struct Outcome {
    pub pass: bool,
    pub margin: Option<f64>,
    pub parameters: Value,
    pub witnesses: Value,
    pub message: Option<String>,
}

impl Outcome {
    fn new(pass: bool, margin: Option<f64>, parameters: Value) -> Self {
        Self {
            pass,
            margin,
            parameters,
            witnesses: Value::Null,
            message: None,
        }
    }

    fn with_witnesses(mut self, witnesses: Value) -> Self {
        self.witnesses = witnesses;
        self
    }
}

fn record(name: &str, status: CheckStatus, outcome: Option<Outcome>, message: Option<String>) -> CheckRecord {
    let (_, hypothesis, required) = CHECKS
        .iter()
        .find(|(n, _, _)| *n == name)
        .copied()
        .unwrap_or((name, "", &[]));
    let outcome = outcome.unwrap_or(Outcome::new(false, None, Value::Null));
    CheckRecord {
        name: name.into(),
        hypothesis: hypothesis.into(),
        status,
        required_for: required.to_vec(),
        margin: outcome.margin,
        parameters: outcome.parameters,
        witnesses: outcome.witnesses,
        message: message.or(outcome.message),
    }
}

fn skipped_all(reason: &str) -> Vec<CheckRecord> {
    CHECKS
        .iter()
        .map(|(name, _, _)| record(name, CheckStatus::Skipped, None, Some(reason.into())))
        .collect()
}

/// Runs every check in order. Constructor errors become failed records.
pub fn certify(cfg: &PipelineConfig) -> Certificate {
    if let Err(e) = cfg.validate() {
        let mut checks = skipped_all("invalid configuration");
        checks.iter_mut().for_each(|c| c.message = Some(format!("invalid configuration: {e}")));
        return Certificate::assemble(cfg, checks);
    }
    if cfg.eps == 0.0 {
        return Certificate::assemble(cfg, skipped_all("arc endpoint is the identity"));
    }
    let arc = match build_arc_system(cfg) {
        Ok(a) => a,
        Err(e) => {
            let checks = CHECKS
                .iter()
                .map(|(name, _, _)| record(name, CheckStatus::Fail, None, Some(format!("construction failed: {e}"))))
                .collect();
            return Certificate::assemble(cfg, checks);
        }
    };
    let checks = CHECKS
        .iter()
        .map(|(name, _, _)| {
            if cfg.is_disabled(name) {
                return record(name, CheckStatus::Skipped, None, Some("disabled by configuration".into()));
            }
            match run_check(name, cfg, &arc) {
                Ok(o) => {
                    let status = if o.pass { CheckStatus::Pass } else { CheckStatus::Fail };
                    record(name, status, Some(o), None)
                }
                Err(e) => record(name, CheckStatus::Fail, None, Some(e.to_string())),
            }
        })
        .collect();
    Certificate::assemble(cfg, checks)
}

fn layout(arc: &ArcSystem) -> Result<&ArcLayout> {
    arc.layout
        .as_ref()
        .ok_or_else(|| crate::error::Error::Param("identity endpoint has no layout".into()))
}

/// Runs a single named check against an assembled arc system.
pub fn run_check(name: &str, cfg: &PipelineConfig, arc: &ArcSystem) -> Result<Outcome> {
    let lay = layout(arc)?;
    let sys = &arc.system;
    match name {
        "partial_hyperbolicity" | "fiber_bunching" => {
            let rep = hyperbolicity_constants(sys, &lay.fiber_region, cfg.hyperbolicity_samples);
            let params = json!({
                "gamma": rep.gamma,
                "gamma_hat_inv": rep.gamma_hat_inv,
                "nu_alpha": rep.nu_alpha,
                "samples": rep.samples,
            });
            Ok(if name == "partial_hyperbolicity" {
                let margin = (rep.gamma - rep.nu_alpha).min(1.0 / rep.nu_alpha - rep.gamma_hat_inv);
                Outcome::new(rep.partially_hyperbolic, Some(margin), params)
            } else {
                let margin = rep.gamma / rep.gamma_hat_inv - rep.nu_alpha;
                Outcome::new(rep.fiber_bunched, Some(margin), params)
            })
        }
        "symplectic_maps" => {
            let worst = max_symplectic_defect(arc, 100);
            Ok(Outcome::new(
                worst <= DEFECT_TOLERANCE,
                Some(DEFECT_TOLERANCE - worst),
                json!({ "max_defect": worst, "maps": sys.maps.len(), "points_per_map": 100 }),
            ))
        }
        "hyperbolic_fixed_point" => {
            let fp = hyperbolic_fixed_point(&sys.maps[0])?;
            Ok(match fp {
                Some(fp) => {
                    let depth = lay.b1.b.depth(&fp.point);
                    Outcome::new(fp.hyperbolic && depth > 0.0, Some(depth), serde_json::to_value(&fp)?)
                }
                None => Outcome::new(false, None, Value::Null),
            })
        }
        "blending_b1_double" | "blending_b2_cu" => {
            let (group, spec) = if name == "blending_b1_double" {
                ("blender_b1", &lay.b1)
            } else {
                ("blender_b2", &lay.b2)
            };
            let verdict = verify_blending_region(&arc.maps_of(group), spec, cfg.net.blender)?;
            let witnesses: Vec<_> = verdict.certificates().flat_map(|c| c.witness_failures.clone()).collect();
            Ok(Outcome::new(verdict.pass, Some(verdict.min_margin()), serde_json::to_value(&verdict)?)
                .with_witnesses(json!(witnesses)))
        }
        "unstable_cone" => {
            let cert = verify_unstable_cone(&lay.tangency1.maps, &lay.cone, &lay.b1.b, 50)?;
            let margin = cert.invariance_margin.min(cert.min_expansion - lay.cone.expansion);
            Ok(Outcome::new(cert.pass, Some(margin), serde_json::to_value(&cert)?))
        }
        "tangency_blending_b1" | "tangency_blending_b2" => {
            let spec = if name == "tangency_blending_b1" { &lay.tangency1 } else { &lay.tangency2 };
            let cert = verify_tangency_blending(spec, cfg.net.tangency_base, cfg.net.tangency_plane)?;
            Ok(Outcome::new(
                cert.pass,
                Some(cert.margin),
                json!({
                    "maps": spec.maps.len(),
                    "rotations": lay.rotations,
                    "net_spacing": cert.net_spacing,
                    "lipschitz_bound": cert.lipschitz_bound,
                }),
            )
            .with_witnesses(json!(cert.witness_failures)))
        }
        "transition" => {
            let from_plane = lay.tangency1.region.cap.base()?;
            let from = lay.b1.b.center().clone();
            let to = &lay.tangency2.region;
            let found = find_transition(&sys.maps, (&from, &from_plane), to, cfg.bfs.transition_len, cfg.bfs.transition_budget)?;
            Ok(match found {
                Some(w) => {
                    let cap_depth = to.cap.radius_angle - grassmann_distance(&to.cap.base()?, &w.plane)?;
                    let margin = to.base.depth(&w.point).min(cap_depth);
                    Outcome::new(
                        w.word.len() <= cfg.bfs.transition_len && margin > 0.0,
                        Some(margin),
                        json!({ "length": w.word.len(), "max_len": cfg.bfs.transition_len }),
                    )
                    .with_witnesses(serde_json::to_value(&w)?)
                }
                None => Outcome::new(false, None, json!({ "max_len": cfg.bfs.transition_len })),
            })
        }
        "globalization" => {
            let (fwd, bwd) = globalization_runs(cfg, arc)?;
            let summary = |o: &CoverageOutcome| {
                json!({
                    "covered": o.covered,
                    "margin": o.margin,
                    "states": o.states,
                    "layers": o.layers,
                    "uncovered": o.uncovered.len(),
                })
            };
            let sample: Vec<_> = fwd.witnesses.iter().flatten().step_by(400).cloned().collect();
            Ok(Outcome::new(
                fwd.covered && bwd.covered,
                Some(fwd.margin.min(bwd.margin)),
                json!({
                    "forward": summary(&fwd),
                    "backward": summary(&bwd),
                    "generators": arc.group("globalization").map_or(0, |g| g.len),
                    "target_points": fwd.witnesses.len(),
                }),
            )
            .with_witnesses(json!({ "forward_sample": sample, "forward_uncovered": fwd.uncovered, "backward_uncovered": bwd.uncovered })))
        }
        "codimension" => {
            let c = cfg.dimension;
            let cod = tangency_codimension(lay.b1.cu_index, lay.b2.cs_index, cfg.ell, c)?;
            Ok(Outcome::new(
                cod.admissible,
                None,
                json!({
                    "c_T": cod.c_t,
                    "ind_cu_1": lay.b1.cu_index,
                    "ind_cs_2": lay.b2.cs_index,
                    "ell": cfg.ell,
                }),
            ))
        }
        other => Err(crate::error::Error::Param(format!("unknown check {other}"))),
    }
}

/// Forward and backward orbits of `B₀` under the globalizing generators,
/// against the compact target net. A subfamily orbit lies inside the
/// orbit of the full system, so coverage by it is coverage by the system.
pub fn globalization_runs(cfg: &PipelineConfig, arc: &ArcSystem) -> Result<(CoverageOutcome, CoverageOutcome)> {
    let lay = layout(arc)?;
    let gens = arc.maps_of("globalization");
    let seed = Region::ball(lay.b1.b.center().clone(), cfg.globalization.seed_radius)?;
    let target = make_net(&lay.compact, cfg.net.coverage)?;
    let delta = cfg.globalization.step_per_eps * arc.eps;
    let (lo, hi) = lay.compact.bounding_box();
    let pad = Vector::from_element(lo.len(), cfg.globalization.seed_radius);
    let options = BfsOptions {
        budget: cfg.bfs.budget,
        cell: Some(delta / 2.0),
        bounds: Some(Region::from_corners((lo - &pad).as_slice(), (hi + &pad).as_slice())?),
        min_radius: None,
    };
    let run = |d| semigroup_coverage(&gens, &seed, &target, cfg.bfs.max_word_len, d, &options);
    Ok((run(OrbitDirection::Forward)?, run(OrbitDirection::Backward)?))
}

/// Largest `‖DfᵀJDf − J‖` over every map at seeded sample points of the
/// fiber region.
pub fn max_symplectic_defect(arc: &ArcSystem, points_per_map: usize) -> f64 {
    use rand::SeedableRng;
    use rayon::prelude::*;
    let region = arc
        .layout
        .as_ref()
        .map(|l| l.fiber_region.clone())
        .or_else(|| arc.system.domain.clone());
    let Some(region) = region else { return f64::NAN };
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5e1f);
    let points: Vec<Vector> = (0..points_per_map).map(|_| region.sample(&mut rng)).collect();
    arc.system
        .maps
        .par_iter()
        .map(|m| {
            if let Some((l, _)) = m.affine_parts() {
                return symplectic_defect(&l).unwrap_or(f64::INFINITY);
            }
            points
                .iter()
                .map(|p| symplectic_defect(&m.jacobian(p)).unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}
