use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use serde_json::json;

use blenderlab::linalg::{Mat, Vector};
use blenderlab::pipeline::arc::build_arc_system;
use blenderlab::pipeline::realization::{assign_cylinders_to_rectangles, audit_product_map_symplecticity, InterfaceProfile};
use blenderlab::pipeline::{certify, robustness_sweep, PipelineConfig};
use blenderlab::Result;

#[derive(Parser)]
#[command(name = "blenderlab", version, about = "Certify blending regions and tangencies of symplectic skew-products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every hypothesis check and write a certificate.
    Certify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Blender cover net spacing.
        #[arg(long)]
        net: Option<f64>,
        #[arg(long)]
        max_word_len: Option<usize>,
        /// Node budget for the orbit search.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Re-verify the cover checks under seeded perturbations.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        eta: Option<Vec<f64>>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cylinder bookkeeping and product-map symplecticity audit.
    AuditRealization {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Option<PathBuf>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn emit(text: &str, out: Option<PathBuf>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Certify {
            config,
            out,
            seed,
            net,
            max_word_len,
            budget,
        } => {
            let mut cfg = load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if net.is_some() {
                cfg.net.blender = net;
            }
            if let Some(n) = max_word_len {
                cfg.bfs.max_word_len = n;
            }
            if let Some(b) = budget {
                cfg.bfs.budget = b;
            }
            let cert = certify(&cfg);
            for c in &cert.checks {
                eprintln!(
                    "{:<24} {:<8} margin {}",
                    c.name,
                    format!("{:?}", c.status).to_lowercase(),
                    c.margin.map_or("-".into(), |m| format!("{m:.3e}"))
                );
            }
            let out = out.or(cfg.output.as_ref().map(PathBuf::from));
            emit(&cert.to_json()?, out)?;
            Ok(cert.overall)
        }
        Command::Sweep {
            config,
            eta,
            trials,
            out,
        } => {
            let cfg = load(&config)?;
            let etas = eta.unwrap_or_else(|| cfg.perturbation.eta.clone());
            let trials = trials.unwrap_or(cfg.perturbation.trials);
            let report = robustness_sweep(&cfg, &etas, trials)?;
            emit(&serde_json::to_string_pretty(&report)?, out)?;
            Ok(report.rows.iter().all(|r| r.pass))
        }
        Command::AuditRealization { config, out } => {
            let cfg = load(&config)?;
            let arc = build_arc_system(&cfg)?;
            let d = arc.system.maps.len();
            let cylinders = assign_cylinders_to_rectangles(d, d, 1)?;
            let base = Mat::from_diagonal(&Vector::from_row_slice(&[2.0, 0.5]));
            let profile = InterfaceProfile::new(1.0, 2.0)?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
            let c = cfg.dimension;
            let fiber_region = arc
                .layout
                .as_ref()
                .map(|l| l.compact.clone())
                .or_else(|| arc.system.domain.clone());
            let points: Vec<Vector> = (0..200)
                .map(|_| {
                    let r: f64 = rng.gen_range(0.0..2.5);
                    let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let y = fiber_region
                        .as_ref()
                        .map_or(Vector::zeros(c), |reg| reg.sample(&mut rng));
                    Vector::from_iterator(2 + c, [r * t.cos(), r * t.sin()].into_iter().chain(y.iter().copied()))
                })
                .collect();
            let mut audits = Vec::new();
            for group in ["transition", "globalization"] {
                for (i, m) in arc.maps_of(group).iter().enumerate() {
                    match audit_product_map_symplecticity(&base, m, profile, &points) {
                        Ok(a) => audits.push(json!({
                            "group": group,
                            "index": i,
                            "max_defect": a.max_defect,
                            "zones": a.zones,
                        })),
                        Err(e) => audits.push(json!({ "group": group, "index": i, "error": e.to_string() })),
                    }
                }
            }
            let report = json!({
                "schema": blenderlab::pipeline::SCHEMA,
                "symbols": d,
                "cylinders": cylinders,
                "profile": profile,
                "audits": audits,
            });
            emit(&serde_json::to_string_pretty(&report)?, out)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
