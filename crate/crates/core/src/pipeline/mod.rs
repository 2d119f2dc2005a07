//! Configuration, arc assembly, certification, sweeps and realization audits.

pub mod arc;
pub mod certificate;
pub mod certify;
pub mod config;
pub mod realization;
pub mod sweep;

pub use arc::{build_arc_system, ArcSystem, REFERENCE_EPS};
pub use certificate::{Certificate, CheckRecord, CheckStatus, Verdict, SCHEMA};
pub use certify::{certify, CHECKS};
pub use config::PipelineConfig;
pub use realization::{assign_cylinders_to_rectangles, audit_product_map_symplecticity, InterfaceProfile};
pub use sweep::{robustness_sweep, SweepReport};
