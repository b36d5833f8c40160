//! Scenario registry, configuration, report files and the command line.

pub mod cli;
mod common;
mod config;
mod cox;
mod levy;
mod registry;
mod report;

use std::time::Instant;

pub use common::{battery, certify_basis, default_dictionary, drift_config, residual_gap};
pub use config::{ConfigOverrides, ScenarioConfig};
pub use cox::{run_cox_continuous, run_cox_jumps, run_hybrid_default, run_levy_jumps};
pub use levy::run_levy_transform;
pub use registry::{describe, find, ParamInfo, ScenarioInfo, SCENARIOS};
pub use report::{emit_report, fmt_f64, Cell, ReportBundle, Table};

use crate::error::{Error, Result};

/// Runs the full pipeline of the configured scenario. A population floor hit
/// mid-pipeline yields the partial report with a skip record and a failing
/// `pipeline_complete` verdict.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ReportBundle> {
    let started = Instant::now();
    let mut out = ReportBundle::new();
    out.provenance("code_version", env!("CARGO_PKG_VERSION"));
    for (k, v) in cfg.echo() {
        out.provenance(&format!("config.{k}"), v);
    }
    let run = match cfg.scenario.as_str() {
        "cox-continuous" => run_cox_continuous,
        "cox-jumps" => run_cox_jumps,
        "hybrid-default" => run_hybrid_default,
        "levy-transform" => run_levy_transform,
        "levy-jumps" => run_levy_jumps,
        other => return Err(Error::Usage(format!("unknown scenario {other:?}"))),
    };
    match run(cfg, &mut out) {
        Ok(()) => {}
        Err(Error::PopulationTooSmall {
            have,
            need,
            context,
        }) => {
            out.skip(format!(
                "stopped early: population {have} below floor {need} ({context})"
            ));
            out.verdict("pipeline_complete", false);
        }
        Err(e) => return Err(e),
    }
    out.wall_time = Some(started.elapsed().as_secs_f64());
    Ok(out)
}
