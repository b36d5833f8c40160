use std::path::PathBuf;

use clap::{Parser, Subcommand};

use super::{describe, emit_report, find, run_scenario, ConfigOverrides, SCENARIOS};
use crate::error::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "thinthick",
    version,
    about = "Martingale representation experiments on progressively enlarged filtrations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a scenario and write its report.
    Run(RunArgs),
    /// List the available scenarios.
    List,
    /// Describe a scenario and its parameters.
    Describe { scenario: String },
}

#[derive(clap::Args, Debug, Default)]
pub struct RunArgs {
    /// Scenario id, see `list`.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Number of simulated paths.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Number of grid steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Time horizon T.
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Random seed; required.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Level of the drift and orthogonality tests.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Output directory; without it the summary goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scenario parameter as key=value; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Config file of key = value lines; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> Result<ConfigOverrides> {
        let mut o = ConfigOverrides {
            scenario: self.scenario.clone(),
            n_paths: self.paths,
            n_steps: self.steps,
            horizon: self.horizon,
            seed: self.seed,
            alpha: self.alpha,
            out: self.out.clone(),
            ..Default::default()
        };
        for kv in &self.params {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("--param expects key=value, got {kv:?}")))?;
            o.params.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(o)
    }
}

/// Exit code of a finished command: 0 when every verdict passes, 1 when one
/// fails, 2 for usage and configuration errors.
pub fn execute(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e @ Error::Usage(_)) => {
            eprintln!("{e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::List => {
            for s in SCENARIOS {
                println!("{:<16} {}", s.id, s.summary);
            }
            Ok(0)
        }
        Command::Describe { scenario } => {
            let info = find(&scenario)
                .ok_or_else(|| Error::Usage(format!("unknown scenario {scenario:?}")))?;
            print!("{}", describe(info));
            Ok(0)
        }
        Command::Run(args) => {
            let file = match &args.config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        Error::Usage(format!("cannot read {}: {e}", path.display()))
                    })?;
                    ConfigOverrides::parse_text(&text)?
                }
                None => ConfigOverrides::default(),
            };
            let cfg = file.merge(args.overrides()?).resolve()?;
            let bundle = run_scenario(&cfg)?;
            match &cfg.out {
                Some(dir) => {
                    for path in emit_report(&bundle, dir)? {
                        eprintln!("wrote {}", path.display());
                    }
                }
                None => print!("{}", bundle.summary_text()),
            }
            Ok(if bundle.all_pass() { 0 } else { 1 })
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                2
            } else {
                0
            }
        }
    }
}
