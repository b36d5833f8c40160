//! Runs a registered scenario from a configuration text, prints its verdicts
//! and writes the report files.
//!
//! ```text
//! cargo run --release --example run_scenario -- [output directory]
//! ```

use thinthick::app::{describe, emit_report, find, run_scenario, ConfigOverrides};

const CONFIG: &str = "
# hybrid default time, small run
scenario = hybrid-default
seed = 17
paths = 10000
review_times = 0.5, 1.0, 1.5
";

fn main() -> thinthick::Result<()> {
    if let Some(info) = find("hybrid-default") {
        println!("{}", describe(info));
    }
    let mut overrides = ConfigOverrides::parse_text(CONFIG)?;
    overrides.set("lambda", "0.6")?;
    let cfg = overrides.resolve()?;
    let report = run_scenario(&cfg)?;
    for line in report
        .summary_text()
        .lines()
        .filter(|l| l.starts_with("verdict."))
    {
        println!("{line}");
    }
    let dir = std::env::args().nth(1).unwrap_or_else(|| {
        std::env::temp_dir()
            .join("thinthick-example")
            .display()
            .to_string()
    });
    for path in emit_report(&report, dir.as_ref())? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
