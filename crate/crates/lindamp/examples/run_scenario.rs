//! Runs one pipeline stage on a scenario file and writes the report.
//!
//! ```text
//! cargo run --release --example run_scenario -- scenarios/couette.toml simulate
//! ```

use lindamp::pipeline::{run_scenario, Command};
use lindamp::report::emit_report;
use lindamp::scenario::Scenario;
use std::path::PathBuf;

fn main() -> lindamp::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/couette.toml"));
    let command = match args.next().as_deref() {
        None | Some("dump-kernel") => Command::DumpKernel,
        Some("simulate") => Command::Simulate,
        Some("density") => Command::Density,
        Some("profiles") => Command::Profiles,
        Some("verify") => Command::Verify,
        Some(other) => return Err(lindamp::Error::Config(format!("unknown stage '{other}'"))),
    };
    let sc = Scenario::load(&path)?;
    let opts = lindamp::pipeline::RunOptions { checks: Some(Vec::new()), ..Default::default() };
    let report = run_scenario(&sc, command, &opts)?;
    let dir = std::env::temp_dir().join(format!("lindamp-{}-{}", sc.name, command.name()));
    for p in emit_report(&report, &dir)? {
        println!("wrote {}", p.display());
    }
    for s in &report.summaries {
        println!("{:<28} {:.6e}", s.name, s.value);
    }
    Ok(())
}
