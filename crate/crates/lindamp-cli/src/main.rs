use clap::{Args, Parser, Subcommand};
use lindamp::checks::{parse_check_list, CheckId};
use lindamp::pipeline::{run_config, Command, RunOptions};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lindamp", version, about = "Inviscid damping scenarios: run, fit and verify")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Time-step the linearized equations and tabulate norms.
    Simulate(Common),
    /// Solve the spectral density ladders and rebuild the stream function.
    Density(Common),
    /// Fit interior and near-wall carrier profiles.
    Profiles(Common),
    /// Run the acceptance checks (all unless --checks says otherwise).
    Verify(Common),
    /// Tabulate the Green kernel and its split.
    DumpKernel(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the scenario's `output`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    threads: Option<usize>,
    /// `all`, `none`, or a list such as `A2,A3`.
    #[arg(long, value_parser = parse_checks)]
    checks: Option<Checks>,
    /// Directory for cached density ladders.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Clone)]
struct Checks(Vec<CheckId>);

fn parse_checks(s: &str) -> Result<Checks, String> {
    parse_check_list(s).map(Checks).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, c) = match cli.command {
        Sub::Simulate(c) => (Command::Simulate, c),
        Sub::Density(c) => (Command::Density, c),
        Sub::Profiles(c) => (Command::Profiles, c),
        Sub::Verify(c) => (Command::Verify, c),
        Sub::DumpKernel(c) => (Command::DumpKernel, c),
    };
    let opts = RunOptions { out: c.out, checks: c.checks.map(|x| x.0), cache_dir: c.cache_dir, threads: c.threads };
    match run_config(&c.config, command, &opts) {
        Ok((report, dir)) => {
            for chk in &report.checks {
                println!("{}", chk.line());
            }
            println!("report written to {}", dir.join("report.json").display());
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
