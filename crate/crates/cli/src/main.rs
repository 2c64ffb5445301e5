use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use satake_core::identities;
use satake_core::scenario::{self, RunOverrides, Scenario, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "satake", version, about = "Limits of translated homogeneous measures on SL_n(Z)\\SL_n(R)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file (or a bundled scenario by name).
    Run {
        file: String,
        /// Worker threads for sampling and reduction.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Directory for summary.json, verdict.txt and point dumps.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the subgroup catalog and case coverage.
    ListCatalog,
    /// Run the exact and numeric identity suites.
    VerifyIdentities {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

fn load(file: &str) -> satake_core::Result<Scenario> {
    let path = PathBuf::from(file);
    if path.exists() {
        return Scenario::load(&path);
    }
    match scenario::bundled_scenario(file) {
        Some(sc) => sc,
        None => Err(satake_core::Error::InvalidInput(format!("no scenario file or bundled scenario named {file:?}"))),
    }
}

fn run(file: &str, jobs: Option<usize>, ov: RunOverrides, out: Option<PathBuf>) -> anyhow::Result<i32> {
    if let Some(j) = jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global().context("configuring worker pool")?;
    }
    let sc = match load(file) {
        Ok(sc) => sc,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(scenario::exit_code(&e));
        }
    };
    let result = match scenario::run_scenario(&sc, &ov) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(scenario::exit_code(&e));
        }
    };
    print!("{}", result.report.verdict_table());
    println!("runtime    {:.2} s", result.elapsed_secs);
    if let Some(dir) = out {
        scenario::write_outputs(&result, &dir).with_context(|| format!("writing outputs to {}", dir.display()))?;
    }
    Ok(result.report.exit_code())
}

fn verify(trials: usize, seed: u64) -> i32 {
    let checks = identities::run_all(trials, seed);
    println!("{:<42} {:>8} {:>12} {:>10} {:>6}", "suite", "cases", "max_error", "tolerance", "ok");
    for c in &checks {
        println!(
            "{:<42} {:>8} {:>12.3e} {:>10.0e} {:>6}",
            c.name,
            c.cases,
            c.max_error,
            c.tolerance,
            if c.passed() { "pass" } else { "FAIL" }
        );
    }
    if checks.iter().all(|c| c.passed()) { 0 } else { 1 }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let code = match cli.command {
        Command::Run { file, jobs, seed, samples, out } => {
            match run(&file, jobs, RunOverrides { seed, samples, ..Default::default() }, out) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    EXIT_INPUT
                }
            }
        }
        Command::ListCatalog => {
            print!("{}", scenario::catalog_text());
            0
        }
        Command::VerifyIdentities { trials, seed } => verify(trials, seed),
    };
    ExitCode::from(code as u8)
}
