use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use lrb_core::config::ExperimentConfig;
use lrb_core::experiment::{run_experiment, with_thread_limit, write_bound, write_index, write_simulations, write_values};
use lrb_core::verify::{Verifier, CHECKS};
use lrb_core::DiscountFactor;

/// Lazy restless bandit experiments.
#[derive(Parser)]
#[command(name = "lrb", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Index tables, value tables, bound and simulations in one go.
    Run(Common),
    /// Whittle index tables, one CSV per arm.
    Index(Common),
    /// Value tables for the configured subsidies.
    Value {
        #[command(flatten)]
        common: Common,
        /// Subsidies to tabulate, replacing the config's `etas`.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        etas: Option<Vec<f64>>,
    },
    /// Lagrangian upper bound and its iteration trace.
    Bound(Common),
    /// Policy simulations and the summary table.
    Simulate(Common),
    /// Runs the acceptance checks and prints one line per check.
    Verify {
        /// Where the example runs write their artifacts.
        #[arg(long, default_value = "out/verify")]
        out_dir: PathBuf,
        /// Check ids to run, e.g. `1,2,9`; all when omitted.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment config file.
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    grid_delta: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(beta) = self.beta {
            cfg.beta = DiscountFactor::new(beta)?;
        }
        if let Some(delta) = self.grid_delta {
            cfg.grid_delta = delta;
        }
        if let Some(dir) = &self.out_dir {
            cfg.out_dir = dir.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn report_files(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run(c) => {
            let cfg = c.load()?;
            let report = run_experiment(&cfg, &cfg.out_dir)?;
            println!("bound {:.4}", report.bound.result.bound);
            for r in &report.results {
                println!("{:<4} {:.4} ± {:.4}", r.policy, r.final_value(), r.final_stderr());
            }
            println!("{} files in {}", report.files.len(), cfg.out_dir.display());
        }
        Command::Index(c) => {
            let cfg = c.load()?;
            report_files(&write_index(&cfg, &cfg.out_dir)?);
        }
        Command::Value { common, etas } => {
            let mut cfg = common.load()?;
            if let Some(etas) = etas {
                cfg.etas = etas;
            }
            report_files(&write_values(&cfg, &cfg.out_dir)?);
        }
        Command::Bound(c) => {
            let cfg = c.load()?;
            let (report, files) = write_bound(&cfg, &cfg.out_dir)?;
            println!(
                "lambda* {:.6} bound {:.4} after {} steps ({:?}); golden-section {:.4}",
                report.result.lambda_star,
                report.result.bound,
                report.result.trace.len(),
                report.result.stop,
                report.golden_bound
            );
            report_files(&files);
        }
        Command::Simulate(c) => {
            let cfg = c.load()?;
            let (results, files) = write_simulations(&cfg, &cfg.out_dir)?;
            for r in &results {
                println!("{:<4} {:.4} ± {:.4}", r.policy, r.final_value(), r.final_stderr());
            }
            report_files(&files);
        }
        Command::Verify { out_dir, only } => return verify(&out_dir, &only),
    }
    Ok(true)
}

fn verify(out_dir: &Path, only: &[u8]) -> Result<bool> {
    for id in only {
        if !CHECKS.iter().any(|(i, _)| i == id) {
            bail!("no check with id {id}");
        }
    }
    let verifier = Verifier::new(out_dir);
    let mut all = true;
    for (id, _) in CHECKS.iter().filter(|(i, _)| only.is_empty() || only.contains(i)) {
        let outcome = verifier.run(*id);
        println!("{}", outcome.line());
        all &= outcome.passed;
    }
    println!("{}", if all { "all checks passed" } else { "some checks failed" });
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_thread_limit(|| execute(cli.command)) {
        Ok(Ok(true)) => ExitCode::SUCCESS,
        Ok(Ok(false)) => ExitCode::from(1),
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
