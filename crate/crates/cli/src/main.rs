use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use psido_core::experiments::{run, ExperimentConfig, Scenario};
use psido_core::io::save_field;
use psido_core::par;
use psido_core::report::Verdict;

#[derive(Parser)]
#[command(
    name = "psido",
    version,
    about = "Spectral solver and estimate workbench"
)]
struct Cli {
    /// run single-threaded
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification scenario and write report.json / report.csv.
    Verify {
        /// apriori, t_scaling, kernel_decay, hormander, weights_audit,
        /// maximal_audit or solve
        scenario: String,
        #[arg(long)]
        config: PathBuf,
        /// output directory (defaults to the config's `output`, then `.`)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the configured Cauchy problem.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// write the solution in the binary field format
        #[arg(long)]
        dump_field: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn execute(
    scenario: Scenario,
    config: PathBuf,
    out: Option<PathBuf>,
    dump: Option<PathBuf>,
) -> Result<bool> {
    let cfg = ExperimentConfig::load(&config)
        .with_context(|| format!("reading config {}", config.display()))?;
    let outcome = run(&cfg, Some(scenario))?;
    let dir = out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    outcome
        .report
        .write_dir(&dir)
        .with_context(|| format!("writing report to {}", dir.display()))?;
    if let (Some(path), Some(u)) = (dump, &outcome.field) {
        save_field(path.as_path(), u).with_context(|| format!("writing {}", path.display()))?;
    }
    for row in &outcome.report.rows {
        if row.verdict != Verdict::Info {
            println!(
                "{:<4} {}  measured={}",
                row.verdict.as_str().to_uppercase(),
                row.case,
                psido_core::report::fmt(row.measured)
            );
        }
    }
    Ok(outcome.report.all_pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.sequential {
        par::set_mode(par::Mode::Sequential);
    }
    let result = match cli.command {
        Command::Verify {
            scenario,
            config,
            out,
        } => scenario
            .parse::<Scenario>()
            .map_err(anyhow::Error::from)
            .and_then(|s| execute(s, config, out, None)),
        Command::Solve {
            config,
            dump_field,
            out,
        } => execute(Scenario::Solve, config, out, dump_field),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
