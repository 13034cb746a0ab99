use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use greenwave_tool::commands::{self, CliError};
use greenwave_tool::plot;

#[derive(Parser)]
#[command(
    name = "greenwave",
    version,
    about = "Kernel tables, identity checks and solvers for a third-order dissipative wave equation"
)]
struct Cli {
    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the configured one).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized probes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate K and its first derivatives.
    KernelTable {
        /// Comma-separated distances x.
        #[arg(long, value_delimiter = ',', default_value = "0,0.25,0.5,1,2,4")]
        x: Vec<f64>,
        /// Comma-separated times t.
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,1,2")]
        t: Vec<f64>,
    },
    /// Check the kernel's integral laws on the built-in parameter lattice.
    VerifyIdentities,
    /// Solve the nonlinear problem by windowed fixed-point iteration.
    Solve,
    /// Evaluate the explicit solution for a state-free right-hand side.
    SolveLinear,
    /// Compare the solver with a certified finite-difference reference.
    OracleCompare,
    /// Write plotting scripts for a field file.
    EmitPlot {
        /// Field file (CSV or JSON).
        field: PathBuf,
        /// Solve report for contraction curves.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn config(cli: &Cli) -> Result<greenwave_tool::config::RunConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::Usage("--config is required for this subcommand".into()))?;
    Ok(commands::load_config(path)?)
}

fn announce(verbose: bool, files: &[PathBuf]) {
    if verbose {
        for f in files {
            eprintln!("wrote {}", f.display());
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::KernelTable { x, t } => {
            let cfg = config(cli)?;
            let dir = commands::output_dir(cli.out.as_deref(), Some(&cfg));
            print!("{}", commands::kernel_table(&cfg, x, t, &dir)?);
        }
        Command::VerifyIdentities => {
            let cfg = cli
                .config
                .as_deref()
                .map(commands::load_config)
                .transpose()?;
            let dir = commands::output_dir(cli.out.as_deref(), cfg.as_ref());
            let report = commands::verify_identities(&dir, cli.verbose)?;
            println!(
                "identities passed: {} mass, {} moment, {} Laplace, {} flux checks",
                report.mass.len(),
                report.moments.len(),
                report
                    .laplace
                    .iter()
                    .map(|c| c.samples.len())
                    .sum::<usize>(),
                report.flux.len()
            );
        }
        Command::Solve => {
            let cfg = config(cli)?;
            let dir = commands::output_dir(cli.out.as_deref(), Some(&cfg));
            let out = commands::solve(&cfg, cli.seed, &dir)?;
            announce(cli.verbose, &out.files);
            let r = &out.report;
            println!(
                "solved: {} windows of {} steps, max ratio {:.3e}, max junction gap {:.3e}",
                r.windows.len(),
                r.steps_per_window,
                r.windows.iter().map(|w| w.max_ratio).fold(0.0, f64::max),
                r.max_junction_gap()
            );
        }
        Command::SolveLinear => {
            let cfg = config(cli)?;
            let dir = commands::output_dir(cli.out.as_deref(), Some(&cfg));
            let (_, files) = commands::solve_linear(&cfg, &dir)?;
            announce(cli.verbose, &files);
            println!("linear solution written to {}", dir.display());
        }
        Command::OracleCompare => {
            let cfg = config(cli)?;
            let dir = commands::output_dir(cli.out.as_deref(), Some(&cfg));
            let r = commands::oracle_compare(&cfg, &dir)?;
            println!(
                "oracle: sup gap {:.3e}, L2 gap {:.3e}, band {:.3e}",
                r.comparison.linf_gap, r.comparison.l2_gap, r.max_band_u
            );
        }
        Command::EmitPlot { field, report } => {
            let dir = cli
                .out
                .clone()
                .unwrap_or_else(|| field.parent().map(Path::to_path_buf).unwrap_or_default());
            let files =
                plot::emit_plot(field, report.as_deref(), &dir).context("emit-plot failed")?;
            announce(true, &files);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .downcast_ref::<CliError>()
                .map_or(commands::EXIT_CONFIG, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
