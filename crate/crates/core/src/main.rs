use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ddmoduli::config::{parse_config_with_base, ExampleId, RunConfig};
use ddmoduli::runner::run_all;
use ddmoduli::solver::SolverConfig;
use ddmoduli::verify::{convergence_material, convergence_study, write_convergence_csv};
use ddmoduli::{Error, Result};

#[derive(Parser)]
#[command(name = "ddmoduli", version, about = "Plane-strain solver for elastic solids with density-dependent moduli")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Manufactured-solution convergence study
    Converge {
        #[arg(long, default_value_t = 6)]
        cycles: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Solve an example or configuration for each beta, one after another
    Run(RunArgs),
    /// Like `run`, but all beta values are solved concurrently
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Example preset: 1a, 1b, 2, 3 or 4
    #[arg(long)]
    example: Option<String>,
    /// Configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated beta values, e.g. `-200,0,200`
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<String>,
    /// Global refinement level of the unit-square mesh
    #[arg(long)]
    refine: Option<u32>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(args: &RunArgs) -> Result<RunConfig> {
    let base = match &args.example {
        Some(id) => RunConfig::preset(id.parse::<ExampleId>()?),
        None => RunConfig::default(),
    };
    let mut cfg = match &args.config {
        Some(path) => parse_config_with_base(&fs::read_to_string(path)?, base)?,
        None => base,
    };
    if let Some(list) = &args.beta {
        cfg.betas = list
            .split(',')
            .map(|v| {
                v.trim().parse().map_err(|_| Error::Validation {
                    field: "beta".into(),
                    message: format!("invalid number `{}`", v.trim()),
                })
            })
            .collect::<Result<_>>()?;
    }
    if let Some(n) = args.refine {
        cfg.refinements = n;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(args: &RunArgs, concurrent: bool) -> Result<()> {
    let cfg = load_config(args)?;
    let mut first_error = None;
    for (beta, result) in run_all(&cfg, concurrent) {
        match result {
            Ok(out) => {
                println!(
                    "beta {beta}: converged in {} iterations, residual {:.3e}, output {}",
                    out.iterations,
                    out.final_residual,
                    out.dir.display()
                );
                for (q, hi, lo) in &out.extrema {
                    println!("  {:<10} max {hi:>12.5e}  min {lo:>12.5e}", q.name());
                }
            }
            Err(e) => {
                eprintln!("beta {beta}: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    first_error.map_or(Ok(()), Err)
}

fn converge(cycles: usize, out: &PathBuf) -> Result<()> {
    let rows = convergence_study(cycles, &convergence_material(), &SolverConfig::default())?;
    println!("{:>5} {:>10} {:>14} {:>8}", "cycle", "h", "L2 error", "rate");
    for r in &rows {
        let rate = r.rate.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
        println!("{:>5} {:>10} {:>14.6e} {:>8}", r.cycle, r.h, r.l2_error, rate);
    }
    fs::create_dir_all(out)?;
    let path = out.join("convergence.csv");
    write_convergence_csv(&rows, fs::File::create(&path)?)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Converge { cycles, out } => converge(*cycles, out),
        Command::Run(args) => run(args, false),
        Command::Sweep(args) => run(args, true),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
