use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fklab::cli::{run_criterion, run_lattice_check, run_minimize, run_sweep, Config};
use fklab::Error;

#[derive(Parser)]
#[command(name = "fklab", version, about = "Frenkel-Kontorova hull-function laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Experiment configuration file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file or directory; overrides the config's output_path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed; overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Hull grid resolution; overrides the config's grid_n.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize the Percival value for each configured case.
    Minimize(CommonOpts),
    /// Sweep the (n, r) grid: Hölder norms, minimization, destruction margins.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Worker threads for sweep rows; defaults to available parallelism.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Evaluate the destruction criterion against the identity hull.
    Criterion(CommonOpts),
    /// Lattice cross-check: EL residuals and sampled ground-state trials.
    LatticeCheck(CommonOpts),
    /// Run the acceptance suite and print one line per criterion.
    Accept,
}

fn load_config(opts: &CommonOpts) -> Result<Config, Error> {
    let mut cfg = match &opts.config {
        Some(path) => Config::from_path(path)?,
        None => Config::default(),
    };
    if let Some(out) = &opts.out {
        cfg.output_path = out.display().to_string();
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    if let Some(grid) = opts.grid {
        cfg.grid_n = grid;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn exit_for(err: &Error) -> ExitCode {
    match err {
        Error::Config(_)
        | Error::InvalidParameter(_)
        | Error::DegenerateSupport { .. }
        | Error::DimensionMismatch { .. } => ExitCode::from(1),
        _ => ExitCode::from(2),
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Minimize(opts) => {
            let cfg = load_config(&opts)?;
            for art in run_minimize(&cfg)? {
                println!(
                    "case n={} r={}: objective {:.9}, gap {:.3e}, converged {}, hull -> {}",
                    art.n, art.r, art.result.objective, art.result.gap, art.result.converged,
                    art.hull_csv
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { common, jobs } => {
            let cfg = load_config(&common)?;
            let rows = run_sweep(&cfg, jobs)?;
            let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
            println!(
                "sweep wrote {} rows to {} ({} failed)",
                rows.len(),
                cfg.output_path,
                failed
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Criterion(opts) => {
            let cfg = load_config(&opts)?;
            for (n, r, rep) in run_criterion(&cfg)? {
                println!(
                    "n={n} r={r} j={}: margin {:.3e}, conservative {:.3e}, destroys {}",
                    rep.direction, rep.margin, rep.margin_factor2, rep.destroys
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::LatticeCheck(opts) => {
            let cfg = load_config(&opts)?;
            for rep in run_lattice_check(&cfg)? {
                println!(
                    "n={} r={} box={}: EL residual sup {:.3e}, violations {}/{}",
                    rep.n, rep.r, rep.box_radius, rep.el_residual_sup,
                    rep.class_a.violations, rep.class_a.trials
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Accept => {
            let outcomes = fklab::accept::run_all();
            let mut all_pass = true;
            for o in &outcomes {
                println!(
                    "{}: {} ({})",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    o.details
                );
                all_pass &= o.passed;
            }
            if all_pass {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(2))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_for(&e)
        }
    }
}
