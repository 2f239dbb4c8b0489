//! `hopcell` — experiment harness for the D2D time-frequency-hopping
//! analysis toolkit.
//!
//! Four subcommands cover the workflow: `run` executes a batch
//! experiment described by a TOML file, `validate` compares the
//! analytic SINR distributions against an independent Monte Carlo
//! simulation, `optimize` reports optimal hopping probabilities and
//! spectrum split, and `sweep` traces rates across one parameter.
//!
//! Exit codes: 0 on success (including a passing validation), 2 when a
//! validation exceeds its tolerance, nonzero otherwise.  The
//! `HOPCELL_THREADS` environment variable bounds the worker pool; all
//! outputs are byte-identical for any worker count.

mod spec;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hopcell::analytic::{coverage_curve, rates};
use hopcell::model::LinkClass;
use hopcell::optimize::solve;
use hopcell::report;
use hopcell::AllocationMode;

use spec::{OutputFormat, TaskKind};
use tasks::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "hopcell",
    version,
    about = "Coverage, rates, Monte Carlo validation and hopping/spectrum optimization \
             for D2D-enabled downlink cellular networks",
    after_help = "Scenarios are TOML files or bundled preset names: table2-dedicated, \
                  table2-shared, fig10-distance280, lowdensity-lambdaD-0.1.\n\
                  Set HOPCELL_THREADS to bound the worker pool (outputs do not depend \
                  on it).\nExit codes: 0 success / validation PASS, 2 validation FAIL, \
                  1 other errors."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute a batch experiment from a TOML file.
    Run {
        /// Experiment file: task, scenario, and task parameters.
        spec_file: PathBuf,
    },
    /// Compare analytic and simulated SINR distributions.
    Validate {
        /// Preset name or scenario TOML path.
        scenario: String,
        /// Monte Carlo replications per link class.
        #[arg(long, default_value_t = 10_000)]
        replications: u64,
        /// Base RNG seed.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Maximum allowed |analytic - empirical| per link class.
        #[arg(long, default_value_t = 0.01)]
        tol: f64,
        /// Comparison CSV path (default: validate-<scenario>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report optimal hopping probabilities and spectrum split.
    Optimize {
        /// Preset name or scenario TOML path.
        scenario: String,
        /// Evaluate under this allocation mode instead of the scenario's.
        #[arg(long, value_parser = parse_mode)]
        mode: Option<AllocationMode>,
    },
    /// Trace rates across one parameter; one CSV row per grid point.
    Sweep {
        /// Preset name or scenario TOML path.
        scenario: String,
        /// Parameter to sweep.
        #[arg(long, value_enum)]
        var: tasks::SweepVar,
        /// First grid value.
        #[arg(long)]
        from: f64,
        /// Last grid value (inclusive).
        #[arg(long)]
        to: f64,
        /// Grid spacing; must be positive.
        #[arg(long)]
        step: f64,
        /// CSV path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_mode(s: &str) -> Result<AllocationMode, String> {
    match s {
        "dedicated" => Ok(AllocationMode::Dedicated),
        "shared" => Ok(AllocationMode::Shared),
        other => Err(format!("unknown mode `{other}` (expected dedicated or shared)")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_workers() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

/// Applies `HOPCELL_THREADS` to the global worker pool.  Results never
/// depend on the pool size, only wall time does.
fn init_workers() -> Result<(), CliError> {
    let value = match std::env::var("HOPCELL_THREADS") {
        Ok(v) => v,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(e) => return Err(CliError::Spec(format!("HOPCELL_THREADS: {e}"))),
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Spec(format!(
                "HOPCELL_THREADS: expected a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Spec(format!("HOPCELL_THREADS: {e}")))
}

/// Runs one command; `Ok(false)` means a validation exceeded its
/// tolerance (exit code 2).
fn dispatch(cmd: Command) -> Result<bool, CliError> {
    match cmd {
        Command::Run { spec_file } => run_spec(&spec_file),
        Command::Validate {
            scenario,
            replications,
            seed,
            tol,
            out,
        } => {
            let cfg = tasks::load_scenario(&scenario, None)?;
            let rep =
                tasks::run_validation(&cfg, &tasks::default_beta_grid(), replications, seed, tol)?;
            let path = out.unwrap_or_else(|| default_validate_path(&scenario));
            tasks::emit(&tasks::validation_csv(&rep), Some(&path))?;
            println!("wrote {}", path.display());
            print!("{}", tasks::validation_summary(&rep));
            Ok(rep.pass)
        }
        Command::Optimize { scenario, mode } => {
            let mut cfg = tasks::load_scenario(&scenario, None)?;
            if let Some(m) = mode {
                cfg = cfg.with_mode(m);
            }
            let sol = solve(&cfg)?;
            print!("{}", report::solution_record(&sol));
            Ok(true)
        }
        Command::Sweep {
            scenario,
            var,
            from,
            to,
            step,
            out,
        } => {
            let cfg = tasks::load_scenario(&scenario, None)?;
            let grid = tasks::build_grid(from, to, step)?;
            let rows = tasks::sweep_rows(&cfg, var, &grid)?;
            tasks::emit(&tasks::sweep_csv(&rows), out.as_deref())?;
            Ok(true)
        }
    }
}

fn default_validate_path(scenario: &str) -> PathBuf {
    let stem = Path::new(scenario)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario");
    PathBuf::from(format!("validate-{stem}.csv"))
}

/// Executes a batch experiment file.
fn run_spec(path: &Path) -> Result<bool, CliError> {
    let spec = spec::load_spec(path)?;
    let base = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut cfg = tasks::load_scenario(&spec.scenario, base)?;
    if let Some(m) = spec.mode {
        cfg = cfg.with_mode(m);
    }
    let out = spec.output.as_deref();
    match spec.task {
        TaskKind::Coverage => {
            let betas = spec.betas();
            let curves = vec![
                coverage_curve(&cfg, LinkClass::D2d, &betas)?,
                coverage_curve(&cfg, LinkClass::Cellular, &betas)?,
            ];
            let text = match spec.format {
                OutputFormat::Csv => report::curves_csv(&curves),
                OutputFormat::StructuredRecord => json_line(&curves),
            };
            tasks::emit(&text, out)?;
            Ok(true)
        }
        TaskKind::Rates => {
            let r = rates(&cfg)?;
            let text = match spec.format {
                OutputFormat::Csv => report::rates_record(&r),
                OutputFormat::StructuredRecord => json_line(&r),
            };
            tasks::emit(&text, out)?;
            Ok(true)
        }
        TaskKind::Validate => {
            let rep = tasks::run_validation(
                &cfg,
                &spec.betas(),
                spec.replications(),
                spec.seed(),
                spec.tolerance(),
            )?;
            let text = match spec.format {
                OutputFormat::Csv => tasks::validation_csv(&rep),
                OutputFormat::StructuredRecord => json_line(&rep),
            };
            tasks::emit(&text, out)?;
            print!("{}", tasks::validation_summary(&rep));
            Ok(rep.pass)
        }
        TaskKind::Optimize => {
            let sol = solve(&cfg)?;
            let text = match spec.format {
                OutputFormat::Csv => report::solution_record(&sol),
                OutputFormat::StructuredRecord => json_line(&sol),
            };
            tasks::emit(&text, out)?;
            Ok(true)
        }
        TaskKind::Sweep => {
            let grid = spec.resolved_grid()?;
            let variable = spec.variable.ok_or_else(|| {
                CliError::Spec("field `variable`: required when task = \"sweep\"".into())
            })?;
            let rows = tasks::sweep_rows(&cfg, variable, &grid)?;
            let text = match spec.format {
                OutputFormat::Csv => tasks::sweep_csv(&rows),
                OutputFormat::StructuredRecord => json_line(&rows),
            };
            tasks::emit(&text, out)?;
            Ok(true)
        }
    }
}

fn json_line<T: serde::Serialize>(value: &T) -> String {
    let mut text = report::to_json(value);
    text.push('\n');
    text
}
