//! Task implementations shared by the subcommands and the batch
//! runner: scenario resolution, sweep evaluation, and the
//! analytic-vs-simulation comparison.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use hopcell::analytic::{beta_grid, coverage_curve, rates, AnalyticError};
use hopcell::model::{preset, scenario_from_path, PRESET_NAMES};
use hopcell::optimize::{rate_density, split_sweep_point};
use hopcell::report::{file_header, float_field};
use hopcell::sim::{empirical_coverage, SimError, SimOptions};
use hopcell::{AllocationMode, ConfigError, LinkClass, NetworkConfig};

/// Errors surfaced to the terminal.  Every variant names the offending
/// field, file, or environment variable.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Sim(#[from] SimError),
    /// Experiment-spec or argument problems, pre-formatted with the
    /// field name.
    #[error("{0}")]
    Spec(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Resolves a scenario argument: a bundled preset name, or a TOML
/// scenario path.  Relative paths are taken from `base` when given
/// (the directory of the experiment file that named them).
pub fn load_scenario(arg: &str, base: Option<&Path>) -> Result<NetworkConfig, CliError> {
    if let Some(cfg) = preset(arg) {
        return Ok(cfg);
    }
    let mut path = PathBuf::from(arg);
    if path.is_relative() {
        if let Some(dir) = base {
            path = dir.join(path);
        }
    }
    if !path.exists() {
        return Err(CliError::Spec(format!(
            "field `scenario`: `{arg}` is neither a bundled preset ({}) nor an existing file",
            PRESET_NAMES.join(", ")
        )));
    }
    Ok(scenario_from_path(&path)?)
}

/// The threshold grid used when a task does not override it:
/// 40 points from -20 dB to 40 dB.
pub fn default_beta_grid() -> Vec<f64> {
    beta_grid(-20.0, 40.0, 40)
}

/// Writes `text` to the file at `out`, or to stdout when no path is
/// given.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Parameter swept by the `sweep` task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum SweepVar {
    /// Total D2D transmitter density per m^2.  Every type's density is
    /// scaled proportionally, and the cellular-user density is scaled
    /// by the same factor so the population ratios stay fixed.
    #[value(name = "density")]
    #[serde(rename = "density")]
    Density,
    /// Common time-hopping probability applied to every D2D type.
    #[value(name = "p_t")]
    #[serde(rename = "p_t")]
    TimeHopping,
    /// Common frequency-hopping probability applied to every D2D type.
    #[value(name = "p_f")]
    #[serde(rename = "p_f")]
    FrequencyHopping,
    /// Spectrum split (dedicated mode only).  The endpoint 1 is
    /// evaluated as the no-cellular-spectrum limit.
    #[value(name = "theta")]
    #[serde(rename = "theta")]
    Theta,
    /// Mode-selection weight.
    #[value(name = "w")]
    #[serde(rename = "w")]
    W,
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SweepVar::Density => "density",
            SweepVar::TimeHopping => "p_t",
            SweepVar::FrequencyHopping => "p_f",
            SweepVar::Theta => "theta",
            SweepVar::W => "w",
        };
        write!(f, "{name}")
    }
}

/// Builds the inclusive arithmetic grid `from, from+step, ..`; the
/// last point is snapped to `to` when a whole number of steps lands
/// there up to rounding.
pub fn build_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, CliError> {
    for (name, v) in [("from", from), ("to", to), ("step", step)] {
        if !v.is_finite() {
            return Err(CliError::Spec(format!(
                "field `{name}`: must be finite, got {v}"
            )));
        }
    }
    if step <= 0.0 {
        return Err(CliError::Spec(format!(
            "field `step`: must be positive, got {step}"
        )));
    }
    if from > to {
        return Err(CliError::Spec(format!(
            "field `from`: sweep grid is empty (from {from} exceeds to {to})"
        )));
    }
    let eps = step * 1e-9;
    let mut grid = Vec::new();
    for i in 0u64.. {
        let v = from + i as f64 * step;
        if v > to + eps {
            break;
        }
        grid.push(if (v - to).abs() <= eps { to } else { v });
    }
    Ok(grid)
}

/// One evaluated sweep point, carrying the complete parameter set that
/// produced it.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub variable: SweepVar,
    pub value: f64,
    pub config: NetworkConfig,
    /// Average cellular-user rate (subband-normalized bit/s/Hz).
    pub rate_cellular: f64,
    /// Density-weighted mixture of the average per-type D2D rates.
    pub rate_d2d_mixture: f64,
    /// Rate-density objective at this point.
    pub rate_density: f64,
}

/// Applies one sweep value to a copy of the base configuration.
fn apply(cfg: &NetworkConfig, var: SweepVar, value: f64) -> Result<NetworkConfig, CliError> {
    let mut work = cfg.clone();
    match var {
        SweepVar::Density => {
            let total = cfg.lambda_d_total();
            if total <= 0.0 {
                return Err(CliError::Spec(
                    "field `var`: a density sweep needs a scenario with positive total \
                     D2D density to scale"
                        .into(),
                ));
            }
            if !(value >= 0.0) {
                return Err(CliError::Spec(format!(
                    "field `var`: density must be nonnegative, got {value}"
                )));
            }
            let scale = value / total;
            for t in &mut work.d2d_types {
                t.lambda *= scale;
            }
            work.lambda_u *= scale;
        }
        SweepVar::TimeHopping => {
            for t in &mut work.d2d_types {
                t.p_t = value;
            }
        }
        SweepVar::FrequencyHopping => {
            for t in &mut work.d2d_types {
                t.p_f = value;
            }
        }
        SweepVar::Theta => work.theta = value,
        SweepVar::W => work.w = value,
    }
    Ok(work)
}

/// Evaluates a sweep: one row per grid point, in grid order.
pub fn sweep_rows(
    cfg: &NetworkConfig,
    var: SweepVar,
    grid: &[f64],
) -> Result<Vec<SweepRow>, CliError> {
    grid.iter()
        .map(|&value| {
            let work = apply(cfg, var, value)?;
            let (rate_cellular, rate_d2d_mixture, density) = if var == SweepVar::Theta {
                // The split evaluator handles the theta = 1 endpoint,
                // which a plain configuration rejects.
                let p = split_sweep_point(cfg, value)?;
                (p.rate_cellular, p.rate_d2d_mixture, p.rate_density)
            } else {
                let r = rates(&work)?;
                (r.rate_cellular, r.rate_d2d_mixture, rate_density(&work)?)
            };
            Ok(SweepRow {
                variable: var,
                value,
                config: work,
                rate_cellular,
                rate_d2d_mixture,
                rate_density: density,
            })
        })
        .collect()
}

/// Sweep results as CSV.  Every row restates the complete parameter
/// set, so any single row regenerates its experiment.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = file_header(None);
    let types = rows.first().map_or(0, |r| r.config.d2d_types.len());
    out.push_str(
        "variable,value,mode,lambda_b,lambda_u,delta,p_b_w,p_d_w,noise_w,alpha,\
         b_total,b_c,w,theta,subband_bandwidth_hz",
    );
    for i in 0..types {
        out.push_str(&format!(",lambda_d_{i},b_d_{i},p_t_{i},p_f_{i}"));
    }
    out.push_str(",rate_cellular,rate_d2d_mixture,rate_density\n");
    for r in rows {
        let c = &r.config;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.variable,
            float_field(r.value),
            c.mode,
            float_field(c.lambda_b),
            float_field(c.lambda_u),
            float_field(c.delta),
            float_field(c.p_b),
            float_field(c.p_d),
            float_field(c.noise),
            float_field(c.alpha),
            c.b_total,
            c.b_c,
            float_field(c.w),
            float_field(c.theta),
            float_field(c.subband_bandwidth_hz),
        ));
        for t in &c.d2d_types {
            out.push_str(&format!(
                ",{},{},{},{}",
                float_field(t.lambda),
                t.b_d,
                float_field(t.p_t),
                float_field(t.p_f)
            ));
        }
        out.push_str(&format!(
            ",{},{},{}\n",
            float_field(r.rate_cellular),
            float_field(r.rate_d2d_mixture),
            float_field(r.rate_density)
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Analytic-vs-simulation comparison for one link class.
#[derive(Debug, Clone, Serialize)]
pub struct ClassValidation {
    pub link_class: LinkClass,
    /// Largest |analytic - empirical| over the threshold grid.
    pub max_deviation: f64,
    pub pass: bool,
    pub beta_linear: Vec<f64>,
    pub analytic: Vec<f64>,
    pub empirical: Vec<f64>,
    /// Wilson 95% interval bounds of the empirical CCDF.
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
}

/// Full validation outcome for one scenario: both link classes on a
/// shared threshold grid.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub mode: AllocationMode,
    pub replications: u64,
    pub seed: u64,
    pub tolerance: f64,
    pub pass: bool,
    pub classes: Vec<ClassValidation>,
}

/// Compares the analytic CCDF with the Monte Carlo estimate for both
/// link classes.
pub fn run_validation(
    cfg: &NetworkConfig,
    betas: &[f64],
    replications: u64,
    seed: u64,
    tolerance: f64,
) -> Result<ValidationReport, CliError> {
    if replications == 0 {
        return Err(CliError::Spec(
            "field `replications`: must be at least 1".into(),
        ));
    }
    if !(tolerance > 0.0) {
        return Err(CliError::Spec(format!(
            "field `tol`: must be positive, got {tolerance}"
        )));
    }
    let mut classes = Vec::new();
    for class in [LinkClass::D2d, LinkClass::Cellular] {
        let analytic = coverage_curve(cfg, class, betas)?;
        let emp = empirical_coverage(cfg, class, betas, replications, seed, &SimOptions::default())?;
        let empirical = emp.ccdf();
        let centers = emp.wilson_centers();
        let half = emp.wilson_half_widths();
        let max_deviation = analytic
            .ccdf
            .iter()
            .zip(&empirical)
            .map(|(a, e)| (a - e).abs())
            .fold(0.0, f64::max);
        classes.push(ClassValidation {
            link_class: class,
            max_deviation,
            pass: max_deviation <= tolerance,
            beta_linear: betas.to_vec(),
            analytic: analytic.ccdf,
            empirical,
            ci_low: centers
                .iter()
                .zip(&half)
                .map(|(c, h)| (c - h).max(0.0))
                .collect(),
            ci_high: centers
                .iter()
                .zip(&half)
                .map(|(c, h)| (c + h).min(1.0))
                .collect(),
        });
    }
    let pass = classes.iter().all(|c| c.pass);
    Ok(ValidationReport {
        mode: cfg.mode,
        replications,
        seed,
        tolerance,
        pass,
        classes,
    })
}

/// Validation rows as CSV, both link classes under one header.
pub fn validation_csv(rep: &ValidationReport) -> String {
    let mut out = file_header(Some(rep.seed));
    out.push_str(
        "beta_db,beta_linear,mode,link_class,analytic_ccdf,empirical_ccdf,\
         ci_low,ci_high,deviation,replications,seed\n",
    );
    for class in &rep.classes {
        for i in 0..class.beta_linear.len() {
            let beta = class.beta_linear[i];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                float_field(10.0 * beta.log10()),
                float_field(beta),
                rep.mode,
                class.link_class,
                float_field(class.analytic[i]),
                float_field(class.empirical[i]),
                float_field(class.ci_low[i]),
                float_field(class.ci_high[i]),
                float_field((class.analytic[i] - class.empirical[i]).abs()),
                rep.replications,
                rep.seed
            ));
        }
    }
    out
}

/// Human summary: one max-deviation line per link class, then the
/// verdict as the final line.
pub fn validation_summary(rep: &ValidationReport) -> String {
    let mut out = String::new();
    for c in &rep.classes {
        out.push_str(&format!(
            "{}: max |analytic - empirical| = {:.3e} over {} thresholds (tolerance {:.3e})\n",
            c.link_class,
            c.max_deviation,
            c.beta_linear.len(),
            rep.tolerance
        ));
    }
    out.push_str(if rep.pass { "PASS\n" } else { "FAIL\n" });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_hits_exact_endpoint() {
        let g = build_grid(0.0, 1.0, 0.02).unwrap();
        assert_eq!(g.len(), 51);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn grid_rejects_bad_ranges() {
        assert!(build_grid(0.4, 0.2, 0.02).is_err());
        assert!(build_grid(0.0, 1.0, 0.0).is_err());
        assert!(build_grid(0.0, 1.0, -0.1).is_err());
        assert!(build_grid(f64::NAN, 1.0, 0.1).is_err());
        let single = build_grid(0.3, 0.3, 0.5).unwrap();
        assert_eq!(single, vec![0.3]);
    }

    #[test]
    fn density_sweep_scales_users_proportionally() {
        let cfg = preset("table2-dedicated").unwrap();
        let total = cfg.lambda_d_total();
        let row = apply(&cfg, SweepVar::Density, 2.0 * total).unwrap();
        assert!((row.lambda_u / cfg.lambda_u - 2.0).abs() < 1e-12);
        assert!((row.lambda_d_total() / total - 2.0).abs() < 1e-12);
        let ratio_before = cfg.d2d_types[0].lambda / cfg.d2d_types[1].lambda;
        let ratio_after = row.d2d_types[0].lambda / row.d2d_types[1].lambda;
        assert!((ratio_before - ratio_after).abs() < 1e-12);
    }

    #[test]
    fn theta_sweep_covers_the_closed_interval() {
        let cfg = preset("fig10-distance280").unwrap();
        let rows = sweep_rows(&cfg, SweepVar::Theta, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[2].rate_cellular, 0.0);
        assert!(rows[2].rate_d2d_mixture > 0.0);
        let csv = sweep_csv(&rows);
        assert_eq!(csv.lines().count(), 2 + 3);
        let header = csv.lines().nth(1).unwrap();
        assert!(header.starts_with("variable,value,mode,"));
        assert!(header.ends_with("rate_cellular,rate_d2d_mixture,rate_density"));
        for line in csv.lines().skip(2) {
            assert_eq!(line.split(',').count(), header.split(',').count());
            assert!(line.starts_with("theta,"));
        }
    }

    #[test]
    fn validation_csv_is_deterministic_and_self_describing() {
        let cfg = preset("table2-dedicated").unwrap();
        let betas = beta_grid(-10.0, 10.0, 4);
        let a = run_validation(&cfg, &betas, 200, 5, 0.5).unwrap();
        let b = run_validation(&cfg, &betas, 200, 5, 0.5).unwrap();
        assert_eq!(validation_csv(&a), validation_csv(&b));
        let text = validation_csv(&a);
        assert!(text.starts_with("# hopcell "));
        assert!(text.contains(" seed=5\n"));
        // one row per class per threshold, plus comment and header
        assert_eq!(text.lines().count(), 2 + 2 * betas.len());
        for line in text.lines().skip(2) {
            assert_eq!(line.split(',').count(), 11);
            assert!(line.ends_with(",200,5"));
        }
        let summary = validation_summary(&a);
        assert!(summary.contains("d2d: max |analytic - empirical|"));
        assert!(summary.contains("cellular: max |analytic - empirical|"));
        assert!(summary.ends_with("PASS\n") || summary.ends_with("FAIL\n"));
    }

    #[test]
    fn scenario_resolution_prefers_presets_and_names_failures() {
        assert!(load_scenario("table2-shared", None).is_ok());
        let err = load_scenario("no-such-scenario", None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("scenario"), "{msg}");
        assert!(msg.contains("table2-dedicated"), "{msg}");
    }
}
