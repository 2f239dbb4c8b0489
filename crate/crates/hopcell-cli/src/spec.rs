//! Batch experiment specifications: one flat TOML file naming a task,
//! a scenario, and the task's parameters.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use hopcell::analytic::beta_grid;
use hopcell::AllocationMode;

use crate::tasks::{build_grid, CliError, SweepVar};

/// What a batch run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// Analytic coverage curves for both link classes.
    Coverage,
    /// Analytic average rates and rate lower bounds.
    Rates,
    /// Monte Carlo comparison against the analytic curves.
    Validate,
    /// Optimal hopping probabilities and spectrum split.
    Optimize,
    /// One-dimensional parameter sweep.
    Sweep,
}

/// Output encoding of a batch run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    /// Plain text: CSV tables and key=value records.
    #[default]
    Csv,
    /// One JSON document.
    StructuredRecord,
}

/// A batch experiment.
///
/// `scenario` is a bundled preset name or a scenario TOML path,
/// resolved relative to the directory containing the experiment file.
/// Unknown fields are rejected so typos fail loudly.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub task: TaskKind,
    pub scenario: String,

    /// Monte Carlo replications (validate; default 10000).
    pub replications: Option<u64>,
    /// Base RNG seed (validate; default 42).
    pub seed: Option<u64>,
    /// Maximum allowed |analytic - empirical| (validate; default 0.01).
    pub tolerance: Option<f64>,

    /// Evaluate under this allocation mode instead of the scenario's.
    pub mode: Option<AllocationMode>,

    /// Swept parameter (sweep only).
    pub variable: Option<SweepVar>,
    /// Explicit sweep grid, sorted ascending.  Alternative to
    /// `from`/`to`/`step`.
    pub grid: Option<Vec<f64>>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub step: Option<f64>,

    /// Threshold grid in dB (coverage and validate; defaults -20, 40, 40).
    pub beta_min_db: Option<f64>,
    pub beta_max_db: Option<f64>,
    pub beta_points: Option<usize>,

    /// Output file; stdout when absent.
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
}

fn err(message: String) -> CliError {
    CliError::Spec(message)
}

impl ExperimentSpec {
    /// Structural checks beyond TOML decoding.  Every failure names
    /// the offending field.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.replications == Some(0) {
            return Err(err("field `replications`: must be at least 1".into()));
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0) {
                return Err(err(format!("field `tolerance`: must be positive, got {t}")));
            }
        }
        if let Some(n) = self.beta_points {
            if n < 2 {
                return Err(err(format!(
                    "field `beta_points`: need at least 2 thresholds, got {n}"
                )));
            }
        }
        let lo = self.beta_min_db.unwrap_or(-20.0);
        let hi = self.beta_max_db.unwrap_or(40.0);
        if !lo.is_finite() || !hi.is_finite() || hi <= lo {
            return Err(err(format!(
                "field `beta_max_db`: threshold range must be finite and increasing, \
                 resolved to {lo} dB .. {hi} dB"
            )));
        }
        if self.task == TaskKind::Sweep {
            if self.variable.is_none() {
                return Err(err(
                    "field `variable`: required when task = \"sweep\"".into()
                ));
            }
            match (&self.grid, self.from, self.to, self.step) {
                (Some(_), None, None, None) => {}
                (None, Some(_), Some(_), Some(_)) => {}
                (Some(_), _, _, _) => {
                    return Err(err(
                        "field `grid`: give either `grid` or `from`/`to`/`step`, not both"
                            .into(),
                    ));
                }
                _ => {
                    return Err(err(
                        "field `grid`: a sweep needs `grid = [...]` or all of `from`, \
                         `to`, `step`"
                            .into(),
                    ));
                }
            }
            if let Some(g) = &self.grid {
                if g.is_empty() {
                    return Err(err("field `grid`: must not be empty".into()));
                }
                if g.iter().any(|v| !v.is_finite()) {
                    return Err(err("field `grid`: all values must be finite".into()));
                }
                if g.windows(2).any(|w| w[0] > w[1]) {
                    return Err(err("field `grid`: values must be sorted ascending".into()));
                }
            }
        } else if self.variable.is_some()
            || self.grid.is_some()
            || self.from.is_some()
            || self.to.is_some()
            || self.step.is_some()
        {
            return Err(err(format!(
                "field `variable`: sweep parameters are only meaningful when \
                 task = \"sweep\", not for the {:?} task",
                self.task
            )));
        }
        Ok(())
    }

    /// The sweep grid, from either form.  Call after `validate`.
    pub fn resolved_grid(&self) -> Result<Vec<f64>, CliError> {
        if let Some(g) = &self.grid {
            return Ok(g.clone());
        }
        match (self.from, self.to, self.step) {
            (Some(from), Some(to), Some(step)) => build_grid(from, to, step),
            _ => Err(err(
                "field `grid`: a sweep needs `grid = [...]` or all of `from`, `to`, \
                 `step`"
                    .into(),
            )),
        }
    }

    /// The SINR threshold grid for coverage and validation tasks.
    pub fn betas(&self) -> Vec<f64> {
        beta_grid(
            self.beta_min_db.unwrap_or(-20.0),
            self.beta_max_db.unwrap_or(40.0),
            self.beta_points.unwrap_or(40),
        )
    }

    pub fn replications(&self) -> u64 {
        self.replications.unwrap_or(10_000)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(42)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(0.01)
    }
}

/// Loads and validates an experiment file.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let spec: ExperimentSpec = toml::from_str(&text)
        .map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))?;
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentSpec, CliError> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| CliError::Spec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    #[test]
    fn minimal_specs_parse_with_defaults() {
        let spec = parse("task = \"validate\"\nscenario = \"table2-dedicated\"\n").unwrap();
        assert_eq!(spec.replications(), 10_000);
        assert_eq!(spec.seed(), 42);
        assert_eq!(spec.tolerance(), 0.01);
        assert_eq!(spec.format, OutputFormat::Csv);
        assert_eq!(spec.betas().len(), 40);
    }

    #[test]
    fn sweep_needs_variable_and_one_grid_form() {
        let text = "task = \"sweep\"\nscenario = \"fig10-distance280\"\n";
        let e = parse(text).unwrap_err().to_string();
        assert!(e.contains("`variable`"), "{e}");

        let both = format!("{text}variable = \"theta\"\ngrid = [0.1]\nfrom = 0.0\nto = 1.0\nstep = 0.5\n");
        let e = parse(&both).unwrap_err().to_string();
        assert!(e.contains("not both"), "{e}");

        let ok = format!("{text}variable = \"theta\"\nfrom = 0.0\nto = 1.0\nstep = 0.02\n");
        let spec = parse(&ok).unwrap();
        let grid = spec.resolved_grid().unwrap();
        assert_eq!(grid.len(), 51);
        assert_eq!(*grid.last().unwrap(), 1.0);
    }

    #[test]
    fn empty_or_unsorted_grids_are_rejected() {
        let base = "task = \"sweep\"\nscenario = \"fig10-distance280\"\nvariable = \"theta\"\n";
        let e = parse(&format!("{base}grid = []\n")).unwrap_err().to_string();
        assert!(e.contains("empty"), "{e}");
        let e = parse(&format!("{base}grid = [0.3, 0.1]\n"))
            .unwrap_err()
            .to_string();
        assert!(e.contains("sorted"), "{e}");
    }

    #[test]
    fn unknown_fields_and_bad_values_fail_loudly() {
        let e = parse("task = \"rates\"\nscenario = \"x\"\nbogus = 1\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("bogus"), "{e}");
        let e = parse("task = \"validate\"\nscenario = \"x\"\nreplications = 0\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("replications"), "{e}");
        let e = parse("task = \"rates\"\nscenario = \"x\"\nfrom = 0.0\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("sweep"), "{e}");
        let e = parse("task = \"validate\"\nscenario = \"x\"\nbeta_max_db = -30.0\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("beta_max_db"), "{e}");
    }

    #[test]
    fn structured_record_format_is_recognized() {
        let spec = parse(
            "task = \"optimize\"\nscenario = \"table2-shared\"\nformat = \"structured-record\"\n",
        )
        .unwrap();
        assert_eq!(spec.format, OutputFormat::StructuredRecord);
    }
}
