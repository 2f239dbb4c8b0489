//! Network model: deployment densities, traffic demands, hopping
//! probabilities and the load quantities derived from them.
//!
//! Everything downstream consumes a validated [`NetworkConfig`].  Inside
//! the crate all quantities are SI (watts, meters, per-m^2); decibel and
//! "count per cell side" forms are converted exactly once, when a
//! scenario file is loaded.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// How the D2D side obtains spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllocationMode {
    /// D2D transmissions are confined to a `theta` fraction of the
    /// subbands; the cellular downlink keeps the rest.
    Dedicated,
    /// D2D transmissions hop over the whole band and overlay the
    /// cellular downlink.
    Shared,
}

impl std::fmt::Display for AllocationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AllocationMode::Dedicated => write!(f, "dedicated"),
            AllocationMode::Shared => write!(f, "shared"),
        }
    }
}

/// Which typical link an experiment measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkClass {
    D2d,
    Cellular,
}

impl std::fmt::Display for LinkClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LinkClass::D2d => write!(f, "d2d"),
            LinkClass::Cellular => write!(f, "cellular"),
        }
    }
}

/// One D2D traffic type: a Poisson population of potential transmitters
/// with a common subband demand and hopping probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct D2dTypeConfig {
    /// Density of potential D2D transmitters of this type, per m^2.
    pub lambda: f64,
    /// Subband demand of one link of this type (count of subbands).
    pub b_d: u32,
    /// Time-hopping / mode-selection probability `p_t`: the fraction of
    /// time a link of this type transmits in D2D mode.
    pub p_t: f64,
    /// Frequency-hopping probability `p_f`: each eligible subband is
    /// accessed independently with this probability.
    pub p_f: f64,
}

/// Complete parameter set for one network scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Base-station density, per m^2.  Must be positive.
    pub lambda_b: f64,
    /// Density of cellular (downlink) users, per m^2.
    pub lambda_u: f64,
    /// D2D traffic types.  May be empty for a cellular-only network.
    pub d2d_types: Vec<D2dTypeConfig>,
    /// Rayleigh scale of the D2D link length: the receiver sits at a
    /// 2-D Gaussian offset with this standard deviation per axis, so the
    /// mean link distance is `delta * sqrt(pi/2)`.
    pub delta: f64,
    /// Base-station transmit power per subband, watts.
    pub p_b: f64,
    /// D2D transmit power per subband, watts.
    pub p_d: f64,
    /// Noise power per subband, watts.
    pub noise: f64,
    /// Path-loss exponent; must exceed 2.
    pub alpha: f64,
    /// Total number of subbands in the system band.
    pub b_total: u32,
    /// Subband demand of one cellular user.
    pub b_c: u32,
    /// Mode-selection weight: cellular-mode D2D traffic is charged
    /// `1/w` of its demand when rates are aggregated.
    pub w: f64,
    /// Fraction of the band dedicated to D2D (dedicated mode only).
    pub theta: f64,
    /// Spectrum allocation mode.
    pub mode: AllocationMode,
    /// Bandwidth of one subband in Hz; converts subband-normalized
    /// rates into bit/s.
    pub subband_bandwidth_hz: f64,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ConfigError {
    #[error("field `{field}`: {message}")]
    Invalid { field: &'static str, message: String },
    #[error(
        "dedicated mode with theta = 1 leaves no cellular spectrum while \
         cellular load is nonzero (lambda_u > 0 or some p_t < 1)"
    )]
    NoCellularSpectrum,
    #[error("scenario file: {0}")]
    Scenario(String),
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

impl NetworkConfig {
    /// Checks every invariant the analysis relies on.  All constructors
    /// that admit external data route through this.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.lambda_b > 0.0) || !self.lambda_b.is_finite() {
            return Err(invalid("lambda_b", "base-station density must be positive"));
        }
        if !(self.lambda_u >= 0.0) || !self.lambda_u.is_finite() {
            return Err(invalid("lambda_u", "user density must be nonnegative"));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(invalid("delta", "link-length scale must be positive"));
        }
        if !(self.p_b > 0.0) || !self.p_b.is_finite() {
            return Err(invalid("p_b", "base-station power must be positive"));
        }
        if !(self.p_d > 0.0) || !self.p_d.is_finite() {
            return Err(invalid("p_d", "D2D power must be positive"));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(invalid("noise", "noise power must be nonnegative"));
        }
        if !(self.alpha > 2.0) || !self.alpha.is_finite() {
            return Err(invalid(
                "alpha",
                format!("path-loss exponent must exceed 2, got {}", self.alpha),
            ));
        }
        if self.b_total == 0 {
            return Err(invalid("b_total", "need at least one subband"));
        }
        if self.b_c == 0 || self.b_c > self.b_total {
            return Err(invalid(
                "b_c",
                format!(
                    "cellular demand must lie in 1..={}, got {}",
                    self.b_total, self.b_c
                ),
            ));
        }
        if !(self.w > 0.0) || !self.w.is_finite() {
            return Err(invalid("w", "mode-selection weight must be positive"));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(invalid(
                "theta",
                format!("D2D fraction must lie in [0, 1], got {}", self.theta),
            ));
        }
        if !(self.subband_bandwidth_hz > 0.0) {
            return Err(invalid(
                "subband_bandwidth_hz",
                "subband bandwidth must be positive",
            ));
        }
        for (i, t) in self.d2d_types.iter().enumerate() {
            let ctx = |msg: String| {
                invalid("d2d_types", format!("type {i}: {msg}"))
            };
            if !(t.lambda >= 0.0) || !t.lambda.is_finite() {
                return Err(ctx(format!("density must be nonnegative, got {}", t.lambda)));
            }
            if t.b_d == 0 || t.b_d > self.b_total {
                return Err(ctx(format!(
                    "demand must lie in 1..={}, got {}",
                    self.b_total, t.b_d
                )));
            }
            if !(0.0..=1.0).contains(&t.p_t) {
                return Err(ctx(format!("p_t must lie in [0, 1], got {}", t.p_t)));
            }
            if !(0.0..=1.0).contains(&t.p_f) {
                return Err(ctx(format!("p_f must lie in [0, 1], got {}", t.p_f)));
            }
        }
        if self.mode == AllocationMode::Dedicated && self.theta == 1.0 && self.cellular_load() > 0.0
        {
            return Err(ConfigError::NoCellularSpectrum);
        }
        Ok(())
    }

    /// Subbands available to the cellular downlink: `(1-theta) B` in
    /// dedicated mode, the whole band in shared mode.
    pub fn b_cellular(&self) -> f64 {
        match self.mode {
            AllocationMode::Dedicated => (1.0 - self.theta) * self.b_total as f64,
            AllocationMode::Shared => self.b_total as f64,
        }
    }

    /// Subbands a D2D link may hop over: `theta B` in dedicated mode,
    /// the whole band in shared mode.
    pub fn b_d2d_pool(&self) -> f64 {
        match self.mode {
            AllocationMode::Dedicated => self.theta * self.b_total as f64,
            AllocationMode::Shared => self.b_total as f64,
        }
    }

    /// Expected subband demand per unit area that the cellular downlink
    /// must serve: its own users plus D2D traffic that elected cellular
    /// mode.
    pub fn cellular_load(&self) -> f64 {
        let d2d_part: f64 = self
            .d2d_types
            .iter()
            .map(|t| (1.0 - t.p_t) * t.b_d as f64 * t.lambda)
            .sum();
        self.b_c as f64 * self.lambda_u + d2d_part
    }

    /// Whether the cellular spectrum is fully loaded for any hopping
    /// choice: `7 B_c lambda_b < 9 b_c lambda_u`.
    pub fn is_heavy_load(&self) -> bool {
        7.0 * self.b_cellular() * self.lambda_b < 9.0 * self.b_c as f64 * self.lambda_u
    }

    /// Returns a copy with the allocation mode replaced.
    pub fn with_mode(&self, mode: AllocationMode) -> Self {
        let mut cfg = self.clone();
        cfg.mode = mode;
        cfg
    }

    /// Mean D2D link distance `delta * sqrt(pi/2)`.
    pub fn mean_link_distance(&self) -> f64 {
        self.delta * (std::f64::consts::PI / 2.0).sqrt()
    }

    /// Total density of potential D2D transmitters.
    pub fn lambda_d_total(&self) -> f64 {
        self.d2d_types.iter().map(|t| t.lambda).sum()
    }
}

/// Rayleigh scale corresponding to a given mean link distance.
pub fn delta_for_mean_distance(mean_m: f64) -> f64 {
    mean_m * (2.0 / std::f64::consts::PI).sqrt()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Density of D2D transmitters that interfere on any given subband:
/// each link transmits with probability `p_t` and occupies the subband
/// with probability `p_f`, so the superposition thins to
/// `sum_i p_t_i p_f_i lambda_i`.
pub fn effective_d2d_density(cfg: &NetworkConfig) -> f64 {
    cfg.d2d_types
        .iter()
        .map(|t| t.p_t * t.p_f * t.lambda)
        .sum()
}

/// Fraction of cellular subbands occupied by a typical base station,
/// capped at one: `min(load / (lambda_b * B_c), 1)`.
///
/// The mean cell area `1/lambda_b` is used here; the admission
/// probability deliberately uses the typical-cell mean `9/(7 lambda_b)`
/// instead, so the two quantities are not interchangeable.
pub fn normal_rb_fraction(cfg: &NetworkConfig) -> Result<f64, ConfigError> {
    let load = cfg.cellular_load();
    let b_cell = cfg.b_cellular();
    if b_cell <= 0.0 {
        return if load > 0.0 {
            Err(ConfigError::NoCellularSpectrum)
        } else {
            Ok(0.0)
        };
    }
    Ok((load / (cfg.lambda_b * b_cell)).min(1.0))
}

/// Probability that a cellular-side request is admitted,
/// `min(7 B_c lambda_b / (9 load), 1)`: the typical cell has mean area
/// `9/(7 lambda_b)`, larger than the mean cell area by Feller's paradox.
pub fn admission_probability(cfg: &NetworkConfig) -> Result<f64, ConfigError> {
    let load = cfg.cellular_load();
    if load <= 0.0 {
        return Ok(1.0);
    }
    let b_cell = cfg.b_cellular();
    Ok((7.0 * b_cell * cfg.lambda_b / (9.0 * load)).min(1.0))
}

/// Load-derived quantities consumed by the analytic and simulation
/// layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoadState {
    /// Probability that an interfering base station transmits on the
    /// reference subband.
    pub rho: f64,
    /// Admission probability for cellular-side requests.
    pub p_a: f64,
    /// Effective density of co-subband D2D interferers.
    pub lambda_d_tilde: f64,
    /// Subbands available to the cellular downlink.
    pub b_cellular: f64,
    /// Whether the heavy-load condition holds.
    pub heavy_load: bool,
}

impl LoadState {
    pub fn from_config(cfg: &NetworkConfig) -> Result<Self, ConfigError> {
        Ok(LoadState {
            rho: normal_rb_fraction(cfg)?,
            p_a: admission_probability(cfg)?,
            lambda_d_tilde: effective_d2d_density(cfg),
            b_cellular: cfg.b_cellular(),
            heavy_load: cfg.is_heavy_load(),
        })
    }
}

// ---------------------------------------------------------------------------
// Scenario files
// ---------------------------------------------------------------------------

/// Density given either directly (per m^2) or as a count per square
/// cell side, e.g. `{ count = 60, cell_side_m = 500 }`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum DensitySpec {
    Raw(f64),
    PerCell { count: f64, cell_side_m: f64 },
}

impl DensitySpec {
    fn per_m2(self) -> f64 {
        match self {
            DensitySpec::Raw(v) => v,
            DensitySpec::PerCell { count, cell_side_m } => count / (cell_side_m * cell_side_m),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct D2dTypeFile {
    density: DensitySpec,
    demand: u32,
    time_access: f64,
    freq_access: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    mode: AllocationMode,
    alpha: f64,
    subbands: u32,
    cellular_demand: u32,
    mode_weight: f64,
    #[serde(default)]
    d2d_fraction: Option<f64>,
    #[serde(default)]
    subband_bandwidth_hz: Option<f64>,
    bs_density: DensitySpec,
    ue_density: DensitySpec,
    #[serde(default)]
    bs_power_dbm: Option<f64>,
    #[serde(default)]
    bs_power_w: Option<f64>,
    #[serde(default)]
    d2d_power_dbm: Option<f64>,
    #[serde(default)]
    d2d_power_w: Option<f64>,
    #[serde(default)]
    noise_dbm: Option<f64>,
    #[serde(default)]
    noise_w: Option<f64>,
    #[serde(default)]
    mean_link_distance_m: Option<f64>,
    #[serde(default)]
    rayleigh_scale_m: Option<f64>,
    #[serde(default)]
    d2d: Vec<D2dTypeFile>,
}

fn pick_one(
    field: &'static str,
    a: Option<f64>,
    b: Option<f64>,
    conv: impl Fn(f64) -> f64,
) -> Result<f64, ConfigError> {
    match (a, b) {
        (Some(v), None) => Ok(conv(v)),
        (None, Some(v)) => Ok(v),
        (None, None) => Err(ConfigError::Scenario(format!(
            "missing `{field}`: give either the dBm/derived or the direct form"
        ))),
        (Some(_), Some(_)) => Err(ConfigError::Scenario(format!(
            "both forms of `{field}` given; pick one"
        ))),
    }
}

/// Parses a scenario from TOML text and validates it.
pub fn scenario_from_toml(text: &str) -> Result<NetworkConfig, ConfigError> {
    let file: ScenarioFile =
        toml::from_str(text).map_err(|e| ConfigError::Scenario(e.to_string()))?;
    let p_b = pick_one("bs_power", file.bs_power_dbm, file.bs_power_w, dbm_to_watts)?;
    let p_d = pick_one(
        "d2d_power",
        file.d2d_power_dbm,
        file.d2d_power_w,
        dbm_to_watts,
    )?;
    let noise = pick_one("noise", file.noise_dbm, file.noise_w, dbm_to_watts)?;
    let delta = pick_one(
        "link_distance",
        file.mean_link_distance_m,
        file.rayleigh_scale_m,
        delta_for_mean_distance,
    )?;
    let cfg = NetworkConfig {
        lambda_b: file.bs_density.per_m2(),
        lambda_u: file.ue_density.per_m2(),
        d2d_types: file
            .d2d
            .into_iter()
            .map(|t| D2dTypeConfig {
                lambda: t.density.per_m2(),
                b_d: t.demand,
                p_t: t.time_access,
                p_f: t.freq_access,
            })
            .collect(),
        delta,
        p_b,
        p_d,
        noise,
        alpha: file.alpha,
        b_total: file.subbands,
        b_c: file.cellular_demand,
        w: file.mode_weight,
        theta: file.d2d_fraction.unwrap_or(0.0),
        mode: file.mode,
        subband_bandwidth_hz: file.subband_bandwidth_hz.unwrap_or(200e3),
    };
    if cfg.mode == AllocationMode::Dedicated && file.d2d_fraction.is_none() {
        return Err(ConfigError::Scenario(
            "dedicated mode requires `d2d_fraction`".into(),
        ));
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Loads a scenario from a TOML file on disk.
pub fn scenario_from_path(path: &std::path::Path) -> Result<NetworkConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Scenario(format!("{}: {e}", path.display())))?;
    scenario_from_toml(&text)
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 4] = [
    "table2-dedicated",
    "table2-shared",
    "fig10-distance280",
    "lowdensity-lambdaD-0.1",
];

fn reference_config() -> NetworkConfig {
    let cell = 500.0 * 500.0;
    NetworkConfig {
        lambda_b: 1.0 / cell,
        lambda_u: 60.0 / cell,
        d2d_types: vec![
            D2dTypeConfig {
                lambda: 15.0 / cell,
                b_d: 5,
                p_t: 1.0,
                p_f: 0.2,
            },
            D2dTypeConfig {
                lambda: 15.0 / cell,
                b_d: 15,
                p_t: 1.0,
                p_f: 0.6,
            },
        ],
        delta: delta_for_mean_distance(50.0),
        p_b: dbm_to_watts(46.0),
        p_d: dbm_to_watts(20.0),
        noise: dbm_to_watts(-104.0),
        alpha: 3.5,
        b_total: 50,
        b_c: 5,
        w: 2.0,
        theta: 0.5,
        mode: AllocationMode::Dedicated,
        subband_bandwidth_hz: 200e3,
    }
}

/// Returns one of the bundled reference scenarios, or `None` for an
/// unknown name.
///
/// * `table2-dedicated` — urban macro reference scenario, D2D on a
///   dedicated half of the band, per-type subband access 0.2 / 0.6.
/// * `table2-shared` — same deployment with the D2D side overlaying the
///   whole band, per-type subband access 0.1 / 0.3.
/// * `fig10-distance280` — partition-study scenario: mean D2D link
///   distance stretched to 280 m, a thinner D2D population (5 links
///   per cell area and type), and demand-proportional subband access
///   at a 0.3 spectrum split, where the best split sits exactly at
///   the larger demand share.
/// * `lowdensity-lambdaD-0.1` — dedicated reference scenario with the
///   D2D population thinned to a tenth of the base-station density.
pub fn preset(name: &str) -> Option<NetworkConfig> {
    match name {
        "table2-dedicated" => Some(reference_config()),
        "table2-shared" => {
            let mut cfg = reference_config();
            cfg.mode = AllocationMode::Shared;
            cfg.d2d_types[0].p_f = 0.1;
            cfg.d2d_types[1].p_f = 0.3;
            Some(cfg)
        }
        "fig10-distance280" => {
            let mut cfg = reference_config();
            cfg.delta = delta_for_mean_distance(280.0);
            let cell = 500.0 * 500.0;
            cfg.d2d_types[0].lambda = 5.0 / cell;
            cfg.d2d_types[1].lambda = 5.0 / cell;
            cfg.theta = 0.3;
            cfg.d2d_types[0].p_f = 1.0 / 3.0;
            cfg.d2d_types[1].p_f = 1.0;
            Some(cfg)
        }
        "lowdensity-lambdaD-0.1" => {
            let mut cfg = reference_config();
            let cell = 500.0 * 500.0;
            cfg.d2d_types[0].lambda = 0.05 / cell;
            cfg.d2d_types[1].lambda = 0.05 / cell;
            Some(cfg)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn table2() -> NetworkConfig {
        preset("table2-dedicated").unwrap()
    }

    #[test]
    fn reference_scenario_validates() {
        table2().validate().unwrap();
        preset("table2-shared").unwrap().validate().unwrap();
        preset("fig10-distance280").unwrap().validate().unwrap();
        preset("lowdensity-lambdaD-0.1").unwrap().validate().unwrap();
        assert!(preset("nope").is_none());
    }

    #[test]
    fn effective_density_reference_values() {
        let mut cfg = table2();
        cfg.d2d_types[0].p_t = 1.0;
        cfg.d2d_types[1].p_t = 1.0;
        cfg.d2d_types[0].p_f = 0.1;
        cfg.d2d_types[1].p_f = 0.3;
        // 6e-5 * (0.1 + 0.3) = 2.4e-5
        assert_relative_eq!(effective_d2d_density(&cfg), 2.4e-5, max_relative = 1e-12);
    }

    #[test]
    fn effective_density_vanishes_without_time_access() {
        let mut cfg = table2();
        for t in &mut cfg.d2d_types {
            t.p_t = 0.0;
        }
        assert_eq!(effective_d2d_density(&cfg), 0.0);
    }

    #[test]
    fn effective_density_depends_only_on_products() {
        let mut a = table2();
        a.d2d_types[0].p_t = 0.5;
        a.d2d_types[0].p_f = 0.4;
        let mut b = table2();
        b.d2d_types[0].p_t = 0.2;
        b.d2d_types[0].p_f = 1.0;
        assert_relative_eq!(
            effective_d2d_density(&a),
            effective_d2d_density(&b),
            max_relative = 1e-15
        );
    }

    #[test]
    fn rb_fraction_saturates_in_reference_scenario() {
        // load = 5*60 + 0 = 300 per cell, capacity 25 subbands per cell.
        let cfg = table2();
        assert_eq!(normal_rb_fraction(&cfg).unwrap(), 1.0);
        let shared = cfg.with_mode(AllocationMode::Shared);
        assert_eq!(normal_rb_fraction(&shared).unwrap(), 1.0);
    }

    #[test]
    fn rb_fraction_unclamped_below_capacity() {
        let mut cfg = table2();
        cfg.lambda_u = 2.0 / (500.0 * 500.0);
        // load = 10 per cell over 25 subbands.
        assert_relative_eq!(normal_rb_fraction(&cfg).unwrap(), 0.4, max_relative = 1e-12);
    }

    #[test]
    fn rb_fraction_zero_load() {
        let mut cfg = table2();
        cfg.lambda_u = 0.0;
        assert_eq!(normal_rb_fraction(&cfg).unwrap(), 0.0);
        assert_eq!(admission_probability(&cfg).unwrap(), 1.0);
    }

    #[test]
    fn admission_probability_reference_values() {
        // Dedicated: 7 * 25 / (9 * 300) = 175/2700.
        let cfg = table2();
        assert_relative_eq!(
            admission_probability(&cfg).unwrap(),
            175.0 / 2700.0,
            max_relative = 1e-12
        );
        // Shared: 7 * 50 / (9 * 300) = 350/2700.
        let shared = cfg.with_mode(AllocationMode::Shared);
        assert_relative_eq!(
            admission_probability(&shared).unwrap(),
            350.0 / 2700.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn admission_probability_counts_cellular_mode_d2d() {
        let mut cfg = table2();
        cfg.d2d_types[0].p_t = 0.5;
        // load = 300 + 0.5 * 5 * 15 = 337.5 per cell.
        assert_relative_eq!(
            admission_probability(&cfg).unwrap(),
            7.0 * 25.0 / (9.0 * 337.5),
            max_relative = 1e-12
        );
    }

    #[test]
    fn heavy_load_flag() {
        let cfg = table2();
        assert!(cfg.is_heavy_load()); // 7*25*1 < 9*5*60
        let mut light = cfg;
        light.lambda_u = 2.0 / (500.0 * 500.0);
        assert!(!light.is_heavy_load()); // 175 >= 90
    }

    #[test]
    fn theta_one_with_cellular_load_rejected() {
        let mut cfg = table2();
        cfg.theta = 1.0;
        assert_eq!(cfg.validate(), Err(ConfigError::NoCellularSpectrum));
        // ... but accepted when nothing needs cellular spectrum.
        cfg.lambda_u = 0.0;
        cfg.validate().unwrap();
        assert_eq!(normal_rb_fraction(&cfg).unwrap(), 0.0);
    }

    #[test]
    fn invalid_fields_are_named() {
        let mut cfg = table2();
        cfg.alpha = 2.0;
        match cfg.validate() {
            Err(ConfigError::Invalid { field, .. }) => assert_eq!(field, "alpha"),
            other => panic!("expected alpha error, got {other:?}"),
        }
        let mut cfg = table2();
        cfg.b_c = 51;
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::Invalid { field: "b_c", .. })
        ));
        let mut cfg = table2();
        cfg.d2d_types[1].p_f = 1.2;
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::Invalid { field: "d2d_types", .. })
        ));
        let mut cfg = table2();
        cfg.w = 0.0;
        assert!(matches!(
            cfg.validate(),
            Err(ConfigError::Invalid { field: "w", .. })
        ));
    }

    #[test]
    fn mean_link_distance_roundtrip() {
        let cfg = table2();
        assert_relative_eq!(cfg.mean_link_distance(), 50.0, max_relative = 1e-12);
        assert_relative_eq!(cfg.delta, 39.894_228_040_143_27, max_relative = 1e-12);
    }

    #[test]
    fn dbm_conversions() {
        assert_relative_eq!(dbm_to_watts(20.0), 0.1, max_relative = 1e-12);
        assert_relative_eq!(dbm_to_watts(46.0), 39.810_717_055_349_73, max_relative = 1e-12);
        assert_relative_eq!(watts_to_dbm(0.1), 20.0, max_relative = 1e-12);
        assert_relative_eq!(db_to_linear(linear_to_db(7.5)), 7.5, max_relative = 1e-12);
    }

    #[test]
    fn scenario_toml_roundtrip() {
        let text = r#"
            mode = "dedicated"
            alpha = 3.5
            subbands = 50
            cellular_demand = 5
            mode_weight = 2.0
            d2d_fraction = 0.5
            bs_density = { count = 1, cell_side_m = 500 }
            ue_density = { count = 60, cell_side_m = 500 }
            bs_power_dbm = 46.0
            d2d_power_dbm = 20.0
            noise_dbm = -104.0
            mean_link_distance_m = 50.0

            [[d2d]]
            density = { count = 15, cell_side_m = 500 }
            demand = 5
            time_access = 1.0
            freq_access = 0.2

            [[d2d]]
            density = { count = 15, cell_side_m = 500 }
            demand = 15
            time_access = 1.0
            freq_access = 0.6
        "#;
        let cfg = scenario_from_toml(text).unwrap();
        let expect = table2();
        assert_eq!(cfg, expect);
    }

    #[test]
    fn scenario_toml_accepts_direct_units() {
        let text = r#"
            mode = "shared"
            alpha = 4.0
            subbands = 10
            cellular_demand = 2
            mode_weight = 1.0
            bs_density = 4.0e-6
            ue_density = 0.0
            bs_power_w = 10.0
            d2d_power_w = 0.1
            noise_w = 0.0
            rayleigh_scale_m = 30.0
        "#;
        let cfg = scenario_from_toml(text).unwrap();
        assert_eq!(cfg.mode, AllocationMode::Shared);
        assert_eq!(cfg.delta, 30.0);
        assert_eq!(cfg.noise, 0.0);
        assert!(cfg.d2d_types.is_empty());
    }

    #[test]
    fn scenario_toml_rejects_ambiguous_power() {
        let text = r#"
            mode = "shared"
            alpha = 4.0
            subbands = 10
            cellular_demand = 2
            mode_weight = 1.0
            bs_density = 4.0e-6
            ue_density = 0.0
            bs_power_w = 10.0
            bs_power_dbm = 40.0
            d2d_power_w = 0.1
            noise_w = 0.0
            rayleigh_scale_m = 30.0
        "#;
        assert!(matches!(
            scenario_from_toml(text),
            Err(ConfigError::Scenario(_))
        ));
    }

    #[test]
    fn scenario_toml_requires_theta_in_dedicated() {
        let text = r#"
            mode = "dedicated"
            alpha = 4.0
            subbands = 10
            cellular_demand = 2
            mode_weight = 1.0
            bs_density = 4.0e-6
            ue_density = 0.0
            bs_power_w = 10.0
            d2d_power_w = 0.1
            noise_w = 0.0
            rayleigh_scale_m = 30.0
        "#;
        assert!(matches!(
            scenario_from_toml(text),
            Err(ConfigError::Scenario(_))
        ));
    }
}
