//! Optimal hopping probabilities and spectrum partition.
//!
//! The objective throughout is the *rate density*: the sum of every
//! population's density times its fixed-threshold rate lower bound,
//! evaluated with the interference-limited coverage expressions,
//!
//! ```text
//! lambda_u * R_C + sum_j lambda_j * R_Dj   (bit/s/Hz per m^2,
//!                                           subband-normalized)
//! ```
//!
//! Three knobs are optimized: the frequency-hopping probabilities
//! `p_f` (closed form: hop over exactly the demanded share of the
//! pool), the time-hopping probabilities `p_t` (closed form `1` when a
//! cellular subband is at least as valuable as a D2D one, a reduced
//! one-dimensional grid otherwise), and — in dedicated mode — the
//! spectrum split `theta`.
//!
//! For `theta`, when every base station is fully loaded for any split
//! (cellular subband demand at least `lambda_b * b_total`), the
//! objective with `p_f` eliminated is piecewise smooth on the regions
//! cut by the sorted normalized demands `b_d / b_total`, and on each
//! region takes the rational form
//!
//! ```text
//! g(theta) = theta (A + E theta) / (F theta + C) + D (1 - theta)
//! ```
//!
//! with nonnegative region coefficients satisfying `C E = A (F - 1)`.
//! The maximizer is then found exactly from the region edges plus the
//! interior stationary points `(sqrt(C A / (D F - E)) - C) / F`.  The
//! SINR thresholds inside the bounds are frozen at the incumbent
//! configuration's maximizers, which keeps the objective rational in
//! `theta`; the reported solution objective is always re-evaluated
//! with freshly maximized thresholds.

use serde::Serialize;

use crate::analytic::{
    coverage, coverage_il, d2d_rate_terms, h1, kappa, rate_integral, rates, sup_fixed_threshold,
    AnalyticError,
};
use crate::model::{AllocationMode, ConfigError, LinkClass, LoadState, NetworkConfig};

/// Step of the `theta` grid used when the closed form does not apply.
pub const THETA_GRID_RESOLUTION: f64 = 1e-3;
/// Step of the reduced common-`p_t` grid.
pub const PT_GRID_RESOLUTION: f64 = 0.05;
/// Joint `p_f` grids larger than this many cells are refused unless
/// explicitly overridden.
pub const GRID_CELL_GUARD: u128 = 2_000_000;

/// How a reported optimum was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SolveMethod {
    /// Exact candidate enumeration from the piecewise-rational form.
    ClosedForm,
    /// One-dimensional grid over a common parameter value.
    ReducedGridSearch,
    /// Exhaustive grid over the remaining free parameters.
    FullGridSearch,
}

impl std::fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveMethod::ClosedForm => write!(f, "closed-form"),
            SolveMethod::ReducedGridSearch => write!(f, "reduced-grid-search"),
            SolveMethod::FullGridSearch => write!(f, "full-grid-search"),
        }
    }
}

fn coarser(a: SolveMethod, b: SolveMethod) -> SolveMethod {
    use SolveMethod::*;
    match (a, b) {
        (FullGridSearch, _) | (_, FullGridSearch) => FullGridSearch,
        (ReducedGridSearch, _) | (_, ReducedGridSearch) => ReducedGridSearch,
        _ => ClosedForm,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CandidateKind {
    /// Edge of a demand region.
    Edge,
    /// Interior stationary point of the frozen objective.
    Stationary,
}

impl std::fmt::Display for CandidateKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CandidateKind::Edge => write!(f, "edge"),
            CandidateKind::Stationary => write!(f, "stationary"),
        }
    }
}

/// One evaluated maximizer candidate for the spectrum split.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaCandidate {
    pub theta: f64,
    /// Frozen-threshold objective value at `theta`.
    pub frozen_objective: f64,
    pub kind: CandidateKind,
    /// Demand region `[lo, hi]` the candidate belongs to.
    pub region: [f64; 2],
    /// True when the frozen objective has no interior stationary point
    /// on this region, so only the edges can maximize there.
    pub monotone_region: bool,
}

/// Per-region coefficients of the frozen split objective
/// `theta (A + E theta) / (F theta + C) + D (1 - theta)`.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaRegion {
    pub lo: f64,
    pub hi: f64,
    pub a: f64,
    pub c: f64,
    pub e: f64,
    pub f: f64,
    /// Interior stationary point, when one lies strictly inside.
    pub stationary: Option<f64>,
}

/// The full frozen objective: regions plus the shared cellular slope
/// `D` and the frozen SINR thresholds.
#[derive(Debug, Clone, Serialize)]
pub struct ThetaPartitionCoeffs {
    pub beta_c: f64,
    pub beta_d: f64,
    pub d: f64,
    pub regions: Vec<ThetaRegion>,
    /// True when the load keeps every base station busy for any split,
    /// which is the regime where the rational form is exact.
    pub full_load: bool,
}

impl ThetaPartitionCoeffs {
    /// Evaluates the frozen objective at `theta` (continuous across
    /// region edges).
    pub fn frozen_objective(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            return self.d;
        }
        let r = self
            .regions
            .iter()
            .find(|r| theta <= r.hi + 1e-12)
            .unwrap_or_else(|| self.regions.last().expect("nonempty regions"));
        theta * (r.a + r.e * theta) / (r.f * theta + r.c) + self.d * (1.0 - theta)
    }

    /// Region edges and interior stationary points, each evaluated
    /// under the frozen objective, in ascending `theta` order.
    pub fn candidates(&self) -> Vec<ThetaCandidate> {
        let mut out: Vec<ThetaCandidate> = Vec::new();
        for r in &self.regions {
            let monotone = r.stationary.is_none();
            let mut push = |theta: f64, kind: CandidateKind| {
                if out
                    .iter()
                    .any(|c| (c.theta - theta).abs() < 1e-14)
                {
                    return;
                }
                out.push(ThetaCandidate {
                    theta,
                    frozen_objective: self.frozen_objective(theta),
                    kind,
                    region: [r.lo, r.hi],
                    monotone_region: monotone,
                });
            };
            push(r.lo, CandidateKind::Edge);
            push(r.hi, CandidateKind::Edge);
            if let Some(s) = r.stationary {
                push(s, CandidateKind::Stationary);
            }
        }
        out.sort_by(|x, y| x.theta.total_cmp(&y.theta));
        out
    }
}

/// Solution of a parameter optimization.
#[derive(Debug, Clone, Serialize)]
pub struct PartitionSolution {
    pub mode: AllocationMode,
    pub p_t_star: Vec<f64>,
    pub p_f_star: Vec<f64>,
    /// Optimal split; `None` in shared mode, where no split exists.
    pub theta_star: Option<f64>,
    /// Rate density at the returned parameters, re-evaluated with
    /// freshly maximized thresholds.
    pub objective: f64,
    pub method: SolveMethod,
    pub heavy_load: bool,
    /// Evaluated split candidates (closed form only; empty otherwise).
    pub candidates: Vec<ThetaCandidate>,
}

/// Rate density of a configuration: each population density times its
/// fixed-threshold rate lower bound under the interference-limited
/// coverage expressions.
pub fn rate_density(cfg: &NetworkConfig) -> Result<f64, AnalyticError> {
    cfg.validate()?;
    let load = LoadState::from_config(cfg)?;
    let (_, sup_c) = sup_fixed_threshold(|b| coverage_il(cfg, LinkClass::Cellular, b))?;
    let (_, sup_d) = sup_fixed_threshold(|b| coverage_il(cfg, LinkClass::D2d, b))?;
    let per_type = d2d_rate_terms(cfg, &load, sup_d, sup_c);
    Ok(cfg.lambda_u * cfg.b_c as f64 * load.p_a * sup_c
        + cfg
            .d2d_types
            .iter()
            .zip(per_type)
            .map(|(t, r)| t.lambda * r)
            .sum::<f64>())
}

/// Density-weighted utility of the per-population rate lower bounds:
/// `lambda_u u(R_C) + sum_j lambda_j u(R_Dj)` for any increasing
/// utility `u`.
pub fn utility_density<U: Fn(f64) -> f64>(
    cfg: &NetworkConfig,
    utility: U,
) -> Result<f64, AnalyticError> {
    cfg.validate()?;
    let load = LoadState::from_config(cfg)?;
    let (_, sup_c) = sup_fixed_threshold(|b| coverage_il(cfg, LinkClass::Cellular, b))?;
    let (_, sup_d) = sup_fixed_threshold(|b| coverage_il(cfg, LinkClass::D2d, b))?;
    let per_type = d2d_rate_terms(cfg, &load, sup_d, sup_c);
    let r_c = cfg.b_c as f64 * load.p_a * sup_c;
    Ok(cfg.lambda_u * utility(r_c)
        + cfg
            .d2d_types
            .iter()
            .zip(per_type)
            .map(|(t, r)| t.lambda * utility(r))
            .sum::<f64>())
}

/// One evaluated point of a spectrum-split sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SplitSweepPoint {
    pub theta: f64,
    /// Average cellular-user rate (subband-normalized bit/s/Hz).
    pub rate_cellular: f64,
    /// Density-weighted mixture of the average per-type D2D rates.
    pub rate_d2d_mixture: f64,
    /// Rate density objective at this split.
    pub rate_density: f64,
}

/// Evaluates average rates and the rate density with the spectrum
/// split replaced by `theta` and every other parameter held fixed.
///
/// Sweeps over the closed interval `[0, 1]` are supported.  A split of
/// `1` starves a positive cellular demand of spectrum, which a plain
/// configuration rejects; that endpoint is evaluated as the continuous
/// limit instead: the admission probability — and with it every
/// cellular-mode term — vanishes, while the D2D terms keep their
/// limiting values because the D2D SINR law does not depend on the
/// split.
pub fn split_sweep_point(
    cfg: &NetworkConfig,
    theta: f64,
) -> Result<SplitSweepPoint, AnalyticError> {
    if cfg.mode != AllocationMode::Dedicated {
        return Err(ConfigError::Invalid {
            field: "theta",
            message: "the spectrum split exists only in dedicated mode".into(),
        }
        .into());
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(ConfigError::Invalid {
            field: "theta",
            message: format!("split {theta} outside [0, 1]"),
        }
        .into());
    }
    let mut work = cfg.clone();
    work.theta = theta;
    if work.validate().is_ok() {
        let report = rates(&work)?;
        return Ok(SplitSweepPoint {
            theta,
            rate_cellular: report.rate_cellular,
            rate_d2d_mixture: report.rate_d2d_mixture,
            rate_density: rate_density(&work)?,
        });
    }
    // The whole band is D2D spectrum while cellular demand is positive.
    // Validate the remaining fields on a benign split, then assemble
    // the limit by hand.
    work.theta = 0.0;
    work.validate()?;
    let spectral_d2d = rate_integral(|b| coverage(&work, LinkClass::D2d, b))?.value;
    let (_, sup_d) = sup_fixed_threshold(|b| coverage_il(&work, LinkClass::D2d, b))?;
    let pool = cfg.b_total as f64;
    let total = cfg.lambda_d_total();
    let mut mixture = 0.0;
    let mut density = 0.0;
    for t in &cfg.d2d_types {
        let d2d_subbands = (t.p_f * pool).min(t.b_d as f64);
        if total > 0.0 {
            mixture += t.lambda / total * d2d_subbands * t.p_t * spectral_d2d;
        }
        density += t.lambda * d2d_subbands * t.p_t * sup_d;
    }
    Ok(SplitSweepPoint {
        theta,
        rate_cellular: 0.0,
        rate_d2d_mixture: mixture,
        rate_density: density,
    })
}

/// Optimal frequency-hopping probabilities: hop over exactly the
/// demanded share of the pool, `min(1, b_d / pool)`.  With an empty
/// pool every choice yields the same (zero) D2D rate; the
/// least-interference choice `0` is returned.
pub fn optimal_frequency_hopping(cfg: &NetworkConfig) -> Result<Vec<f64>, AnalyticError> {
    cfg.validate()?;
    let pool = cfg.b_d2d_pool();
    Ok(cfg
        .d2d_types
        .iter()
        .map(|t| {
            if pool <= 0.0 {
                0.0
            } else {
                (t.b_d as f64 / pool).min(1.0)
            }
        })
        .collect())
}

/// Optimal time-hopping probabilities.  When `w >= 1` a D2D subband is
/// worth at least a cellular one, so always electing D2D mode is
/// optimal in closed form.  Otherwise a reduced search over a common
/// `p_t` is run on the rate density.
pub fn optimal_time_hopping(
    cfg: &NetworkConfig,
) -> Result<(Vec<f64>, SolveMethod), AnalyticError> {
    cfg.validate()?;
    let m = cfg.d2d_types.len();
    if cfg.w >= 1.0 {
        return Ok((vec![1.0; m], SolveMethod::ClosedForm));
    }
    let steps = (1.0 / PT_GRID_RESOLUTION).round() as usize;
    let mut best_v = 0.0;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..=steps {
        let v = (i as f64 * PT_GRID_RESOLUTION).min(1.0);
        let mut work = cfg.clone();
        for t in &mut work.d2d_types {
            t.p_t = v;
        }
        let val = rate_density(&work)?;
        if val > best_val {
            best_val = val;
            best_v = v;
        }
    }
    Ok((vec![best_v; m], SolveMethod::ReducedGridSearch))
}

/// Dedicated-mode evaluation frame: everything the split objective
/// needs, independent of any validated configuration, so that the
/// boundary `theta = 1` (no cellular spectrum) remains evaluable.
struct DedicatedFrame {
    b_total: f64,
    b_c: f64,
    w: f64,
    lambda_b: f64,
    lambda_u: f64,
    alpha: f64,
    /// `2 delta^2 kappa pi`, the Laplace-exponent geometry factor.
    two_delta2_kpi: f64,
    /// Cellular subband demand density (independent of the split).
    load: f64,
    types: Vec<FrameType>,
}

struct FrameType {
    lambda: f64,
    b_d: f64,
    p_t: f64,
}

impl DedicatedFrame {
    fn new(cfg: &NetworkConfig) -> Result<Self, AnalyticError> {
        if cfg.mode != AllocationMode::Dedicated {
            return Err(ConfigError::Scenario(
                "spectrum partition only exists in dedicated mode".into(),
            )
            .into());
        }
        let kpi = std::f64::consts::PI * kappa(cfg.alpha)?;
        Ok(Self {
            b_total: cfg.b_total as f64,
            b_c: cfg.b_c as f64,
            w: cfg.w,
            lambda_b: cfg.lambda_b,
            lambda_u: cfg.lambda_u,
            alpha: cfg.alpha,
            two_delta2_kpi: 2.0 * cfg.delta * cfg.delta * kpi,
            load: cfg.cellular_load(),
            types: cfg
                .d2d_types
                .iter()
                .map(|t| FrameType {
                    lambda: t.lambda,
                    b_d: t.b_d as f64,
                    p_t: t.p_t,
                })
                .collect(),
        })
    }

    /// True when every base station stays fully loaded for any split,
    /// the regime where the rational closed form is exact.
    fn full_load(&self) -> bool {
        self.load >= self.lambda_b * self.b_total
    }

    fn p_f_star(&self, t: &FrameType, theta: f64) -> f64 {
        let pool = theta * self.b_total;
        if pool <= 0.0 {
            0.0
        } else {
            (t.b_d / pool).min(1.0)
        }
    }

    /// Effective interferer density with the hopping optimum
    /// eliminated.  The empty-pool limit keeps the all-greedy value so
    /// the objective stays continuous at zero.
    fn lambda_tilde(&self, theta: f64) -> f64 {
        let pool = theta * self.b_total;
        self.types
            .iter()
            .map(|t| {
                let p_f = if pool <= 0.0 {
                    1.0
                } else {
                    (t.b_d / pool).min(1.0)
                };
                t.p_t * p_f * t.lambda
            })
            .sum()
    }

    fn rho(&self, theta: f64) -> f64 {
        let b_cell = (1.0 - theta) * self.b_total;
        if self.load <= 0.0 {
            0.0
        } else if b_cell <= 0.0 {
            1.0
        } else {
            (self.load / (self.lambda_b * b_cell)).min(1.0)
        }
    }

    fn p_a(&self, theta: f64) -> f64 {
        let b_cell = (1.0 - theta) * self.b_total;
        if self.load <= 0.0 {
            1.0
        } else if b_cell <= 0.0 {
            0.0
        } else {
            (7.0 * b_cell * self.lambda_b / (9.0 * self.load)).min(1.0)
        }
    }

    fn cov_d(&self, lambda_tilde: f64, beta: f64) -> f64 {
        1.0 / (1.0 + lambda_tilde * self.two_delta2_kpi * beta.powf(2.0 / self.alpha))
    }

    fn cov_c(&self, rho: f64, beta: f64) -> Result<f64, AnalyticError> {
        Ok(1.0 / (2.0 * rho * h1(beta, self.alpha)? + 1.0))
    }

    /// Rate density at `theta` given per-class throughput factors
    /// `i_d`, `i_c` (`log2(1+beta) * coverage`).
    fn value(&self, theta: f64, i_d: f64, i_c: f64) -> f64 {
        let p_a = self.p_a(theta);
        let pool = theta * self.b_total;
        let d2d: f64 = self
            .types
            .iter()
            .map(|t| {
                let subbands = pool.min(t.b_d);
                t.lambda
                    * (t.p_t * subbands * i_d + t.b_d / self.w * (1.0 - t.p_t) * p_a * i_c)
            })
            .sum();
        self.lambda_u * self.b_c * p_a * i_c + d2d
    }

    /// Rate density at `theta` with thresholds frozen at
    /// `(beta_c, beta_d)`.
    fn frozen_value(&self, theta: f64, beta_c: f64, beta_d: f64) -> Result<f64, AnalyticError> {
        let i_d = (1.0 + beta_d).log2() * self.cov_d(self.lambda_tilde(theta), beta_d);
        let i_c = (1.0 + beta_c).log2() * self.cov_c(self.rho(theta), beta_c)?;
        Ok(self.value(theta, i_d, i_c))
    }

    /// Rate density at `theta` with freshly maximized thresholds.
    fn fresh_value(&self, theta: f64) -> Result<f64, AnalyticError> {
        let lt = self.lambda_tilde(theta);
        let rho = self.rho(theta);
        let (_, s_d) = sup_fixed_threshold(|beta| Ok(self.cov_d(lt, beta)))?;
        let (_, s_c) = sup_fixed_threshold(|beta| self.cov_c(rho, beta))?;
        Ok(self.value(theta, s_d, s_c))
    }
}

/// Frozen-threshold rate density at an arbitrary split `theta` (the
/// hopping probabilities eliminated by their closed forms), evaluated
/// directly from the coverage expressions rather than from the region
/// coefficients.  Valid at the boundary `theta = 1` as well.
pub fn theta_rate_density_frozen(
    cfg: &NetworkConfig,
    theta: f64,
    beta_c: f64,
    beta_d: f64,
) -> Result<f64, AnalyticError> {
    cfg.validate()?;
    DedicatedFrame::new(cfg)?.frozen_value(theta, beta_c, beta_d)
}

/// Region coefficients of the frozen split objective, with the SINR
/// thresholds frozen at the incumbent configuration's maximizers.
pub fn theta_partition_coeffs(cfg: &NetworkConfig) -> Result<ThetaPartitionCoeffs, AnalyticError> {
    cfg.validate()?;
    let frame = DedicatedFrame::new(cfg)?;
    if frame.load <= 0.0 {
        return Err(ConfigError::Scenario(
            "no cellular subband demand; the split objective degenerates".into(),
        )
        .into());
    }
    let (beta_c, _) = sup_fixed_threshold(|b| coverage_il(cfg, LinkClass::Cellular, b))?;
    let (beta_d, _) = sup_fixed_threshold(|b| coverage_il(cfg, LinkClass::D2d, b))?;

    // Cellular slope: lambda_u R_C plus every fallback term collapses
    // to D (1 - theta) because the admission probability is linear in
    // the cellular share when no clamp binds.
    let i_c = (1.0 + beta_c).log2() * frame.cov_c(1.0, beta_c)?;
    let bracket: f64 = frame.lambda_u * frame.b_c
        + frame
            .types
            .iter()
            .map(|t| t.lambda * t.b_d / frame.w * (1.0 - t.p_t))
            .sum::<f64>();
    let d = 7.0 / 9.0 * frame.b_total * frame.lambda_b * i_c * bracket / frame.load;

    let l_d = (1.0 + beta_d).log2();
    let c_geo = frame.two_delta2_kpi * beta_d.powf(2.0 / frame.alpha);

    // Region boundaries: the sorted normalized demands inside (0, 1).
    let mut cuts: Vec<f64> = frame
        .types
        .iter()
        .map(|t| t.b_d / frame.b_total)
        .filter(|&b| b < 1.0)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let mut bounds = vec![0.0];
    bounds.extend(cuts);
    bounds.push(1.0);

    let mut regions = Vec::new();
    for pair in bounds.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        // Types saturated on this region hop over less than the pool.
        let saturated = |t: &FrameType| t.b_d / frame.b_total <= lo + 1e-12;
        let s_sum: f64 = frame
            .types
            .iter()
            .filter(|t| saturated(t))
            .map(|t| t.p_t * t.lambda * t.b_d)
            .sum();
        let g_sum: f64 = frame
            .types
            .iter()
            .filter(|t| !saturated(t))
            .map(|t| t.p_t * t.lambda)
            .sum();
        let a = l_d * s_sum;
        let c = c_geo / frame.b_total * s_sum;
        let e = l_d * frame.b_total * g_sum;
        let f = 1.0 + c_geo * g_sum;
        debug_assert!(
            (c * e - a * (f - 1.0)).abs() <= 1e-9 * (1.0 + a.abs() * f.abs()),
            "region coefficient identity violated"
        );
        let stationary = if d * f > e && a > 0.0 && c > 0.0 {
            let th = ((c * a / (d * f - e)).sqrt() - c) / f;
            (lo < th && th < hi).then_some(th)
        } else {
            None
        };
        regions.push(ThetaRegion {
            lo,
            hi,
            a,
            c,
            e,
            f,
            stationary,
        });
    }

    Ok(ThetaPartitionCoeffs {
        beta_c,
        beta_d,
        d,
        regions,
        full_load: frame.full_load(),
    })
}

/// Optimal spectrum split in dedicated mode, with the hopping
/// probabilities taken from `cfg` (time) and eliminated in closed form
/// (frequency).  Uses exact candidate enumeration when the closed form
/// applies and a fine grid otherwise; ties break toward the smaller
/// split.
pub fn optimal_theta(cfg: &NetworkConfig) -> Result<PartitionSolution, AnalyticError> {
    cfg.validate()?;
    let frame = DedicatedFrame::new(cfg)?;
    let heavy_load = cfg.is_heavy_load();

    let (theta_star, method, candidates) = if frame.full_load() && frame.load > 0.0 {
        let coeffs = theta_partition_coeffs(cfg)?;
        let candidates = coeffs.candidates();
        let best = candidates
            .iter()
            .fold(None::<&ThetaCandidate>, |acc, c| match acc {
                Some(b) if c.frozen_objective <= b.frozen_objective => acc,
                _ => Some(c),
            })
            .expect("candidate set is never empty");
        (best.theta, SolveMethod::ClosedForm, candidates)
    } else {
        let steps = (1.0 / THETA_GRID_RESOLUTION).round() as usize;
        let mut best_theta = 0.0;
        let mut best_val = f64::NEG_INFINITY;
        for i in 0..=steps {
            let theta = (i as f64 * THETA_GRID_RESOLUTION).min(1.0);
            let val = frame.fresh_value(theta)?;
            if val > best_val {
                best_val = val;
                best_theta = theta;
            }
        }
        (best_theta, SolveMethod::FullGridSearch, Vec::new())
    };

    Ok(PartitionSolution {
        mode: AllocationMode::Dedicated,
        p_t_star: cfg.d2d_types.iter().map(|t| t.p_t).collect(),
        p_f_star: frame
            .types
            .iter()
            .map(|t| frame.p_f_star(t, theta_star))
            .collect(),
        theta_star: Some(theta_star),
        objective: frame.fresh_value(theta_star)?,
        method,
        heavy_load,
        candidates,
    })
}

/// Shared-mode parameter search: time hopping first (closed form or
/// reduced grid), then an exhaustive joint grid over the per-type
/// frequency-hopping probabilities.  Each grid is `0..=min(1, b_d /
/// b_total)` — hopping beyond the demanded share only adds
/// interference — stepped by `resolution` with the cap always
/// included.  Grids larger than [`GRID_CELL_GUARD`] cells are refused
/// unless `override_guard` is set.
pub fn optimize_shared(
    cfg: &NetworkConfig,
    resolution: f64,
    override_guard: bool,
) -> Result<PartitionSolution, AnalyticError> {
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(ConfigError::Scenario(format!(
            "grid resolution {resolution} outside (0, 1]"
        ))
        .into());
    }
    let mut work = cfg.with_mode(AllocationMode::Shared);
    work.validate()?;
    let (p_t_star, pt_method) = optimal_time_hopping(&work)?;
    for (t, v) in work.d2d_types.iter_mut().zip(&p_t_star) {
        t.p_t = *v;
    }

    let grids: Vec<Vec<f64>> = work
        .d2d_types
        .iter()
        .map(|t| {
            let cap = (t.b_d as f64 / work.b_total as f64).min(1.0);
            let mut g: Vec<f64> = (0..)
                .map(|i| i as f64 * resolution)
                .take_while(|&x| x < cap - 1e-12)
                .collect();
            g.push(cap);
            g
        })
        .collect();
    let cells: u128 = grids.iter().map(|g| g.len() as u128).product();
    if cells > GRID_CELL_GUARD && !override_guard {
        return Err(ConfigError::Scenario(format!(
            "joint frequency-hopping grid has {cells} cells (guard {GRID_CELL_GUARD}); \
             coarsen the resolution or override the guard"
        ))
        .into());
    }

    let mut best_val = f64::NEG_INFINITY;
    let mut best: Vec<f64> = grids.iter().map(|g| g[0]).collect();
    let mut idx = vec![0usize; grids.len()];
    loop {
        for (t, (g, &i)) in work.d2d_types.iter_mut().zip(grids.iter().zip(&idx)) {
            t.p_f = g[i];
        }
        let val = rate_density(&work)?;
        if val > best_val {
            best_val = val;
            best = work.d2d_types.iter().map(|t| t.p_f).collect();
        }
        // Odometer increment; lexicographic order breaks ties toward
        // the smaller probabilities.
        let mut k = grids.len();
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < grids[k].len() {
                break;
            }
            idx[k] = 0;
            if k == 0 {
                k = usize::MAX;
                break;
            }
        }
        if k == usize::MAX || grids.is_empty() {
            break;
        }
    }
    for (t, v) in work.d2d_types.iter_mut().zip(&best) {
        t.p_f = *v;
    }

    Ok(PartitionSolution {
        mode: AllocationMode::Shared,
        p_t_star,
        p_f_star: best,
        theta_star: None,
        objective: rate_density(&work)?,
        method: coarser(pt_method, SolveMethod::FullGridSearch),
        heavy_load: work.is_heavy_load(),
        candidates: Vec::new(),
    })
}

/// End-to-end parameter optimization under the mode recorded in the
/// configuration: time hopping, then frequency hopping and (dedicated
/// mode) the spectrum split.
pub fn solve(cfg: &NetworkConfig) -> Result<PartitionSolution, AnalyticError> {
    cfg.validate()?;
    match cfg.mode {
        AllocationMode::Shared => optimize_shared(cfg, 0.01, false),
        AllocationMode::Dedicated => {
            let (p_t_star, pt_method) = optimal_time_hopping(cfg)?;
            let mut work = cfg.clone();
            for (t, v) in work.d2d_types.iter_mut().zip(&p_t_star) {
                t.p_t = *v;
            }
            let mut sol = optimal_theta(&work)?;
            sol.method = coarser(sol.method, pt_method);
            Ok(sol)
        }
    }
}
