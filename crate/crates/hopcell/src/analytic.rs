//! Coverage probabilities and average rates of the typical D2D and
//! cellular links, derived from the Poisson deployment model.
//!
//! For each link class there are two routes to the SINR distribution:
//!
//! * a general semi-infinite integral over the (random) link distance,
//!   valid for any noise power, and
//! * an interference-limited (`_il`) closed form for zero noise.
//!
//! The two routes share nothing but the auxiliary path-loss integrals
//! `h0`/`h1`, so they cross-validate each other; the consistency is
//! enforced by the acceptance suite.  Average rates follow from the
//! CCDF by `E[log2(1+SINR)] = log2(e) * int CCDF(beta)/(1+beta) dbeta`,
//! and rate lower bounds from maximizing `log2(1+beta) * CCDF(beta)`
//! over a fixed threshold `beta`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::RwLock;

use once_cell::sync::Lazy;
use serde::Serialize;
use thiserror::Error;

use crate::model::{
    AllocationMode, ConfigError, LinkClass, LoadState, NetworkConfig,
};
use crate::numeric::{
    integrate_semi_infinite, scan_golden_max, NumericError, Quad, QUAD_ABS_TOL, QUAD_REL_TOL,
};

#[derive(Debug, Clone, Error)]
pub enum AnalyticError {
    #[error("path-loss exponent {alpha} outside (2, inf): interference moments diverge")]
    AlphaOutOfRange { alpha: f64 },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

/// `kappa(alpha) = (2 pi / alpha) / sin(2 pi / alpha)`, the constant that
/// absorbs the path-loss geometry in every interference functional.
/// Finite only for `alpha > 2`.
pub fn kappa(alpha: f64) -> Result<f64, AnalyticError> {
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(AnalyticError::AlphaOutOfRange { alpha });
    }
    let x = 2.0 * PI / alpha;
    Ok(x / x.sin())
}

static H1_CACHE: Lazy<RwLock<HashMap<(u64, u64), f64>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));
static H0_CACHE: Lazy<RwLock<HashMap<(u64, u64, u64), f64>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

/// `h1(beta, alpha) = int_1^inf x / (1 + x^alpha / beta) dx`: the
/// normalized interference coupling of base stations beyond the serving
/// distance.  Memoized on the exact argument pair.
pub fn h1(beta: f64, alpha: f64) -> Result<f64, AnalyticError> {
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(AnalyticError::AlphaOutOfRange { alpha });
    }
    if beta <= 0.0 {
        return Ok(0.0);
    }
    let key = (beta.to_bits(), alpha.to_bits());
    if let Some(v) = H1_CACHE.read().expect("h1 cache poisoned").get(&key) {
        return Ok(*v);
    }
    let inv_beta = 1.0 / beta;
    let q = integrate_semi_infinite(
        |t| {
            let x = t + 1.0;
            x / (1.0 + inv_beta * x.powf(alpha))
        },
        QUAD_REL_TOL,
        QUAD_ABS_TOL,
        "h1",
    )?;
    H1_CACHE
        .write()
        .expect("h1 cache poisoned")
        .insert(key, q.value);
    Ok(q.value)
}

/// `h0(beta, alpha, ratio) = int_0^inf x / (1 + ratio x^alpha / beta) dx`
/// with `ratio = p_d / p_b`: the coupling of base-station interference
/// at a D2D receiver, which has no serving-distance exclusion.  Equal to
/// `kappa(alpha)/2 * (beta/ratio)^(2/alpha)` in closed form; evaluated by
/// quadrature here and cross-checked against that form in the tests.
pub fn h0(beta: f64, alpha: f64, ratio: f64) -> Result<f64, AnalyticError> {
    if !(alpha > 2.0) || !alpha.is_finite() {
        return Err(AnalyticError::AlphaOutOfRange { alpha });
    }
    if beta <= 0.0 {
        return Ok(0.0);
    }
    assert!(ratio > 0.0, "power ratio must be positive");
    let key = (beta.to_bits(), alpha.to_bits(), ratio.to_bits());
    if let Some(v) = H0_CACHE.read().expect("h0 cache poisoned").get(&key) {
        return Ok(*v);
    }
    let c = ratio / beta;
    let q = integrate_semi_infinite(
        |x| x / (1.0 + c * x.powf(alpha)),
        QUAD_REL_TOL,
        QUAD_ABS_TOL,
        "h0",
    )?;
    H0_CACHE
        .write()
        .expect("h0 cache poisoned")
        .insert(key, q.value);
    Ok(q.value)
}

/// Laplace transform of the aggregate interference from a thinned
/// Poisson field of D2D transmitters with density `lambda_d_tilde`,
/// power `p_d` and Rayleigh fading:
/// `exp(-lambda_d_tilde * pi * kappa(alpha) * (s p_d)^(2/alpha))`.
pub fn laplace_d2d_interference(
    s: f64,
    lambda_d_tilde: f64,
    p_d: f64,
    alpha: f64,
) -> Result<f64, AnalyticError> {
    let kap = kappa(alpha)?;
    if s <= 0.0 || lambda_d_tilde <= 0.0 {
        return Ok(1.0);
    }
    Ok((-lambda_d_tilde * PI * kap * (s * p_d).powf(2.0 / alpha)).exp())
}

// ---------------------------------------------------------------------------
// Coverage (CCDF of the SINR at a threshold beta)
// ---------------------------------------------------------------------------

/// Quadratic-exponent coefficients of the D2D coverage integrand for a
/// fixed threshold.
fn d2d_coefficients(
    cfg: &NetworkConfig,
    load: &LoadState,
    beta: f64,
    shared: bool,
) -> Result<(f64, f64), AnalyticError> {
    let kap = kappa(cfg.alpha)?;
    let mut quad_coef = load.lambda_d_tilde * PI * kap * beta.powf(2.0 / cfg.alpha);
    if shared {
        quad_coef += 2.0 * PI * load.rho * cfg.lambda_b * h0(beta, cfg.alpha, cfg.p_d / cfg.p_b)?;
    }
    let noise_coef = beta * cfg.noise / cfg.p_d;
    Ok((quad_coef, noise_coef))
}

/// Quadratic-exponent coefficients of the cellular coverage integrand.
fn cellular_coefficients(
    cfg: &NetworkConfig,
    load: &LoadState,
    beta: f64,
    shared: bool,
) -> Result<(f64, f64), AnalyticError> {
    let mut quad_coef = 2.0 * PI * load.rho * cfg.lambda_b * h1(beta, cfg.alpha)?;
    if shared {
        let kap = kappa(cfg.alpha)?;
        quad_coef +=
            load.lambda_d_tilde * PI * kap * (beta * cfg.p_d / cfg.p_b).powf(2.0 / cfg.alpha);
    }
    let noise_coef = beta * cfg.noise / cfg.p_b;
    Ok((quad_coef, noise_coef))
}

/// CCDF of the typical D2D link's SINR against the transmitter's own
/// Rayleigh-distributed link distance: averages
/// `exp(-beta sigma^2 v^alpha / p_d) * L_I(beta v^alpha / p_d)` over the
/// link length `v`.
fn coverage_d2d_impl(cfg: &NetworkConfig, beta: f64, shared: bool) -> Result<f64, AnalyticError> {
    if beta <= 0.0 {
        return Ok(1.0);
    }
    let load = LoadState::from_config(cfg)?;
    let (quad_coef, noise_coef) = d2d_coefficients(cfg, &load, beta, shared)?;
    let inv_delta2 = 1.0 / (cfg.delta * cfg.delta);
    let alpha = cfg.alpha;
    let total_quad = quad_coef + 0.5 * inv_delta2;
    let q = integrate_semi_infinite(
        |v| {
            v * inv_delta2 * (-noise_coef * v.powf(alpha) - total_quad * v * v).exp()
        },
        QUAD_REL_TOL,
        QUAD_ABS_TOL,
        "coverage_d2d",
    )?;
    Ok(q.value.clamp(0.0, 1.0))
}

/// CCDF of the typical cellular downlink's SINR, averaging over the
/// nearest-base-station distance `r` with density
/// `2 pi lambda_b r exp(-lambda_b pi r^2)`.
fn coverage_cellular_impl(
    cfg: &NetworkConfig,
    beta: f64,
    shared: bool,
) -> Result<f64, AnalyticError> {
    if beta <= 0.0 {
        return Ok(1.0);
    }
    let load = LoadState::from_config(cfg)?;
    let (quad_coef, noise_coef) = cellular_coefficients(cfg, &load, beta, shared)?;
    let lambda_b = cfg.lambda_b;
    let alpha = cfg.alpha;
    let total_quad = quad_coef + PI * lambda_b;
    let q = integrate_semi_infinite(
        |r| {
            2.0 * PI * lambda_b * r * (-noise_coef * r.powf(alpha) - total_quad * r * r).exp()
        },
        QUAD_REL_TOL,
        QUAD_ABS_TOL,
        "coverage_cellular",
    )?;
    Ok(q.value.clamp(0.0, 1.0))
}

/// D2D coverage with a dedicated D2D band: only co-subband D2D links
/// interfere.
pub fn coverage_d2d_dedicated(cfg: &NetworkConfig, beta: f64) -> Result<f64, AnalyticError> {
    coverage_d2d_impl(&dedicated_view(cfg), beta, false)
}

/// D2D coverage when the band is shared: base stations interfere too.
pub fn coverage_d2d_shared(cfg: &NetworkConfig, beta: f64) -> Result<f64, AnalyticError> {
    coverage_d2d_impl(&shared_view(cfg), beta, true)
}

/// Cellular coverage with a dedicated D2D band: only base stations
/// interfere.
pub fn coverage_cellular_dedicated(cfg: &NetworkConfig, beta: f64) -> Result<f64, AnalyticError> {
    coverage_cellular_impl(&dedicated_view(cfg), beta, false)
}

/// Cellular coverage when the band is shared: co-subband D2D links
/// interfere too.
pub fn coverage_cellular_shared(cfg: &NetworkConfig, beta: f64) -> Result<f64, AnalyticError> {
    coverage_cellular_impl(&shared_view(cfg), beta, true)
}

/// Interference-limited (`sigma^2 = 0`) closed form of
/// [`coverage_d2d_dedicated`]:
/// `1 / (1 + 2 delta^2 lambda_d_tilde pi kappa beta^(2/alpha))`.
pub fn coverage_d2d_dedicated_il(cfg: &NetworkConfig, beta: f64) -> Result<f64, AnalyticError> {
    let cfg = dedicated_view(cfg);
    if beta <= 0.0 {
        return Ok(1.0);
    }
    let load = LoadState::from_config(&cfg)?;
    let kap = kappa(cfg.alpha)?;
    let coef =
        2.0 * cfg.delta * cfg.delta * load.lambda_d_tilde * PI * kap * beta.powf(2.0 / cfg.alpha);
    Ok(1.0 / (1.0 + coef))
}

/// Interference-limited closed form of [`coverage_d2d_shared`]:
/// `1 / (2 delta^2 lambda_d_tilde pi kappa beta^(2/alpha)
///       + 4 pi delta^2 rho lambda_b h0 + 1)`.
pub fn coverage_d2d_shared_il(cfg: &NetworkConfig, beta: f64) -> Result<f64, AnalyticError> {
    let cfg = shared_view(cfg);
    if beta <= 0.0 {
        return Ok(1.0);
    }
    let load = LoadState::from_config(&cfg)?;
    let kap = kappa(cfg.alpha)?;
    let delta2 = cfg.delta * cfg.delta;
    let d2d = 2.0 * delta2 * load.lambda_d_tilde * PI * kap * beta.powf(2.0 / cfg.alpha);
    let bs = 4.0 * PI * delta2 * load.rho * cfg.lambda_b * h0(beta, cfg.alpha, cfg.p_d / cfg.p_b)?;
    Ok(1.0 / (d2d + bs + 1.0))
}

/// Interference-limited closed form of [`coverage_cellular_dedicated`]:
/// `1 / (2 rho h1 + 1)`.
pub fn coverage_cellular_dedicated_il(
    cfg: &NetworkConfig,
    beta: f64,
) -> Result<f64, AnalyticError> {
    let cfg = dedicated_view(cfg);
    if beta <= 0.0 {
        return Ok(1.0);
    }
    let load = LoadState::from_config(&cfg)?;
    Ok(1.0 / (2.0 * load.rho * h1(beta, cfg.alpha)? + 1.0))
}

/// Interference-limited closed form of [`coverage_cellular_shared`]:
/// `1 / ((lambda_d_tilde/lambda_b) kappa (beta p_d/p_b)^(2/alpha)
///       + 2 rho h1 + 1)`.
pub fn coverage_cellular_shared_il(
    cfg: &NetworkConfig,
    beta: f64,
) -> Result<f64, AnalyticError> {
    let cfg = shared_view(cfg);
    if beta <= 0.0 {
        return Ok(1.0);
    }
    let load = LoadState::from_config(&cfg)?;
    let kap = kappa(cfg.alpha)?;
    let d2d = load.lambda_d_tilde / cfg.lambda_b
        * kap
        * (beta * cfg.p_d / cfg.p_b).powf(2.0 / cfg.alpha);
    Ok(1.0 / (d2d + 2.0 * load.rho * h1(beta, cfg.alpha)? + 1.0))
}

fn dedicated_view(cfg: &NetworkConfig) -> NetworkConfig {
    match cfg.mode {
        AllocationMode::Dedicated => cfg.clone(),
        AllocationMode::Shared => cfg.with_mode(AllocationMode::Dedicated),
    }
}

fn shared_view(cfg: &NetworkConfig) -> NetworkConfig {
    match cfg.mode {
        AllocationMode::Shared => cfg.clone(),
        AllocationMode::Dedicated => cfg.with_mode(AllocationMode::Shared),
    }
}

/// Coverage of `class` under the allocation mode recorded in `cfg`.
pub fn coverage(cfg: &NetworkConfig, class: LinkClass, beta: f64) -> Result<f64, AnalyticError> {
    match (class, cfg.mode) {
        (LinkClass::D2d, AllocationMode::Dedicated) => coverage_d2d_dedicated(cfg, beta),
        (LinkClass::D2d, AllocationMode::Shared) => coverage_d2d_shared(cfg, beta),
        (LinkClass::Cellular, AllocationMode::Dedicated) => coverage_cellular_dedicated(cfg, beta),
        (LinkClass::Cellular, AllocationMode::Shared) => coverage_cellular_shared(cfg, beta),
    }
}

/// Interference-limited coverage of `class` under the mode in `cfg`.
pub fn coverage_il(
    cfg: &NetworkConfig,
    class: LinkClass,
    beta: f64,
) -> Result<f64, AnalyticError> {
    match (class, cfg.mode) {
        (LinkClass::D2d, AllocationMode::Dedicated) => coverage_d2d_dedicated_il(cfg, beta),
        (LinkClass::D2d, AllocationMode::Shared) => coverage_d2d_shared_il(cfg, beta),
        (LinkClass::Cellular, AllocationMode::Dedicated) => {
            coverage_cellular_dedicated_il(cfg, beta)
        }
        (LinkClass::Cellular, AllocationMode::Shared) => coverage_cellular_shared_il(cfg, beta),
    }
}

/// A CCDF sampled on a threshold grid.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageCurve {
    pub link_class: LinkClass,
    pub mode: AllocationMode,
    /// Linear SINR thresholds, ascending.
    pub betas: Vec<f64>,
    pub ccdf: Vec<f64>,
}

impl CoverageCurve {
    /// CCDF values must be probabilities and non-increasing in `beta`.
    pub fn is_valid(&self) -> bool {
        self.ccdf.iter().all(|p| (0.0..=1.0).contains(p))
            && self.ccdf.windows(2).all(|w| w[1] <= w[0] + 1e-9)
    }
}

/// Geometric threshold grid: `n` points evenly spaced in dB.
pub fn beta_grid(lo_db: f64, hi_db: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && hi_db > lo_db);
    (0..n)
        .map(|i| {
            let db = lo_db + (hi_db - lo_db) * i as f64 / (n - 1) as f64;
            10f64.powf(db / 10.0)
        })
        .collect()
}

/// Evaluates the analytic coverage of `class` on a threshold grid.
pub fn coverage_curve(
    cfg: &NetworkConfig,
    class: LinkClass,
    betas: &[f64],
) -> Result<CoverageCurve, AnalyticError> {
    let ccdf = betas
        .iter()
        .map(|&b| coverage(cfg, class, b))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CoverageCurve {
        link_class: class,
        mode: cfg.mode,
        betas: betas.to_vec(),
        ccdf,
    })
}

// ---------------------------------------------------------------------------
// Rates
// ---------------------------------------------------------------------------

/// Average spectral efficiency from a coverage function:
/// `log2(e) * int_0^inf cov(beta) / (1 + beta) dbeta`, evaluated after
/// the substitution `beta = e^u - 1`.
pub fn rate_integral<F>(cov: F) -> Result<Quad, AnalyticError>
where
    F: Fn(f64) -> Result<f64, AnalyticError>,
{
    let stash: std::cell::RefCell<Option<AnalyticError>> = std::cell::RefCell::new(None);
    let integrand = |beta: f64| match cov(beta) {
        Ok(p) => std::f64::consts::LOG2_E * p / (1.0 + beta),
        Err(e) => {
            stash.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let q = integrate_semi_infinite(integrand, QUAD_REL_TOL, QUAD_ABS_TOL, "rate_integral")?;
    if let Some(e) = stash.into_inner() {
        return Err(e);
    }
    Ok(q)
}

/// Rate lower bounds of the typical links: the best fixed-threshold
/// throughput `sup_beta log2(1+beta) * CCDF(beta)`, searched over
/// `log10 beta` in `[-4, 4]`.
#[derive(Debug, Clone, Serialize)]
pub struct LowerBounds {
    /// Cellular-user rate lower bound (subband-normalized bit/s/Hz).
    pub lb_cellular: f64,
    /// Per-type D2D rate lower bounds.
    pub lb_d2d_per_type: Vec<f64>,
    /// Density-weighted mixture over the D2D types.
    pub lb_d2d_mixture: f64,
    /// Maximizing threshold of the cellular bound.
    pub beta_c_star: f64,
    /// Maximizing threshold of the D2D bound.
    pub beta_d_star: f64,
}

/// Maximizes `log2(1+beta) * cov(beta)`; returns `(beta*, value)`.
pub(crate) fn sup_fixed_threshold<F>(cov: F) -> Result<(f64, f64), AnalyticError>
where
    F: Fn(f64) -> Result<f64, AnalyticError>,
{
    let stash: std::cell::RefCell<Option<AnalyticError>> = std::cell::RefCell::new(None);
    let obj = |x: f64| {
        let beta = 10f64.powf(x);
        match cov(beta) {
            Ok(p) => (1.0 + beta).log2() * p,
            Err(e) => {
                stash.borrow_mut().get_or_insert(e);
                f64::NEG_INFINITY
            }
        }
    };
    let (x_star, v) = scan_golden_max(obj, -4.0, 4.0, 64, 1e-7);
    if let Some(e) = stash.into_inner() {
        return Err(e);
    }
    Ok((10f64.powf(x_star), v))
}

struct RatePieces {
    spectral_cellular: f64,
    spectral_d2d: f64,
    sup_cellular: f64,
    sup_d2d: f64,
    beta_c_star: f64,
    beta_d_star: f64,
}

fn rate_pieces(cfg: &NetworkConfig, exact: bool) -> Result<(LoadState, RatePieces), AnalyticError> {
    cfg.validate()?;
    let load = LoadState::from_config(cfg)?;
    let cov_c = |beta: f64| coverage(cfg, LinkClass::Cellular, beta);
    let cov_d = |beta: f64| coverage(cfg, LinkClass::D2d, beta);
    let (beta_c_star, sup_cellular) = sup_fixed_threshold(cov_c)?;
    let (beta_d_star, sup_d2d) = sup_fixed_threshold(cov_d)?;
    let (spectral_cellular, spectral_d2d) = if exact {
        (rate_integral(cov_c)?.value, rate_integral(cov_d)?.value)
    } else {
        (0.0, 0.0)
    };
    Ok((
        load,
        RatePieces {
            spectral_cellular,
            spectral_d2d,
            sup_cellular,
            sup_d2d,
            beta_c_star,
            beta_d_star,
        },
    ))
}

/// Average long-run rates of the typical links, in subband-normalized
/// units (multiply by the subband bandwidth for bit/s).
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub mode: AllocationMode,
    /// Average rate of a cellular user.
    pub rate_cellular: f64,
    /// Average rate of a D2D link, per traffic type.
    pub rate_d2d_per_type: Vec<f64>,
    /// Density-weighted mixture over the D2D types.
    pub rate_d2d_mixture: f64,
    pub lower: LowerBounds,
}

pub(crate) fn d2d_rate_terms(
    cfg: &NetworkConfig,
    load: &LoadState,
    spectral_d2d: f64,
    spectral_cellular: f64,
) -> Vec<f64> {
    let pool = cfg.b_d2d_pool();
    cfg.d2d_types
        .iter()
        .map(|t| {
            let d2d_subbands = (t.p_f * pool).min(t.b_d as f64);
            let d2d_mode = d2d_subbands * t.p_t * spectral_d2d;
            let cellular_mode =
                t.b_d as f64 / cfg.w * (1.0 - t.p_t) * load.p_a * spectral_cellular;
            d2d_mode + cellular_mode
        })
        .collect()
}

fn mixture(cfg: &NetworkConfig, per_type: &[f64]) -> f64 {
    let total = cfg.lambda_d_total();
    if total <= 0.0 {
        return 0.0;
    }
    cfg.d2d_types
        .iter()
        .zip(per_type)
        .map(|(t, r)| t.lambda / total * r)
        .sum()
}

/// Average rates plus lower bounds under the mode recorded in `cfg`.
///
/// The cellular rate is `b_c p_a E[log2(1+SINR_C)]`; a type-`j` D2D link
/// earns `min(p_f S, b_d) p_t E[log2(1+SINR_D)]` in D2D mode (`S` is the
/// subband pool it hops over) plus `(b_d/w)(1-p_t) p_a E[log2(1+SINR_C)]`
/// for the time it falls back to the cellular downlink.
pub fn rates(cfg: &NetworkConfig) -> Result<RateReport, AnalyticError> {
    let (load, pieces) = rate_pieces(cfg, true)?;
    let rate_cellular = cfg.b_c as f64 * load.p_a * pieces.spectral_cellular;
    let rate_d2d_per_type =
        d2d_rate_terms(cfg, &load, pieces.spectral_d2d, pieces.spectral_cellular);
    let lb_cellular = cfg.b_c as f64 * load.p_a * pieces.sup_cellular;
    let lb_d2d_per_type = d2d_rate_terms(cfg, &load, pieces.sup_d2d, pieces.sup_cellular);
    let lower = make_lower_bounds(cfg, &lb_d2d_per_type, lb_cellular, &pieces);
    Ok(RateReport {
        mode: cfg.mode,
        rate_cellular,
        rate_d2d_mixture: mixture(cfg, &rate_d2d_per_type),
        rate_d2d_per_type,
        lower,
    })
}

fn make_lower_bounds(
    cfg: &NetworkConfig,
    lb_d2d_per_type: &[f64],
    lb_cellular: f64,
    pieces: &RatePieces,
) -> LowerBounds {
    LowerBounds {
        lb_cellular,
        lb_d2d_per_type: lb_d2d_per_type.to_vec(),
        lb_d2d_mixture: mixture(cfg, lb_d2d_per_type),
        beta_c_star: pieces.beta_c_star,
        beta_d_star: pieces.beta_d_star,
    }
}

/// Rates under dedicated-mode semantics regardless of `cfg.mode`.
pub fn rates_dedicated(cfg: &NetworkConfig) -> Result<RateReport, AnalyticError> {
    rates(&dedicated_view(cfg))
}

/// Rates under shared-mode semantics regardless of `cfg.mode`.
pub fn rates_shared(cfg: &NetworkConfig) -> Result<RateReport, AnalyticError> {
    rates(&shared_view(cfg))
}

/// Rate lower bounds only (no exact rate integrals).
pub fn rate_lower_bounds(cfg: &NetworkConfig) -> Result<LowerBounds, AnalyticError> {
    let (load, pieces) = rate_pieces(cfg, false)?;
    let lb_cellular = cfg.b_c as f64 * load.p_a * pieces.sup_cellular;
    let lb_d2d_per_type = d2d_rate_terms(cfg, &load, pieces.sup_d2d, pieces.sup_cellular);
    Ok(make_lower_bounds(cfg, &lb_d2d_per_type, lb_cellular, &pieces))
}
