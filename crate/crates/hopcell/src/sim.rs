//! Monte Carlo validation of the analytic results: explicit Poisson
//! deployments on a square torus, one typical link per class planted at
//! the window center.
//!
//! Conventions shared by every experiment:
//!
//! * the window is a torus (interferer distances wrap), so edge effects
//!   vanish; the default side is `20 / sqrt(lambda_b)`;
//! * the typical D2D receiver sits at the center with its transmitter at
//!   a 2-D Gaussian offset; the typical cellular user sits at the center
//!   and is served by the nearest base station on the reference subband;
//! * every other D2D link transmits with probability `p_t` and occupies
//!   the reference subband with probability `p_f`; interfering base
//!   stations transmit on the reference subband with the load-derived
//!   probability `rho` (or with a per-cell realized load in
//!   [`Fidelity::PerCellLoad`]);
//! * all fading is i.i.d. unit-mean exponential, drawn per measurement;
//! * replication `r` runs on its own counter-derived RNG stream, so
//!   results are bit-identical for any worker count;
//! * an infinite SINR (no interference, no noise) is recorded as a
//!   sentinel: it counts into every CCDF bin and is capped at the
//!   largest representable threshold when rates are averaged, with the
//!   number of capped samples reported.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, Poisson};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::model::{AllocationMode, ConfigError, LinkClass, LoadState, NetworkConfig};
use crate::numeric::KahanSum;

/// Largest SINR used when averaging rates; unbounded samples are capped
/// here and counted separately.
pub const SINR_CAP: f64 = 1e9;

const WILSON_Z: f64 = 1.959_963_984_540_054; // two-sided 95%

#[derive(Debug, Clone, Error)]
pub enum SimError {
    #[error("window side {window} m is below the supported minimum {min} m (10 / sqrt(lambda_b))")]
    WindowTooSmall { window: f64, min: f64 },
    #[error("subband masks support at most 64 subbands, got {b_total}")]
    TooManySubbands { b_total: u32 },
    #[error("dedicated D2D pool is empty (theta * b_total < 1); no reference subband to measure")]
    EmptyD2dPool,
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Base-station transmission model for interference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fidelity {
    /// Each interfering base station transmits on the reference subband
    /// independently with the expected-load probability `rho`.
    #[default]
    ThinnedBs,
    /// Each base station schedules its realized cell load (users and
    /// cellular-mode D2D falling in its cell) and transmits on the
    /// reference subband with probability `min(load / B_c, 1)`.
    PerCellLoad,
}

/// Experiment knobs that are not part of the network model.
#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    /// Torus side in meters; default `20 / sqrt(lambda_b)`.
    pub window: Option<f64>,
    pub fidelity: Fidelity,
}

impl SimOptions {
    fn resolve_window(&self, cfg: &NetworkConfig) -> Result<f64, SimError> {
        let min = 10.0 / cfg.lambda_b.sqrt();
        let window = self.window.unwrap_or(2.0 * min);
        if window < min {
            return Err(SimError::WindowTooSmall { window, min });
        }
        Ok(window)
    }
}

/// Default torus side for a configuration.
pub fn default_window(cfg: &NetworkConfig) -> f64 {
    20.0 / cfg.lambda_b.sqrt()
}

/// One potential D2D link in a sampled deployment.
#[derive(Debug, Clone, Serialize)]
pub struct D2dLink {
    pub tx: [f64; 2],
    pub rx: [f64; 2],
    pub type_index: usize,
    /// Elected D2D mode in this slot (time hopping).
    pub active: bool,
    /// Bitmask over its subband pool (frequency hopping); bit 0 is the
    /// reference subband.
    pub subbands: u64,
}

/// A full realization of all point processes in one window.
#[derive(Debug, Clone, Serialize)]
pub struct Deployment {
    pub window: f64,
    pub seed: u64,
    pub bs: Vec<[f64; 2]>,
    pub ues: Vec<[f64; 2]>,
    pub d2d_links: Vec<D2dLink>,
    /// Transmitter offset of the typical D2D link; its receiver is at
    /// the window center.  The typical link is active on the reference
    /// subband by conditioning and is not part of `d2d_links`.
    pub typical_offset: [f64; 2],
    /// Base-station process resamples needed to obtain a non-empty one.
    pub resample_retries: u32,
}

fn poisson_count(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive Poisson mean");
    dist.sample(rng) as usize
}

fn uniform_points(rng: &mut ChaCha8Rng, n: usize, window: f64) -> Vec<[f64; 2]> {
    (0..n)
        .map(|_| [rng.gen::<f64>() * window, rng.gen::<f64>() * window])
        .collect()
}

/// Squared toroidal distance between two points in a periodic window.
fn torus_dist2(a: [f64; 2], b: [f64; 2], window: f64) -> f64 {
    let mut dx = (a[0] - b[0]).abs();
    let mut dy = (a[1] - b[1]).abs();
    if dx > 0.5 * window {
        dx = window - dx;
    }
    if dy > 0.5 * window {
        dy = window - dy;
    }
    dx * dx + dy * dy
}

/// Samples every point process of one replication.  The subband mask is
/// drawn for each link whether or not it is active, so realizations are
/// monotonically coupled in each `p_f` under a common seed.
pub fn sample_deployment(
    cfg: &NetworkConfig,
    seed: u64,
    opts: &SimOptions,
) -> Result<Deployment, SimError> {
    cfg.validate()?;
    if cfg.b_total > 64 {
        return Err(SimError::TooManySubbands {
            b_total: cfg.b_total,
        });
    }
    let window = opts.resolve_window(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let area = window * window;

    let mut resample_retries = 0;
    let bs = loop {
        let n_bs = poisson_count(&mut rng, cfg.lambda_b * area);
        let bs = uniform_points(&mut rng, n_bs, window);
        if !bs.is_empty() {
            break bs;
        }
        resample_retries += 1;
    };

    let n_ue = poisson_count(&mut rng, cfg.lambda_u * area);
    let ues = uniform_points(&mut rng, n_ue, window);

    let mask_bits = cfg.b_total.min(64);
    let mut d2d_links = Vec::new();
    for (type_index, t) in cfg.d2d_types.iter().enumerate() {
        let n = poisson_count(&mut rng, t.lambda * area);
        for _ in 0..n {
            let tx = [rng.gen::<f64>() * window, rng.gen::<f64>() * window];
            let normal = Normal::new(0.0, cfg.delta).expect("positive delta");
            let rx = [tx[0] + normal.sample(&mut rng), tx[1] + normal.sample(&mut rng)];
            let active = rng.gen::<f64>() < t.p_t;
            let mut subbands = 0u64;
            for bit in 0..mask_bits {
                if rng.gen::<f64>() < t.p_f {
                    subbands |= 1 << bit;
                }
            }
            d2d_links.push(D2dLink {
                tx,
                rx,
                type_index,
                active,
                subbands,
            });
        }
    }

    let normal = Normal::new(0.0, cfg.delta).expect("positive delta");
    let typical_offset = [normal.sample(&mut rng), normal.sample(&mut rng)];

    Ok(Deployment {
        window,
        seed,
        bs,
        ues,
        d2d_links,
        typical_offset,
        resample_retries,
    })
}

/// The interference-relevant projection of a replication: positions of
/// reference-subband D2D transmitters, base stations, and (for the
/// per-cell fidelity) the realized cellular load.
struct Scene {
    window: f64,
    bs: Vec<[f64; 2]>,
    /// D2D transmitters active on the reference subband.
    d2d_ref: Vec<[f64; 2]>,
    /// Cellular-mode D2D transmitters with their subband demands
    /// (per-cell fidelity only).
    d2d_fallback: Vec<([f64; 2], f64)>,
    ues: Vec<[f64; 2]>,
    typical_offset: [f64; 2],
}

/// Lean per-replication sampler: draws only what enters the SINR.  The
/// draw order per link is fixed (position, mode, reference subband), so
/// realizations stay coupled across hopping-probability changes.
fn sample_scene(
    cfg: &NetworkConfig,
    window: f64,
    fidelity: Fidelity,
    rng: &mut ChaCha8Rng,
) -> Scene {
    let area = window * window;
    let bs = loop {
        let n_bs = poisson_count(rng, cfg.lambda_b * area);
        let bs = uniform_points(rng, n_bs, window);
        if !bs.is_empty() {
            break bs;
        }
    };
    let mut d2d_ref = Vec::new();
    let mut d2d_fallback = Vec::new();
    for t in &cfg.d2d_types {
        let n = poisson_count(rng, t.lambda * area);
        for _ in 0..n {
            let tx = [rng.gen::<f64>() * window, rng.gen::<f64>() * window];
            let active = rng.gen::<f64>() < t.p_t;
            let on_ref = rng.gen::<f64>() < t.p_f;
            if active && on_ref {
                d2d_ref.push(tx);
            } else if !active && fidelity == Fidelity::PerCellLoad {
                d2d_fallback.push((tx, t.b_d as f64));
            }
        }
    }
    let ues = if fidelity == Fidelity::PerCellLoad {
        let n_ue = poisson_count(rng, cfg.lambda_u * area);
        uniform_points(rng, n_ue, window)
    } else {
        Vec::new()
    };
    let normal = Normal::new(0.0, cfg.delta).expect("positive delta");
    let typical_offset = [normal.sample(rng), normal.sample(rng)];
    Scene {
        window,
        bs,
        d2d_ref,
        d2d_fallback,
        ues,
        typical_offset,
    }
}

fn exp_fading(rng: &mut ChaCha8Rng) -> f64 {
    // Inverse-CDF keeps the draw count fixed at one uniform.
    -(1.0 - rng.gen::<f64>()).ln()
}

/// Per-base-station probability of transmitting on the reference
/// subband under the per-cell fidelity: realized load over capacity.
fn per_cell_rho(scene: &Scene, cfg: &NetworkConfig) -> Vec<f64> {
    let b_cell = cfg.b_cellular();
    let mut load = vec![0.0f64; scene.bs.len()];
    let nearest = |p: [f64; 2]| -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, b) in scene.bs.iter().enumerate() {
            let d = torus_dist2(p, *b, scene.window);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    };
    for ue in &scene.ues {
        load[nearest(*ue)] += cfg.b_c as f64;
    }
    for (pos, demand) in &scene.d2d_fallback {
        load[nearest(*pos)] += demand;
    }
    load.iter()
        .map(|l| if b_cell > 0.0 { (l / b_cell).min(1.0) } else { 0.0 })
        .collect()
}

fn measure_scene(
    scene: &Scene,
    cfg: &NetworkConfig,
    load: &LoadState,
    class: LinkClass,
    fidelity: Fidelity,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let alpha = cfg.alpha;
    let half_exp = -alpha / 2.0;
    let center = [0.5 * scene.window, 0.5 * scene.window];
    let shared = cfg.mode == AllocationMode::Shared;
    let cell_rho = if fidelity == Fidelity::PerCellLoad {
        Some(per_cell_rho(scene, cfg))
    } else {
        None
    };

    let bs_transmits = |i: usize, rng: &mut ChaCha8Rng| -> bool {
        match &cell_rho {
            Some(rhos) => rng.gen::<f64>() < rhos[i],
            None => rng.gen::<f64>() < load.rho,
        }
    };

    match class {
        LinkClass::D2d => {
            let v2 = scene.typical_offset[0] * scene.typical_offset[0]
                + scene.typical_offset[1] * scene.typical_offset[1];
            let signal = cfg.p_d * exp_fading(rng) * v2.powf(half_exp);
            let mut interference = 0.0;
            for tx in &scene.d2d_ref {
                let d2 = torus_dist2(*tx, center, scene.window);
                interference += cfg.p_d * exp_fading(rng) * d2.powf(half_exp);
            }
            if shared {
                for (i, b) in scene.bs.iter().enumerate() {
                    if bs_transmits(i, rng) {
                        let d2 = torus_dist2(*b, center, scene.window);
                        interference += cfg.p_b * exp_fading(rng) * d2.powf(half_exp);
                    }
                }
            }
            let denom = interference + cfg.noise;
            if denom == 0.0 {
                f64::INFINITY
            } else {
                signal / denom
            }
        }
        LinkClass::Cellular => {
            let mut serving = 0;
            let mut serving_d2 = f64::INFINITY;
            for (i, b) in scene.bs.iter().enumerate() {
                let d2 = torus_dist2(*b, center, scene.window);
                if d2 < serving_d2 {
                    serving_d2 = d2;
                    serving = i;
                }
            }
            let signal = cfg.p_b * exp_fading(rng) * serving_d2.powf(half_exp);
            let mut interference = 0.0;
            for (i, b) in scene.bs.iter().enumerate() {
                if i == serving {
                    continue;
                }
                if bs_transmits(i, rng) {
                    let d2 = torus_dist2(*b, center, scene.window);
                    interference += cfg.p_b * exp_fading(rng) * d2.powf(half_exp);
                }
            }
            if shared {
                for tx in &scene.d2d_ref {
                    let d2 = torus_dist2(*tx, center, scene.window);
                    interference += cfg.p_d * exp_fading(rng) * d2.powf(half_exp);
                }
            }
            let denom = interference + cfg.noise;
            if denom == 0.0 {
                f64::INFINITY
            } else {
                signal / denom
            }
        }
    }
}

/// One SINR realization of the typical link of `class` on a sampled
/// deployment.  Fading is drawn from `rng`; the deployment's typical
/// D2D link never interferes with the cellular measurement.
pub fn measure_sinr(
    dep: &Deployment,
    cfg: &NetworkConfig,
    class: LinkClass,
    rng: &mut ChaCha8Rng,
) -> Result<f64, SimError> {
    if class == LinkClass::D2d
        && cfg.mode == AllocationMode::Dedicated
        && cfg.theta * f64::from(cfg.b_total) < 1.0
    {
        return Err(SimError::EmptyD2dPool);
    }
    let load = LoadState::from_config(cfg)?;
    let scene = Scene {
        window: dep.window,
        bs: dep.bs.clone(),
        d2d_ref: dep
            .d2d_links
            .iter()
            .filter(|l| l.active && l.subbands & 1 != 0)
            .map(|l| l.tx)
            .collect(),
        d2d_fallback: dep
            .d2d_links
            .iter()
            .filter(|l| !l.active)
            .map(|l| (l.tx, cfg.d2d_types[l.type_index].b_d as f64))
            .collect(),
        ues: dep.ues.clone(),
        typical_offset: dep.typical_offset,
    };
    Ok(measure_scene(&scene, cfg, &load, class, Fidelity::ThinnedBs, rng))
}

/// Empirical CCDF of the typical link's SINR with per-point Wilson
/// confidence half-widths.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalCcdf {
    pub link_class: LinkClass,
    pub mode: AllocationMode,
    pub betas: Vec<f64>,
    pub counts_above: Vec<u64>,
    pub replications: u64,
    pub seed: u64,
    /// Samples with no interference and no noise, counted into every
    /// bin.
    pub unbounded_samples: u64,
}

impl EmpiricalCcdf {
    pub fn ccdf(&self) -> Vec<f64> {
        self.counts_above
            .iter()
            .map(|&k| k as f64 / self.replications as f64)
            .collect()
    }

    /// 95% Wilson-score half-widths; strictly positive for any finite
    /// replication count.
    pub fn wilson_half_widths(&self) -> Vec<f64> {
        let n = self.replications as f64;
        let z2 = WILSON_Z * WILSON_Z;
        self.counts_above
            .iter()
            .map(|&k| {
                let p = k as f64 / n;
                WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n)
            })
            .collect()
    }

    /// Wilson interval centers (shrunk toward 1/2).
    pub fn wilson_centers(&self) -> Vec<f64> {
        let n = self.replications as f64;
        let z2 = WILSON_Z * WILSON_Z;
        self.counts_above
            .iter()
            .map(|&k| {
                let p = k as f64 / n;
                (p + z2 / (2.0 * n)) / (1.0 + z2 / n)
            })
            .collect()
    }
}

fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Stream 0 is left to whole-deployment sampling; replications get
    // their own counter-derived streams.
    rng.set_stream(replication + 1);
    rng
}

fn sinr_samples(
    cfg: &NetworkConfig,
    class: LinkClass,
    replications: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<Vec<f64>, SimError> {
    cfg.validate()?;
    if class == LinkClass::D2d
        && cfg.mode == AllocationMode::Dedicated
        && cfg.theta * f64::from(cfg.b_total) < 1.0
    {
        return Err(SimError::EmptyD2dPool);
    }
    let window = opts.resolve_window(cfg)?;
    let load = LoadState::from_config(cfg)?;
    let fidelity = opts.fidelity;
    Ok((0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(seed, r);
            let scene = sample_scene(cfg, window, fidelity, &mut rng);
            measure_scene(&scene, cfg, &load, class, fidelity, &mut rng)
        })
        .collect())
}

/// Estimates the SINR CCDF of `class` from independent replications.
/// Replication `r` always uses RNG stream `r`, so the result is
/// bit-identical for any rayon worker count.
pub fn empirical_coverage(
    cfg: &NetworkConfig,
    class: LinkClass,
    betas: &[f64],
    replications: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<EmpiricalCcdf, SimError> {
    let samples = sinr_samples(cfg, class, replications, seed, opts)?;
    let mut counts_above = vec![0u64; betas.len()];
    let mut unbounded = 0u64;
    for s in samples {
        if s.is_infinite() {
            unbounded += 1;
            for c in counts_above.iter_mut() {
                *c += 1;
            }
            continue;
        }
        for (c, &b) in counts_above.iter_mut().zip(betas) {
            if s > b {
                *c += 1;
            }
        }
    }
    Ok(EmpiricalCcdf {
        link_class: class,
        mode: cfg.mode,
        betas: betas.to_vec(),
        counts_above,
        replications,
        seed,
        unbounded_samples: unbounded,
    })
}

/// Empirical average rates with the same weighting as the analytic
/// rate expressions.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalRates {
    pub mode: AllocationMode,
    pub replications: u64,
    pub seed: u64,
    /// Mean cellular-user rate, subband-normalized.
    pub rate_cellular: f64,
    /// Mean D2D rate per traffic type, subband-normalized.
    pub rate_d2d_per_type: Vec<f64>,
    pub rate_d2d_mixture: f64,
    /// Mean area rate per cell, bit/s (uses the subband bandwidth).
    pub per_cell_total_bps: f64,
    /// Standard error of `per_cell_total_bps`.
    pub per_cell_total_se_bps: f64,
    /// Samples capped at the sentinel SINR before averaging.
    pub capped_samples: u64,
}

/// Per-replication rate simulation: measures one typical-link SINR per
/// class on a common deployment, converts to `log2(1+SINR)` (capped at
/// the sentinel) and applies the same admission and demand weights as
/// the analysis.
pub fn empirical_rates(
    cfg: &NetworkConfig,
    replications: u64,
    seed: u64,
    opts: &SimOptions,
) -> Result<EmpiricalRates, SimError> {
    cfg.validate()?;
    let window = opts.resolve_window(cfg)?;
    let load = LoadState::from_config(cfg)?;
    let fidelity = opts.fidelity;
    let measure_d2d = cfg.mode == AllocationMode::Shared
        || cfg.theta * cfg.b_total as f64 >= 1.0;

    // (spectral efficiency D2D, spectral efficiency cellular, capped)
    let records: Vec<(f64, f64, u64)> = (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = replication_rng(seed, r);
            let scene = sample_scene(cfg, window, fidelity, &mut rng);
            let mut capped = 0u64;
            let mut cap = |sinr: f64| -> f64 {
                if sinr > SINR_CAP {
                    capped += 1;
                    SINR_CAP
                } else {
                    sinr
                }
            };
            let x_d = if measure_d2d {
                let sinr =
                    cap(measure_scene(&scene, cfg, &load, LinkClass::D2d, fidelity, &mut rng));
                (1.0 + sinr).log2()
            } else {
                0.0
            };
            let sinr_c =
                cap(measure_scene(&scene, cfg, &load, LinkClass::Cellular, fidelity, &mut rng));
            let x_c = (1.0 + sinr_c).log2();
            (x_d, x_c, capped)
        })
        .collect();

    // Sequential reduction in replication order keeps results identical
    // under any parallel schedule.
    let mut sum_d = KahanSum::new();
    let mut sum_c = KahanSum::new();
    let mut capped_samples = 0u64;
    for (x_d, x_c, capped) in &records {
        sum_d.add(*x_d);
        sum_c.add(*x_c);
        capped_samples += capped;
    }
    let n = replications as f64;
    let spectral_d2d = sum_d.value() / n;
    let spectral_cellular = sum_c.value() / n;

    let pool = cfg.b_d2d_pool();
    let per_type_rate = |x_d: f64, x_c: f64| -> Vec<f64> {
        cfg.d2d_types
            .iter()
            .map(|t| {
                (t.p_f * pool).min(t.b_d as f64) * t.p_t * x_d
                    + t.b_d as f64 / cfg.w * (1.0 - t.p_t) * load.p_a * x_c
            })
            .collect()
    };
    let rate_d2d_per_type = per_type_rate(spectral_d2d, spectral_cellular);
    let rate_cellular = cfg.b_c as f64 * load.p_a * spectral_cellular;

    // Per-replication per-cell totals for the significance statistics.
    let per_cell = |x_d: f64, x_c: f64| -> f64 {
        let d2d: f64 = cfg
            .d2d_types
            .iter()
            .zip(per_type_rate(x_d, x_c))
            .map(|(t, r)| t.lambda * r)
            .sum();
        (cfg.lambda_u * cfg.b_c as f64 * load.p_a * x_c + d2d) / cfg.lambda_b
            * cfg.subband_bandwidth_hz
    };
    let mut total_sum = KahanSum::new();
    for (x_d, x_c, _) in &records {
        total_sum.add(per_cell(*x_d, *x_c));
    }
    let mean_total = total_sum.value() / n;
    let mut var_sum = KahanSum::new();
    for (x_d, x_c, _) in &records {
        let d = per_cell(*x_d, *x_c) - mean_total;
        var_sum.add(d * d);
    }
    let se = if replications > 1 {
        (var_sum.value() / (n * (n - 1.0))).sqrt()
    } else {
        f64::INFINITY
    };

    let total = cfg.lambda_d_total();
    let rate_d2d_mixture = if total > 0.0 {
        cfg.d2d_types
            .iter()
            .zip(&rate_d2d_per_type)
            .map(|(t, r)| t.lambda / total * r)
            .sum()
    } else {
        0.0
    };

    Ok(EmpiricalRates {
        mode: cfg.mode,
        replications,
        seed,
        rate_cellular,
        rate_d2d_per_type,
        rate_d2d_mixture,
        per_cell_total_bps: mean_total,
        per_cell_total_se_bps: se,
        capped_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::preset;

    fn table2() -> NetworkConfig {
        preset("table2-dedicated").unwrap()
    }

    fn small_opts() -> SimOptions {
        SimOptions {
            window: Some(5000.0), // the minimum side for the reference density
            fidelity: Fidelity::ThinnedBs,
        }
    }

    #[test]
    fn poisson_counts_match_intensity() {
        // Mean count over many seeds must approach lambda * area within
        // a few standard errors of the mean.
        let cfg = table2();
        let opts = small_opts();
        let area = 5000.0f64 * 5000.0;
        let n = 200;
        let mut ue_total = 0usize;
        let mut d2d_total = 0usize;
        for seed in 0..n {
            let dep = sample_deployment(&cfg, seed, &opts).unwrap();
            ue_total += dep.ues.len();
            d2d_total += dep.d2d_links.len();
        }
        let ue_mean = ue_total as f64 / n as f64;
        let ue_expect = cfg.lambda_u * area; // 6000
        let ue_se = (ue_expect / n as f64).sqrt();
        assert!(
            (ue_mean - ue_expect).abs() < 4.0 * ue_se,
            "UE mean {ue_mean} vs {ue_expect} (se {ue_se})"
        );
        let d2d_expect = cfg.lambda_d_total() * area; // 3000
        let d2d_se = (d2d_expect / n as f64).sqrt();
        assert!(
            (d2d_total as f64 / n as f64 - d2d_expect).abs() < 4.0 * d2d_se,
            "D2D mean {} vs {d2d_expect}",
            d2d_total as f64 / n as f64
        );
    }

    #[test]
    fn zero_density_processes_are_empty() {
        let mut cfg = table2();
        cfg.lambda_u = 0.0;
        cfg.d2d_types.clear();
        let dep = sample_deployment(&cfg, 7, &small_opts()).unwrap();
        assert!(dep.ues.is_empty());
        assert!(dep.d2d_links.is_empty());
        assert!(!dep.bs.is_empty());
    }

    #[test]
    fn full_frequency_access_fills_masks() {
        let mut cfg = table2();
        for t in &mut cfg.d2d_types {
            t.p_f = 1.0;
        }
        let dep = sample_deployment(&cfg, 3, &small_opts()).unwrap();
        let full = (1u64 << cfg.b_total) - 1;
        assert!(dep.d2d_links.iter().all(|l| l.subbands == full));
    }

    #[test]
    fn masks_couple_monotonically_in_p_f() {
        let mut lo_cfg = table2();
        lo_cfg.d2d_types[0].p_f = 0.2;
        lo_cfg.d2d_types[1].p_f = 0.2;
        let mut hi_cfg = lo_cfg.clone();
        hi_cfg.d2d_types[0].p_f = 0.7;
        hi_cfg.d2d_types[1].p_f = 0.7;
        let lo = sample_deployment(&lo_cfg, 11, &small_opts()).unwrap();
        let hi = sample_deployment(&hi_cfg, 11, &small_opts()).unwrap();
        assert_eq!(lo.d2d_links.len(), hi.d2d_links.len());
        for (a, b) in lo.d2d_links.iter().zip(&hi.d2d_links) {
            // Raising p_f can only add subbands under the shared seed.
            assert_eq!(a.subbands & b.subbands, a.subbands);
            assert_eq!(a.active, b.active);
            assert_eq!(a.tx, b.tx);
        }
    }

    #[test]
    fn window_below_minimum_rejected() {
        let cfg = table2();
        let opts = SimOptions {
            window: Some(1000.0), // min is 10/sqrt(4e-6) = 5000
            fidelity: Fidelity::ThinnedBs,
        };
        assert!(matches!(
            sample_deployment(&cfg, 1, &opts),
            Err(SimError::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn no_interference_no_noise_is_sentinel() {
        let mut cfg = table2();
        cfg.noise = 0.0;
        cfg.lambda_u = 0.0;
        for t in &mut cfg.d2d_types {
            t.lambda = 0.0;
        }
        let ccdf = empirical_coverage(
            &cfg,
            LinkClass::D2d,
            &[0.01, 1.0, 100.0],
            64,
            5,
            &SimOptions::default(),
        )
        .unwrap();
        assert_eq!(ccdf.unbounded_samples, 64);
        assert!(ccdf.ccdf().iter().all(|&p| p == 1.0));
    }

    #[test]
    fn empirical_ccdf_is_monotone() {
        let cfg = table2();
        let betas = crate::analytic::beta_grid(-20.0, 40.0, 10);
        let ccdf = empirical_coverage(
            &cfg,
            LinkClass::D2d,
            &betas,
            500,
            42,
            &SimOptions::default(),
        )
        .unwrap();
        let p = ccdf.ccdf();
        assert!(p.windows(2).all(|w| w[1] <= w[0]));
        let hw = ccdf.wilson_half_widths();
        assert!(hw.iter().all(|&h| h > 0.0));
    }

    #[test]
    fn results_identical_across_worker_counts() {
        let cfg = preset("table2-shared").unwrap();
        let betas = crate::analytic::beta_grid(-10.0, 30.0, 8);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                let cov = empirical_coverage(
                    &cfg,
                    LinkClass::Cellular,
                    &betas,
                    200,
                    9,
                    &SimOptions::default(),
                )
                .unwrap();
                let rates = empirical_rates(&cfg, 200, 9, &SimOptions::default()).unwrap();
                (cov.counts_above, rates.per_cell_total_bps.to_bits())
            })
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn dedicated_d2d_without_pool_rejected() {
        let mut cfg = table2();
        cfg.theta = 0.0;
        let err = empirical_coverage(
            &cfg,
            LinkClass::D2d,
            &[1.0],
            8,
            1,
            &SimOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, SimError::EmptyD2dPool));
    }

    #[test]
    fn measure_sinr_runs_on_full_deployment() {
        let cfg = table2();
        let dep = sample_deployment(&cfg, 21, &SimOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let s_d = measure_sinr(&dep, &cfg, LinkClass::D2d, &mut rng).unwrap();
        let s_c = measure_sinr(&dep, &cfg, LinkClass::Cellular, &mut rng).unwrap();
        assert!(s_d > 0.0 && s_c > 0.0);
    }

    #[test]
    fn per_cell_fidelity_close_to_thinned_in_light_load() {
        // With rho < 1 the thinned-BS model is an approximation of the
        // realized per-cell schedule; the two CCDFs must stay close.
        let mut cfg = table2();
        cfg.lambda_u = 2.0 / (500.0 * 500.0); // rho = 0.4
        let betas = crate::analytic::beta_grid(-10.0, 20.0, 7);
        let reps = 3000;
        let thinned = empirical_coverage(
            &cfg,
            LinkClass::Cellular,
            &betas,
            reps,
            17,
            &SimOptions::default(),
        )
        .unwrap();
        let percell = empirical_coverage(
            &cfg,
            LinkClass::Cellular,
            &betas,
            reps,
            18,
            &SimOptions {
                window: None,
                fidelity: Fidelity::PerCellLoad,
            },
        )
        .unwrap();
        for (a, b) in thinned.ccdf().iter().zip(percell.ccdf()) {
            assert!(
                (a - b).abs() < 0.05,
                "per-cell fidelity deviates: {a:.3} vs {b:.3}"
            );
        }
    }
}
