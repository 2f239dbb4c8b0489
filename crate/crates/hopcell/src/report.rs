//! Deterministic text serialization: CSV curves, deployment snapshots,
//! and flat key=value records.
//!
//! Every writer is a pure function of its inputs — no timestamps, no
//! locale, fixed float formatting — so identical runs produce
//! byte-identical files.

use std::fmt::Write as _;

use crate::analytic::{CoverageCurve, RateReport};
use crate::optimize::PartitionSolution;
use crate::sim::{Deployment, EmpiricalCcdf, EmpiricalRates};

/// Tool version stamped into CSV header comments.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Canonical float formatting for every text artifact: scientific
/// notation with 12 fractional digits, enough to round-trip `f64`.
pub fn float_field(x: f64) -> String {
    format!("{x:.12e}")
}

/// The comment line opening every CSV artifact: tool version, plus the
/// driving seed for outputs that depend on one.
pub fn file_header(seed: Option<u64>) -> String {
    match seed {
        Some(s) => format!("# hopcell {VERSION} seed={s}\n"),
        None => format!("# hopcell {VERSION}\n"),
    }
}

fn db(beta: f64) -> f64 {
    10.0 * beta.log10()
}

/// Analytic coverage curve as CSV.
pub fn curve_csv(curve: &CoverageCurve) -> String {
    let mut out = file_header(None);
    out.push_str("beta_db,beta_linear,ccdf,mode,link_class\n");
    for (beta, p) in curve.betas.iter().zip(&curve.ccdf) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            float_field(db(*beta)),
            float_field(*beta),
            float_field(*p),
            curve.mode,
            curve.link_class
        );
    }
    out
}

/// Several analytic coverage curves in one CSV: a single header, then
/// every curve's rows in the given order.  Each row carries its own
/// mode and link class, so mixed collections stay self-describing.
pub fn curves_csv(curves: &[CoverageCurve]) -> String {
    let mut out = file_header(None);
    out.push_str("beta_db,beta_linear,ccdf,mode,link_class\n");
    for curve in curves {
        for (beta, p) in curve.betas.iter().zip(&curve.ccdf) {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                float_field(db(*beta)),
                float_field(*beta),
                float_field(*p),
                curve.mode,
                curve.link_class
            );
        }
    }
    out
}

/// Empirical coverage curve as CSV: the analytic curve schema plus
/// Wilson 95% interval bounds, the replication count, and the seed.
pub fn empirical_csv(emp: &EmpiricalCcdf) -> String {
    let mut out = file_header(Some(emp.seed));
    out.push_str(
        "beta_db,beta_linear,ccdf,mode,link_class,ci_low,ci_high,replications,seed\n",
    );
    let ccdf = emp.ccdf();
    let centers = emp.wilson_centers();
    let half = emp.wilson_half_widths();
    for i in 0..emp.betas.len() {
        let beta = emp.betas[i];
        let lo = (centers[i] - half[i]).max(0.0);
        let hi = (centers[i] + half[i]).min(1.0);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            float_field(db(beta)),
            float_field(beta),
            float_field(ccdf[i]),
            emp.mode,
            emp.link_class,
            float_field(lo),
            float_field(hi),
            emp.replications,
            emp.seed
        );
    }
    out
}

/// Deployment snapshot as a point-list CSV for plotting.  One row per
/// point; D2D links contribute one `d2d_tx` and one `d2d_rx` row each,
/// and the typical link at the window center contributes `typical_tx`
/// and `typical_rx` rows.
pub fn snapshot_csv(dep: &Deployment) -> String {
    let mut out = file_header(Some(dep.seed));
    out.push_str("kind,x,y,type_index,active,subbands\n");
    for p in &dep.bs {
        let _ = writeln!(out, "bs,{},{},,,", float_field(p[0]), float_field(p[1]));
    }
    for p in &dep.ues {
        let _ = writeln!(out, "ue,{},{},,,", float_field(p[0]), float_field(p[1]));
    }
    for l in &dep.d2d_links {
        let _ = writeln!(
            out,
            "d2d_tx,{},{},{},{},{:#018x}",
            float_field(l.tx[0]),
            float_field(l.tx[1]),
            l.type_index,
            l.active,
            l.subbands
        );
        let _ = writeln!(
            out,
            "d2d_rx,{},{},{},{},{:#018x}",
            float_field(l.rx[0]),
            float_field(l.rx[1]),
            l.type_index,
            l.active,
            l.subbands
        );
    }
    let c = 0.5 * dep.window;
    let _ = writeln!(
        out,
        "typical_tx,{},{},,true,",
        float_field(c + dep.typical_offset[0]),
        float_field(c + dep.typical_offset[1])
    );
    let _ = writeln!(out, "typical_rx,{},{},,true,", float_field(c), float_field(c));
    out
}

/// Analytic rate report as a flat key=value record.
pub fn rates_record(r: &RateReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode={}", r.mode);
    let _ = writeln!(out, "rate_cellular={}", float_field(r.rate_cellular));
    for (i, v) in r.rate_d2d_per_type.iter().enumerate() {
        let _ = writeln!(out, "rate_d2d_type_{i}={}", float_field(*v));
    }
    let _ = writeln!(out, "rate_d2d_mixture={}", float_field(r.rate_d2d_mixture));
    let _ = writeln!(out, "lb_cellular={}", float_field(r.lower.lb_cellular));
    for (i, v) in r.lower.lb_d2d_per_type.iter().enumerate() {
        let _ = writeln!(out, "lb_d2d_type_{i}={}", float_field(*v));
    }
    let _ = writeln!(out, "lb_d2d_mixture={}", float_field(r.lower.lb_d2d_mixture));
    let _ = writeln!(out, "beta_c_star={}", float_field(r.lower.beta_c_star));
    let _ = writeln!(out, "beta_d_star={}", float_field(r.lower.beta_d_star));
    out
}

/// Empirical rate estimates as a flat key=value record.
pub fn empirical_rates_record(r: &EmpiricalRates) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode={}", r.mode);
    let _ = writeln!(out, "replications={}", r.replications);
    let _ = writeln!(out, "seed={}", r.seed);
    let _ = writeln!(out, "rate_cellular={}", float_field(r.rate_cellular));
    for (i, v) in r.rate_d2d_per_type.iter().enumerate() {
        let _ = writeln!(out, "rate_d2d_type_{i}={}", float_field(*v));
    }
    let _ = writeln!(out, "rate_d2d_mixture={}", float_field(r.rate_d2d_mixture));
    let _ = writeln!(
        out,
        "per_cell_total_bps={}",
        float_field(r.per_cell_total_bps)
    );
    let _ = writeln!(
        out,
        "per_cell_total_se_bps={}",
        float_field(r.per_cell_total_se_bps)
    );
    let _ = writeln!(out, "capped_samples={}", r.capped_samples);
    out
}

/// Optimization result as a flat key=value record, including every
/// evaluated split candidate for audit.
pub fn solution_record(s: &PartitionSolution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode={}", s.mode);
    let _ = writeln!(out, "method={}", s.method);
    let _ = writeln!(out, "heavy_load={}", s.heavy_load);
    for (i, v) in s.p_t_star.iter().enumerate() {
        let _ = writeln!(out, "p_t_star_{i}={}", float_field(*v));
    }
    for (i, v) in s.p_f_star.iter().enumerate() {
        let _ = writeln!(out, "p_f_star_{i}={}", float_field(*v));
    }
    match s.theta_star {
        Some(t) => {
            let _ = writeln!(out, "theta_star={}", float_field(t));
        }
        None => {
            let _ = writeln!(out, "theta_star=none");
        }
    }
    let _ = writeln!(out, "objective={}", float_field(s.objective));
    for (i, c) in s.candidates.iter().enumerate() {
        let _ = writeln!(
            out,
            "candidate_{i}_theta={} candidate_{i}_value={} candidate_{i}_kind={} \
             candidate_{i}_region_lo={} candidate_{i}_region_hi={} candidate_{i}_monotone={}",
            float_field(c.theta),
            float_field(c.frozen_objective),
            c.kind,
            float_field(c.region[0]),
            float_field(c.region[1]),
            c.monotone_region
        );
    }
    out
}

/// Machine-readable structured output for any serializable report.
pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize infallibly")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{coverage_curve, rates};
    use crate::model::{preset, LinkClass};
    use crate::sim::{empirical_coverage, sample_deployment, SimOptions};

    #[test]
    fn curve_csv_schema_and_determinism() {
        let cfg = preset("table2-dedicated").unwrap();
        let betas = crate::analytic::beta_grid(-10.0, 10.0, 5);
        let curve = coverage_curve(&cfg, LinkClass::D2d, &betas).unwrap();
        let a = curve_csv(&curve);
        let b = curve_csv(&curve);
        assert_eq!(a, b);
        let mut lines = a.lines();
        assert!(lines.next().unwrap().starts_with("# hopcell "));
        assert_eq!(
            lines.next().unwrap(),
            "beta_db,beta_linear,ccdf,mode,link_class"
        );
        let first = lines.next().unwrap();
        assert!(first.ends_with(",dedicated,d2d"));
        assert_eq!(first.split(',').count(), 5);
        assert_eq!(a.lines().count(), 2 + betas.len());
    }

    #[test]
    fn curves_csv_merges_under_one_header() {
        let cfg = preset("table2-dedicated").unwrap();
        let betas = crate::analytic::beta_grid(-10.0, 10.0, 5);
        let d2d = coverage_curve(&cfg, LinkClass::D2d, &betas).unwrap();
        let cell = coverage_curve(&cfg, LinkClass::Cellular, &betas).unwrap();
        let text = curves_csv(&[d2d, cell]);
        assert_eq!(text.lines().count(), 2 + 2 * betas.len());
        assert_eq!(text.matches("# hopcell").count(), 1);
        assert_eq!(text.matches(",dedicated,d2d").count(), betas.len());
        assert_eq!(text.matches(",dedicated,cellular").count(), betas.len());
    }

    #[test]
    fn empirical_csv_carries_seed_and_bounds() {
        let cfg = preset("table2-shared").unwrap();
        let betas = crate::analytic::beta_grid(-10.0, 10.0, 4);
        let emp = empirical_coverage(
            &cfg,
            LinkClass::Cellular,
            &betas,
            100,
            1234,
            &SimOptions::default(),
        )
        .unwrap();
        let text = empirical_csv(&emp);
        assert!(text.starts_with(&format!("# hopcell {VERSION} seed=1234\n")));
        for row in text.lines().skip(2) {
            let cols: Vec<&str> = row.split(',').collect();
            assert_eq!(cols.len(), 9);
            let ccdf: f64 = cols[2].parse().unwrap();
            let lo: f64 = cols[5].parse().unwrap();
            let hi: f64 = cols[6].parse().unwrap();
            assert!(lo <= hi && (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
            assert!((0.0..=1.0).contains(&ccdf));
            assert_eq!(cols[7], "100");
            assert_eq!(cols[8], "1234");
        }
    }

    #[test]
    fn snapshot_lists_every_point() {
        let cfg = preset("table2-dedicated").unwrap();
        let dep = sample_deployment(&cfg, 5, &SimOptions::default()).unwrap();
        let text = snapshot_csv(&dep);
        let rows = text.lines().count() - 2;
        assert_eq!(
            rows,
            dep.bs.len() + dep.ues.len() + 2 * dep.d2d_links.len() + 2
        );
        assert!(text.contains("typical_rx"));
    }

    #[test]
    fn rate_record_is_flat_key_value() {
        let cfg = preset("table2-dedicated").unwrap();
        let r = rates(&cfg).unwrap();
        let rec = rates_record(&r);
        assert!(rec.contains("mode=dedicated\n"));
        assert!(rec.contains("rate_d2d_type_1="));
        for line in rec.lines() {
            assert_eq!(line.split('=').count(), 2, "bad line {line}");
        }
        let json = to_json(&r);
        assert!(json.contains("\"rate_cellular\""));
    }
}
