//! The README walk-through: analytic coverage and rates for a bundled
//! preset, a Monte Carlo cross-check, and the hopping/split optimizer.

use hopcell::analytic::{beta_grid, coverage_curve, rates};
use hopcell::model::preset;
use hopcell::optimize::solve;
use hopcell::sim::{empirical_coverage, SimOptions};
use hopcell::LinkClass;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = preset("table2-dedicated").expect("known preset");

    // Analytic coverage on a -20..+40 dB grid, and average rates.
    let betas = beta_grid(-20.0, 40.0, 40);
    let curve = coverage_curve(&cfg, LinkClass::D2d, &betas)?;
    let report = rates(&cfg)?;
    println!("D2D mixture rate: {:.3}", report.rate_d2d_mixture);

    // Monte Carlo check of the same curve (10^4 replications, seed 42).
    let emp = empirical_coverage(&cfg, LinkClass::D2d, &betas, 10_000, 42,
                                 &SimOptions::default())?;
    let worst = curve.ccdf.iter().zip(emp.ccdf())
        .map(|(a, e)| (a - e).abs())
        .fold(0.0f64, f64::max);
    assert!(worst < 0.015);
    println!("max |analytic - empirical| = {worst:.2e}");

    // Optimal hopping probabilities and spectrum split.
    let solution = solve(&cfg)?;
    println!("theta* = {:?} by {}", solution.theta_star, solution.method);
    Ok(())
}
