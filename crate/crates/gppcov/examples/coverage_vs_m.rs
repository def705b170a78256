//! Coverage as a function of the Nakagami shape m at a fixed threshold.
//! Larger m means milder fading; coverage increases monotonically in m,
//! with rapidly diminishing increments.

use gppcov::analytic::{coverage_analytic, ModelParams, DEFAULT_MAX_M};
use gppcov::quadrature::NumericsPolicy;

fn main() -> gppcov::Result<()> {
    let policy = NumericsPolicy::default();
    let (beta, theta) = (2.0, 1.0);
    println!("beta = {beta}, theta = {theta} (0 dB)");
    println!("{:>4} {:>12} {:>12}", "m", "coverage", "increment");
    let mut prev: Option<f64> = None;
    for m in 1..=DEFAULT_MAX_M.min(6) {
        let cov = coverage_analytic(&ModelParams { m, beta, theta }, &policy)?;
        match prev {
            None => println!("{m:>4} {:>12.8} {:>12}", cov.value, "-"),
            Some(v) => println!("{m:>4} {:>12.8} {:>+12.8}", cov.value, cov.value - v),
        }
        prev = Some(cov.value);
    }
    Ok(())
}
