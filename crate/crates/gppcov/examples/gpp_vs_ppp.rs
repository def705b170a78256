//! Ginibre versus Poisson deployment at equal intensity. The repulsion
//! between Ginibre base stations keeps the serving station close while
//! pushing interferers away, so coverage is higher at every threshold.

use gppcov::analytic::ModelParams;
use gppcov::simulator::{coverage_mc, Method, PointModel};

fn main() -> gppcov::Result<()> {
    let (n_samples, n_points, seed) = (20_000, 256, 12345);
    println!("m = 1, beta = 2, {n_samples} samples per cell");
    println!(
        "{:>8} {:>10} {:>10} {:>9}",
        "theta_dB", "ginibre", "poisson", "gain"
    );
    for db in [-10, -5, 0, 5, 10, 15, 20] {
        let p = ModelParams {
            m: 1,
            beta: 2.0,
            theta: 10f64.powf(db as f64 / 10.0),
        };
        let gin = coverage_mc(
            PointModel::Gpp,
            &p,
            Method::McFullMarg,
            n_samples,
            n_points,
            seed,
        )?;
        let poi = coverage_mc(
            PointModel::Ppp,
            &p,
            Method::McFullMarg,
            n_samples,
            n_points,
            seed,
        )?;
        println!(
            "{db:>8} {:>10.5} {:>10.5} {:>+9.5}",
            gin.value,
            poi.value,
            gin.value - poi.value
        );
    }
    Ok(())
}
