//! Stop-loss ordering of the conditional SIR in the fading shape. On one
//! fixed base-station configuration, E[(SIR - a)+] is larger for heavier
//! fading (smaller m) at every retention level a: the conditional SIR
//! decreases in convex order as m grows.

use gppcov::simulator::{sample_gpp_radii, stop_loss_curve};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gppcov::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let radii = sample_gpp_radii(128, &mut rng)?;
    let a_grid: Vec<f64> = (0..=10).map(|i| 0.5 * i as f64).collect();
    let (beta, n_fading, seed) = (2.0, 50_000, 12345);

    let light = stop_loss_curve(&radii, 4, beta, &a_grid, n_fading, seed)?;
    let heavy = stop_loss_curve(&radii, 1, beta, &a_grid, n_fading, seed)?;

    println!("one fixed configuration, beta = {beta}, {n_fading} fading draws");
    println!(
        "{:>6} {:>12} {:>12} {:>12}",
        "a", "m=1", "m=4", "difference"
    );
    for (h, l) in heavy.iter().zip(&light) {
        println!(
            "{:>6.1} {:>12.6} {:>12.6} {:>+12.6}",
            h.a,
            h.estimate,
            l.estimate,
            h.estimate - l.estimate
        );
    }
    Ok(())
}
