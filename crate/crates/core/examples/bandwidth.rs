//! Optimal KDE bandwidth from a gamma fit to weighted samples.

use fptmc::estimate::{bandwidth_integral, fit_gamma, kde, optimal_bandwidth, uniform_grid};
use fptmc::stochastic::RngStream;

fn main() -> fptmc::Result<()> {
    // gamma(shape 4, rate 2) samples as sums of exponentials
    let mut stream = RngStream::new(11, 0);
    let samples: Vec<(f64, f64)> = (0..5_000)
        .map(|_| ((0..4).map(|_| stream.exponential(0.5)).sum(), 1.0))
        .collect();
    let fit = fit_gamma(&samples)?;
    let h = optimal_bandwidth(&fit, samples.len())?;
    println!("alpha {:.3} beta {:.3}", fit.alpha, fit.beta);
    println!("curvature integral {:.5}, bandwidth {h:.4}", bandwidth_integral(&fit)?);

    let grid = uniform_grid(6.0, 13);
    let d = kde(&samples, h, &grid, samples.len())?;
    for (t, f) in grid.iter().zip(&d.values) {
        println!("{t:>4.1} {f:.4}");
    }
    Ok(())
}
