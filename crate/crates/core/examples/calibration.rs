//! Fit a distance to default and the single-firm jump-diffusion to a
//! no-jump curve with Z = 8.06.

use fptmc::baseline::{fit_distance_to_default, nojump_default_probability};
use fptmc::calibrate::{calibrate_single_firm, FixedSettings, HistoricalCurve, SimulationSettings};

fn main() -> fptmc::Result<()> {
    let times: Vec<f64> = (1..=10).map(f64::from).collect();
    let rates = times.iter().map(|&t| nojump_default_probability(8.06, t)).collect();
    let curve = HistoricalCurve::new(times, rates)?;

    let z = fit_distance_to_default(&curve)?;
    println!("distance to default {:.4} (saturated: {})", z.z, z.saturated);

    let settings = SimulationSettings::new(10_000, 1);
    let fit = calibrate_single_firm(&curve, [0.15, 0.3, 0.0, 0.3], FixedSettings::default(), &settings)?;
    for (name, v) in fit.names.iter().zip(&fit.params) {
        println!("{name:>10} {v:.5}");
    }
    println!(
        "loss {:.3e} after {} evaluations (converged: {})",
        fit.objective_value, fit.evaluations, fit.converged
    );
    Ok(())
}
