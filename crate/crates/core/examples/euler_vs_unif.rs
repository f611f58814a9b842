//! UNIF against the fixed-step engine and the no-jump closed form, with
//! per-run CPU time.

use std::time::Instant;

use fptmc::baseline::{euler_simulate, nojump_default_probability, EulerConfig};
use fptmc::estimate::{firm_density, uniform_grid};
use fptmc::{simulate, DiffusionMatrix, FirmSpec, PortfolioSpec};

fn main() -> fptmc::Result<()> {
    let z = 8.06;
    let portfolio = PortfolioSpec {
        firms: vec![FirmSpec {
            x0: 2.0,
            mu: -0.001,
            ln_kappa: 0.0,
            gamma: -0.001,
            jump_mean: 0.0,
            jump_sd: 1.0,
        }],
        diffusion: DiffusionMatrix::diagonal(&[2.0 / z])?,
        lambda: 0.0,
        interjump_mean: 1.0,
        horizon: 10.0,
        uniform_correlation: None,
    };
    let n = 20_000;
    let grid = uniform_grid(portfolio.horizon, 512);

    let start = Instant::now();
    let unif = simulate(&portfolio, n, 3)?;
    let t_unif = start.elapsed().as_secs_f64() / n as f64;
    let start = Instant::now();
    let euler = euler_simulate(
        &portfolio,
        &EulerConfig {
            dt: 0.005,
            n_runs: n,
            seed: 3,
        },
    )?;
    let t_euler = start.elapsed().as_secs_f64() / n as f64;

    let ru = firm_density(&unif, 0, &grid)?.rates();
    let re = firm_density(&euler, 0, &grid)?.rates();
    println!("   t     unif    euler   closed");
    for t in [1.0, 2.0, 4.0, 6.0, 8.0, 10.0] {
        println!(
            "{t:>4} {:>7.3}% {:>7.3}% {:>7.3}%",
            100.0 * ru.at(t),
            100.0 * re.at(t),
            100.0 * nojump_default_probability(z, t)
        );
    }
    println!(
        "seconds per run: unif {t_unif:.2e}, euler {t_euler:.2e}, ratio {:.1}",
        t_euler / t_unif
    );
    Ok(())
}
