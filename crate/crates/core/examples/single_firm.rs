//! One A-rated firm: UNIF samples, fitted bandwidth and cumulative default
//! rates at yearly horizons.

use fptmc::estimate::{firm_density, uniform_grid};
use fptmc::{simulate, DiffusionMatrix, FirmSpec, PortfolioSpec};

fn main() -> fptmc::Result<()> {
    let firm = FirmSpec {
        x0: 2.0,
        mu: -0.001,
        ln_kappa: 0.0,
        gamma: -0.001,
        jump_mean: -0.20003641,
        jump_sd: 0.50000485,
    };
    let portfolio = PortfolioSpec {
        firms: vec![firm],
        diffusion: DiffusionMatrix::diagonal(&[0.09000984])?,
        lambda: 0.10001559,
        interjump_mean: 1.0,
        horizon: 10.0,
        uniform_correlation: None,
    };
    let set = simulate(&portfolio, 100_000, 1)?;
    let d = firm_density(&set, 0, &uniform_grid(portfolio.horizon, 512))?;
    println!("{} weighted samples, bandwidth {:.4}", d.n_samples, d.density.bandwidth);
    if let Some(fit) = d.fit {
        println!("gamma fit alpha {:.4} beta {:.4}", fit.alpha, fit.beta);
    }
    let rates = d.rates();
    for t in 1..=10 {
        let t = t as f64;
        println!(
            "t {t:>4}: kde {:.4}%  fraction {:.4}%",
            100.0 * rates.at(t),
            100.0 * set.default_fraction(0, t)
        );
    }
    Ok(())
}
