//! Reference methods: a fixed-step discretized Monte Carlo engine and the
//! no-jump closed form `P(t) = 2 N(-Z / sqrt(t))` with its distance-to-default fit.

use crate::calibrate::HistoricalCurve;
use crate::error::{Error, Result};
use crate::exec::run_indexed;
use crate::model::PortfolioSpec;
use crate::stochastic::{advance_diffusion, sample_thinned_timeline, RngStream};
use crate::unif::{CrossingCase, Engine, FptSample, RunOutcome, SampleSet};

/// Settings of the discretized engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerConfig {
    /// Grid step.
    pub dt: f64,
    pub n_runs: usize,
    pub seed: u64,
}

impl EulerConfig {
    fn validate(&self, horizon: f64) -> Result<()> {
        if !(self.dt > 0.0) || self.dt > horizon {
            return Err(Error::invalid(format!(
                "grid step must lie in (0, horizon], got {}",
                self.dt
            )));
        }
        if self.n_runs == 0 {
            return Err(Error::invalid("n_runs must be at least 1"));
        }
        Ok(())
    }
}

fn euler_run(portfolio: &PortfolioSpec, dt: f64, stream: &mut RngStream) -> RunOutcome {
    let n = portfolio.n_firms();
    let horizon = portfolio.horizon;
    let timeline = sample_thinned_timeline(portfolio.timeline_mean(), horizon, portfolio.jump_probability(), stream);
    let drift: Vec<f64> = portfolio.firms.iter().map(|f| f.shifted_drift()).collect();
    let mut x: Vec<f64> = portfolio.firms.iter().map(|f| f.shifted_start()).collect();
    let mut normals = vec![0.0; n];
    let mut samples: Vec<Option<FptSample>> = vec![None; n];
    let mut alive = n;
    let instants = timeline.instants();
    let last_interior = instants.len() - 1;
    let mut next = 1;
    let steps = (horizon / dt - 1e-9).ceil() as usize;

    for k in 1..=steps {
        let t_prev = (k - 1) as f64 * dt;
        let t = (k as f64 * dt).min(horizon);
        advance_diffusion(&mut x, &drift, &portfolio.diffusion, t - t_prev, &mut normals, stream);
        // jumps land on the first grid point at or after their instant
        while next < last_interior && instants[next] <= t {
            if timeline.is_jump(next) {
                for (xi, f) in x.iter_mut().zip(&portfolio.firms) {
                    *xi += f.jump_mean + f.jump_sd * stream.standard_normal();
                }
            }
            next += 1;
        }
        for i in 0..n {
            if samples[i].is_none() && x[i] <= 0.0 {
                samples[i] = Some(FptSample {
                    firm: i,
                    time: t,
                    weight: 1.0,
                    case: CrossingCase::Grid,
                });
                alive -= 1;
            }
        }
        if alive == 0 {
            break;
        }
    }
    RunOutcome { samples, timeline }
}

/// Conventional Monte Carlo: every firm is advanced on a fixed grid and
/// defaults at the first grid point at or below its boundary.
pub fn euler_simulate(portfolio: &PortfolioSpec, cfg: &EulerConfig) -> Result<SampleSet> {
    euler_simulate_with_workers(portfolio, cfg, 1)
}

pub fn euler_simulate_with_workers(portfolio: &PortfolioSpec, cfg: &EulerConfig, workers: usize) -> Result<SampleSet> {
    portfolio.validate()?;
    cfg.validate(portfolio.horizon)?;
    let outcomes = run_indexed(cfg.n_runs, workers, |r| {
        euler_run(portfolio, cfg.dt, &mut RngStream::new(cfg.seed, r))
    })?;
    Ok(SampleSet {
        outcomes,
        portfolio: portfolio.clone(),
        seed: cfg.seed,
        engine: Engine::Euler,
    })
}

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// No-jump default probability `2 N(-z / sqrt(t))` for standardized
/// distance to default `z`.
pub fn nojump_default_probability(z: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    (2.0 * normal_cdf(-z / t.sqrt())).min(1.0)
}

/// Distance to default of a firm in shifted coordinates,
/// `(X(0) - ln kappa) / sigma`.
pub fn distance_to_default(portfolio: &PortfolioSpec, firm: usize) -> Result<f64> {
    let f = portfolio
        .firms
        .get(firm)
        .ok_or_else(|| Error::invalid(format!("firm index {firm} out of range")))?;
    Ok(f.shifted_start() / portfolio.diffusion.effective_vol(firm)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceFit {
    pub z: f64,
    /// The minimizer sits on the edge of the search bracket.
    pub saturated: bool,
}

const Z_LOWER: f64 = 1e-2;
const Z_UPPER: f64 = 100.0;
const Z_TOL: f64 = 1e-4;

/// Least-squares fit of the distance to default to a historical curve,
/// minimizing `sum_t (P(Z, t) / t - A(t) / t)^2`.
///
/// A log-spaced scan locates the basin, then golden-section search refines
/// it to `1e-4` in `Z`.
pub fn fit_distance_to_default(historical: &HistoricalCurve) -> Result<DistanceFit> {
    historical.validate()?;
    let loss = |z: f64| -> f64 {
        historical
            .times
            .iter()
            .zip(&historical.rates)
            .map(|(&t, &a)| ((nojump_default_probability(z, t) - a) / t).powi(2))
            .sum()
    };
    let scan = 400;
    let ratio = (Z_UPPER / Z_LOWER).ln();
    let grid: Vec<f64> = (0..=scan)
        .map(|k| Z_LOWER * (ratio * k as f64 / scan as f64).exp())
        .collect();
    // ties (a loss that underflows to zero) resolve to the largest z
    let best = (0..=scan)
        .rev()
        .min_by(|&a, &b| loss(grid[a]).total_cmp(&loss(grid[b])))
        .unwrap();
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(scan)];

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (loss(c), loss(d));
    while hi - lo > Z_TOL {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = loss(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = loss(d);
        }
    }
    let z = 0.5 * (lo + hi);
    let saturated = z >= grid[scan - 1] || z <= grid[1];
    Ok(DistanceFit { z, saturated })
}
