//! From raw first-passage samples to densities, cumulative default-rate
//! curves and default correlations.
//!
//! Densities use a weighted Gaussian kernel estimator whose bandwidth comes
//! from the normal-reference rule `h = (2 N sqrt(pi) int f''^2)^(-1/5)`, with
//! the unknown density replaced by a method-of-moments gamma fit.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::unif::SampleSet;

/// Default number of evaluation points on `[0, T]`.
pub const DEFAULT_GRID_POINTS: usize = 512;

/// Gamma density `alpha^beta / Gamma(beta) t^(beta-1) exp(-alpha t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaFit {
    /// Rate.
    pub alpha: f64,
    /// Shape, at least 3.
    pub beta: f64,
}

/// Weighted method-of-moments gamma fit, with the shape clamped up to 3.
pub fn fit_gamma(samples: &[(f64, f64)]) -> Result<GammaFit> {
    if samples.len() < 2 {
        return Err(Error::invalid("gamma fit needs at least two samples"));
    }
    let total: f64 = samples.iter().map(|&(_, w)| w).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::invalid("gamma fit needs a positive total weight"));
    }
    let mean = samples.iter().map(|&(t, w)| w * t).sum::<f64>() / total;
    let var = samples.iter().map(|&(t, w)| w * (t - mean).powi(2)).sum::<f64>() / total;
    if !(var > 0.0) || !(mean > 0.0) {
        return Err(Error::numerical("gamma fit on samples with zero variance"));
    }
    let beta = mean * mean / var;
    if beta < 3.0 {
        Ok(GammaFit {
            alpha: 3.0 / mean,
            beta: 3.0,
        })
    } else {
        Ok(GammaFit {
            alpha: mean / var,
            beta,
        })
    }
}

/// Closed form of `int_0^inf (f'')^2 dt` for the fitted gamma density.
///
/// Writing `f'' = c e^{-alpha t} t^{beta-3} (A t^2 + B t + C)` and expanding
/// the square gives five gamma integrals:
/// `sum_i W_i alpha^i Gamma(2 beta - i) / (2^(2 beta - i) Gamma(beta)^2)`.
pub fn bandwidth_integral(fit: &GammaFit) -> Result<f64> {
    let GammaFit { alpha, beta } = *fit;
    if !(beta >= 3.0) || !beta.is_finite() {
        return Err(Error::invalid(format!("gamma shape {beta} below 3")));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("gamma rate {alpha} must be positive")));
    }
    let a = alpha * alpha;
    let b = -2.0 * alpha * (beta - 1.0);
    let c = (beta - 1.0) * (beta - 2.0);
    let weights = [a * a, 2.0 * a * b, b * b + 2.0 * a * c, 2.0 * b * c, c * c];
    let lg_beta = ln_gamma(beta);
    let mut sum = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let i = (k + 1) as f64;
        let e = 2.0 * beta - i;
        let log_mag = w.abs().ln() + i * alpha.ln() + ln_gamma(e) - e * std::f64::consts::LN_2 - 2.0 * lg_beta;
        sum += w.signum() * log_mag.exp();
    }
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::numerical(format!("bandwidth integral evaluated to {sum}")));
    }
    Ok(sum)
}

/// `h_opt = (2 n sqrt(pi) int f''^2)^(-1/5)` for `n` samples.
pub fn optimal_bandwidth(fit: &GammaFit, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("bandwidth needs at least one sample"));
    }
    let integral = bandwidth_integral(fit)?;
    Ok((2.0 * n as f64 * std::f64::consts::PI.sqrt() * integral).powf(-0.2))
}

/// Gaussian kernel `exp(-u^2 / (h^2 / 2)) / (sqrt(pi / 2) h)`.
#[inline]
pub fn kernel(h: f64, u: f64) -> f64 {
    (-2.0 * u * u / (h * h)).exp() / ((std::f64::consts::PI / 2.0).sqrt() * h)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub bandwidth: f64,
    pub n_runs: usize,
}

/// `f(t) = (1/N) sum_i w_i K(h, t - s_i)`, normalized by the number of runs,
/// not the number of samples.
pub fn kde(samples: &[(f64, f64)], h: f64, grid: &[f64], n_runs: usize) -> Result<DensityEstimate> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid(format!("bandwidth must be positive, got {h}")));
    }
    if n_runs == 0 {
        return Err(Error::invalid("n_runs must be at least 1"));
    }
    let norm = 1.0 / ((std::f64::consts::PI / 2.0).sqrt() * h * n_runs as f64);
    let scale = 2.0 / (h * h);
    let values = grid
        .iter()
        .map(|&t| {
            samples
                .iter()
                .map(|&(s, w)| w * (-(t - s) * (t - s) * scale).exp())
                .sum::<f64>()
                * norm
        })
        .collect();
    Ok(DensityEstimate {
        grid: grid.to_vec(),
        values,
        bandwidth: h,
        n_runs,
    })
}

/// `points` equally spaced times covering `[0, horizon]`.
pub fn uniform_grid(horizon: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2, "a grid needs at least two points");
    let step = horizon / (points - 1) as f64;
    (0..points)
        .map(|k| if k + 1 == points { horizon } else { k as f64 * step })
        .collect()
}

/// Cumulative default rates `P(t)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCurve {
    pub grid: Vec<f64>,
    pub rates: Vec<f64>,
}

impl RateCurve {
    /// Linear interpolation, constant beyond the ends.
    pub fn at(&self, t: f64) -> f64 {
        let g = &self.grid;
        if t <= g[0] {
            return self.rates[0];
        }
        if t >= g[g.len() - 1] {
            return self.rates[g.len() - 1];
        }
        let k = g.partition_point(|&x| x <= t);
        let (t0, t1) = (g[k - 1], g[k]);
        let w = (t - t0) / (t1 - t0);
        self.rates[k - 1] * (1.0 - w) + self.rates[k] * w
    }
}

/// Trapezoidal integral of the density from the first grid point, clamped
/// to `[0, 1]`.
pub fn cumulative_rates(density: &DensityEstimate) -> RateCurve {
    let mut rates = Vec::with_capacity(density.grid.len());
    let mut acc = 0.0;
    rates.push(0.0);
    for k in 1..density.grid.len() {
        let dt = density.grid[k] - density.grid[k - 1];
        acc += 0.5 * dt * (density.values[k] + density.values[k - 1]);
        rates.push(acc.clamp(0.0, 1.0));
    }
    RateCurve {
        grid: density.grid.clone(),
        rates,
    }
}

/// Density estimate for one firm together with the fit that chose its bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirmDensity {
    pub firm: usize,
    /// `None` when there were too few distinct samples to fit.
    pub fit: Option<GammaFit>,
    pub n_samples: usize,
    pub density: DensityEstimate,
}

impl FirmDensity {
    pub fn rates(&self) -> RateCurve {
        cumulative_rates(&self.density)
    }
}

/// Bandwidth used when the gamma fit is impossible (a single sample or
/// identical samples), as a fraction of the horizon.
const FALLBACK_BANDWIDTH_FRACTION: f64 = 0.05;

/// Fit, bandwidth and kernel estimate for `firm` on `grid`.
pub fn firm_density(set: &SampleSet, firm: usize, grid: &[f64]) -> Result<FirmDensity> {
    if firm >= set.n_firms() {
        return Err(Error::invalid(format!("firm index {firm} out of range")));
    }
    let samples = set.weighted_times(firm);
    let horizon = set.portfolio.horizon;
    let (fit, h) = match fit_gamma(&samples) {
        Ok(fit) => (Some(fit), optimal_bandwidth(&fit, samples.len())?),
        Err(_) => (None, FALLBACK_BANDWIDTH_FRACTION * horizon),
    };
    Ok(FirmDensity {
        firm,
        fit,
        n_samples: samples.len(),
        density: kde(&samples, h, grid, set.n_runs())?,
    })
}

/// Joint default statistics of two firms at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationEstimate {
    pub horizon: f64,
    pub firm_a: usize,
    pub firm_b: usize,
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
    /// `None` when either marginal probability is 0 or 1.
    pub rho: Option<f64>,
    /// Delta-method standard error of `rho`. Collapses towards 0 when few
    /// joint defaults are observed, so treat it as a lower bound then.
    pub stderr: Option<f64>,
    pub n_runs: usize,
}

impl CorrelationEstimate {
    pub fn rho(&self) -> Result<f64> {
        self.rho.ok_or_else(|| {
            Error::numerical(format!(
                "default correlation undefined at t = {}: P_A = {}, P_B = {}",
                self.horizon, self.p_a, self.p_b
            ))
        })
    }
}

/// Default correlation
/// `(P_AB - P_A P_B) / sqrt(P_A (1 - P_A) P_B (1 - P_B))`
/// from run-level default indicators at horizon `t`.
pub fn default_correlation(set: &SampleSet, firm_a: usize, firm_b: usize, t: f64) -> Result<CorrelationEstimate> {
    let n_firms = set.n_firms();
    if firm_a >= n_firms || firm_b >= n_firms {
        return Err(Error::invalid("firm index out of range"));
    }
    let n = set.n_runs();
    let (mut na, mut nb, mut nab) = (0usize, 0usize, 0usize);
    for o in &set.outcomes {
        let a = o.defaulted_by(firm_a, t);
        let b = o.defaulted_by(firm_b, t);
        na += a as usize;
        nb += b as usize;
        nab += (a && b) as usize;
    }
    if nab < 10 && na > 0 && nb > 0 {
        log::warn!("only {nab} joint defaults of firms {firm_a} and {firm_b} by t = {t}; the correlation standard error is unreliable");
    }
    let nf = n as f64;
    let (p_a, p_b, p_ab) = (na as f64 / nf, nb as f64 / nf, nab as f64 / nf);
    let (va, vb) = (p_a * (1.0 - p_a), p_b * (1.0 - p_b));
    let (rho, stderr) = if va > 0.0 && vb > 0.0 {
        let d = (va * vb).sqrt();
        let num = p_ab - p_a * p_b;
        let rho = (num / d).clamp(-1.0, 1.0);
        let g_ab = 1.0 / d;
        let g_a = -p_b / d - num * (1.0 - 2.0 * p_a) / (2.0 * va * d);
        let g_b = -p_a / d - num * (1.0 - 2.0 * p_b) / (2.0 * vb * d);
        let cov_ab_a = p_ab * (1.0 - p_a);
        let cov_ab_b = p_ab * (1.0 - p_b);
        let cov_a_b = num;
        let var = g_ab * g_ab * p_ab * (1.0 - p_ab)
            + g_a * g_a * va
            + g_b * g_b * vb
            + 2.0 * g_ab * g_a * cov_ab_a
            + 2.0 * g_ab * g_b * cov_ab_b
            + 2.0 * g_a * g_b * cov_a_b;
        (Some(rho), Some((var.max(0.0) / nf).sqrt()))
    } else {
        (None, None)
    };
    Ok(CorrelationEstimate {
        horizon: t,
        firm_a,
        firm_b,
        p_a,
        p_b,
        p_ab,
        rho,
        stderr,
        n_runs: n,
    })
}

/// Correlations of one firm pair at several horizons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub firm_a: usize,
    pub firm_b: usize,
    pub entries: Vec<CorrelationEstimate>,
}

pub fn correlation_report(
    set: &SampleSet,
    firm_a: usize,
    firm_b: usize,
    horizons: &[f64],
) -> Result<CorrelationReport> {
    let entries = horizons
        .iter()
        .map(|&t| default_correlation(set, firm_a, firm_b, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(CorrelationReport {
        firm_a,
        firm_b,
        entries,
    })
}
