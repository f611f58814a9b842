//! Brownian-bridge quantities on one interjump interval.
//!
//! Between two consecutive timeline instants a firm's log-asset value is a
//! Brownian motion with drift pinned at both ends. These functions give the
//! probability that the pinned path stays above a constant boundary and the
//! density of the first crossing time. With a linear boundary the caller
//! works in boundary-shifted coordinates, where the boundary is constant.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Pinned endpoints of one interval for one firm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalEndpoints {
    pub t_prev: f64,
    pub t_next: f64,
    /// Post-jump value at `t_prev`.
    pub x_prev: f64,
    /// Pre-jump value at `t_next`.
    pub x_next: f64,
    /// Drift (boundary-shifted).
    pub mu: f64,
    /// Effective volatility.
    pub sigma: f64,
    pub boundary: f64,
}

impl IntervalEndpoints {
    pub fn tau(&self) -> f64 {
        self.t_next - self.t_prev
    }

    fn check(&self) -> Result<()> {
        if !(self.t_next > self.t_prev) {
            return Err(Error::invalid("interval must have t_next > t_prev"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::invalid("bridge volatility must be positive"));
        }
        if ![self.x_prev, self.x_next, self.mu, self.boundary]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::invalid("interval endpoints must be finite"));
        }
        Ok(())
    }
}

/// `1 - P`: probability that the bridge touches the boundary, for distances
/// `above_prev > 0` and `above_next` from the boundary.
#[inline]
pub(crate) fn crossing_probability_raw(above_prev: f64, above_next: f64, var: f64) -> f64 {
    if above_next <= 0.0 {
        1.0
    } else {
        (-2.0 * above_prev * above_next / var).exp()
    }
}

/// Probability that the pinned path stays strictly above the boundary over
/// the whole interval; zero when the right endpoint is at or below it.
pub fn survival_probability(e: &IntervalEndpoints) -> Result<f64> {
    e.check()?;
    let u = e.x_prev - e.boundary;
    if !(u > 0.0) {
        return Err(Error::invalid(
            "survival probability requires the left endpoint above the boundary",
        ));
    }
    let v = e.x_next - e.boundary;
    if v <= 0.0 {
        return Ok(0.0);
    }
    let var = e.tau() * e.sigma * e.sigma;
    Ok(-(-2.0 * u * v / var).exp_m1())
}

/// Complement of [`survival_probability`], computed without cancellation.
pub fn crossing_probability(e: &IntervalEndpoints) -> Result<f64> {
    e.check()?;
    let u = e.x_prev - e.boundary;
    if !(u > 0.0) {
        return Err(Error::invalid(
            "crossing probability requires the left endpoint above the boundary",
        ));
    }
    Ok(crossing_probability_raw(
        u,
        e.x_next - e.boundary,
        e.tau() * e.sigma * e.sigma,
    ))
}

/// Log of the conditional first-crossing density at elapsed time `s` into an
/// interval of length `tau`. `u` and `v` are the endpoint distances above the
/// boundary. Returns `-inf` when `u == 0`.
#[inline]
pub(crate) fn log_crossing_density_raw(u: f64, v: f64, mu: f64, sigma: f64, tau: f64, s: f64) -> f64 {
    let r = tau - s;
    let var = sigma * sigma;
    // transition density of the unconditioned path between the endpoints
    let log_y = -(sigma * (2.0 * PI * tau).sqrt()).ln() - (u - v + mu * tau).powi(2) / (2.0 * tau * var);
    u.ln()
        - (2.0 * PI * var).ln()
        - log_y
        - 1.5 * s.ln()
        - 0.5 * r.ln()
        - (v - mu * r).powi(2) / (2.0 * r * var)
        - (u + mu * s).powi(2) / (2.0 * s * var)
}

/// Conditional density of the first boundary crossing at time `t`, given the
/// interval's endpoints. Integrates to `1 - survival_probability` over the
/// open interval.
pub fn crossing_density(e: &IntervalEndpoints, t: f64) -> Result<f64> {
    e.check()?;
    if !(t > e.t_prev && t < e.t_next) {
        return Err(Error::invalid(format!(
            "crossing time {t} outside the open interval ({}, {})",
            e.t_prev, e.t_next
        )));
    }
    let u = e.x_prev - e.boundary;
    if u < 0.0 {
        return Err(Error::invalid(
            "crossing density requires the left endpoint at or above the boundary",
        ));
    }
    if u == 0.0 {
        return Ok(0.0);
    }
    let lg = log_crossing_density_raw(u, e.x_next - e.boundary, e.mu, e.sigma, e.tau(), t - e.t_prev);
    if lg.is_nan() {
        return Err(Error::numerical("crossing density evaluated to NaN"));
    }
    Ok(if lg < -745.0 { 0.0 } else { lg.exp() })
}

/// 1-based index of the first jump that lands the process at or below its
/// boundary while every earlier pre- and post-jump value stayed above it.
///
/// `prejump[k]`, `postjump[k]` and `boundaries[k]` refer to jump `k + 1`.
/// Returns `None` when no jump causes the default, including when a pre-jump
/// value is already below the boundary (a diffusion crossing).
pub fn first_jump_default_index(prejump: &[f64], postjump: &[f64], boundaries: &[f64]) -> Option<usize> {
    prejump
        .iter()
        .zip(postjump)
        .zip(boundaries)
        .enumerate()
        .try_for_each(|(k, ((&pre, &post), &d))| {
            if pre <= d {
                Err(None)
            } else if post <= d {
                Err(Some(k + 1))
            } else {
                Ok(())
            }
        })
        .err()
        .flatten()
}
