#![allow(dead_code, clippy::excessive_precision)]

use fptmc::bridge::IntervalEndpoints;
use fptmc::model::{DiffusionMatrix, FirmSpec, PortfolioSpec};
use fptmc::stochastic::RngStream;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

// Gauss-Kronrod 15-point nodes and weights; the Gauss 7-point rule uses the
// odd-indexed nodes.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let (f1, f2) = (f(c - h * XGK[j]), f(c + h * XGK[j]));
        k += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            g += WG[j / 2] * (f1 + f2);
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive Gauss-Kronrod quadrature on `[a, b]`: the interval
/// with the largest error estimate is bisected until the summed estimate
/// drops below `tol` or 4000 intervals are in use.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    while parts.len() < 4000 {
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= tol {
            break;
        }
        let k = (0..parts.len())
            .max_by(|&i, &j| parts[i].3.total_cmp(&parts[j].3))
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        for (x, y) in [(lo, mid), (mid, hi)] {
            let (v, e) = gk15(&f, x, y);
            parts.push((x, y, v, e));
        }
    }
    parts.iter().map(|p| p.2).sum()
}

/// Integral over `[a, b]` of a function with integrable `1/sqrt` behaviour
/// at either end: the halves are mapped by `t = a + w^2` and `t = b - w^2`.
pub fn integrate_endpoints(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let w = (m - a).sqrt();
    let left = integrate(|w| 2.0 * w * f(a + w * w), 0.0, w, 0.5 * tol);
    let right = integrate(|w| 2.0 * w * f(b - w * w), 0.0, w, 0.5 * tol);
    left + right
}

pub fn firm(x0: f64, mu: f64, jump_mean: f64, jump_sd: f64) -> FirmSpec {
    FirmSpec {
        x0,
        mu,
        ln_kappa: 0.0,
        gamma: mu,
        jump_mean,
        jump_sd,
    }
}

pub const A_SIGMA: f64 = 0.09000984;
pub const A_LAMBDA: f64 = 0.10001559;
pub const A_JUMP_MEAN: f64 = -0.20003641;
pub const A_JUMP_SD: f64 = 0.50000485;
pub const AA_ROWS: [[f64; 2]; 2] = [[0.06963755, 0.02993134], [0.03387809, 0.06691001]];

/// Single A-rated firm with the fitted parameters.
pub fn a_rated() -> PortfolioSpec {
    PortfolioSpec {
        firms: vec![firm(2.0, -0.001, A_JUMP_MEAN, A_JUMP_SD)],
        diffusion: DiffusionMatrix::diagonal(&[A_SIGMA]).unwrap(),
        lambda: A_LAMBDA,
        interjump_mean: 1.0,
        horizon: 10.0,
        uniform_correlation: None,
    }
}

/// Two A-rated firms with the fitted diffusion loadings.
pub fn aa_pair() -> PortfolioSpec {
    let f = firm(2.0, -0.001, A_JUMP_MEAN, A_JUMP_SD);
    PortfolioSpec {
        firms: vec![f.clone(), f],
        diffusion: DiffusionMatrix::from_rows(AA_ROWS.iter().map(|r| r.to_vec()).collect()).unwrap(),
        lambda: A_LAMBDA,
        interjump_mean: 1.0,
        horizon: 10.0,
        uniform_correlation: None,
    }
}

/// One firm without jumps and `gamma = mu`, distance to default `z`.
pub fn no_jump(z: f64) -> PortfolioSpec {
    PortfolioSpec {
        firms: vec![firm(2.0, -0.001, 0.0, 1.0)],
        diffusion: DiffusionMatrix::diagonal(&[2.0 / z]).unwrap(),
        lambda: 0.0,
        interjump_mean: 1.0,
        horizon: 10.0,
        uniform_correlation: None,
    }
}

/// Kolmogorov-Smirnov distance of a sample from the uniform distribution.
pub fn ks_uniform(xs: &[f64]) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).max((i + 1) as f64 / n - x))
        .fold(0.0, f64::max)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Standard normal CDF by adaptive quadrature, independent of the crate's
/// implementation. Accurate to about 1e-13 absolute.
pub fn phi_oracle(x: f64) -> f64 {
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if x < 0.0 {
        integrate(pdf, x - 40.0, x, 1e-16)
    } else {
        1.0 - integrate(pdf, -x - 40.0, -x, 1e-16)
    }
}

/// Random interval with duration in `tau` and endpoints within a few
/// standard deviations of the boundary; the left end is always above it.
pub fn random_endpoints(rng: &mut ChaCha8Rng, tau: std::ops::Range<f64>) -> IntervalEndpoints {
    let tau = rng.random_range(tau);
    let sigma = rng.random_range(0.05..1.0);
    let scale = sigma * tau.sqrt();
    let boundary = rng.random_range(-1.0..1.0);
    let t_prev = rng.random_range(0.0..3.0);
    IntervalEndpoints {
        t_prev,
        t_next: t_prev + tau,
        x_prev: boundary + scale * rng.random_range(0.05..3.0),
        x_next: boundary + scale * rng.random_range(-1.0..3.0),
        mu: rng.random_range(-1.0..1.0),
        sigma,
        boundary,
    }
}

/// Simulates a pinned bridge on a grid of step `dt`, monitoring against the
/// boundary raised by `0.5826 sigma sqrt(dt)` to correct for crossings missed
/// between grid points. Returns the first crossing time of each path.
pub fn brute_force_crossings(e: &IntervalEndpoints, dt: f64, n_paths: usize, seed: u64) -> Vec<Option<f64>> {
    let steps = (e.tau() / dt).round() as usize;
    let shift = 0.5826 * e.sigma * dt.sqrt();
    let mut stream = RngStream::new(seed, 0);
    (0..n_paths)
        .map(|_| {
            let mut x = e.x_prev;
            for k in 0..steps - 1 {
                let left = e.tau() - k as f64 * dt;
                let mean = x + (e.x_next - x) * dt / left;
                let sd = e.sigma * (dt * (left - dt) / left).sqrt();
                x = mean + sd * stream.standard_normal();
                if x <= e.boundary + shift {
                    return Some(e.t_prev + (k + 1) as f64 * dt);
                }
            }
            None
        })
        .collect()
}

/// `int_0^inf f''(t)^2 dt` for the gamma density, by quadrature of the
/// differentiated density.
pub fn curvature_by_quadrature(alpha: f64, beta: f64) -> f64 {
    let log_c = beta * alpha.ln() - ln_gamma(beta);
    let f2 = |t: f64| {
        if t <= 0.0 {
            return if beta == 3.0 { 2.0 * (log_c).exp() } else { 0.0 };
        }
        let poly = (beta - 1.0) * (beta - 2.0) - 2.0 * alpha * (beta - 1.0) * t + alpha * alpha * t * t;
        (log_c + (beta - 3.0) * t.ln() - alpha * t).exp() * poly
    };
    let mean = beta / alpha;
    let sd = beta.sqrt() / alpha;
    let end = mean + 60.0 * sd;
    let g = |t: f64| f2(t) * f2(t);
    let scale = integrate(g, 0.0, end, 1e-6 * alpha.powi(5));
    integrate(g, 0.0, mean, 1e-15 * scale) + integrate(g, mean, end, 1e-15 * scale)
}
