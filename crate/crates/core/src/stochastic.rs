//! Reproducible random sampling: per-run streams, jump timelines, correlated
//! Gaussian increments, jump sizes and correlated uniforms.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{DiffusionMatrix, FirmSpec};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random stream owned by a single Monte Carlo run.
///
/// The stream is a ChaCha8 generator keyed by `(master_seed, substream)` and
/// positioned on the ChaCha stream `run_index`, so each run's variates depend
/// only on those three numbers and never on scheduling.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    run_index: u64,
    substream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, run_index: u64) -> Self {
        Self::with_substream(master_seed, run_index, 0)
    }

    pub fn with_substream(master_seed: u64, run_index: u64, substream: u64) -> Self {
        let key = splitmix64(master_seed ^ splitmix64(substream));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(run_index);
        RngStream {
            master_seed,
            run_index,
            substream,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn run_index(&self) -> u64 {
        self.run_index
    }

    pub fn substream(&self) -> u64 {
        self.substream
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    #[inline]
    pub fn exponential(&mut self, mean: f64) -> f64 {
        let e: f64 = Exp1.sample(&mut self.rng);
        mean * e
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Ordered evaluation instants `0 = T_0 < T_1 < ... < T_M < T_{M+1} = T`
/// shared by all firms within one run.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpTimeline {
    instants: Vec<f64>,
    jumps: Vec<bool>,
}

impl JumpTimeline {
    /// All instants including both endpoints.
    pub fn instants(&self) -> &[f64] {
        &self.instants
    }

    /// Number of interior instants `M`.
    pub fn count(&self) -> usize {
        self.instants.len() - 2
    }

    /// Whether instant `k` (index into [`instants`](Self::instants)) carries
    /// a jump. The endpoints never do.
    pub fn is_jump(&self, k: usize) -> bool {
        self.jumps[k]
    }

    pub fn jump_count(&self) -> usize {
        self.jumps.iter().filter(|&&j| j).count()
    }

    pub fn horizon(&self) -> f64 {
        *self.instants.last().unwrap()
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.instants.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Exponential interjump times with mean `interjump_mean`; every interior
/// instant is a jump.
pub fn sample_jump_timeline(interjump_mean: f64, horizon: f64, stream: &mut RngStream) -> JumpTimeline {
    sample_thinned_timeline(interjump_mean, horizon, 1.0, stream)
}

/// Like [`sample_jump_timeline`] but each interior instant independently
/// carries a jump with probability `jump_probability`. One uniform is consumed
/// per interior instant whatever the probability.
pub fn sample_thinned_timeline(
    interjump_mean: f64,
    horizon: f64,
    jump_probability: f64,
    stream: &mut RngStream,
) -> JumpTimeline {
    let mut instants = vec![0.0];
    let mut jumps = vec![false];
    let mut t = stream.exponential(interjump_mean);
    while t < horizon {
        // exponential draws are almost surely positive; ties at 0 are skipped
        if t > *instants.last().unwrap() {
            instants.push(t);
            jumps.push(stream.uniform() < jump_probability);
        }
        t += stream.exponential(interjump_mean);
    }
    instants.push(horizon);
    jumps.push(false);
    JumpTimeline { instants, jumps }
}

/// Adds `drift * tau + sigma * sqrt(tau) * N(0, I)` to `x` in place.
/// `normals` is scratch space of the same length as `x`.
#[inline]
pub fn advance_diffusion(
    x: &mut [f64],
    drift: &[f64],
    diffusion: &DiffusionMatrix,
    tau: f64,
    normals: &mut [f64],
    stream: &mut RngStream,
) {
    let sq = tau.sqrt();
    for z in normals.iter_mut() {
        *z = stream.standard_normal();
    }
    for (i, xi) in x.iter_mut().enumerate() {
        let shock: f64 = diffusion.row(i).iter().zip(normals.iter()).map(|(s, z)| s * z).sum();
        *xi += drift[i] * tau + sq * shock;
    }
}

/// Pre-jump values `X_i(T_j^-)` given post-jump values `X_i(T_{j-1}^+)`.
pub fn sample_interjump_endpoint(
    x_prev: &[f64],
    drift: &[f64],
    diffusion: &DiffusionMatrix,
    tau: f64,
    stream: &mut RngStream,
) -> Vec<f64> {
    let mut x = x_prev.to_vec();
    let mut normals = vec![0.0; x.len()];
    advance_diffusion(&mut x, drift, diffusion, tau, &mut normals, stream);
    x
}

/// Independent normal jump sizes, one per firm.
pub fn sample_jump_sizes(firms: &[FirmSpec], stream: &mut RngStream) -> Vec<f64> {
    firms
        .iter()
        .map(|f| f.jump_mean + f.jump_sd * stream.standard_normal())
        .collect()
}

/// Distribution of `S = a U_0 + U` for independent uniforms: a trapezoid with
/// ramps of width `min(a, 1)` and a plateau up to `max(a, 1)`.
#[derive(Debug, Clone, Copy)]
struct Trapezoid {
    short: f64,
    long: f64,
}

impl Trapezoid {
    fn new(a: f64) -> Self {
        Trapezoid {
            short: a.min(1.0),
            long: a.max(1.0),
        }
    }

    fn cdf(&self, s: f64) -> f64 {
        let (w1, w2) = (self.short, self.long);
        let total = w1 + w2;
        if s <= 0.0 {
            0.0
        } else if s >= total {
            1.0
        } else if w1 == 0.0 {
            s / w2
        } else if s < w1 {
            s * s / (2.0 * w1 * w2)
        } else if s <= w2 {
            (s - 0.5 * w1) / w2
        } else {
            let r = total - s;
            1.0 - r * r / (2.0 * w1 * w2)
        }
    }

    /// `G(s) = int_0^s F`.
    fn cdf_integral(&self, s: f64) -> f64 {
        let (w1, w2) = (self.short, self.long);
        let total = w1 + w2;
        if s <= 0.0 {
            return 0.0;
        }
        if w1 == 0.0 {
            return if s <= w2 {
                s * s / (2.0 * w2)
            } else {
                0.5 * w2 + (s - w2)
            };
        }
        let g1 = w1 * w1 / (6.0 * w2);
        let g2 = g1 + ((w2 - 0.5 * w1).powi(2) - (0.5 * w1).powi(2)) / (2.0 * w2);
        let g3 = g2 + w1 - w1.powi(3) / (6.0 * w1 * w2);
        if s <= w1 {
            s.powi(3) / (6.0 * w1 * w2)
        } else if s <= w2 {
            g1 + ((s - 0.5 * w1).powi(2) - (0.5 * w1).powi(2)) / (2.0 * w2)
        } else if s <= total {
            g2 + (s - w2) - (w1.powi(3) - (total - s).powi(3)) / (6.0 * w1 * w2)
        } else {
            g3 + (s - total)
        }
    }
}

const GAUSS_LEGENDRE_5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

/// Sum-of-uniforms generator for equicorrelated uniform vectors.
///
/// Each coordinate is `F(a U_0 + U_i)` where `F` is the trapezoidal CDF of
/// `a U_0 + U_i`, so every marginal is exactly uniform and the shared `U_0`
/// induces positive dependence controlled by the mixing weight `a`.
#[derive(Debug, Clone, Copy)]
pub struct SumOfUniforms {
    mixing: f64,
    shape: Trapezoid,
}

/// Largest mixing weight searched by [`calibrate_mixing`].
const MAX_MIXING: f64 = 1.0e4;

impl SumOfUniforms {
    pub fn with_mixing(mixing: f64) -> Result<Self> {
        if !(mixing >= 0.0) || !mixing.is_finite() {
            return Err(Error::invalid("mixing weight must be finite and non-negative"));
        }
        Ok(SumOfUniforms {
            mixing,
            shape: Trapezoid::new(mixing),
        })
    }

    /// Generator whose pairwise Pearson correlation equals `target`.
    pub fn for_correlation(target: f64) -> Result<Self> {
        Self::with_mixing(calibrate_mixing(target)?)
    }

    pub fn mixing(&self) -> f64 {
        self.mixing
    }

    /// Pearson correlation between two coordinates, computed exactly.
    ///
    /// With `m(u) = E[F(a u + U)] = G(a u + 1) - G(a u)`, the correlation is
    /// `12 E[m(U_0)^2] - 3`. `m` is piecewise cubic, so Gauss-Legendre on each
    /// smooth piece integrates `m^2` exactly.
    pub fn correlation(&self) -> f64 {
        let a = self.mixing;
        if a == 0.0 {
            return 0.0;
        }
        let tr = self.shape;
        let m = |u: f64| tr.cdf_integral(a * u + 1.0) - tr.cdf_integral(a * u);
        let knots = [tr.short, tr.long, tr.short + tr.long];
        let mut cuts = vec![0.0, 1.0];
        for &k in &knots {
            for c in [k / a, (k - 1.0) / a] {
                if c > 0.0 && c < 1.0 {
                    cuts.push(c);
                }
            }
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut second_moment = 0.0;
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            for &(x, wt) in &GAUSS_LEGENDRE_5 {
                let v = m(mid + half * x);
                second_moment += wt * half * v * v;
            }
        }
        (12.0 * second_moment - 3.0).clamp(0.0, 1.0)
    }

    /// Fills `out` with one correlated uniform vector.
    #[inline]
    pub fn sample_into(&self, out: &mut [f64], stream: &mut RngStream) {
        if self.mixing == 0.0 || out.len() == 1 {
            for v in out.iter_mut() {
                *v = stream.uniform();
            }
            return;
        }
        let common = self.mixing * stream.uniform();
        for v in out.iter_mut() {
            *v = self.shape.cdf(common + stream.uniform());
        }
    }
}

/// Mixing weight `a >= 0` giving pairwise correlation `target_corr`, found by
/// bisection on the exact correlation of the construction.
pub fn calibrate_mixing(target_corr: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&target_corr) {
        return Err(Error::invalid(format!(
            "sum-of-uniforms correlation target {target_corr} outside [0, 1)"
        )));
    }
    if target_corr == 0.0 {
        return Ok(0.0);
    }
    let corr = |a: f64| SumOfUniforms::with_mixing(a).map(|s| s.correlation());
    if corr(MAX_MIXING)? < target_corr {
        return Err(Error::invalid(format!(
            "correlation target {target_corr} is beyond what the sum-of-uniforms generator reaches"
        )));
    }
    let (mut lo, mut hi) = (0.0, MAX_MIXING);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if corr(mid)? < target_corr {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Target correlation structure for [`sample_correlated_uniforms`].
#[derive(Debug, Clone, PartialEq)]
pub enum UniformTarget {
    Equicorrelated(f64),
    /// Row-major `n x n` matrix of pairwise targets; only the mean
    /// off-diagonal value is honoured.
    Pairwise(Vec<f64>),
}

impl UniformTarget {
    fn equicorrelation(&self, n: usize) -> Result<f64> {
        match self {
            UniformTarget::Equicorrelated(r) => Ok(*r),
            UniformTarget::Pairwise(m) => {
                if m.len() != n * n {
                    return Err(Error::invalid("pairwise target matrix has the wrong size"));
                }
                if n < 2 {
                    return Ok(0.0);
                }
                let off: Vec<f64> = (0..n)
                    .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                    .map(|(i, j)| m[i * n + j])
                    .collect();
                let mean = off.iter().sum::<f64>() / off.len() as f64;
                if off.iter().any(|v| (v - mean).abs() > 1e-12) {
                    log::warn!("pairwise uniform correlation targets differ; using their mean {mean:.4}");
                }
                Ok(mean)
            }
        }
    }
}

/// `n` uniforms on `[0, 1]` with (approximately) the requested correlation.
pub fn sample_correlated_uniforms(n: usize, target: &UniformTarget, stream: &mut RngStream) -> Result<Vec<f64>> {
    let rho = if n < 2 { 0.0 } else { target.equicorrelation(n)? };
    let gen = SumOfUniforms::for_correlation(rho)?;
    let mut out = vec![0.0; n];
    gen.sample_into(&mut out, stream);
    Ok(out)
}
