//! Uniform-sampling (UNIF) first-passage engine.
//!
//! Each run samples the shared timeline, then walks it interval by interval.
//! The process is only evaluated at timeline instants; inside an interval a
//! firm's crossing is decided by one uniform draw `s` on the stretched window
//! `[T_{j-1}, T_{j-1} + b]` with `b = tau / (1 - P)`, where `P` is the bridge
//! survival probability. `s` lands inside the interval with probability
//! exactly `1 - P`; an accepted draw is recorded with weight `b * g(s)`, `g`
//! being the conditional crossing density, which makes the kernel estimate of
//! the first-passage density unbiased. Jumps that push a firm through its
//! boundary are recorded at the jump instant with weight one.

use serde::Serialize;

use crate::bridge::{crossing_probability_raw, log_crossing_density_raw};
use crate::error::{Error, Result};
use crate::exec::run_indexed;
use crate::model::PortfolioSpec;
use crate::stochastic::{advance_diffusion, sample_thinned_timeline, JumpTimeline, RngStream, SumOfUniforms};

/// Which engine produced a [`SampleSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Unif,
    Euler,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Unif => "unif",
            Engine::Euler => "euler",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unif" => Ok(Engine::Unif),
            "euler" => Ok(Engine::Euler),
            other => Err(Error::invalid(format!(
                "unknown engine '{other}' (expected unif or euler)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingCase {
    /// Diffusive crossing strictly inside an interjump interval.
    Interior,
    /// A jump carried the firm through its boundary.
    JumpBoundary,
    /// First grid point at or below the boundary (discretized engine).
    Grid,
}

/// One firm's first-passage time within a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FptSample {
    pub firm: usize,
    pub time: f64,
    /// Density weight; `b * g(s)` for interior crossings, one otherwise.
    pub weight: f64,
    pub case: CrossingCase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// At most one sample per firm; `Some` iff the firm defaulted.
    pub samples: Vec<Option<FptSample>>,
    pub timeline: JumpTimeline,
}

impl RunOutcome {
    pub fn default_time(&self, firm: usize) -> Option<f64> {
        self.samples[firm].map(|s| s.time)
    }

    pub fn defaulted_by(&self, firm: usize, t: f64) -> bool {
        self.default_time(firm).is_some_and(|d| d <= t)
    }
}

/// Outcomes of `n_runs` independent runs on one portfolio.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub outcomes: Vec<RunOutcome>,
    pub portfolio: PortfolioSpec,
    pub seed: u64,
    pub engine: Engine,
}

impl SampleSet {
    pub fn n_runs(&self) -> usize {
        self.outcomes.len()
    }

    pub fn n_firms(&self) -> usize {
        self.portfolio.n_firms()
    }

    /// `(time, weight)` pairs of every sample recorded for `firm`.
    pub fn weighted_times(&self, firm: usize) -> Vec<(f64, f64)> {
        self.outcomes
            .iter()
            .filter_map(|o| o.samples[firm].map(|s| (s.time, s.weight)))
            .collect()
    }

    /// Fraction of runs in which `firm` has a recorded default time `<= t`.
    /// Interior samples sit uniformly inside their interval, so this is exact
    /// only when `t` is a timeline instant (such as the horizon).
    pub fn default_fraction(&self, firm: usize, t: f64) -> f64 {
        let hits = self.outcomes.iter().filter(|o| o.defaulted_by(firm, t)).count();
        hits as f64 / self.n_runs() as f64
    }

    /// `(1/N) sum w 1{s <= t}`: unbiased for the default probability by `t`
    /// at any `t`.
    pub fn weighted_fraction(&self, firm: usize, t: f64) -> f64 {
        let total: f64 = self
            .outcomes
            .iter()
            .filter_map(|o| o.samples[firm])
            .filter(|s| s.time <= t)
            .map(|s| s.weight)
            .sum();
        total / self.n_runs() as f64
    }
}

/// Per-portfolio constants of the UNIF engine, prepared once and shared by
/// all runs.
#[derive(Debug, Clone)]
pub struct UnifEngine<'a> {
    portfolio: &'a PortfolioSpec,
    start: Vec<f64>,
    drift: Vec<f64>,
    vols: Vec<f64>,
    uniforms: SumOfUniforms,
    timeline_mean: f64,
    jump_probability: f64,
}

impl<'a> UnifEngine<'a> {
    pub fn new(portfolio: &'a PortfolioSpec) -> Result<Self> {
        portfolio.validate()?;
        let vols = (0..portfolio.n_firms())
            .map(|i| portfolio.diffusion.effective_vol(i))
            .collect::<Result<Vec<_>>>()?;
        let uniforms = SumOfUniforms::for_correlation(portfolio.uniform_correlation_target()?)?;
        Ok(UnifEngine {
            portfolio,
            start: portfolio.firms.iter().map(|f| f.shifted_start()).collect(),
            drift: portfolio.firms.iter().map(|f| f.shifted_drift()).collect(),
            vols,
            uniforms,
            timeline_mean: portfolio.timeline_mean(),
            jump_probability: portfolio.jump_probability(),
        })
    }

    pub fn uniform_mixing(&self) -> f64 {
        self.uniforms.mixing()
    }

    /// One Monte Carlo run.
    pub fn run(&self, stream: &mut RngStream) -> RunOutcome {
        let p = self.portfolio;
        let n = p.n_firms();
        let timeline = sample_thinned_timeline(self.timeline_mean, p.horizon, self.jump_probability, stream);
        let mut samples: Vec<Option<FptSample>> = vec![None; n];
        let mut x = self.start.clone();
        let mut prev = vec![0.0; n];
        let mut normals = vec![0.0; n];
        let mut u = vec![0.0; n];
        let mut alive = n;
        let instants = timeline.instants();

        for k in 1..instants.len() {
            let (t0, t1) = (instants[k - 1], instants[k]);
            let tau = t1 - t0;
            prev.copy_from_slice(&x);
            advance_diffusion(&mut x, &self.drift, &p.diffusion, tau, &mut normals, stream);
            self.uniforms.sample_into(&mut u, stream);
            let jump = timeline.is_jump(k);

            for i in 0..n {
                if samples[i].is_some() {
                    if jump {
                        // keep variate consumption independent of defaults
                        stream.standard_normal();
                    }
                    continue;
                }
                let var = tau * self.vols[i] * self.vols[i];
                let q = crossing_probability_raw(prev[i], x[i], var);
                if u[i] < q {
                    // s = t0 + u * b with b = tau / q, accepted since u < q
                    let offset = tau * (u[i] / q);
                    let weight = if offset > 0.0 {
                        let lg = log_crossing_density_raw(prev[i], x[i], self.drift[i], self.vols[i], tau, offset);
                        (tau / q) * lg.exp()
                    } else {
                        0.0
                    };
                    samples[i] = Some(FptSample {
                        firm: i,
                        time: t0 + offset,
                        weight,
                        case: CrossingCase::Interior,
                    });
                    alive -= 1;
                    if jump {
                        stream.standard_normal();
                    }
                } else if jump {
                    let f = &p.firms[i];
                    x[i] += f.jump_mean + f.jump_sd * stream.standard_normal();
                    if x[i] <= 0.0 {
                        samples[i] = Some(FptSample {
                            firm: i,
                            time: t1,
                            weight: 1.0,
                            case: CrossingCase::JumpBoundary,
                        });
                        alive -= 1;
                    }
                }
            }
            if alive == 0 {
                break;
            }
        }
        RunOutcome { samples, timeline }
    }
}

/// Single UNIF run on a freshly prepared engine.
pub fn simulate_run(portfolio: &PortfolioSpec, stream: &mut RngStream) -> Result<RunOutcome> {
    Ok(UnifEngine::new(portfolio)?.run(stream))
}

/// `n_runs` UNIF runs with streams derived from `seed`, single-threaded.
pub fn simulate(portfolio: &PortfolioSpec, n_runs: usize, seed: u64) -> Result<SampleSet> {
    simulate_with_workers(portfolio, n_runs, seed, 1)
}

/// As [`simulate`], spread over `workers` threads. Results are identical for
/// every worker count.
pub fn simulate_with_workers(portfolio: &PortfolioSpec, n_runs: usize, seed: u64, workers: usize) -> Result<SampleSet> {
    if n_runs == 0 {
        return Err(Error::invalid("n_runs must be at least 1"));
    }
    let engine = UnifEngine::new(portfolio)?;
    let outcomes = run_indexed(n_runs, workers, |r| engine.run(&mut RngStream::new(seed, r)))?;
    Ok(SampleSet {
        outcomes,
        portfolio: portfolio.clone(),
        seed,
        engine: Engine::Unif,
    })
}
