//! Fitting model parameters to historical cumulative default-rate curves.
//!
//! The objective runs the UNIF engine with a fixed seed, so the loss is a
//! deterministic (if rough) function of the parameters, and a box-projected
//! Nelder-Mead simplex searches it without gradients.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{firm_density, uniform_grid, DEFAULT_GRID_POINTS};
use crate::model::{DiffusionMatrix, FirmSpec, PortfolioSpec};
use crate::unif::simulate_with_workers;

/// Observed cumulative default rates at positive horizons.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoricalCurve {
    pub times: Vec<f64>,
    pub rates: Vec<f64>,
}

impl HistoricalCurve {
    pub fn new(times: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        let c = HistoricalCurve { times, rates };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() || self.times.len() != self.rates.len() {
            return Err(Error::invalid(
                "historical curve needs matching, non-empty times and rates",
            ));
        }
        if !(self.times[0] > 0.0) || self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid(
                "historical times must be positive and strictly increasing",
            ));
        }
        if self.rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::invalid("historical rates must lie in [0, 1]"));
        }
        if self.rates.windows(2).any(|w| w[1] < w[0]) {
            log::warn!("historical default rates are not monotone");
        }
        Ok(())
    }

    /// Parses `t,rate` CSV text. `origin` names the source in error messages.
    pub fn from_csv_str(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Config {
            path: origin.to_path_buf(),
            message: format!("line {line}: {msg}"),
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, header)) if header.trim().replace(' ', "") == "t,rate" => {}
            Some((i, header)) => return Err(err(i + 1, format!("expected header 't,rate', found '{header}'"))),
            None => return Err(err(1, "empty file".into())),
        }
        let (mut times, mut rates) = (vec![], vec![]);
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 2 {
                return Err(err(i + 1, format!("expected 2 fields, found {}", fields.len())));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(i + 1, format!("'{s}' is not a number")))
            };
            times.push(parse(fields[0])?);
            rates.push(parse(fields[1])?);
        }
        HistoricalCurve::new(times, rates).map_err(|e| Error::Config {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text, path)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,rate\n");
        for (t, r) in self.times.iter().zip(&self.rates) {
            out.push_str(&format!("{t},{r}\n"));
        }
        out
    }
}

/// Box constraints; `lower[i] == upper[i]` pins a coordinate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::invalid("bounds need equal lengths and lower <= upper"));
        }
        Ok(Bounds { lower, upper })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.lower.len()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    fn project(&self, x: &mut [f64]) {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evaluations: usize,
    /// Stop once every vertex is within this distance of the best one.
    pub diameter_tolerance: f64,
    /// Per-coordinate initial simplex offsets; derived from `x0` and the
    /// bounds when `None`.
    pub initial_step: Option<Vec<f64>>,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_evaluations: 500,
            diameter_tolerance: 1e-5,
            initial_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizeOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Best loss seen after each evaluation.
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Nelder-Mead simplex search inside a box. Trial points are clamped onto the
/// box; pinned coordinates are left out of the simplex.
pub fn minimize<F>(mut loss: F, x0: &[f64], bounds: &Bounds, opts: &NelderMeadOptions) -> Result<MinimizeOutcome>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !bounds.contains(x0) {
        return Err(Error::invalid("initial point lies outside the bounds"));
    }
    let free: Vec<usize> = (0..x0.len()).filter(|&i| bounds.upper[i] > bounds.lower[i]).collect();
    let dim = free.len();
    let mut evaluations = 0usize;
    let mut trace = Vec::new();
    let mut best_seen = f64::INFINITY;

    let f0 = loss(x0)?;
    if !f0.is_finite() {
        return Err(Error::numerical(format!("loss at the initial point is {f0}")));
    }
    evaluations += 1;
    best_seen = best_seen.min(f0);
    trace.push(best_seen);
    if dim == 0 {
        return Ok(MinimizeOutcome {
            x: x0.to_vec(),
            value: f0,
            evaluations,
            trace,
            converged: true,
        });
    }

    let to_full = |y: &[f64]| -> Vec<f64> {
        let mut x = x0.to_vec();
        for (k, &i) in free.iter().enumerate() {
            x[i] = y[k];
        }
        bounds.project(&mut x);
        x
    };
    let to_free = |x: &[f64]| -> Vec<f64> { free.iter().map(|&i| x[i]).collect() };
    let mut eval = |y: &[f64], evaluations: &mut usize, trace: &mut Vec<f64>| -> (Vec<f64>, f64) {
        let x = to_full(y);
        let v = match loss(&x) {
            Ok(v) if v.is_finite() => v,
            Ok(_) | Err(_) => f64::INFINITY,
        };
        *evaluations += 1;
        best_seen = best_seen.min(v);
        trace.push(best_seen);
        (to_free(&x), v)
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(to_free(x0), f0)];
    for (k, &i) in free.iter().enumerate() {
        let span = bounds.upper[i] - bounds.lower[i];
        let mut step = match &opts.initial_step {
            Some(s) => s[i],
            None if x0[i] != 0.0 => 0.1 * x0[i].abs(),
            None => 0.025 * span,
        };
        step = step.min(0.5 * span);
        if x0[i] + step > bounds.upper[i] {
            step = -step;
        }
        let mut y = to_free(x0);
        y[k] += step;
        simplex.push(eval(&y, &mut evaluations, &mut trace));
    }

    let mut converged = false;
    while evaluations < opts.max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .map(|(y, _)| {
                y.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        if diameter < opts.diameter_tolerance {
            converged = true;
            break;
        }
        let worst = simplex[dim].clone();
        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|(y, _)| y[k]).sum::<f64>() / dim as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect() };

        let reflected = eval(&along(1.0), &mut evaluations, &mut trace);
        if reflected.1 < simplex[0].1 {
            let expanded = eval(&along(2.0), &mut evaluations, &mut trace);
            simplex[dim] = if expanded.1 < reflected.1 { expanded } else { reflected };
            continue;
        }
        if reflected.1 < simplex[dim - 1].1 {
            simplex[dim] = reflected;
            continue;
        }
        let contracted = if reflected.1 < worst.1 {
            eval(&along(0.5), &mut evaluations, &mut trace)
        } else {
            eval(&along(-0.5), &mut evaluations, &mut trace)
        };
        if contracted.1 < reflected.1.min(worst.1) {
            simplex[dim] = contracted;
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            if evaluations >= opts.max_evaluations {
                break;
            }
            let y: Vec<f64> = best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
            *vertex = eval(&y, &mut evaluations, &mut trace);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (y, value) = simplex.swap_remove(0);
    Ok(MinimizeOutcome {
        x: to_full(&y),
        value,
        evaluations,
        trace,
        converged,
    })
}

/// Simulation settings shared by every objective evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationSettings {
    pub sim_runs: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub workers: usize,
}

impl SimulationSettings {
    pub fn new(sim_runs: usize, seed: u64) -> Self {
        SimulationSettings {
            sim_runs,
            seed,
            grid_points: DEFAULT_GRID_POINTS,
            workers: 1,
        }
    }
}

/// Default run count for objective evaluations.
pub const CALIBRATION_RUNS: usize = 20_000;
/// Run count of the confirmation simulation after a fit.
pub const CONFIRMATION_RUNS: usize = 100_000;

/// Maps a free parameter vector onto a portfolio.
pub trait ParameterMap {
    fn names(&self) -> Vec<&'static str>;
    fn default_bounds(&self) -> Bounds;
    fn portfolio(&self, params: &[f64]) -> Result<PortfolioSpec>;
}

/// Quantities held fixed during calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedSettings {
    pub x0: f64,
    pub ln_kappa: f64,
    pub mu: f64,
    pub gamma: f64,
    pub interjump_mean: f64,
    pub horizon: f64,
}

impl Default for FixedSettings {
    fn default() -> Self {
        FixedSettings {
            x0: 2.0,
            ln_kappa: 0.0,
            mu: -0.001,
            gamma: -0.001,
            interjump_mean: 1.0,
            horizon: 10.0,
        }
    }
}

impl FixedSettings {
    fn firm(&self, jump_mean: f64, jump_sd: f64) -> FirmSpec {
        FirmSpec {
            x0: self.x0,
            mu: self.mu,
            ln_kappa: self.ln_kappa,
            gamma: self.gamma,
            jump_mean,
            jump_sd,
        }
    }
}

/// Single firm, free parameters `(sigma, lambda, jump_mean, jump_sd)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SingleFirmMap {
    pub fixed: FixedSettings,
}

impl ParameterMap for SingleFirmMap {
    fn names(&self) -> Vec<&'static str> {
        vec!["sigma", "lambda", "jump_mean", "jump_sd"]
    }

    fn default_bounds(&self) -> Bounds {
        Bounds {
            lower: vec![1e-4, 0.0, -2.0, 1e-3],
            upper: vec![1.0, 2.0, 2.0, 2.0],
        }
    }

    fn portfolio(&self, p: &[f64]) -> Result<PortfolioSpec> {
        if p.len() != 4 {
            return Err(Error::invalid("single-firm calibration takes 4 parameters"));
        }
        Ok(PortfolioSpec {
            firms: vec![self.fixed.firm(p[2], p[3])],
            diffusion: DiffusionMatrix::diagonal(&[p[0]])?,
            lambda: p[1],
            interjump_mean: self.fixed.interjump_mean,
            horizon: self.fixed.horizon,
            uniform_correlation: None,
        })
    }
}

/// Jump law shared by both firms of a pair calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpParams {
    pub lambda: f64,
    pub jump_mean: f64,
    pub jump_sd: f64,
}

/// Two firms, free parameters `(sigma_11, sigma_12, sigma_21, sigma_22)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMap {
    pub fixed: FixedSettings,
    pub jumps: JumpParams,
}

impl ParameterMap for PairMap {
    fn names(&self) -> Vec<&'static str> {
        vec!["sigma_11", "sigma_12", "sigma_21", "sigma_22"]
    }

    fn default_bounds(&self) -> Bounds {
        Bounds {
            lower: vec![1e-4; 4],
            upper: vec![1.0; 4],
        }
    }

    fn portfolio(&self, p: &[f64]) -> Result<PortfolioSpec> {
        if p.len() != 4 {
            return Err(Error::invalid("pair calibration takes 4 parameters"));
        }
        let firm = self.fixed.firm(self.jumps.jump_mean, self.jumps.jump_sd);
        Ok(PortfolioSpec {
            firms: vec![firm.clone(), firm],
            diffusion: DiffusionMatrix::from_rows(vec![vec![p[0], p[1]], vec![p[2], p[3]]])?,
            lambda: self.jumps.lambda,
            interjump_mean: self.fixed.interjump_mean,
            horizon: self.fixed.horizon,
            uniform_correlation: None,
        })
    }
}

/// Model cumulative default rates of every firm at `times`, from a UNIF
/// simulation and the kernel density estimate.
pub fn model_rates(portfolio: &PortfolioSpec, times: &[f64], settings: &SimulationSettings) -> Result<Vec<Vec<f64>>> {
    let set = simulate_with_workers(portfolio, settings.sim_runs, settings.seed, settings.workers)?;
    let grid = uniform_grid(portfolio.horizon, settings.grid_points);
    (0..portfolio.n_firms())
        .map(|i| {
            let curve = firm_density(&set, i, &grid)?.rates();
            Ok(times.iter().map(|&t| curve.at(t)).collect())
        })
        .collect()
}

/// `sum_i sqrt(sum_j ((P_i(t_j) - A_i(t_j)) / t_j)^2)` for model rates
/// aligned with each historical curve.
pub fn loss_from_rates(model: &[Vec<f64>], historical: &[HistoricalCurve]) -> f64 {
    model
        .iter()
        .zip(historical)
        .map(|(m, h)| {
            m.iter()
                .zip(h.times.iter().zip(&h.rates))
                .map(|(p, (t, a))| ((p - a) / t).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .sum()
}

/// Calibration loss at `params`; deterministic for fixed settings.
pub fn objective(
    map: &dyn ParameterMap,
    params: &[f64],
    historical: &[HistoricalCurve],
    settings: &SimulationSettings,
) -> Result<f64> {
    objective_within(map, params, &map.default_bounds(), historical, settings)
}

fn objective_within(
    map: &dyn ParameterMap,
    params: &[f64],
    bounds: &Bounds,
    historical: &[HistoricalCurve],
    settings: &SimulationSettings,
) -> Result<f64> {
    if !bounds.contains(params) {
        return Err(Error::invalid(format!(
            "parameters {params:?} outside the calibration bounds"
        )));
    }
    let portfolio = map.portfolio(params)?;
    if historical.len() != portfolio.n_firms() {
        return Err(Error::invalid(format!(
            "{} historical curves for {} firms",
            historical.len(),
            portfolio.n_firms()
        )));
    }
    let set = simulate_with_workers(&portfolio, settings.sim_runs, settings.seed, settings.workers)?;
    let grid = uniform_grid(portfolio.horizon, settings.grid_points);
    let model = historical
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let curve = firm_density(&set, i, &grid)?.rates();
            Ok(h.times.iter().map(|&t| curve.at(t)).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(loss_from_rates(&model, historical))
}

/// Diffusion volatilities and correlation implied by a fitted 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairDerived {
    pub sigma_1: f64,
    pub sigma_2: f64,
    pub rho_12: f64,
}

impl PairDerived {
    pub fn from_matrix(m: &DiffusionMatrix) -> Result<Self> {
        Ok(PairDerived {
            sigma_1: m.effective_vol(0)?,
            sigma_2: m.effective_vol(1)?,
            rho_12: m.diffusion_correlation(0, 1)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub names: Vec<String>,
    pub params: Vec<f64>,
    pub objective_value: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub seed: u64,
    pub sim_runs: usize,
    pub trace: Vec<f64>,
    pub derived: Option<PairDerived>,
}

impl CalibrationResult {
    pub fn param(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.params[i])
    }
}

/// Minimizes the simulation objective over `map`'s parameters from `init`.
pub fn calibrate(
    map: &dyn ParameterMap,
    historical: &[HistoricalCurve],
    init: &[f64],
    bounds: Option<&Bounds>,
    settings: &SimulationSettings,
    opts: &NelderMeadOptions,
) -> Result<CalibrationResult> {
    for h in historical {
        h.validate()?;
    }
    let default_bounds = map.default_bounds();
    let bounds = bounds.unwrap_or(&default_bounds);
    let outcome = minimize(
        |p| objective_within(map, p, bounds, historical, settings),
        init,
        bounds,
        opts,
    )?;
    Ok(CalibrationResult {
        names: map.names().into_iter().map(String::from).collect(),
        params: outcome.x,
        objective_value: outcome.value,
        evaluations: outcome.evaluations,
        converged: outcome.converged,
        seed: settings.seed,
        sim_runs: settings.sim_runs,
        trace: outcome.trace,
        derived: None,
    })
}

/// Fits `(sigma, lambda, jump_mean, jump_sd)` of one firm.
pub fn calibrate_single_firm(
    historical: &HistoricalCurve,
    init: [f64; 4],
    fixed: FixedSettings,
    settings: &SimulationSettings,
) -> Result<CalibrationResult> {
    let map = SingleFirmMap { fixed };
    calibrate(
        &map,
        std::slice::from_ref(historical),
        &init,
        None,
        settings,
        &NelderMeadOptions::default(),
    )
}

/// Fits the 2x2 diffusion loading matrix of two firms that share a jump law.
pub fn calibrate_pair(
    historical: [&HistoricalCurve; 2],
    jumps: JumpParams,
    init: [f64; 4],
    fixed: FixedSettings,
    bounds: Option<&Bounds>,
    settings: &SimulationSettings,
) -> Result<CalibrationResult> {
    let map = PairMap { fixed, jumps };
    let curves = [historical[0].clone(), historical[1].clone()];
    let mut result = calibrate(&map, &curves, &init, bounds, settings, &NelderMeadOptions::default())?;
    let p = &result.params;
    let m = DiffusionMatrix::from_rows(vec![vec![p[0], p[1]], vec![p[2], p[3]]])?;
    result.derived = Some(PairDerived::from_matrix(&m)?);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let c = [0.3, -0.7, 1.2, 0.05];
        let bounds = Bounds::new(vec![-5.0; 4], vec![5.0; 4]).unwrap();
        let out = minimize(
            |x| Ok(x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum()),
            &[0.0, 0.0, 0.0, 0.0],
            &bounds,
            &NelderMeadOptions {
                max_evaluations: 5000,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(out.converged);
        for (a, b) in out.x.iter().zip(&c) {
            assert!((a - b).abs() < 1e-4, "{:?}", out.x);
        }
    }

    #[test]
    fn rosenbrock() {
        let bounds = Bounds::new(vec![-5.0; 2], vec![5.0; 2]).unwrap();
        let out = minimize(
            |x| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)),
            &[-1.2, 1.0],
            &bounds,
            &NelderMeadOptions::default(),
        )
        .unwrap();
        assert!(out.evaluations <= 500);
        assert!(out.value < 1e-6, "{out:?}");
    }

    #[test]
    fn iterates_stay_in_the_box() {
        // the unconstrained minimum is at (-3, -3), outside the box
        let bounds = Bounds::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let mut seen = vec![];
        let out = minimize(
            |x| {
                seen.push(x.to_vec());
                Ok((x[0] + 3.0).powi(2) + (x[1] + 3.0).powi(2))
            },
            &[0.0, 0.5],
            &bounds,
            &NelderMeadOptions::default(),
        )
        .unwrap();
        assert!(seen.iter().all(|x| bounds.contains(x)));
        assert!(out.x[0].abs() < 1e-4 && out.x[1].abs() < 1e-4);
    }

    #[test]
    fn best_so_far_is_monotone_and_pins_hold() {
        let bounds = Bounds::new(vec![-2.0, 0.5, -2.0], vec![2.0, 0.5, 2.0]).unwrap();
        let out = minimize(
            |x| Ok((x[0] - 1.0).powi(2) + (x[2] + 0.5).powi(2) + x[1]),
            &[0.0, 0.5, 0.0],
            &bounds,
            &NelderMeadOptions::default(),
        )
        .unwrap();
        assert!(out.trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(out.x[1], 0.5);
        assert_eq!(out.trace.len(), out.evaluations);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        let bounds = Bounds::new(vec![-1.0], vec![1.0]).unwrap();
        assert!(minimize(|_| Ok(f64::NAN), &[0.0], &bounds, &NelderMeadOptions::default()).is_err());
        assert!(minimize(|_| Ok(1.0), &[2.0], &bounds, &NelderMeadOptions::default()).is_err());
    }

    #[test]
    fn loss_is_homogeneous_in_residuals() {
        let h = HistoricalCurve::new(vec![1.0, 2.0, 5.0], vec![0.01, 0.02, 0.04]).unwrap();
        let model = vec![vec![0.015, 0.018, 0.05]];
        let doubled: Vec<Vec<f64>> = vec![model[0].iter().zip(&h.rates).map(|(m, a)| a + 2.0 * (m - a)).collect()];
        let l1 = loss_from_rates(&model, std::slice::from_ref(&h));
        let l2 = loss_from_rates(&doubled, std::slice::from_ref(&h));
        assert!((l2 - 2.0 * l1).abs() < 1e-15);
    }

    #[test]
    fn zero_history_and_no_defaults_gives_zero_loss() {
        let h = HistoricalCurve::new((1..=10).map(f64::from).collect(), vec![0.0; 10]).unwrap();
        let map = SingleFirmMap::default();
        // tiny volatility, no jumps: the firm can never reach its boundary
        let loss = objective(&map, &[1e-4, 0.0, -0.2, 0.5], &[h], &SimulationSettings::new(2000, 1)).unwrap();
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn objective_rejects_out_of_bounds() {
        let h = HistoricalCurve::new(vec![1.0], vec![0.0]).unwrap();
        let map = SingleFirmMap::default();
        let err = objective(&map, &[0.09, -0.1, -0.2, 0.5], &[h], &SimulationSettings::new(10, 1));
        assert!(err.is_err());
    }

    #[test]
    fn csv_parsing() {
        let p = Path::new("hist.csv");
        let c = HistoricalCurve::from_csv_str("t,rate\n1,0.001\n2, 0.003\n\n", p).unwrap();
        assert_eq!(c.times, vec![1.0, 2.0]);
        assert_eq!(c.rates, vec![0.001, 0.003]);
        let err = HistoricalCurve::from_csv_str("t,rate\n1,0.001\n2,abc\n", p).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(HistoricalCurve::from_csv_str("time,r\n1,0\n", p).is_err());
        assert!(HistoricalCurve::from_csv_str("t,rate\n1,0.1,3\n", p).is_err());
        assert!(HistoricalCurve::from_csv_str("t,rate\n2,0.1\n1,0.2\n", p).is_err());
        let round = HistoricalCurve::from_csv_str(&c.to_csv(), p).unwrap();
        assert_eq!(round, c);
    }
}
