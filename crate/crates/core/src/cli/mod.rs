//! `fptmc` command line: config ingestion, experiment orchestration and
//! CSV/JSON output.
//!
//! Every command stages its files in memory and writes them only once the
//! whole computation has succeeded. `manifest.json` echoes the effective
//! configuration, so `--config <dir>/manifest.json` reruns the experiment
//! bit-identically. Timings live in separate files because they vary between
//! runs.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use cpu_time::ProcessTime;
use serde::Serialize;
use serde_json::json;

use crate::baseline::{
    distance_to_default, euler_simulate_with_workers, fit_distance_to_default, nojump_default_probability, EulerConfig,
};
use crate::calibrate::{
    calibrate, model_rates, HistoricalCurve, NelderMeadOptions, PairDerived, PairMap, ParameterMap, SimulationSettings,
    SingleFirmMap,
};
use crate::error::{Error, Result};
use crate::estimate::{correlation_report, firm_density, uniform_grid, FirmDensity};
use crate::model::{DiffusionMatrix, PortfolioSpec};
use crate::unif::{simulate_with_workers, Engine, SampleSet};

pub use config::{CalibrationMode, CalibrationSection, Config, CorrelationSection};

/// Reference (A,A) default correlations at years 1, 2, 5 and 10: the
/// closed-form no-jump values and the simulated jump-diffusion values.
pub const REFERENCE_HORIZONS: [f64; 4] = [1.0, 2.0, 5.0, 10.0];
pub const REFERENCE_CLOSED_FORM: [f64; 4] = [0.0, 0.0002, 0.0165, 0.0775];
pub const REFERENCE_SIMULATED: [f64; 4] = [0.0, 0.0247, 0.0658, 0.0928];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Density and cumulative default-rate curves.
    Simulate,
    /// Pairwise default correlations.
    Correlate,
    /// Fit parameters to historical default rates.
    Calibrate,
    /// UNIF against the discretized engine and the no-jump closed form.
    Compare,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Correlate => "correlate",
            Command::Calibrate => "calibrate",
            Command::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "fptmc",
    version,
    about = "First-passage-time Monte Carlo for correlated jump-diffusions"
)]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_parser = parse_engine)]
    pub engine: Option<Engine>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    /// Calibration mode (calibrate only).
    #[arg(long, value_enum)]
    pub mode: Option<CalibrationMode>,
    /// Historical `t,rate` CSV (calibrate only); repeat for pair mode.
    #[arg(long)]
    pub historical: Vec<PathBuf>,
    /// Comma-separated correlation horizons (correlate only).
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<f64>>,
}

fn parse_engine(s: &str) -> std::result::Result<Engine, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Parses the process arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("fptmc: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command and returns the files written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let mut cfg = Config::from_path(&cli.config)?;
    apply_overrides(&mut cfg, cli);
    let cfg_err = |e: Error| match e {
        Error::InvalidInput(message) => Error::Config {
            path: cli.config.clone(),
            message,
        },
        other => other,
    };
    let portfolio = cfg.validate().map_err(cfg_err)?;
    let staged = match cli.command {
        Command::Simulate => cmd_simulate(&cfg, &portfolio)?,
        Command::Correlate => cmd_correlate(&cfg, &portfolio).map_err(cfg_err)?,
        Command::Calibrate => cmd_calibrate(&cfg).map_err(cfg_err)?,
        Command::Compare => cmd_compare(&cfg, &portfolio)?,
    };
    staged.write(cli.command, &cfg, &cli.out)
}

fn apply_overrides(cfg: &mut Config, cli: &Cli) {
    let e = &mut cfg.engine;
    if let Some(kind) = cli.engine {
        e.kind = kind;
    }
    if let Some(n) = cli.runs {
        e.n_runs = n;
    }
    if let Some(s) = cli.seed {
        e.seed = s;
    }
    if let Some(w) = cli.workers {
        e.workers = w.max(1);
    }
    if let Some(h) = &cli.horizons {
        cfg.correlation
            .get_or_insert_with(|| CorrelationSection {
                horizons: h.clone(),
                reference: false,
            })
            .horizons = h.clone();
    }
    if cli.mode.is_some() || !cli.historical.is_empty() {
        let cal = cfg
            .calibration
            .get_or_insert_with(|| toml::from_str::<CalibrationSection>("").expect("calibration defaults"));
        if let Some(m) = cli.mode {
            cal.mode = m;
        }
        if !cli.historical.is_empty() {
            cal.historical = cli.historical.clone();
        }
    }
}

/// Output files held in memory until the command succeeds.
#[derive(Debug, Clone)]
pub struct Staged {
    pub files: Vec<(&'static str, String)>,
    /// Deterministic headline numbers, echoed into the manifest.
    pub summary: serde_json::Value,
    pub inputs: Vec<HistoricalCurve>,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    engine: &'static str,
    seed: u64,
    n_runs: usize,
    config: &'a Config,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    inputs: &'a [HistoricalCurve],
    outputs: Vec<&'static str>,
    summary: &'a serde_json::Value,
}

impl Staged {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| *n == name).map(|(_, b)| b.as_str())
    }

    fn write(self, command: Command, cfg: &Config, out: &Path) -> Result<Vec<PathBuf>> {
        let mut outputs: Vec<&'static str> = self.files.iter().map(|(n, _)| *n).collect();
        outputs.push("manifest.json");
        outputs.sort_unstable();
        let manifest = RunManifest {
            tool: "fptmc",
            version: env!("CARGO_PKG_VERSION"),
            command: command.name(),
            engine: cfg.engine.kind.name(),
            seed: cfg.engine.seed,
            n_runs: cfg.engine.n_runs,
            config: cfg,
            inputs: &self.inputs,
            outputs,
            summary: &self.summary,
        };
        let manifest = to_json(&manifest)?;
        std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let mut written = vec![];
        for (name, body) in self
            .files
            .iter()
            .map(|(n, b)| (*n, b))
            .chain([("manifest.json", &manifest)])
        {
            let path = out.join(name);
            std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s =
        serde_json::to_string_pretty(v).map_err(|e| Error::numerical(format!("cannot serialize output: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Shortest round-trip decimal; scientific notation for very small or large
/// magnitudes.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

struct Timed {
    set: SampleSet,
    cpu_seconds: f64,
    wall_seconds: f64,
}

impl Timed {
    fn per_run(&self) -> f64 {
        self.cpu_seconds / self.set.n_runs() as f64
    }

    fn json(&self, workers: usize) -> serde_json::Value {
        json!({
            "engine": self.set.engine.name(),
            "n_runs": self.set.n_runs(),
            "workers": workers,
            "cpu_seconds": self.cpu_seconds,
            "wall_seconds": self.wall_seconds,
            "cpu_seconds_per_run": self.per_run(),
        })
    }
}

/// Runs one engine, timing only the simulation itself.
fn run_engine(p: &PortfolioSpec, cfg: &Config, kind: Engine) -> Result<Timed> {
    let e = &cfg.engine;
    let (cpu, wall) = (ProcessTime::now(), Instant::now());
    let set = match kind {
        Engine::Unif => simulate_with_workers(p, e.n_runs, e.seed, e.workers)?,
        Engine::Euler => euler_simulate_with_workers(
            p,
            &EulerConfig {
                dt: e.dt,
                n_runs: e.n_runs,
                seed: e.seed,
            },
            e.workers,
        )?,
    };
    Ok(Timed {
        set,
        cpu_seconds: cpu.elapsed().as_secs_f64(),
        wall_seconds: wall.elapsed().as_secs_f64(),
    })
}

fn densities(set: &SampleSet, grid: &[f64]) -> Result<Vec<FirmDensity>> {
    (0..set.n_firms()).map(|i| firm_density(set, i, grid)).collect()
}

fn curve_csv(grid: &[f64], columns: &[Vec<f64>]) -> String {
    let mut out = String::from("t");
    for i in 0..columns.len() {
        let _ = write!(out, ",firm_{i}");
    }
    out.push('\n');
    for (k, t) in grid.iter().enumerate() {
        out.push_str(&num(*t));
        for c in columns {
            out.push(',');
            out.push_str(&num(c[k]));
        }
        out.push('\n');
    }
    out
}

fn density_summary(d: &[FirmDensity], horizon: f64) -> serde_json::Value {
    d.iter()
        .map(|f| {
            json!({
                "firm": f.firm,
                "samples": f.n_samples,
                "gamma_fit": f.fit,
                "bandwidth": f.density.bandwidth,
                "rate_at_horizon": f.rates().at(horizon),
            })
        })
        .collect()
}

pub fn cmd_simulate(cfg: &Config, p: &PortfolioSpec) -> Result<Staged> {
    let timed = run_engine(p, cfg, cfg.engine.kind)?;
    let grid = uniform_grid(p.horizon, cfg.engine.grid_points);
    let d = densities(&timed.set, &grid)?;
    let values: Vec<Vec<f64>> = d.iter().map(|f| f.density.values.clone()).collect();
    let rates: Vec<Vec<f64>> = d.iter().map(|f| f.rates().rates).collect();
    Ok(Staged {
        files: vec![
            ("density.csv", curve_csv(&grid, &values)),
            ("rates.csv", curve_csv(&grid, &rates)),
            ("timing.json", to_json(&timed.json(cfg.engine.workers))?),
        ],
        summary: json!({ "firms": density_summary(&d, p.horizon) }),
        inputs: vec![],
    })
}

pub fn cmd_correlate(cfg: &Config, p: &PortfolioSpec) -> Result<Staged> {
    if p.n_firms() < 2 {
        return Err(Error::invalid("correlate needs a portfolio with at least 2 firms"));
    }
    let section = cfg.correlation.clone().unwrap_or(CorrelationSection {
        horizons: REFERENCE_HORIZONS.to_vec(),
        reference: false,
    });
    config::check_horizons(&section.horizons, p.horizon)?;
    let timed = run_engine(p, cfg, cfg.engine.kind)?;
    let mut csv = String::from("horizon,pair,rho,p_a,p_b,p_ab,stderr");
    if section.reference {
        csv.push_str(",reference_closed_form,reference_simulated");
    }
    csv.push('\n');
    for a in 0..p.n_firms() {
        for b in (a + 1)..p.n_firms() {
            let report = correlation_report(&timed.set, a, b, &section.horizons)?;
            for e in &report.entries {
                let _ = write!(
                    csv,
                    "{},{a}-{b},{},{},{},{},{}",
                    num(e.horizon),
                    opt_num(e.rho),
                    num(e.p_a),
                    num(e.p_b),
                    num(e.p_ab),
                    opt_num(e.stderr)
                );
                if section.reference {
                    let k = REFERENCE_HORIZONS.iter().position(|&t| t == e.horizon);
                    let _ = write!(
                        csv,
                        ",{},{}",
                        opt_num(k.map(|k| REFERENCE_CLOSED_FORM[k])),
                        opt_num(k.map(|k| REFERENCE_SIMULATED[k]))
                    );
                }
                csv.push('\n');
            }
        }
    }
    Ok(Staged {
        files: vec![
            ("correlations.csv", csv),
            ("timing.json", to_json(&timed.json(cfg.engine.workers))?),
        ],
        summary: json!({ "uniform_correlation_target": p.uniform_correlation_target()? }),
        inputs: vec![],
    })
}

pub fn cmd_calibrate(cfg: &Config) -> Result<Staged> {
    let section = cfg
        .calibration
        .clone()
        .ok_or_else(|| Error::invalid("calibrate needs a [calibration] section or --mode/--historical"))?;
    if section.historical.is_empty() {
        return Err(Error::invalid("calibrate needs at least one historical curve"));
    }
    let curves = config::load_historical(&section.historical)?;
    let init = match &section.init {
        Some(v) => v.clone(),
        None => cfg.default_init(section.mode)?,
    };
    let fixed = cfg.fixed_settings();
    let single = SingleFirmMap { fixed };
    let pair = PairMap {
        fixed,
        jumps: cfg.jump_params(),
    };
    let (map, fitted): (&dyn ParameterMap, Vec<HistoricalCurve>) = match section.mode {
        CalibrationMode::Single => {
            if curves.len() != 1 {
                return Err(Error::invalid("single mode takes exactly one historical curve"));
            }
            (&single, curves.clone())
        }
        CalibrationMode::Pair => match curves.len() {
            1 => (&pair, vec![curves[0].clone(), curves[0].clone()]),
            2 => (&pair, curves.clone()),
            n => {
                return Err(Error::invalid(format!(
                    "pair mode takes 1 or 2 historical curves, got {n}"
                )))
            }
        },
    };
    let settings = SimulationSettings {
        sim_runs: section.sim_runs,
        seed: cfg.engine.seed,
        grid_points: cfg.engine.grid_points,
        workers: cfg.engine.workers,
    };
    let opts = NelderMeadOptions {
        max_evaluations: section.max_evaluations,
        ..Default::default()
    };
    let bounds = cfg.bounds_override()?;
    let (cpu, wall) = (ProcessTime::now(), Instant::now());
    let mut result = calibrate(map, &fitted, &init, bounds.as_ref(), &settings, &opts)?;
    let fitted_portfolio = map.portfolio(&result.params)?;
    if section.mode == CalibrationMode::Pair {
        let m: &DiffusionMatrix = &fitted_portfolio.diffusion;
        result.derived = Some(PairDerived::from_matrix(m)?);
    }

    let confirm = SimulationSettings {
        sim_runs: section.confirm_runs,
        ..settings
    };
    let mut confirmation = vec![];
    for (i, h) in fitted.iter().enumerate() {
        let model = model_rates(&fitted_portfolio, &h.times, &confirm)?.swap_remove(i);
        let gap = model
            .iter()
            .zip(&h.rates)
            .map(|(m, a)| (m - a).abs())
            .fold(0.0, f64::max);
        confirmation.push(json!({
            "firm": i,
            "times": h.times,
            "historical": h.rates,
            "model": model,
            "max_abs_gap": gap,
        }));
    }
    let distance_fit = fitted
        .iter()
        .map(|h| fit_distance_to_default(h).map(|f| json!({ "z": f.z, "saturated": f.saturated })))
        .collect::<Result<Vec<_>>>()?;
    let timing = json!({
        "cpu_seconds": cpu.elapsed().as_secs_f64(),
        "wall_seconds": wall.elapsed().as_secs_f64(),
        "workers": cfg.engine.workers,
        "evaluations": result.evaluations,
    });
    let params: serde_json::Map<String, serde_json::Value> = result
        .names
        .iter()
        .cloned()
        .zip(result.params.iter().map(|&v| json!(v)))
        .collect();
    let body = json!({
        "mode": section.mode,
        "params": params,
        "objective_value": result.objective_value,
        "evaluations": result.evaluations,
        "converged": result.converged,
        "seed": result.seed,
        "sim_runs": result.sim_runs,
        "derived": result.derived,
        "distance_fit": distance_fit,
        "confirmation": { "n_runs": confirm.sim_runs, "firms": confirmation },
        "trace": result.trace,
    });
    Ok(Staged {
        files: vec![
            ("calibration.json", to_json(&body)?),
            ("timing.json", to_json(&timing)?),
        ],
        summary: json!({ "params": params, "objective_value": result.objective_value }),
        inputs: curves,
    })
}

pub fn cmd_compare(cfg: &Config, p: &PortfolioSpec) -> Result<Staged> {
    let grid = uniform_grid(p.horizon, cfg.engine.grid_points);
    let unif = run_engine(p, cfg, Engine::Unif)?;
    let euler = run_engine(p, cfg, Engine::Euler)?;
    let du = densities(&unif.set, &grid)?;
    let de = densities(&euler.set, &grid)?;
    let mut csv = String::from("engine,firm,t,value\n");
    let mut gaps = vec![];
    for i in 0..p.n_firms() {
        let z = distance_to_default(p, i)?;
        let (ru, re) = (du[i].rates(), de[i].rates());
        let closed: Vec<f64> = grid.iter().map(|&t| nojump_default_probability(z, t)).collect();
        for (name, values) in [("unif", &ru.rates), ("euler", &re.rates), ("closed_form", &closed)] {
            for (t, v) in grid.iter().zip(values.iter()) {
                let _ = writeln!(csv, "{name},{i},{},{}", num(*t), num(*v));
            }
        }
        let max_gap = |other: &[f64]| {
            ru.rates
                .iter()
                .zip(other)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        gaps.push(json!({
            "firm": i,
            "distance_to_default": z,
            "max_gap_unif_euler": max_gap(&re.rates),
            "max_gap_unif_closed_form": max_gap(&closed),
        }));
    }
    let speedup = euler.per_run() / unif.per_run();
    let mut timing = String::from("engine,firm,bandwidth,n_runs,cpu_seconds_per_run,speedup\n");
    for (timed, d, ratio) in [(&euler, &de, 1.0), (&unif, &du, speedup)] {
        for f in d.iter() {
            let _ = writeln!(
                timing,
                "{},{},{},{},{},{}",
                timed.set.engine.name(),
                f.firm,
                num(f.density.bandwidth),
                timed.set.n_runs(),
                num(timed.per_run()),
                num(ratio)
            );
        }
    }
    Ok(Staged {
        files: vec![("compare.csv", csv), ("timing.csv", timing)],
        summary: json!({
            "unif": density_summary(&du, p.horizon),
            "euler": density_summary(&de, p.horizon),
            "gaps": gaps,
        }),
        inputs: vec![],
    })
}
