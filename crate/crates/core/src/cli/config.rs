//! Experiment configuration (TOML).
//!
//! ```toml
//! [portfolio]
//! horizon = 10.0
//! lambda = 0.1
//! interjump_mean = 1.0
//!
//! [[portfolio.firms]]
//! x0 = 2.0
//! mu = -0.001
//! gamma = -0.001
//! ln_kappa = 0.0
//! jump_mean = -0.2
//! jump_sd = 0.5
//!
//! [diffusion]
//! rows = [[0.09]]          # or: vols = [...] with rho = ...
//!
//! [engine]
//! n_runs = 100000
//! seed = 1
//! dt = 0.005
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibrate::{Bounds, FixedSettings, HistoricalCurve, JumpParams};
use crate::error::{Error, Result};
use crate::estimate::DEFAULT_GRID_POINTS;
use crate::model::{DiffusionMatrix, FirmSpec, PortfolioSpec};
use crate::unif::Engine;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub portfolio: PortfolioSection,
    pub diffusion: DiffusionSection,
    #[serde(default)]
    pub engine: EngineSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<CalibrationSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioSection {
    pub horizon: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "one")]
    pub interjump_mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_correlation: Option<f64>,
    pub firms: Vec<FirmSpec>,
}

/// Either explicit loading rows or per-firm volatilities with one common
/// correlation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffusionSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vols: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
}

impl DiffusionSection {
    pub fn matrix(&self) -> Result<DiffusionMatrix> {
        match (&self.rows, &self.vols) {
            (Some(rows), None) if self.rho.is_none() => DiffusionMatrix::from_rows(rows.clone()),
            (None, Some(vols)) => DiffusionMatrix::from_vols_and_correlation(vols, self.rho.unwrap_or(0.0)),
            _ => Err(Error::invalid(
                "[diffusion] takes either `rows` or `vols` (with optional `rho`)",
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineSection {
    #[serde(default = "default_kind")]
    pub kind: Engine,
    #[serde(default = "default_runs")]
    pub n_runs: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Grid step of the discretized engine.
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    /// Thread count; never affects results, so it is left out of manifests.
    #[serde(default = "default_workers", skip_serializing)]
    pub workers: usize,
}

impl Default for EngineSection {
    fn default() -> Self {
        EngineSection {
            kind: default_kind(),
            n_runs: default_runs(),
            seed: default_seed(),
            dt: default_dt(),
            grid_points: default_grid(),
            workers: default_workers(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationSection {
    #[serde(default = "default_horizons")]
    pub horizons: Vec<f64>,
    /// Adds the (A,A) reference columns to correlations.csv.
    #[serde(default)]
    pub reference: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CalibrationMode {
    Single,
    Pair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSection {
    #[serde(default = "default_mode")]
    pub mode: CalibrationMode,
    /// `t,rate` CSV files, relative to the config file. Pair mode reuses a
    /// single curve for both firms.
    #[serde(default)]
    pub historical: Vec<PathBuf>,
    /// Starting point; taken from the portfolio when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vec<f64>>,
    #[serde(default = "default_sim_runs")]
    pub sim_runs: usize,
    #[serde(default = "default_confirm_runs")]
    pub confirm_runs: usize,
    #[serde(default = "default_max_evaluations")]
    pub max_evaluations: usize,
}

fn one() -> f64 {
    1.0
}
fn default_kind() -> Engine {
    Engine::Unif
}
fn default_runs() -> usize {
    100_000
}
fn default_seed() -> u64 {
    1
}
fn default_dt() -> f64 {
    0.005
}
fn default_grid() -> usize {
    DEFAULT_GRID_POINTS
}
fn default_workers() -> usize {
    1
}
fn default_horizons() -> Vec<f64> {
    vec![1.0, 2.0, 5.0, 10.0]
}
fn default_mode() -> CalibrationMode {
    CalibrationMode::Single
}
fn default_sim_runs() -> usize {
    crate::calibrate::CALIBRATION_RUNS
}
fn default_confirm_runs() -> usize {
    crate::calibrate::CONFIRMATION_RUNS
}
fn default_max_evaluations() -> usize {
    500
}

#[derive(Deserialize)]
struct ManifestConfig {
    config: Config,
}

impl Config {
    /// Reads a TOML config, or the `config` echo of a `.json` manifest.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: format!("cannot read config: {e}"),
        })?;
        let cfg_err = |message: String| Error::Config {
            path: path.to_path_buf(),
            message,
        };
        let mut cfg = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str::<ManifestConfig>(&text)
                .map_err(|e| cfg_err(e.to_string()))?
                .config
        } else {
            toml::from_str::<Config>(&text).map_err(|e| cfg_err(e.to_string()))?
        };
        if let Some(cal) = cfg.calibration.as_mut() {
            let base = path.parent().unwrap_or(Path::new("."));
            for h in cal.historical.iter_mut() {
                if h.is_relative() {
                    let joined = base.join(&*h);
                    *h = std::fs::canonicalize(&joined).unwrap_or(joined);
                }
            }
        }
        Ok(cfg)
    }

    pub fn portfolio(&self) -> Result<PortfolioSpec> {
        let p = PortfolioSpec {
            firms: self.portfolio.firms.clone(),
            diffusion: self.diffusion.matrix()?,
            lambda: self.portfolio.lambda,
            interjump_mean: self.portfolio.interjump_mean,
            horizon: self.portfolio.horizon,
            uniform_correlation: self.portfolio.uniform_correlation,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks every section, returning the portfolio.
    pub fn validate(&self) -> Result<PortfolioSpec> {
        let p = self.portfolio()?;
        let e = &self.engine;
        if e.n_runs == 0 {
            return Err(Error::invalid("engine.n_runs must be at least 1"));
        }
        if !(e.dt > 0.0) || e.dt > p.horizon {
            return Err(Error::invalid("engine.dt must lie in (0, horizon]"));
        }
        if e.grid_points < 2 {
            return Err(Error::invalid("engine.grid_points must be at least 2"));
        }
        if let Some(c) = &self.correlation {
            check_horizons(&c.horizons, p.horizon)?;
        }
        if let Some(c) = &self.calibration {
            if c.sim_runs == 0 || c.confirm_runs == 0 || c.max_evaluations == 0 {
                return Err(Error::invalid(
                    "calibration run and evaluation counts must be at least 1",
                ));
            }
        }
        Ok(p)
    }

    pub fn fixed_settings(&self) -> FixedSettings {
        let f = &self.portfolio.firms[0];
        FixedSettings {
            x0: f.x0,
            ln_kappa: f.ln_kappa,
            mu: f.mu,
            gamma: f.gamma,
            interjump_mean: self.portfolio.interjump_mean,
            horizon: self.portfolio.horizon,
        }
    }

    /// Jump law held fixed in pair calibration.
    pub fn jump_params(&self) -> JumpParams {
        let f = &self.portfolio.firms[0];
        JumpParams {
            lambda: self.portfolio.lambda,
            jump_mean: f.jump_mean,
            jump_sd: f.jump_sd,
        }
    }

    /// Calibration starting point implied by the portfolio.
    pub fn default_init(&self, mode: CalibrationMode) -> Result<Vec<f64>> {
        let p = self.portfolio()?;
        match mode {
            CalibrationMode::Single => {
                let f = &p.firms[0];
                Ok(vec![p.diffusion.effective_vol(0)?, p.lambda, f.jump_mean, f.jump_sd])
            }
            CalibrationMode::Pair if p.n_firms() == 2 => Ok(p.diffusion.rows().concat()),
            CalibrationMode::Pair => Err(Error::invalid("pair calibration needs exactly 2 firms")),
        }
    }

    pub fn bounds_override(&self) -> Result<Option<Bounds>> {
        match &self.calibration {
            Some(CalibrationSection {
                lower: Some(l),
                upper: Some(u),
                ..
            }) => Bounds::new(l.clone(), u.clone()).map(Some),
            Some(CalibrationSection {
                lower: None,
                upper: None,
                ..
            })
            | None => Ok(None),
            _ => Err(Error::invalid("calibration bounds need both `lower` and `upper`")),
        }
    }
}

pub(crate) fn check_horizons(horizons: &[f64], horizon: f64) -> Result<()> {
    if horizons.is_empty() {
        return Err(Error::invalid("at least one correlation horizon is required"));
    }
    if horizons.iter().any(|&t| !(t > 0.0 && t <= horizon)) {
        return Err(Error::invalid(format!(
            "correlation horizons must lie in (0, {horizon}]"
        )));
    }
    Ok(())
}

pub fn load_historical(paths: &[PathBuf]) -> Result<Vec<HistoricalCurve>> {
    paths.iter().map(|p| HistoricalCurve::from_csv_path(p)).collect()
}
