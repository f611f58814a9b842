//! Firms, portfolios, default thresholds and the diffusion loading matrix.
//!
//! Every firm follows `dX_i = mu_i dt + sum_k sigma_ik dW_k + dZ_i` in
//! log-asset space and defaults the first time `X_i(t)` reaches the
//! boundary `D_i(t) = gamma_i t + ln(kappa_i)`. Downstream code works in the
//! shifted coordinate `Y_i(t) = X_i(t) - D_i(t)`, which has drift
//! `mu_i - gamma_i` and a constant boundary at zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One firm's log-asset dynamics and liability boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirmSpec {
    /// Initial log-asset value `X(0)`.
    pub x0: f64,
    /// Drift of the log-asset value per unit time.
    pub mu: f64,
    /// `ln(kappa)`, the log liability level at t = 0.
    pub ln_kappa: f64,
    /// Liability growth rate.
    pub gamma: f64,
    /// Mean of the normal jump size.
    pub jump_mean: f64,
    /// Standard deviation of the normal jump size.
    pub jump_sd: f64,
}

impl FirmSpec {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("x0", self.x0),
            ("mu", self.mu),
            ("ln_kappa", self.ln_kappa),
            ("gamma", self.gamma),
            ("jump_mean", self.jump_mean),
            ("jump_sd", self.jump_sd),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::invalid(format!("firm field {name} is not finite")));
        }
        if self.x0 <= threshold_level(self, 0.0) {
            return Err(Error::invalid(format!(
                "firm starts at or below its default boundary (x0 = {}, ln kappa = {})",
                self.x0, self.ln_kappa
            )));
        }
        if self.jump_sd <= 0.0 {
            return Err(Error::invalid("jump_sd must be positive"));
        }
        Ok(())
    }

    /// Distance to the boundary at t = 0 in shifted coordinates.
    pub fn shifted_start(&self) -> f64 {
        self.x0 - self.ln_kappa
    }

    /// Drift of `X - D`.
    pub fn shifted_drift(&self) -> f64 {
        self.mu - self.gamma
    }
}

/// Log default boundary `D(t) = gamma t + ln(kappa)`.
pub fn threshold_level(firm: &FirmSpec, t: f64) -> f64 {
    firm.gamma * t + firm.ln_kappa
}

/// Square loading matrix `sigma`; row `i` holds firm `i`'s exposure to each
/// independent Brownian driver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DiffusionMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl DiffusionMatrix {
    /// Builds the matrix from explicit rows. Every row must have a positive norm.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::invalid("diffusion matrix must have at least one row"));
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "diffusion matrix row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("diffusion matrix row {i} is not finite")));
            }
            entries.extend(row);
        }
        let m = DiffusionMatrix { dim, entries };
        for i in 0..dim {
            m.effective_vol(i)?;
        }
        Ok(m)
    }

    /// Diagonal matrix of per-firm volatilities (independent diffusions).
    pub fn diagonal(vols: &[f64]) -> Result<Self> {
        let n = vols.len();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { vols[i] } else { 0.0 }).collect())
            .collect();
        Self::from_rows(rows)
    }

    /// Lower-triangular factor of the equicorrelated covariance built from
    /// per-firm volatilities and a common correlation.
    pub fn from_vols_and_correlation(vols: &[f64], rho: f64) -> Result<Self> {
        let n = vols.len();
        let mut cov = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let c = if i == j { 1.0 } else { rho };
                cov[i * n + j] = c * vols[i] * vols[j];
            }
        }
        decompose_covariance(&cov, n)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    /// Effective volatility `sigma_i = sqrt(sum_j sigma_ij^2)`.
    pub fn effective_vol(&self, i: usize) -> Result<f64> {
        if i >= self.dim {
            return Err(Error::invalid(format!("firm index {i} out of range")));
        }
        let v = self.row(i).iter().map(|x| x * x).sum::<f64>().sqrt();
        if v > 0.0 {
            Ok(v)
        } else {
            Err(Error::invalid(format!("diffusion row {i} is all zero")))
        }
    }

    /// Correlation of the diffusion parts of firms `i` and `j`.
    pub fn diffusion_correlation(&self, i: usize, j: usize) -> Result<f64> {
        if i == j {
            return Err(Error::invalid("diffusion correlation needs two distinct firms"));
        }
        let si = self.effective_vol(i)?;
        let sj = self.effective_vol(j)?;
        let dot: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
        Ok((dot / (si * sj)).clamp(-1.0, 1.0))
    }

    /// `sigma sigma^T`, row-major.
    pub fn covariance(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
            }
        }
        out
    }
}

impl TryFrom<Vec<Vec<f64>>> for DiffusionMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<DiffusionMatrix> for Vec<Vec<f64>> {
    fn from(m: DiffusionMatrix) -> Self {
        m.rows()
    }
}

/// Cholesky factor `L` (lower triangular) with `L L^T = cov`.
///
/// `cov` is row-major `dim x dim` and must be symmetric positive definite.
pub fn decompose_covariance(cov: &[f64], dim: usize) -> Result<DiffusionMatrix> {
    if cov.len() != dim * dim || dim == 0 {
        return Err(Error::invalid("covariance must be a non-empty square matrix"));
    }
    for i in 0..dim {
        for j in 0..i {
            let (a, b) = (cov[i * dim + j], cov[j * dim + i]);
            if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
                return Err(Error::invalid("covariance matrix is not symmetric"));
            }
        }
    }
    let mut l = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..=i {
            let mut s = cov[i * dim + j];
            for k in 0..j {
                s -= l[i * dim + k] * l[j * dim + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::numerical(format!(
                        "covariance is not positive definite (pivot {i} = {s})"
                    )));
                }
                l[i * dim + i] = s.sqrt();
            } else {
                l[i * dim + j] = s / l[j * dim + j];
            }
        }
    }
    Ok(DiffusionMatrix { dim, entries: l })
}

/// Full parameterization of a set of correlated firms over one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSpec {
    pub firms: Vec<FirmSpec>,
    pub diffusion: DiffusionMatrix,
    /// Jump arrival intensity per unit time.
    pub lambda: f64,
    /// Mean spacing of the shared evaluation timeline.
    pub interjump_mean: f64,
    pub horizon: f64,
    /// Overrides the target correlation of the per-interval uniform draws.
    /// Defaults to the mean pairwise diffusion correlation.
    #[serde(default)]
    pub uniform_correlation: Option<f64>,
}

impl PortfolioSpec {
    pub fn n_firms(&self) -> usize {
        self.firms.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.firms.is_empty() {
            return Err(Error::invalid("portfolio needs at least one firm"));
        }
        if self.diffusion.dim() != self.firms.len() {
            return Err(Error::invalid(format!(
                "diffusion matrix is {0}x{0} but there are {1} firms",
                self.diffusion.dim(),
                self.firms.len()
            )));
        }
        for (i, f) in self.firms.iter().enumerate() {
            f.validate().map_err(|e| Error::invalid(format!("firm {i}: {e}")))?;
            self.diffusion.effective_vol(i)?;
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::invalid("horizon must be positive"));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid("lambda must be non-negative"));
        }
        if !(self.interjump_mean > 0.0) {
            return Err(Error::invalid("interjump_mean must be positive"));
        }
        if let Some(rho) = self.uniform_correlation {
            if !(-1.0..1.0).contains(&rho) {
                return Err(Error::invalid("uniform_correlation must lie in [-1, 1)"));
            }
        }
        Ok(())
    }

    /// Mean spacing of timeline instants actually used by the engines. When
    /// `lambda` exceeds `1 / interjump_mean` the timeline is refined so that
    /// every jump can be placed on it.
    pub fn timeline_mean(&self) -> f64 {
        if self.lambda * self.interjump_mean > 1.0 {
            1.0 / self.lambda
        } else {
            self.interjump_mean
        }
    }

    /// Probability that a timeline instant carries a jump. Thinning the
    /// timeline with this probability gives jump arrivals at rate `lambda`.
    pub fn jump_probability(&self) -> f64 {
        (self.lambda * self.timeline_mean()).min(1.0)
    }

    /// Equicorrelation target for the per-interval uniform draws.
    pub fn uniform_correlation_target(&self) -> Result<f64> {
        let n = self.n_firms();
        if let Some(rho) = self.uniform_correlation {
            return Ok(rho.max(0.0));
        }
        if n < 2 {
            return Ok(0.0);
        }
        let mut sum = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += self.diffusion.diffusion_correlation(i, j)?;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        if mean < 0.0 {
            log::warn!("negative mean diffusion correlation {mean:.4}; uniforms drawn independent");
        }
        Ok(mean.max(0.0))
    }
}
