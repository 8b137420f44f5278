//! JSON run configuration.

use std::path::Path;

use etakepler::ModelParams;
use serde::Deserialize;

use crate::CliError;

/// One run manifest: system parameters plus optional per-command blocks.
///
/// Missing system parameters default to `eta = 0`, `k = 1`, `hbar = 1`,
/// `dim = 3`; the `effpot` command defaults `k` to 8 instead.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub eta: Option<f64>,
    pub k: Option<f64>,
    pub hbar: Option<f64>,
    pub dim: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub spectrum: SpectrumBlock,
    #[serde(default)]
    pub effpot: EffpotBlock,
    #[serde(default)]
    pub simulate: SimulateBlock,
    #[serde(default)]
    pub verify: VerifyBlock,
    #[serde(default)]
    pub oracle: OracleBlock,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumBlock {
    pub n_max: usize,
    pub l_max: usize,
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        Self { n_max: 3, l_max: 2 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EffpotBlock {
    pub l2: f64,
    pub etas: Vec<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub samples: usize,
}

impl Default for EffpotBlock {
    fn default() -> Self {
        Self { l2: 2.0, etas: vec![0.0, 0.05, 0.2, 0.4], r_min: 0.05, r_max: 2.0, samples: 781 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateBlock {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub t_end: f64,
    pub tol: f64,
    pub drift_bound: f64,
    /// Write every `stride`-th accepted step to the trajectory CSV.
    pub stride: usize,
}

impl Default for SimulateBlock {
    fn default() -> Self {
        Self { q: vec![1.0, 0.0, 0.0], p: vec![0.0, 1.0, 0.0], t_end: 20.0, tol: 1e-12, drift_bound: 1e-9, stride: 1 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyBlock {
    /// Random states per bracket relation.
    pub samples: usize,
    /// Random states for the classical `R²` identity.
    pub identity_samples: usize,
    pub bracket_tol: f64,
    pub identity_tol: f64,
    pub min_order: f64,
    pub self_adjoint_tol: f64,
    /// Grid intervals per axis on the coarsest operator grid; 0 picks a
    /// dimension-dependent default.
    pub base_intervals: usize,
    /// Number of mesh halvings; 0 picks a dimension-dependent default.
    pub halvings: usize,
    pub skip_grid: bool,
}

impl Default for VerifyBlock {
    fn default() -> Self {
        Self {
            samples: 100,
            identity_samples: 1000,
            bracket_tol: 1e-7,
            identity_tol: 1e-10,
            min_order: 2.0,
            self_adjoint_tol: 1e-6,
            base_intervals: 0,
            halvings: 0,
            skip_grid: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleBlock {
    /// `(n, l)` pairs; empty means all `n ≤ n_max`, `l ≤ l_max`.
    pub levels: Vec<(usize, usize)>,
    pub n_max: usize,
    pub l_max: usize,
    pub points: usize,
    /// Outer radius; absent picks one per level.
    pub r_max: Option<f64>,
    /// Constant `C` of the acceptance bound `|ΔE| ≤ C h²`.
    pub error_constant: f64,
    /// Accepted window for the observed convergence order.
    pub order_range: (f64, f64),
}

impl Default for OracleBlock {
    fn default() -> Self {
        Self {
            levels: Vec::new(),
            n_max: 3,
            l_max: 2,
            points: 6000,
            r_max: None,
            error_constant: 4.0,
            order_range: (1.8, 2.2),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Validated model parameters, with `default_k` used when `k` is absent.
    pub fn params(&self, default_k: f64) -> Result<ModelParams, CliError> {
        ModelParams::new(
            self.eta.unwrap_or(0.0),
            self.k.unwrap_or(default_k),
            self.hbar.unwrap_or(1.0),
            self.dim.unwrap_or(3),
        )
        .map_err(|e| CliError::Config(e.to_string()))
    }
}

pub fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(msg()))
    }
}
