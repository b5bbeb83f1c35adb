use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::limit_law::EtaSpec;
use crate::measures::DomainSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    CostClt,
    PotentialRate,
    PotentialsClt,
    CouplingClt,
    Consistency,
}

/// Acceptance bands checked after a run. Absent bands are not checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssertionBands {
    /// Coverage band applied at every sample size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<[f64; 2]>,
    /// Upper bound on the KS distance of the cost CLT at the largest `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_max: Option<f64>,
    /// Band for both log-log slopes of the rate experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_slope: Option<[f64; 2]>,
    /// Relative tolerance between Monte Carlo and limit variance of the
    /// potentials at the evaluation pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potentials_rel_tol: Option<f64>,
    /// Band for the empirical/theoretical variance ratio of the coupling CLT.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance_ratio: Option<[f64; 2]>,
    /// Max `|ref(grid/2) − ref(grid)|` as a fraction of the CI half-width at
    /// the largest `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_bias_fraction: Option<f64>,
    /// Require the consistency trajectory to end below where it started.
    #[serde(default)]
    pub consistency_decrease: bool,
}

fn default_version() -> u32 {
    1
}

fn default_level() -> f64 {
    0.95
}

fn default_experiments() -> Vec<ExperimentKind> {
    vec![ExperimentKind::CostClt]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub format_version: u32,
    pub population: DomainSpec,
    /// Quadrature points per axis for box populations; ignored for explicit
    /// measures.
    pub grid: usize,
    pub epsilon: f64,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default = "default_level")]
    pub ci_level: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<EtaSpec>,
    /// Population atom pair for the pointwise potentials CLT; defaults to
    /// `(n/2, m/2)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_pair: Option<(usize, usize)>,
    /// Solver tolerance for the sampled problems; defaults to `1e-9·ε`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_sweeps: Option<usize>,
    #[serde(default = "default_experiments")]
    pub experiments: Vec<ExperimentKind>,
    #[serde(default)]
    pub assertions: AssertionBands,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: ExperimentConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.format_version != 1 {
            return bad(format!(
                "unsupported format_version {}",
                self.format_version
            ));
        }
        self.population.validate()?;
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::NonpositiveEpsilon(self.epsilon));
        }
        if self.grid == 0 {
            return bad("grid must be positive".into());
        }
        if self.sample_sizes.is_empty()
            || self.sample_sizes[0] == 0
            || self.sample_sizes.windows(2).any(|w| w[0] >= w[1])
        {
            return bad("sample_sizes must be positive and strictly increasing".into());
        }
        if self.replications < 2 {
            return bad("need at least two replications".into());
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::InvalidLevel(self.ci_level));
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return bad(format!("tol must be positive, got {t}"));
            }
        }
        if let Some(eta) = &self.eta {
            eta.validate(self.population.dim())?;
        }
        if self.experiments.contains(&ExperimentKind::CouplingClt) && self.eta.is_none() {
            return bad("coupling_clt needs an eta".into());
        }
        Ok(())
    }

    pub fn largest_n(&self) -> usize {
        *self.sample_sizes.last().expect("validated")
    }
}
