//! Versioned JSON run configuration: kernel family, scaling, limit-law
//! source, experiment plan and numerical controls. The resolved config is
//! persisted next to results as `plan.json`, and re-running from that file
//! reproduces bit-identical outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{self, AnalysisConfig};
use crate::embedding::{ScalingForm, ScalingSequence};
use crate::error::{Error, Result};
use crate::kernels::{
    FragCoagParams, LambdaMeasure, TransitionKernel, TruncationPolicy,
};
use crate::levy::{self, JumpMeasure, LevyTriplet};
use crate::montecarlo::{ExperimentPlan, LimitSimParams};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelSpec {
    Bessel { d: f64 },
    RareJumpDrift { theta: f64, rho: f64 },
    FragCoag { lambda: LambdaSpec, mu: Vec<(u64, f64)> },
    DownWalk,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSpec {
    Atoms(Vec<(f64, f64)>),
    Beta { a: f64, b: f64, mass: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub mass_tol: f64,
    pub state_cap: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalingSpec {
    pub gamma: f64,
    #[serde(default = "default_form")]
    pub form: ScalingForm,
}

fn default_form() -> ScalingForm {
    ScalingForm::PowerLaw
}

/// Where the limit triplet comes from. Exactly one source applies:
/// an explicit triplet, the family's closed form, or the numerical
/// estimate produced by the analysis module.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LevySpec {
    Explicit {
        sigma2: f64,
        b: f64,
        gamma: f64,
        #[serde(default)]
        atoms: Vec<(f64, f64)>,
        /// Optional density block: the image of `x^{-2}·Beta(a, b, mass)`
        /// under `y = ln(1-x)`, supported on `(-∞, 0)`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta_density: Option<BetaDensitySpec>,
    },
    FromKernel,
    Estimate {
        #[serde(default = "default_estimate_nmax")]
        n_max: u64,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BetaDensitySpec {
    pub a: f64,
    pub b: f64,
    pub mass: f64,
}

fn default_estimate_nmax() -> u64 {
    100_000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub starts: Vec<u64>,
    #[serde(default = "default_stop_bound")]
    pub stop_bound: u64,
    #[serde(default)]
    pub t_list: Vec<f64>,
    pub replicas: usize,
    #[serde(default = "default_cap_multiple")]
    pub cap_multiple: f64,
    /// Marginals subcommand: stop the chain at its first visit to the stop set.
    #[serde(default)]
    pub stopped: bool,
    /// Extra moment orders reported by the absorption subcommand.
    #[serde(default)]
    pub moment_orders: Vec<f64>,
    /// Censored-fraction bound for moment summaries.
    #[serde(default = "default_censor_bound")]
    pub censor_bound: f64,
}

fn default_stop_bound() -> u64 {
    1
}

fn default_cap_multiple() -> f64 {
    50.0
}

fn default_censor_bound() -> f64 {
    0.01
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisSpec {
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Defaults to γ + 0.5 when absent.
    pub beta0: Option<f64>,
    #[serde(default = "default_estimate_nmax")]
    pub n_max: u64,
    #[serde(default = "default_band_fraction")]
    pub band_fraction: f64,
}

fn default_beta() -> f64 {
    1.0
}

fn default_band_fraction() -> f64 {
    analysis::DEFAULT_BAND_FRACTION
}

impl Default for AnalysisSpec {
    fn default() -> Self {
        Self {
            beta: default_beta(),
            beta0: None,
            n_max: default_estimate_nmax(),
            band_fraction: default_band_fraction(),
        }
    }
}

/// The full run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub schema: u32,
    pub kernel: KernelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationSpec>,
    pub scaling: ScalingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levy: Option<LevySpec>,
    pub experiment: ExperimentSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<LimitSimParams>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        if config.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema version {} (expected {})",
                config.schema, SCHEMA_VERSION
            )));
        }
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.experiment.replicas < 1 {
            return Err(Error::Config("experiment.replicas must be >= 1".into()));
        }
        if !(self.scaling.gamma > 0.0) {
            return Err(Error::Config("scaling.gamma must be > 0".into()));
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<TransitionKernel> {
        let kernel = match &self.kernel {
            KernelSpec::Bessel { d } => TransitionKernel::bessel(*d),
            KernelSpec::RareJumpDrift { theta, rho } => {
                TransitionKernel::rare_jump_drift(*theta, *rho)?
            }
            KernelSpec::FragCoag { lambda, mu } => {
                let lambda = match lambda {
                    LambdaSpec::Atoms(atoms) => LambdaMeasure::Atoms(atoms.clone()),
                    LambdaSpec::Beta { a, b, mass } => LambdaMeasure::Beta {
                        a: *a,
                        b: *b,
                        mass: *mass,
                    },
                };
                TransitionKernel::frag_coag(FragCoagParams::new(lambda, mu.clone())?)
            }
            KernelSpec::DownWalk => TransitionKernel::down_walk(),
        };
        match self.truncation {
            Some(t) => kernel.with_truncation(TruncationPolicy {
                mass_tol: t.mass_tol,
                state_cap: t.state_cap,
            }),
            None => Ok(kernel),
        }
    }

    pub fn scaling(&self) -> Result<ScalingSequence> {
        match self.scaling.form {
            ScalingForm::PowerLaw => ScalingSequence::power_law(self.scaling.gamma),
        }
    }

    pub fn analysis_config(&self) -> Result<AnalysisConfig> {
        let scaling = self.scaling()?;
        let spec = self.analysis.clone().unwrap_or_default();
        Ok(AnalysisConfig {
            beta: spec.beta,
            beta0: spec.beta0.unwrap_or(scaling.gamma + 0.5),
            n_grid: analysis::geometric_grid(16, spec.n_max, 4),
            band_fraction: spec.band_fraction,
        })
    }

    /// Resolve the limit triplet per the configured source (family closed
    /// form when no levy block is present).
    pub fn triplet(&self) -> Result<LevyTriplet> {
        let kernel = self.kernel()?;
        match self.levy.clone().unwrap_or(LevySpec::FromKernel) {
            LevySpec::Explicit {
                sigma2,
                b,
                gamma,
                atoms,
                beta_density,
            } => {
                let densities = match beta_density {
                    Some(spec) => vec![levy::beta_image_density(spec.a, spec.b, spec.mass)?],
                    None => Vec::new(),
                };
                LevyTriplet::new(sigma2, b, JumpMeasure::new(atoms, densities)?, gamma)
            }
            LevySpec::FromKernel => levy::limit_triplet(&kernel),
            LevySpec::Estimate { n_max } => {
                let scaling = self.scaling()?;
                triplet_from_estimate(&kernel, &scaling, n_max)
            }
        }
    }

    pub fn sim_params(&self) -> LimitSimParams {
        self.sim.unwrap_or_default()
    }

    pub fn plan(&self) -> Result<ExperimentPlan> {
        Ok(ExperimentPlan {
            kernel: self.kernel()?,
            scaling: self.scaling()?,
            starts: self.experiment.starts.clone(),
            stop_bound: self.experiment.stop_bound,
            t_list: self.experiment.t_list.clone(),
            replicas: self.experiment.replicas,
            cap_multiple: self.experiment.cap_multiple,
            master_seed: self.seed,
        })
    }
}

/// Numerically recover a limit triplet from the kernel: `b̂` and `σ̂²` from
/// the moment diagnostics, and the tail table converted to point atoms at
/// the mass-weighted center of each test interval. Adequate for atomic limit
/// measures bounded away from 0, which covers the built-in families.
pub fn triplet_from_estimate(
    kernel: &TransitionKernel,
    scaling: &ScalingSequence,
    n_max: u64,
) -> Result<LevyTriplet> {
    let grid = analysis::geometric_grid(16, n_max, 4);
    let (est, _) = analysis::estimate_limit_triplet(
        kernel,
        scaling,
        &grid,
        analysis::DEFAULT_BAND_FRACTION,
    )?;
    let top = *grid.last().expect("nonempty grid");
    let a_n = scaling.eval(top);
    let mut atoms = Vec::new();
    for t in &est.tails {
        if t.mass > 1e-6 {
            let first = a_n
                * kernel.log_step_integral(top, |x| if x >= t.lo && x < t.hi { x } else { 0.0 })?;
            atoms.push((first / t.mass, t.mass));
        }
    }
    // b̂ already includes the compensated contribution of atoms in [-1, 1].
    LevyTriplet::new(est.sigma2, est.b, JumpMeasure::from_atoms(atoms)?, scaling.gamma)
}
