use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::DEFAULT_A;
use crate::datagen::DistributionSpec;
use crate::error::{check_deformation, check_delta, Error, Result};
use crate::learners::{Algorithm, PenaltySpec, PresetName, SgdRegime, SgdSpec, StepSchedule};
use crate::losses::{strongly_convex_objective, LossKind, LossModel};
use crate::vectorspace::Vector;

/// Algorithm preset plus its parameters. Unset fields take the defaults
/// documented on each field.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub preset: Option<PresetName>,
    /// Squared for ridge and penalized ERM, logistic for SGD.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<LossKind>,
    /// Penalty weight for ridge and penalized ERM (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Penalty exponent for penalized ERM (default 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Solver tolerance for penalized ERM (default 1e-10).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Iteration cap for penalized ERM (default 200000).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    /// Ridge term added to the SGD loss (default 0.5 for the strongly convex
    /// preset, 0 otherwise).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_sc: Option<f64>,
    /// Constant step α, or c in α_t = c/t (default 1/s).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// T = ⌈steps_per_n · n⌉ (default 2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps_per_n: Option<f64>,
    /// Projection radius (default 1 for the strongly convex preset, none otherwise).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub projection_radius: Option<f64>,
    /// Output of the constant preset (default 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Vector>,
}

impl AlgorithmConfig {
    pub fn preset(preset: PresetName) -> Self {
        AlgorithmConfig {
            preset: Some(preset),
            ..Default::default()
        }
    }

    fn preset_name(&self) -> Result<PresetName> {
        self.preset
            .ok_or_else(|| Error::Invalid("algorithm.preset is required".into()))
    }

    /// Instantiate for samples of size `n` drawn from `dist`.
    pub fn build(&self, dist: &DistributionSpec, n: usize) -> Result<Algorithm> {
        let b = dist.feature_bound;
        let y = dist.label_bound();
        let preset = self.preset_name()?;
        let lambda = self.lambda.unwrap_or(1.0);
        match preset {
            PresetName::Constant => {
                let output = self.output.clone().unwrap_or_else(|| Vector::zeros(dist.d));
                let kind = self.loss.unwrap_or(LossKind::Squared);
                let loss =
                    LossModel::with_label_bound(kind, b, output.norm().max(f64::MIN_POSITIVE), y)?;
                Ok(Algorithm::constant(output, loss))
            }
            PresetName::Ridge => {
                if self.loss.is_some_and(|k| k != LossKind::Squared) {
                    return Err(Error::Invalid("ridge uses the squared loss".into()));
                }
                Algorithm::ridge(lambda, b, y)
            }
            PresetName::RermLp => Algorithm::rerm(
                self.loss.unwrap_or(LossKind::Squared),
                b,
                y,
                PenaltySpec::new(self.p.unwrap_or(2.0), lambda)?,
                self.tol.unwrap_or(1e-10),
                self.max_iter.unwrap_or(200_000),
            ),
            PresetName::SgdNonconvex | PresetName::SgdConvex | PresetName::SgdStronglyConvex => {
                let kind = self.loss.unwrap_or(LossKind::Logistic);
                let (regime, lambda_sc, projection) = match preset {
                    PresetName::SgdNonconvex => (
                        SgdRegime::Nonconvex,
                        self.lambda_sc.unwrap_or(0.0),
                        self.projection_radius,
                    ),
                    PresetName::SgdConvex => (
                        SgdRegime::Convex,
                        self.lambda_sc.unwrap_or(0.0),
                        self.projection_radius,
                    ),
                    _ => (
                        SgdRegime::StronglyConvex,
                        self.lambda_sc.unwrap_or(0.5),
                        Some(self.projection_radius.unwrap_or(1.0)),
                    ),
                };
                let mut probe = LossModel::with_label_bound(kind, b, 1.0, y)?;
                if lambda_sc > 0.0 {
                    probe = strongly_convex_objective(&probe, lambda_sc)?;
                }
                let s = probe.constants().smoothness.ok_or_else(|| {
                    Error::Invalid(format!("SGD presets need a smooth loss, got {kind}"))
                })?;
                let step = self.step.unwrap_or(1.0 / s);
                let schedule = match regime {
                    SgdRegime::Nonconvex => StepSchedule::Harmonic(step),
                    _ => StepSchedule::Constant(step),
                };
                let per_n = self.steps_per_n.unwrap_or(2.0);
                if !(per_n >= 0.0 && per_n.is_finite()) {
                    return Err(Error::param("steps_per_n", per_n, "must be non-negative"));
                }
                let spec = SgdSpec {
                    regime,
                    steps: (per_n * n as f64).ceil() as usize,
                    schedule,
                    projection_radius: projection,
                    seed: 0,
                };
                Algorithm::sgd(kind, b, y, lambda_sc, spec)
            }
        }
    }
}

fn default_delta() -> f64 {
    0.1
}

fn default_a() -> f64 {
    DEFAULT_A
}

fn default_d_smooth() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budgets {
    /// Random replacement draws per index in stability measurements.
    pub replacements: usize,
    /// Sign vectors per Rademacher estimate.
    pub draws: usize,
    /// Replicates averaged to estimate `E h_S`.
    pub center_replicates: usize,
    /// Independent replications per n for bound coverage.
    pub trials: usize,
    /// Fresh draws per Monte-Carlo risk estimate.
    pub risk_precision: usize,
    /// Trials of the concentration experiment; skipped when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_trials: Option<usize>,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            replacements: 20,
            draws: 4096,
            center_replicates: 64,
            trials: 100,
            risk_precision: 20_000,
            tail_trials: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub algorithm: AlgorithmConfig,
    pub distribution: DistributionSpec,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_d_smooth")]
    pub d_smooth: f64,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::Invalid("name must not be empty".into()));
        }
        self.distribution.validate()?;
        if self.n_grid.is_empty() {
            return Err(Error::Invalid("n_grid must not be empty".into()));
        }
        if self.n_grid[0] == 0 || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(
                "n_grid must be positive and strictly increasing".into(),
            ));
        }
        check_delta(self.delta)?;
        check_deformation(self.a)?;
        if !(self.d_smooth >= 1.0 && self.d_smooth.is_finite()) {
            return Err(Error::param(
                "d_smooth",
                self.d_smooth,
                "must be at least 1",
            ));
        }
        let b = &self.budgets;
        for (name, value, min) in [
            ("replacements", b.replacements, 1),
            ("draws", b.draws, 2),
            ("center_replicates", b.center_replicates, 1),
            ("trials", b.trials, 1),
            ("risk_precision", b.risk_precision, 10_000),
        ] {
            if value < min {
                return Err(Error::Invalid(format!(
                    "budgets.{name} must be at least {min}, got {value}"
                )));
            }
        }
        if b.tail_trials == Some(0) {
            return Err(Error::Invalid(
                "budgets.tail_trials must be positive when set".into(),
            ));
        }
        for &n in &self.n_grid {
            self.algorithm.build(&self.distribution, n)?;
        }
        Ok(())
    }
}
