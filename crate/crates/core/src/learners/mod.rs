//! Learning algorithms `S ↦ h_S`: closed-form ridge, penalized ERM with an
//! ℓp penalty, and SGD in its three step-size regimes. Every algorithm starts
//! from `h = 0`.

mod rerm;
mod ridge;
mod sgd;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use rerm::{fit_rerm, lp_prox, PenaltySpec, RermFit};
pub use ridge::fit_ridge;
pub use sgd::{run_sgd, SgdRegime, SgdRun, SgdSpec, StepSchedule};

use crate::error::{Error, Result};
use crate::losses::{strongly_convex_objective, LabeledExample, LossKind, LossModel};
use crate::vectorspace::Vector;

/// An ordered training sample `Z_1, …, Z_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<LabeledExample>", into = "Vec<LabeledExample>")]
pub struct Sample {
    examples: Vec<LabeledExample>,
}

impl Sample {
    pub fn new(examples: Vec<LabeledExample>) -> Result<Self> {
        let first = examples
            .first()
            .ok_or_else(|| Error::Invalid("sample must contain at least one example".into()))?;
        for z in &examples {
            first.x.check_dim(&z.x)?;
            if !z.y.is_finite() {
                return Err(Error::Invalid("labels must be finite".into()));
            }
        }
        Ok(Sample { examples })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.examples[0].x.dim()
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledExample> {
        self.examples.iter()
    }

    /// `Sⁱ`: the sample with example `i` (0-based) replaced by `z`.
    pub fn replaced(&self, i: usize, z: LabeledExample) -> Result<Sample> {
        if i >= self.len() {
            return Err(Error::Invalid(format!(
                "index {i} out of range for n = {}",
                self.len()
            )));
        }
        self.examples[0].x.check_dim(&z.x)?;
        let mut examples = self.examples.clone();
        examples[i] = z;
        Ok(Sample { examples })
    }

    /// Largest feature norm in the sample.
    pub fn max_feature_norm(&self) -> f64 {
        self.examples.iter().map(|z| z.x.norm()).fold(0.0, f64::max)
    }

    /// Mean of `loss` over the sample, `R_S(h)`.
    pub fn empirical_risk(&self, loss: &LossModel, h: &Vector) -> Result<f64> {
        let mut total = 0.0;
        for z in &self.examples {
            total += loss.eval(h, z)?;
        }
        Ok(total / self.len() as f64)
    }
}

impl TryFrom<Vec<LabeledExample>> for Sample {
    type Error = Error;
    fn try_from(v: Vec<LabeledExample>) -> Result<Self> {
        Sample::new(v)
    }
}

impl From<Sample> for Vec<LabeledExample> {
    fn from(s: Sample) -> Self {
        s.examples
    }
}

/// Preset names accepted in experiment configs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PresetName {
    #[serde(rename = "constant")]
    Constant,
    #[serde(rename = "ridge")]
    Ridge,
    #[serde(rename = "rerm-lp")]
    RermLp,
    #[serde(rename = "sgd-nonconvex")]
    SgdNonconvex,
    #[serde(rename = "sgd-convex")]
    SgdConvex,
    #[serde(rename = "sgd-strongly-convex")]
    SgdStronglyConvex,
}

impl PresetName {
    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Constant => "constant",
            PresetName::Ridge => "ridge",
            PresetName::RermLp => "rerm-lp",
            PresetName::SgdNonconvex => "sgd-nonconvex",
            PresetName::SgdConvex => "sgd-convex",
            PresetName::SgdStronglyConvex => "sgd-strongly-convex",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_owned()))
            .map_err(|_| Error::Invalid(format!("unknown algorithm preset `{s}`")))
    }
}

/// A fully parameterized learning algorithm.
///
/// `loss` is always certified on the set of hypotheses the algorithm can
/// reach, so its constants are valid inputs to the stability and bound
/// formulas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    /// Ignores the data; useful as a zero-stability control.
    Constant {
        output: Vector,
        loss: LossModel,
    },
    Ridge {
        lambda: f64,
        loss: LossModel,
    },
    Rerm {
        loss: LossModel,
        penalty: PenaltySpec,
        tol: f64,
        max_iter: usize,
    },
    Sgd {
        loss: LossModel,
        spec: SgdSpec,
    },
}

impl Algorithm {
    pub fn constant(output: Vector, loss: LossModel) -> Self {
        Algorithm::Constant { output, loss }
    }

    /// Ridge regression on `|y| ≤ label_bound`; outputs satisfy
    /// `‖h_S‖ ≤ label_bound / √λ`.
    pub fn ridge(lambda: f64, feature_bound: f64, label_bound: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", lambda, "must be positive"));
        }
        let radius = label_bound / lambda.sqrt();
        let loss =
            LossModel::with_label_bound(LossKind::Squared, feature_bound, radius, label_bound)?;
        Ok(Algorithm::Ridge { lambda, loss })
    }

    /// Penalized ERM. The certified radius follows from
    /// `λ‖h_S‖_p^p ≤ R_{S,λ}(0) ≤ sup_z ℓ(0,z)` and `‖h‖₂ ≤ ‖h‖_p` for p ≤ 2.
    pub fn rerm(
        kind: LossKind,
        feature_bound: f64,
        label_bound: f64,
        penalty: PenaltySpec,
        tol: f64,
        max_iter: usize,
    ) -> Result<Self> {
        penalty.validate()?;
        let probe = LossModel::with_label_bound(kind, feature_bound, 1.0, label_bound)?;
        let radius = (probe.bound_at_origin() / penalty.lambda).powf(1.0 / penalty.p);
        let loss = probe.with_radius(radius)?;
        Ok(Algorithm::Rerm {
            loss,
            penalty,
            tol,
            max_iter,
        })
    }

    /// SGD on `kind` (plus `λ_sc‖h‖²` when `lambda_sc > 0`). The loss is
    /// certified on the projection ball when one is set, and otherwise on the
    /// worst-case drift radius `R_{t+1} = R_t + α_t·B·L(R_t)`.
    pub fn sgd(
        kind: LossKind,
        feature_bound: f64,
        label_bound: f64,
        lambda_sc: f64,
        spec: SgdSpec,
    ) -> Result<Self> {
        let mut loss = LossModel::with_label_bound(kind, feature_bound, 1.0, label_bound)?;
        if lambda_sc > 0.0 {
            loss = strongly_convex_objective(&loss, lambda_sc)?;
        }
        let radius = match spec.projection_radius {
            Some(r) => r,
            None => {
                let mut r: f64 = 0.0;
                for t in 1..=spec.steps {
                    let at = loss.with_radius(r.max(f64::MIN_POSITIVE))?;
                    r += spec.schedule.step(t) * feature_bound * at.constants().lipschitz;
                }
                r
            }
        };
        let loss = loss.with_radius(radius.max(f64::MIN_POSITIVE))?;
        spec.validate(&loss)?;
        Ok(Algorithm::Sgd { loss, spec })
    }

    pub fn preset(&self) -> PresetName {
        match self {
            Algorithm::Constant { .. } => PresetName::Constant,
            Algorithm::Ridge { .. } => PresetName::Ridge,
            Algorithm::Rerm { .. } => PresetName::RermLp,
            Algorithm::Sgd { spec, .. } => match spec.regime {
                SgdRegime::Nonconvex => PresetName::SgdNonconvex,
                SgdRegime::Convex => PresetName::SgdConvex,
                SgdRegime::StronglyConvex => PresetName::SgdStronglyConvex,
            },
        }
    }

    pub fn loss(&self) -> &LossModel {
        match self {
            Algorithm::Constant { loss, .. }
            | Algorithm::Ridge { loss, .. }
            | Algorithm::Rerm { loss, .. }
            | Algorithm::Sgd { loss, .. } => loss,
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, Algorithm::Sgd { .. })
    }

    /// Fit on `sample`. `seed` drives the SGD index stream and is ignored by
    /// deterministic algorithms; equal seeds give coupled SGD runs.
    pub fn fit(&self, sample: &Sample, seed: u64) -> Result<Vector> {
        match self {
            Algorithm::Constant { output, .. } => {
                output.check_dim(&sample.examples()[0].x)?;
                Ok(output.clone())
            }
            Algorithm::Ridge { lambda, .. } => fit_ridge(sample, *lambda),
            Algorithm::Rerm {
                loss,
                penalty,
                tol,
                max_iter,
            } => fit_rerm(sample, loss, penalty, *tol, *max_iter).map(|fit| fit.hypothesis),
            Algorithm::Sgd { loss, spec } => {
                let spec = SgdSpec {
                    seed,
                    ..spec.clone()
                };
                sgd::run_sgd_final(sample, loss, &spec)
            }
        }
    }
}
