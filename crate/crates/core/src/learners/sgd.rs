use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::Sample;
use crate::error::{Error, Result};
use crate::losses::LossModel;
use crate::rng;
use crate::vectorspace::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SgdRegime {
    Nonconvex,
    Convex,
    StronglyConvex,
}

impl SgdRegime {
    pub fn name(self) -> &'static str {
        match self {
            SgdRegime::Nonconvex => "nonconvex",
            SgdRegime::Convex => "convex",
            SgdRegime::StronglyConvex => "strongly_convex",
        }
    }
}

/// Step-size schedule α_t, t = 1, 2, …; both variants are non-increasing.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    /// α_t = α.
    Constant(f64),
    /// α_t = c / t.
    Harmonic(f64),
}

impl StepSchedule {
    pub fn step(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Constant(a) => a,
            StepSchedule::Harmonic(c) => c / t as f64,
        }
    }

    pub fn sum(&self, steps: usize) -> f64 {
        (1..=steps).map(|t| self.step(t)).sum()
    }

    fn first(&self) -> f64 {
        self.step(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdSpec {
    pub regime: SgdRegime,
    /// T, the number of updates.
    pub steps: usize,
    pub schedule: StepSchedule,
    /// Radius of the ball Ω onto which iterates are projected.
    pub projection_radius: Option<f64>,
    /// Seed of the example-index stream i_1, …, i_T.
    pub seed: u64,
}

impl SgdSpec {
    /// Check the regime's step-size caps against the loss's certified constants.
    pub fn validate(&self, loss: &LossModel) -> Result<()> {
        let first = self.schedule.first();
        if !(first > 0.0 && first.is_finite()) {
            return Err(Error::param("step", first, "step sizes must be positive"));
        }
        if let Some(r) = self.projection_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::param("projection_radius", r, "must be positive"));
            }
        }
        let constants = loss.constants();
        let smoothness = constants.smoothness;
        match self.regime {
            SgdRegime::Nonconvex => {
                if !matches!(self.schedule, StepSchedule::Harmonic(_)) {
                    return Err(Error::Invalid("nonconvex regime uses α_t = c/t".into()));
                }
                if smoothness.is_none() {
                    return Err(Error::Invalid(format!("{} loss is not smooth", loss.kind)));
                }
            }
            SgdRegime::Convex => {
                let s = smoothness
                    .ok_or_else(|| Error::Invalid(format!("{} loss is not smooth", loss.kind)))?;
                if !loss.is_convex() {
                    return Err(Error::Invalid("convex regime needs a convex loss".into()));
                }
                // Non-increasing schedule: the first step is the largest.
                if first > 2.0 / s {
                    return Err(Error::StepSizeCap {
                        regime: "convex",
                        t: 1,
                        step: first,
                        cap: 2.0 / s,
                    });
                }
            }
            SgdRegime::StronglyConvex => {
                let s = smoothness
                    .ok_or_else(|| Error::Invalid(format!("{} loss is not smooth", loss.kind)))?;
                if constants.strong_convexity <= 0.0 {
                    return Err(Error::Invalid("strongly convex regime needs γ > 0".into()));
                }
                if !matches!(self.schedule, StepSchedule::Constant(_)) {
                    return Err(Error::Invalid(
                        "strongly convex regime uses a constant step".into(),
                    ));
                }
                if self.projection_radius.is_none() {
                    return Err(Error::Invalid(
                        "strongly convex regime needs a projection set".into(),
                    ));
                }
                if first > 1.0 / s {
                    return Err(Error::StepSizeCap {
                        regime: "strongly_convex",
                        t: 1,
                        step: first,
                        cap: 1.0 / s,
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SgdRun {
    pub final_hypothesis: Vector,
    /// h_0, …, h_T.
    pub trajectory: Vec<Vector>,
}

/// Run SGD from h_0 = 0, storing every iterate.
pub fn run_sgd(sample: &Sample, loss: &LossModel, spec: &SgdSpec) -> Result<SgdRun> {
    let mut trajectory = Vec::with_capacity(spec.steps + 1);
    let final_hypothesis = drive(sample, loss, spec, |h| trajectory.push(h.clone()))?;
    Ok(SgdRun {
        final_hypothesis,
        trajectory,
    })
}

pub(crate) fn run_sgd_final(sample: &Sample, loss: &LossModel, spec: &SgdSpec) -> Result<Vector> {
    drive(sample, loss, spec, |_| {})
}

fn drive(
    sample: &Sample,
    loss: &LossModel,
    spec: &SgdSpec,
    mut visit: impl FnMut(&Vector),
) -> Result<Vector> {
    spec.validate(loss)?;
    let n = sample.len();
    let mut h = Vector::zeros(sample.dim());
    for (i, z) in sample.iter().enumerate() {
        loss.eval(&h, z).map_err(|e| e.at(format!("example {i}")))?;
    }
    let mut indices = rng::stream(spec.seed, &[rng::label("sgd-index")]);
    let mut grad = Vector::zeros(sample.dim());
    visit(&h);
    for t in 1..=spec.steps {
        let norm = h.norm();
        if norm > loss.radius * (1.0 + 1e-9) {
            return Err(Error::DomainViolation {
                what: "‖h_t‖",
                value: norm,
                bound: loss.radius,
            }
            .at(format!("SGD step {t}")));
        }
        let z = &sample.examples()[indices.random_range(0..n)];
        grad.scale_mut(0.0);
        loss.add_grad_unchecked(&h, z, 1.0, &mut grad);
        h.axpy(-spec.schedule.step(t), &grad);
        if let Some(radius) = spec.projection_radius {
            h.project_to_ball(radius);
        }
        if !h.is_finite() {
            return Err(Error::NonFiniteIterate { step: t });
        }
        visit(&h);
    }
    Ok(h)
}
