//! Synthetic distributions on `Z = X × Y` with `‖X‖ ≤ B` by construction.

use std::io::Write;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::Sample;
use crate::losses::{LabeledExample, LossKind, LossModel};
use crate::rng::{self, Rng};
use crate::vectorspace::{mean_and_se, Vector};

/// Below this clamping probability the squared-loss risk is computed in closed form.
pub const CLOSED_FORM_CLAMP_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureLaw {
    UniformSphere,
    UniformBall,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LabelModel {
    /// `y = clamp(⟨h*, x⟩ + N(0, σ²), −Y_max, Y_max)`.
    LinearNoise {
        teacher: Vector,
        noise_sd: f64,
        label_bound: f64,
    },
    /// `y = +1` with probability `σ(⟨h*, x⟩)`, else −1.
    LogisticTeacher { teacher: Vector },
    /// `y = sign⟨h*, x⟩` flipped with probability η.
    SignFlip { teacher: Vector, flip_prob: f64 },
}

impl LabelModel {
    fn teacher(&self) -> &Vector {
        match self {
            LabelModel::LinearNoise { teacher, .. }
            | LabelModel::LogisticTeacher { teacher }
            | LabelModel::SignFlip { teacher, .. } => teacher,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSpec {
    pub d: usize,
    pub feature_bound: f64,
    pub feature_law: FeatureLaw,
    pub label_model: LabelModel,
}

impl DistributionSpec {
    /// Uniform-sphere features with `y = clamp(⟨h*, x⟩ + noise)`, the default law.
    pub fn linear_sphere(
        teacher: Vector,
        feature_bound: f64,
        noise_sd: f64,
        label_bound: f64,
    ) -> Result<Self> {
        let spec = DistributionSpec {
            d: teacher.dim(),
            feature_bound,
            feature_law: FeatureLaw::UniformSphere,
            label_model: LabelModel::LinearNoise {
                teacher,
                noise_sd,
                label_bound,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::param("d", 0.0, "must be positive"));
        }
        if !(self.feature_bound > 0.0 && self.feature_bound.is_finite()) {
            return Err(Error::param(
                "feature_bound",
                self.feature_bound,
                "must be positive",
            ));
        }
        if self.label_model.teacher().dim() != self.d {
            return Err(Error::DimensionMismatch {
                left: self.d,
                right: self.label_model.teacher().dim(),
            });
        }
        match &self.label_model {
            LabelModel::LinearNoise {
                noise_sd,
                label_bound,
                ..
            } => {
                if !(*noise_sd >= 0.0 && noise_sd.is_finite()) {
                    return Err(Error::param("noise_sd", *noise_sd, "must be non-negative"));
                }
                if !(*label_bound > 0.0 && label_bound.is_finite()) {
                    return Err(Error::param(
                        "label_bound",
                        *label_bound,
                        "must be positive",
                    ));
                }
            }
            LabelModel::SignFlip { flip_prob, .. } => {
                if !(0.0..=1.0).contains(flip_prob) {
                    return Err(Error::param("flip_prob", *flip_prob, "must lie in [0, 1]"));
                }
            }
            LabelModel::LogisticTeacher { .. } => {}
        }
        Ok(())
    }

    /// Y_max: bound on |y|.
    pub fn label_bound(&self) -> f64 {
        match &self.label_model {
            LabelModel::LinearNoise { label_bound, .. } => *label_bound,
            _ => 1.0,
        }
    }

    /// Upper bound on the probability that a linear-noise label is clamped.
    pub fn clamp_probability(&self) -> f64 {
        match &self.label_model {
            LabelModel::LinearNoise {
                teacher,
                noise_sd,
                label_bound,
            } => {
                let headroom = label_bound - teacher.norm() * self.feature_bound;
                if *noise_sd == 0.0 {
                    if headroom >= 0.0 {
                        0.0
                    } else {
                        1.0
                    }
                } else if headroom <= 0.0 {
                    1.0
                } else {
                    libm::erfc(headroom / (noise_sd * std::f64::consts::SQRT_2)).min(1.0)
                }
            }
            _ => 0.0,
        }
    }

    fn draw_feature(&self, rng: &mut Rng) -> Vector {
        let mut coords: Vec<f64> = (0..self.d).map(|_| StandardNormal.sample(rng)).collect();
        let mut norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        while norm == 0.0 {
            coords = (0..self.d).map(|_| StandardNormal.sample(rng)).collect();
            norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        }
        let radius = match self.feature_law {
            FeatureLaw::UniformSphere => self.feature_bound,
            FeatureLaw::UniformBall => {
                self.feature_bound * rng.random::<f64>().powf(1.0 / self.d as f64)
            }
        };
        coords.iter_mut().for_each(|c| *c *= radius / norm);
        Vector::new(coords).expect("finite by construction")
    }

    fn draw_label(&self, x: &Vector, rng: &mut Rng) -> f64 {
        match &self.label_model {
            LabelModel::LinearNoise {
                teacher,
                noise_sd,
                label_bound,
            } => {
                let noise: f64 = StandardNormal.sample(rng);
                (teacher.dot(x) + noise_sd * noise).clamp(-label_bound, *label_bound)
            }
            LabelModel::LogisticTeacher { teacher } => {
                if rng.random::<f64>() < crate::losses::sigmoid(teacher.dot(x)) {
                    1.0
                } else {
                    -1.0
                }
            }
            LabelModel::SignFlip { teacher, flip_prob } => {
                let clean = if teacher.dot(x) >= 0.0 { 1.0 } else { -1.0 };
                if rng.random::<f64>() < *flip_prob {
                    -clean
                } else {
                    clean
                }
            }
        }
    }

    pub fn draw(&self, rng: &mut Rng) -> LabeledExample {
        let x = self.draw_feature(rng);
        let y = self.draw_label(&x, rng);
        LabeledExample::new(x, y)
    }

    /// `n` i.i.d. examples; a pure function of `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Sample> {
        if n == 0 {
            return Err(Error::param("n", 0.0, "must be at least 1"));
        }
        self.validate()?;
        let mut rng = rng::stream(seed, &[rng::label("sample")]);
        Sample::new((0..n).map(|_| self.draw(&mut rng)).collect())
    }

    /// `E⟨v, X⟩² = ‖v‖² E‖X‖² / d` under the rotation-invariant feature laws.
    fn second_moment_factor(&self) -> f64 {
        let b2 = self.feature_bound * self.feature_bound;
        let d = self.d as f64;
        match self.feature_law {
            FeatureLaw::UniformSphere => b2 / d,
            FeatureLaw::UniformBall => b2 / (d + 2.0),
        }
    }
}

pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<Sample> {
    spec.sample(n, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub value: f64,
    /// 0 for closed-form values.
    pub std_error: f64,
    pub closed_form: bool,
}

/// True risk `R(h) = E ℓ(h, Z)`.
///
/// Squared loss under linear-noise labels uses the closed form
/// `‖h − h*‖² E‖X‖²/d + σ²` whenever labels are (numerically) never
/// clamped; everything else is a Monte-Carlo average over `precision` fresh
/// draws.
pub fn true_risk(
    h: &Vector,
    spec: &DistributionSpec,
    loss: &LossModel,
    precision: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    spec.validate()?;
    h.check_dim(spec.label_model.teacher())?;
    if let LabelModel::LinearNoise {
        teacher, noise_sd, ..
    } = &spec.label_model
    {
        if loss.kind == LossKind::Squared
            && loss.ridge == 0.0
            && spec.clamp_probability() < CLOSED_FORM_CLAMP_TOLERANCE
        {
            let gap = h - teacher;
            return Ok(RiskEstimate {
                value: gap.norm_sq() * spec.second_moment_factor() + noise_sd * noise_sd,
                std_error: 0.0,
                closed_form: true,
            });
        }
    }
    monte_carlo_risk(h, spec, loss, precision, seed)
}

/// Monte-Carlo risk, regardless of whether a closed form exists.
pub fn monte_carlo_risk(
    h: &Vector,
    spec: &DistributionSpec,
    loss: &LossModel,
    precision: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    if precision < 10_000 {
        return Err(Error::param(
            "precision",
            precision as f64,
            "must be at least 1e4",
        ));
    }
    let mut rng = rng::stream(seed, &[rng::label("true-risk")]);
    let mut values = Vec::with_capacity(precision);
    for _ in 0..precision {
        let z = spec.draw(&mut rng);
        values.push(loss.eval(h, &z)?);
    }
    let (value, std_error) = mean_and_se(&values);
    Ok(RiskEstimate {
        value,
        std_error,
        closed_form: false,
    })
}

/// One row per example: `x0, …, x{d-1}, y`.
pub fn write_sample_csv<W: Write>(sample: &Sample, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..sample.dim()).map(|k| format!("x{k}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    for z in sample.iter() {
        let mut row: Vec<String> = z.x.as_slice().iter().map(|c| c.to_string()).collect();
        row.push(z.y.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
