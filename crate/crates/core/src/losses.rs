//! Losses of linear predictors, `ℓ(h, z) = φ(⟨h, x⟩, y)`, with certified
//! constants.
//!
//! A [`LossModel`] fixes the domain on which its constants hold: features
//! with `‖x‖ ≤ B`, hypotheses with `‖h‖ ≤ R` and labels with `|y| ≤ Y_max`
//! (±1 for the margin losses, so `Y_max = 1` below). Evaluating outside that domain is an error
//! because the constants fed to the bounds would no longer be valid.
//!
//! | loss     | L              | M                  | s      |
//! |----------|----------------|--------------------|--------|
//! | hinge    | 1              | 1 + RB             | -      |
//! | logistic | 1              | log(1 + e^{RB})    | B²/4   |
//! | squared  | 2(RB + Y_max)  | (RB + Y_max)²      | 2B²    |
//!
//! An optional ridge term `λ_sc‖h‖²` makes the loss `2λ_sc`-strongly convex;
//! see [`strongly_convex_objective`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectorspace::Vector;

/// Relative slack on domain checks; sphere draws land on `‖x‖ = B` up to rounding.
const DOMAIN_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub x: Vector,
    pub y: f64,
}

impl LabeledExample {
    pub fn new(x: Vector, y: f64) -> Self {
        LabeledExample { x, y }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Hinge,
    Logistic,
    Squared,
}

impl LossKind {
    pub fn name(self) -> &'static str {
        match self {
            LossKind::Hinge => "hinge",
            LossKind::Logistic => "logistic",
            LossKind::Squared => "squared",
        }
    }

    pub fn is_convex(self) -> bool {
        true
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hinge" => Ok(LossKind::Hinge),
            "logistic" => Ok(LossKind::Logistic),
            "squared" => Ok(LossKind::Squared),
            other => Err(Error::Invalid(format!("unknown loss `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConstants {
    /// Lipschitz constant in the linear form ⟨h, x⟩.
    pub lipschitz: f64,
    /// Upper bound on the loss over the domain.
    pub bound: f64,
    /// Smoothness of the gradient in h; `None` for the hinge loss.
    pub smoothness: Option<f64>,
    pub strong_convexity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    pub kind: LossKind,
    /// B: bound on feature norms.
    pub feature_bound: f64,
    /// R: bound on hypothesis norms.
    pub radius: f64,
    /// Y_max: bound on |y|.
    pub label_bound: f64,
    /// Coefficient of the added `λ_sc‖h‖²` term; 0 for a plain loss.
    #[serde(default)]
    pub ridge: f64,
}

impl LossModel {
    pub fn new(kind: LossKind, feature_bound: f64, radius: f64) -> Result<Self> {
        Self::with_label_bound(kind, feature_bound, radius, 1.0)
    }

    pub fn with_label_bound(
        kind: LossKind,
        feature_bound: f64,
        radius: f64,
        label_bound: f64,
    ) -> Result<Self> {
        if !(feature_bound > 0.0 && feature_bound.is_finite()) {
            return Err(Error::param(
                "feature_bound",
                feature_bound,
                "must be positive",
            ));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::param("radius", radius, "must be positive"));
        }
        if !(label_bound > 0.0 && label_bound.is_finite()) {
            return Err(Error::param("label_bound", label_bound, "must be positive"));
        }
        Ok(LossModel {
            kind,
            feature_bound,
            radius,
            label_bound,
            ridge: 0.0,
        })
    }

    /// Same loss certified on a different hypothesis radius.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        let mut out =
            Self::with_label_bound(self.kind, self.feature_bound, radius, self.label_bound)?;
        out.ridge = self.ridge;
        Ok(out)
    }

    pub fn is_convex(&self) -> bool {
        self.kind.is_convex()
    }

    /// `sup_z ℓ(0, z)` over the domain, used to bound the norm of penalized minimizers.
    pub fn bound_at_origin(&self) -> f64 {
        match self.kind {
            LossKind::Hinge => 1.0,
            LossKind::Logistic => std::f64::consts::LN_2,
            LossKind::Squared => self.label_bound * self.label_bound,
        }
    }

    fn check_domain(&self, h: &Vector, z: &LabeledExample) -> Result<()> {
        h.check_dim(&z.x)?;
        let hn = h.norm();
        if hn > self.radius * (1.0 + DOMAIN_SLACK) {
            return Err(Error::DomainViolation {
                what: "‖h‖",
                value: hn,
                bound: self.radius,
            });
        }
        let xn = z.x.norm();
        if xn > self.feature_bound * (1.0 + DOMAIN_SLACK) {
            return Err(Error::DomainViolation {
                what: "‖x‖",
                value: xn,
                bound: self.feature_bound,
            });
        }
        if z.y.abs() > self.label_bound * (1.0 + DOMAIN_SLACK) {
            return Err(Error::DomainViolation {
                what: "|y|",
                value: z.y.abs(),
                bound: self.label_bound,
            });
        }
        Ok(())
    }

    pub fn eval(&self, h: &Vector, z: &LabeledExample) -> Result<f64> {
        self.check_domain(h, z)?;
        Ok(self.eval_unchecked(h, z))
    }

    pub(crate) fn eval_unchecked(&self, h: &Vector, z: &LabeledExample) -> f64 {
        let p = h.dot(&z.x);
        let base = match self.kind {
            LossKind::Hinge => (1.0 - z.y * p).max(0.0),
            LossKind::Logistic => softplus(-z.y * p),
            LossKind::Squared => (p - z.y) * (p - z.y),
        };
        if self.ridge > 0.0 {
            base + self.ridge * h.norm_sq()
        } else {
            base
        }
    }

    pub fn grad(&self, h: &Vector, z: &LabeledExample) -> Result<Vector> {
        self.check_domain(h, z)?;
        let mut g = Vector::zeros(h.dim());
        self.add_grad_unchecked(h, z, 1.0, &mut g);
        Ok(g)
    }

    /// Derivative of φ(p, y) with respect to the prediction p.
    fn dphi(&self, p: f64, y: f64) -> f64 {
        match self.kind {
            // Subgradient 0 at the kink (margin exactly 1).
            LossKind::Hinge => {
                if y * p < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
            LossKind::Logistic => -y * sigmoid(-y * p),
            LossKind::Squared => 2.0 * (p - y),
        }
    }

    /// `out += weight * ∇_h ℓ(h, z)`
    pub(crate) fn add_grad_unchecked(
        &self,
        h: &Vector,
        z: &LabeledExample,
        weight: f64,
        out: &mut Vector,
    ) {
        let slope = self.dphi(h.dot(&z.x), z.y);
        out.axpy(weight * slope, &z.x);
        if self.ridge > 0.0 {
            out.axpy(weight * 2.0 * self.ridge, h);
        }
    }

    pub fn constants(&self) -> LossConstants {
        let b = self.feature_bound;
        let r = self.radius;
        let rb = r * b;
        let (lipschitz, bound, smoothness) = match self.kind {
            // Margin losses scale with |y|; for ±1 labels this is the table above.
            LossKind::Hinge => {
                let y = self.label_bound;
                (y, 1.0 + rb * y, None)
            }
            LossKind::Logistic => {
                let y = self.label_bound;
                (y, softplus(rb * y), Some(y * y * b * b / 4.0))
            }
            LossKind::Squared => {
                let y = self.label_bound;
                (2.0 * (rb + y), (rb + y) * (rb + y), Some(2.0 * b * b))
            }
        };
        if self.ridge > 0.0 {
            // The ridge term is not a function of ⟨h, x⟩; its gradient 2λ_sc h is
            // folded into L so that L·B still bounds every gradient norm.
            LossConstants {
                lipschitz: lipschitz + 2.0 * self.ridge * r / b,
                bound: bound + self.ridge * r * r,
                smoothness: smoothness.map(|s| s + 2.0 * self.ridge),
                strong_convexity: 2.0 * self.ridge,
            }
        } else {
            LossConstants {
                lipschitz,
                bound,
                smoothness,
                strong_convexity: 0.0,
            }
        }
    }
}

/// Add `λ_sc‖h‖²` to a convex loss, making it `2λ_sc`-strongly convex.
pub fn strongly_convex_objective(loss: &LossModel, lambda_sc: f64) -> Result<LossModel> {
    if !loss.is_convex() {
        return Err(Error::Invalid(format!("{} loss is not convex", loss.kind)));
    }
    if !(lambda_sc > 0.0 && lambda_sc.is_finite()) {
        return Err(Error::param("lambda_sc", lambda_sc, "must be positive"));
    }
    let mut out = *loss;
    out.ridge += lambda_sc;
    Ok(out)
}

pub(crate) fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^t)` without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn z(c: &[f64], y: f64) -> LabeledExample {
        LabeledExample::new(v(c), y)
    }

    #[test]
    fn eval_examples() {
        let hinge = LossModel::new(LossKind::Hinge, 1.0, 1.0).unwrap();
        assert_eq!(
            hinge.eval(&v(&[0.0, 0.0]), &z(&[0.6, 0.8], -1.0)).unwrap(),
            1.0
        );

        let logistic = LossModel::new(LossKind::Logistic, 1.0, 1.0).unwrap();
        let at_zero = logistic
            .eval(&v(&[0.5, 0.0]), &z(&[0.0, 1.0], 1.0))
            .unwrap();
        assert!((at_zero - std::f64::consts::LN_2).abs() < 1e-15);

        let squared = LossModel::new(LossKind::Squared, 1.0, 1.0).unwrap();
        assert_eq!(
            squared.eval(&v(&[1.0, 0.0]), &z(&[1.0, 0.0], 1.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn domain_violations_are_rejected() {
        let loss = LossModel::new(LossKind::Logistic, 1.0, 1.0).unwrap();
        assert!(matches!(
            loss.eval(&v(&[2.0, 0.0]), &z(&[1.0, 0.0], 1.0)),
            Err(Error::DomainViolation {
                what: "‖h‖", ..
            })
        ));
        assert!(matches!(
            loss.grad(&v(&[0.0, 0.0]), &z(&[1.0, 1.0], 1.0)),
            Err(Error::DomainViolation {
                what: "‖x‖", ..
            })
        ));
        let squared = LossModel::new(LossKind::Squared, 1.0, 1.0).unwrap();
        assert!(squared.eval(&v(&[0.0]), &z(&[1.0], 1.5)).is_err());
    }

    #[test]
    fn grad_examples() {
        let logistic = LossModel::new(LossKind::Logistic, 1.0, 1.0).unwrap();
        let g = logistic
            .grad(&v(&[0.0, 0.0]), &z(&[1.0, 0.0], 1.0))
            .unwrap();
        assert_eq!(g.as_slice(), &[-0.5, 0.0]);

        let hinge = LossModel::new(LossKind::Hinge, 1.0, 2.0).unwrap();
        let flat = hinge.grad(&v(&[2.0, 0.0]), &z(&[1.0, 0.0], 1.0)).unwrap();
        assert_eq!(flat.as_slice(), &[0.0, 0.0]);
        let kink = hinge.grad(&v(&[1.0, 0.0]), &z(&[1.0, 0.0], 1.0)).unwrap();
        assert_eq!(kink.as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn constant_table() {
        let c = LossModel::new(LossKind::Hinge, 1.0, 1.0)
            .unwrap()
            .constants();
        assert_eq!(
            (c.lipschitz, c.bound, c.smoothness, c.strong_convexity),
            (1.0, 2.0, None, 0.0)
        );

        let c = LossModel::new(LossKind::Logistic, 1.0, 1.0)
            .unwrap()
            .constants();
        assert_eq!(c.lipschitz, 1.0);
        assert!((c.bound - 1.313_261_687_518_222_8).abs() < 1e-12);
        assert_eq!(c.smoothness, Some(0.25));
        assert_eq!(c.strong_convexity, 0.0);

        let c = LossModel::new(LossKind::Squared, 1.0, 1.0)
            .unwrap()
            .constants();
        assert_eq!(
            (c.lipschitz, c.bound, c.smoothness, c.strong_convexity),
            (4.0, 4.0, Some(2.0), 0.0)
        );
    }

    #[test]
    fn strong_convexity_augmentation() {
        let logistic = LossModel::new(LossKind::Logistic, 1.0, 1.0).unwrap();
        let aug = strongly_convex_objective(&logistic, 0.5).unwrap();
        let c = aug.constants();
        assert_eq!(c.strong_convexity, 1.0);
        assert_eq!(c.smoothness, Some(1.25));
        assert_eq!(c.lipschitz, 2.0);
        assert!(strongly_convex_objective(&logistic, 0.0).is_err());

        let origin = v(&[0.0, 0.0]);
        let ex = z(&[0.6, -0.8], 1.0);
        assert_eq!(
            aug.eval(&origin, &ex).unwrap(),
            logistic.eval(&origin, &ex).unwrap()
        );
    }

    #[test]
    fn loss_names_round_trip() {
        for kind in [LossKind::Hinge, LossKind::Logistic, LossKind::Squared] {
            assert_eq!(kind.name().parse::<LossKind>().unwrap(), kind);
        }
        assert!("huber".parse::<LossKind>().is_err());
    }

    #[test]
    fn softplus_is_stable() {
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
    }
}
