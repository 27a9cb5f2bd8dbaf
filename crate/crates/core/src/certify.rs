//! Randomized checks of a loss's gradient and certified constants.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::{LabeledExample, LossKind, LossModel};
use crate::rng::{self, Rng};
use crate::vectorspace::Vector;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-6;
/// Allowed relative finite-difference error.
pub const FD_TOLERANCE: f64 = 1e-5;
/// Relative slack on the constant certificates.
const SLACK: f64 = 1e-12;
/// Finite-difference points closer than this to the hinge kink are redrawn.
const KINK_GAP: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub checked: usize,
    pub violations: usize,
    /// Largest observed lhs/rhs ratio (or relative error for gradients).
    pub worst: f64,
}

impl Certificate {
    fn new() -> Self {
        Certificate {
            checked: 0,
            violations: 0,
            worst: 0.0,
        }
    }

    fn record(&mut self, ratio: f64, ok: bool) {
        self.checked += 1;
        self.worst = self.worst.max(ratio);
        if !ok {
            self.violations += 1;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub loss: LossModel,
    pub gradient: Certificate,
    pub lipschitz: Certificate,
    pub bound: Certificate,
    pub smoothness: Option<Certificate>,
    pub seed: u64,
}

impl CertificateReport {
    pub fn passes(&self) -> bool {
        [
            Some(&self.gradient),
            Some(&self.lipschitz),
            Some(&self.bound),
            self.smoothness.as_ref(),
        ]
        .into_iter()
        .flatten()
        .all(|c| c.violations == 0)
    }
}

fn in_ball(d: usize, radius: f64, rng: &mut Rng) -> Vector {
    let mut coords: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    let norm = coords
        .iter()
        .map(|c| c * c)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
    coords.iter_mut().for_each(|c| *c *= r / norm);
    Vector::new(coords).expect("finite")
}

fn example(loss: &LossModel, d: usize, rng: &mut Rng) -> LabeledExample {
    let x = in_ball(d, loss.feature_bound, rng);
    let y = match loss.kind {
        LossKind::Squared => rng.random_range(-loss.label_bound..=loss.label_bound),
        _ => {
            if rng.random::<bool>() {
                loss.label_bound
            } else {
                -loss.label_bound
            }
        }
    };
    LabeledExample::new(x, y)
}

/// Check gradients at `points` random points by central differences, and the
/// Lipschitz, bound and smoothness certificates on `triples` random
/// `(h, h′, z)` in the certified domain.
///
/// The Lipschitz certificate is checked in the linear form
/// `|ℓ(h,z) − ℓ(h′,z)| ≤ L|⟨h − h′, x⟩|`, or as `≤ L·B‖h − h′‖` when a ridge
/// term is present.
pub fn certify_loss(
    loss: &LossModel,
    d: usize,
    points: usize,
    triples: usize,
    seed: u64,
) -> Result<CertificateReport> {
    if d == 0 {
        return Err(Error::param("d", 0.0, "must be positive"));
    }
    let k = loss.constants();
    let mut rng = rng::stream(seed, &[rng::label("certify")]);

    let mut gradient = Certificate::new();
    let inner = loss.radius * (1.0 - 1e-3);
    while gradient.checked < points {
        let h = in_ball(d, inner, &mut rng);
        let z = example(loss, d, &mut rng);
        if loss.kind == LossKind::Hinge && (z.y * h.dot(&z.x) - 1.0).abs() < KINK_GAP {
            continue;
        }
        let v = in_ball(d, 1.0, &mut rng);
        let v = v.scaled(1.0 / v.norm().max(f64::MIN_POSITIVE));
        let step = FD_STEP.min(loss.radius - h.norm());
        let plus = loss.eval(&(&h + &v.scaled(step)), &z)?;
        let minus = loss.eval(&(&h - &v.scaled(step)), &z)?;
        let fd = (plus - minus) / (2.0 * step);
        let analytic = loss.grad(&h, &z)?.dot(&v);
        let rel = (fd - analytic).abs() / analytic.abs().max(1.0);
        gradient.record(rel, rel <= FD_TOLERANCE);
    }

    let mut lipschitz = Certificate::new();
    let mut bound = Certificate::new();
    let mut smoothness = k.smoothness.map(|_| Certificate::new());
    for _ in 0..triples {
        let h = in_ball(d, loss.radius, &mut rng);
        let hp = in_ball(d, loss.radius, &mut rng);
        let z = example(loss, d, &mut rng);
        let (lh, lhp) = (loss.eval(&h, &z)?, loss.eval(&hp, &z)?);
        let diff = &h - &hp;
        let rhs = if loss.ridge > 0.0 {
            k.lipschitz * loss.feature_bound * diff.norm()
        } else {
            k.lipschitz * diff.dot(&z.x).abs()
        };
        let lhs = (lh - lhp).abs();
        lipschitz.record(ratio(lhs, rhs), lhs <= rhs * (1.0 + SLACK) + SLACK);
        for value in [lh, lhp] {
            bound.record(
                value / k.bound,
                (0.0..=k.bound * (1.0 + SLACK)).contains(&value),
            );
        }
        if let (Some(cert), Some(s)) = (smoothness.as_mut(), k.smoothness) {
            let gap = (&loss.grad(&h, &z)? - &loss.grad(&hp, &z)?).norm();
            let rhs = s * diff.norm();
            cert.record(ratio(gap, rhs), gap <= rhs * (1.0 + SLACK) + SLACK);
        }
    }
    Ok(CertificateReport {
        loss: *loss,
        gradient,
        lipschitz,
        bound,
        smoothness,
        seed,
    })
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::strongly_convex_objective;

    #[test]
    fn shipped_losses_pass() {
        for kind in [LossKind::Hinge, LossKind::Logistic, LossKind::Squared] {
            let loss = LossModel::with_label_bound(kind, 1.5, 2.0, 1.0).unwrap();
            let rep = certify_loss(&loss, 4, 200, 1000, 3).unwrap();
            assert!(rep.passes(), "{kind}: {rep:?}");
            assert_eq!(rep.smoothness.is_some(), kind != LossKind::Hinge);
        }
        let aug =
            strongly_convex_objective(&LossModel::new(LossKind::Logistic, 1.0, 1.0).unwrap(), 0.5)
                .unwrap();
        assert!(certify_loss(&aug, 3, 200, 1000, 4).unwrap().passes());
    }

    #[test]
    fn violations_are_counted() {
        let mut c = Certificate::new();
        c.record(0.5, true);
        c.record(1.5, false);
        assert_eq!((c.checked, c.violations, c.worst), (2, 1, 1.5));
    }
}
