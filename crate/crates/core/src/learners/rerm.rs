use serde::{Deserialize, Serialize};

use super::Sample;
use crate::error::{Error, Result};
use crate::losses::LossModel;
use crate::vectorspace::Vector;

/// Penalty `λ‖h‖_p^p` with `1 < p ≤ 2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub p: f64,
    pub lambda: f64,
}

impl PenaltySpec {
    pub fn new(p: f64, lambda: f64) -> Result<Self> {
        let spec = PenaltySpec { p, lambda };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ridge(lambda: f64) -> Result<Self> {
        Self::new(2.0, lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p <= 2.0) {
            return Err(Error::param("p", self.p, "must lie in (1, 2]"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", self.lambda, "must be positive"));
        }
        Ok(())
    }

    /// `N(h) = ‖h‖_p^p` (without λ).
    pub fn norm_p_p(&self, h: &Vector) -> f64 {
        if self.p == 2.0 {
            h.norm_sq()
        } else {
            h.as_slice().iter().map(|c| c.abs().powf(self.p)).sum()
        }
    }

    fn prox_in_place(&self, v: &mut Vector, step: f64) {
        let tau = step * self.lambda;
        if self.p == 2.0 {
            v.scale_mut(1.0 / (1.0 + 2.0 * tau));
        } else {
            for c in v.coords_mut() {
                *c = lp_prox(*c, tau, self.p);
            }
        }
    }
}

/// Scalar proximal map `argmin_u ½(u − v)² + τ|u|^p` for `1 < p < 2`.
///
/// The minimizer has the sign of `v` and its magnitude `u ∈ [0, |v|]` is the
/// root of the increasing function `u − |v| + τ p u^{p−1}`, located by
/// bisection to 1e-12.
pub fn lp_prox(v: f64, tau: f64, p: f64) -> f64 {
    let a = v.abs();
    if a == 0.0 || tau == 0.0 {
        return v;
    }
    let (mut lo, mut hi) = (0.0_f64, a);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid - a + tau * p * mid.powf(p - 1.0) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi) * v.signum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct RermFit {
    pub hypothesis: Vector,
    /// `R_{S,λ}` at the returned hypothesis.
    pub objective: f64,
    pub iterations: usize,
    /// Gradient norm of the objective (smooth losses) or the objective
    /// decrease over the last sweep (hinge).
    pub certificate: f64,
}

/// `R_{S,λ}(h) = (1/n)Σℓ(h, Zᵢ) + λ‖h‖_p^p`.
pub fn rerm_objective(sample: &Sample, loss: &LossModel, penalty: &PenaltySpec, h: &Vector) -> f64 {
    let risk: f64 = sample
        .iter()
        .map(|z| loss.eval_unchecked(h, z))
        .sum::<f64>()
        / sample.len() as f64;
    risk + penalty.lambda * penalty.norm_p_p(h)
}

fn risk_grad(sample: &Sample, loss: &LossModel, h: &Vector) -> Vector {
    let w = 1.0 / sample.len() as f64;
    let mut g = Vector::zeros(h.dim());
    for z in sample.iter() {
        loss.add_grad_unchecked(h, z, w, &mut g);
    }
    g
}

/// Minimize `R_{S,λ}` by proximal-gradient iterations.
///
/// Smooth losses use accelerated proximal gradient with adaptive restart,
/// stopping once the objective's gradient norm drops below `tol`. The hinge
/// loss uses proximal subgradient steps with `1/(μk)` step sizes and stops
/// when the best objective improves by less than `tol` over a sweep of
/// [`SWEEP`] iterations.
pub fn fit_rerm(
    sample: &Sample,
    loss: &LossModel,
    penalty: &PenaltySpec,
    tol: f64,
    max_iter: usize,
) -> Result<RermFit> {
    penalty.validate()?;
    if !(tol > 0.0) {
        return Err(Error::param("tol", tol, "must be positive"));
    }
    if !loss.is_convex() {
        return Err(Error::Invalid(
            "penalized ERM requires a convex loss".into(),
        ));
    }
    let x_max = sample.max_feature_norm();
    match loss.constants().smoothness {
        Some(_) => fit_smooth(sample, loss, penalty, tol, max_iter, x_max),
        None => fit_nonsmooth(sample, loss, penalty, tol, max_iter, x_max),
    }
}

pub const SWEEP: usize = 100;

fn fit_smooth(
    sample: &Sample,
    loss: &LossModel,
    penalty: &PenaltySpec,
    tol: f64,
    max_iter: usize,
    x_max: f64,
) -> Result<RermFit> {
    let d = sample.dim();
    // Smoothness of the averaged loss on this sample: ‖XᵀX/n‖ ≤ max‖xᵢ‖².
    let curvature = match loss.kind {
        crate::losses::LossKind::Squared => 2.0 * x_max * x_max,
        _ => 0.25 * x_max * x_max,
    } + 2.0 * loss.ridge;
    let step = 1.0 / curvature.max(1e-12);

    let mut h = Vector::zeros(d);
    let mut y = h.clone();
    let mut momentum = 1.0_f64;
    let mut certificate = f64::INFINITY;
    for iter in 1..=max_iter {
        let mut v = y.clone();
        v.axpy(-step, &risk_grad(sample, loss, &y));
        let mut next = v.clone();
        penalty.prox_in_place(&mut next, step);
        if !next.is_finite() {
            return Err(Error::NonFiniteIterate { step: iter });
        }

        // Prox optimality gives λ∇N(next) = (v − next)/step exactly.
        let mut full_grad = risk_grad(sample, loss, &next);
        full_grad.axpy(1.0 / step, &(&v - &next));
        certificate = full_grad.norm();
        if certificate < tol {
            let objective = rerm_objective(sample, loss, penalty, &next);
            return Ok(RermFit {
                hypothesis: next,
                objective,
                iterations: iter,
                certificate,
            });
        }

        let restart = (&y - &next).dot(&(&next - &h)) > 0.0;
        let next_momentum = if restart {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt())
        };
        let beta = if restart {
            0.0
        } else {
            (momentum - 1.0) / next_momentum
        };
        y = next.clone();
        y.axpy(beta, &(&next - &h));
        h = next;
        momentum = next_momentum;
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        suboptimality: certificate,
    })
}

fn fit_nonsmooth(
    sample: &Sample,
    loss: &LossModel,
    penalty: &PenaltySpec,
    tol: f64,
    max_iter: usize,
    x_max: f64,
) -> Result<RermFit> {
    let d = sample.dim();
    let radius = loss.radius;
    // Curvature floor of λ‖h‖_p^p (plus any ridge term) on the ball of radius R.
    let mu = penalty.lambda * penalty.p * (penalty.p - 1.0) * radius.powf(penalty.p - 2.0)
        + 2.0 * loss.ridge;
    let grad_scale = x_max * loss.constants().lipschitz
        + penalty.lambda * penalty.p * radius.powf(penalty.p - 1.0);
    let max_step = radius / grad_scale.max(1e-12);

    let mut h = Vector::zeros(d);
    let mut best = h.clone();
    let mut best_obj = rerm_objective(sample, loss, penalty, &h);
    let mut history = vec![best_obj];
    let mut avg = h.clone();
    let mut weight_total = 0.0;
    for k in 1..=max_iter {
        let step = max_step.min(1.0 / (mu * k as f64));
        let mut v = h.clone();
        v.axpy(-step, &risk_grad(sample, loss, &h));
        penalty.prox_in_place(&mut v, step);
        if !v.is_finite() {
            return Err(Error::NonFiniteIterate { step: k });
        }
        h = v;
        // Minimizers lie in the certified ball.
        h.project_to_ball(radius);

        // Weighted average with weights ∝ k.
        let w = k as f64;
        weight_total += w;
        avg.scale_mut((weight_total - w) / weight_total);
        avg.axpy(w / weight_total, &h);

        for candidate in [&h, &avg] {
            let obj = rerm_objective(sample, loss, penalty, candidate);
            if obj < best_obj {
                best_obj = obj;
                best = candidate.clone();
            }
        }
        history.push(best_obj);
        if k >= 2 * SWEEP {
            let decrease = history[k - SWEEP] - best_obj;
            if decrease < tol {
                return Ok(RermFit {
                    hypothesis: best,
                    objective: best_obj,
                    iterations: k,
                    certificate: decrease,
                });
            }
        }
    }
    let decrease = if max_iter >= SWEEP {
        history[max_iter - SWEEP] - best_obj
    } else {
        f64::INFINITY
    };
    Err(Error::NonConvergence {
        iterations: max_iter,
        suboptimality: decrease,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::fit_ridge;
    use crate::losses::{LabeledExample, LossKind};

    fn sample(rows: &[(&[f64], f64)]) -> Sample {
        Sample::new(
            rows.iter()
                .map(|(x, y)| LabeledExample::new(Vector::new(x.to_vec()).unwrap(), *y))
                .collect(),
        )
        .unwrap()
    }

    fn toy() -> Sample {
        sample(&[
            (&[0.6, 0.8], 1.0),
            (&[-0.8, 0.6], -1.0),
            (&[0.0, 1.0], 1.0),
            (&[1.0, 0.0], -1.0),
            (&[0.28, -0.96], 1.0),
        ])
    }

    #[test]
    fn lp_prox_solves_the_scalar_problem() {
        for &(v, tau, p) in &[(1.3, 0.2, 1.5), (-0.7, 1.0, 1.2), (2.0, 0.05, 1.9)] {
            let u = lp_prox(v, tau, p);
            // Brute-force the scalar objective on a fine grid.
            let f = |u: f64| 0.5 * (u - v) * (u - v) + tau * u.abs().powf(p);
            let grid_best = (0..=200_000)
                .map(|k| -3.0 + 6.0 * k as f64 / 200_000.0)
                .map(f)
                .fold(f64::INFINITY, f64::min);
            assert!(f(u) <= grid_best + 1e-9, "v={v} tau={tau} p={p}");
            assert_eq!(u.signum(), v.signum());
        }
        assert_eq!(lp_prox(0.0, 1.0, 1.5), 0.0);
    }

    #[test]
    fn p2_squared_matches_ridge() {
        let s = sample(&[(&[0.6, 0.8], 0.5), (&[-0.8, 0.6], -0.3), (&[0.0, 1.0], 0.9)]);
        let loss = LossModel::new(LossKind::Squared, 1.0, 10.0).unwrap();
        let fit = fit_rerm(&s, &loss, &PenaltySpec::ridge(0.1).unwrap(), 1e-10, 100_000).unwrap();
        let exact = fit_ridge(&s, 0.1).unwrap();
        assert!(fit.hypothesis.distance(&exact) < 1e-6);
    }

    #[test]
    fn never_worse_than_origin() {
        let s = toy();
        for kind in [LossKind::Hinge, LossKind::Logistic, LossKind::Squared] {
            for p in [1.3, 2.0] {
                let loss = LossModel::new(kind, 1.0, 20.0).unwrap();
                let pen = PenaltySpec::new(p, 0.05).unwrap();
                let fit = fit_rerm(&s, &loss, &pen, 1e-8, 200_000).unwrap();
                let origin = rerm_objective(&s, &loss, &pen, &Vector::zeros(2));
                assert!(fit.objective <= origin + 1e-12, "{kind} p={p}");
            }
        }
    }

    #[test]
    fn heavy_penalty_hinge_stays_at_origin() {
        let s = sample(&[(&[1.0, 0.0], 1.0)]);
        let loss = LossModel::new(LossKind::Hinge, 1.0, 1.0).unwrap();
        let fit = fit_rerm(&s, &loss, &PenaltySpec::ridge(1e4).unwrap(), 1e-10, 100_000).unwrap();
        assert!(fit.hypothesis.norm() < 1e-3);
    }

    #[test]
    fn smooth_certificate_is_a_true_gradient_norm() {
        let s = toy();
        let loss = LossModel::new(LossKind::Logistic, 1.0, 20.0).unwrap();
        let pen = PenaltySpec::new(1.5, 0.02).unwrap();
        let fit = fit_rerm(&s, &loss, &pen, 1e-9, 200_000).unwrap();
        // Central differences of the objective should vanish at the minimizer.
        let eps = 1e-6;
        for k in 0..2 {
            let mut up = fit.hypothesis.clone();
            up.coords_mut()[k] += eps;
            let mut down = fit.hypothesis.clone();
            down.coords_mut()[k] -= eps;
            let slope = (rerm_objective(&s, &loss, &pen, &up)
                - rerm_objective(&s, &loss, &pen, &down))
                / (2.0 * eps);
            assert!(slope.abs() < 1e-6, "slope {slope}");
        }
    }

    #[test]
    fn reports_non_convergence() {
        let s = toy();
        let loss = LossModel::new(LossKind::Logistic, 1.0, 20.0).unwrap();
        let err = fit_rerm(&s, &loss, &PenaltySpec::new(1.5, 0.02).unwrap(), 1e-14, 3).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { iterations: 3, .. }));
        assert!(PenaltySpec::new(1.0, 1.0).is_err());
        assert!(PenaltySpec::new(2.5, 1.0).is_err());
        assert!(PenaltySpec::new(2.0, 0.0).is_err());
    }
}
