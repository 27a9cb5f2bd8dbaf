use nalgebra::{DMatrix, DVector};

use super::Sample;
use crate::error::{Error, Result};
use crate::vectorspace::Vector;

/// Exact minimizer of `(1/n)Σ(⟨h,xᵢ⟩ − yᵢ)² + λ‖h‖²`.
///
/// Solves `(XᵀX/n + λI) h = Xᵀy/n` by Cholesky factorization, followed by
/// one step of iterative refinement.
pub fn fit_ridge(sample: &Sample, lambda: f64) -> Result<Vector> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", lambda, "must be positive"));
    }
    let d = sample.dim();
    let n = sample.len() as f64;
    let mut gram = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    for z in sample.iter() {
        let x = z.x.as_slice();
        for a in 0..d {
            rhs[a] += x[a] * z.y;
            for b in 0..=a {
                gram[(a, b)] += x[a] * x[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    gram /= n;
    rhs /= n;
    for a in 0..d {
        gram[(a, a)] += lambda;
    }
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Invalid("ridge system is not positive definite".into()))?;
    let mut h = chol.solve(&rhs);
    let residual = &rhs - &gram * &h;
    h += chol.solve(&residual);
    Vector::new(h.iter().copied().collect())
}
