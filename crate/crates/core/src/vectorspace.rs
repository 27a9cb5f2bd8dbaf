//! Euclidean geometry for hypotheses and features.
//!
//! Hypotheses and feature vectors live in the same d-dimensional Euclidean
//! space, so the primal and dual norms coincide. The space is (2,1)-smooth
//! and of type 2 with constant 1; [`parallelogram_defect`] and
//! [`type2_check`] make both facts checkable on concrete inputs.

use std::ops::{Add, Index, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// A finite vector in R^d with d >= 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some(index) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoordinate { index });
        }
        Ok(Vector(coords))
    }

    pub fn zeros(d: usize) -> Self {
        assert!(d >= 1, "dimension must be positive");
        Vector(vec![0.0; d])
    }

    /// Unit vector along coordinate `k`.
    pub fn basis(d: usize, k: usize) -> Self {
        let mut v = Self::zeros(d);
        v.0[k] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub(crate) fn check_dim(&self, other: &Vector) -> Result<()> {
        if self.dim() == other.dim() {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            })
        }
    }

    /// Dot product without the dimension check; callers guarantee equal d.
    pub(crate) fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scaled(&self, k: f64) -> Vector {
        Vector(self.0.iter().map(|c| c * k).collect())
    }

    pub(crate) fn scale_mut(&mut self, k: f64) {
        self.0.iter_mut().for_each(|c| *c *= k);
    }

    /// `self += k * other`
    pub(crate) fn axpy(&mut self, k: f64, other: &Vector) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += k * b;
        }
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    /// Euclidean distance.
    pub fn distance(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Radial projection onto the ball of the given radius.
    pub fn project_to_ball(&mut self, radius: f64) {
        let norm = self.norm();
        if norm > radius {
            self.scale_mut(radius / norm);
        }
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        assert_eq!(self.dim(), rhs.dim(), "dimension mismatch");
        Vector(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

/// Constants describing the geometry of the hypothesis space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceConstants {
    /// Smoothness constant D of a (2,D)-smooth space.
    pub smoothness: f64,
    /// Type constant C_p of the feature space.
    pub type_constant: f64,
    /// Type exponent p.
    pub type_exponent: f64,
}

impl SpaceConstants {
    pub const EUCLIDEAN: SpaceConstants = SpaceConstants {
        smoothness: 1.0,
        type_constant: 1.0,
        type_exponent: 2.0,
    };
}

impl Default for SpaceConstants {
    fn default() -> Self {
        Self::EUCLIDEAN
    }
}

pub fn inner(a: &Vector, b: &Vector) -> Result<f64> {
    a.check_dim(b)?;
    Ok(a.dot(b))
}

pub fn norm(a: &Vector) -> f64 {
    a.norm()
}

/// Slack of the (2,1)-smoothness inequality,
/// `2‖h‖² + 2‖h′‖² − ‖h+h′‖² − ‖h−h′‖²`. Zero up to rounding in Euclidean space.
pub fn parallelogram_defect(h: &Vector, h_prime: &Vector) -> Result<f64> {
    h.check_dim(h_prime)?;
    let d = SpaceConstants::EUCLIDEAN.smoothness;
    let sum = h + h_prime;
    let diff = h - h_prime;
    Ok(2.0 * h.norm_sq() + 2.0 * d * d * h_prime.norm_sq() - (sum.norm_sq() + diff.norm_sq()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeCheck {
    /// Monte-Carlo estimate of E‖Σσᵢxᵢ‖.
    pub lhs_estimate: f64,
    pub std_error: f64,
    /// C₂ (Σ‖xᵢ‖²)^{1/2} with C₂ = 1.
    pub rhs: f64,
}

impl TypeCheck {
    pub fn holds(&self) -> bool {
        self.lhs_estimate <= self.rhs + 3.0 * self.std_error + 1e-12
    }
}

/// Estimate the Rademacher average E‖Σσᵢxᵢ‖ and compare it to the type-2
/// bound.
pub fn type2_check(xs: &[Vector], draws: usize, seed: u64) -> Result<TypeCheck> {
    let first = xs
        .first()
        .ok_or_else(|| Error::Invalid("type2_check needs at least one vector".into()))?;
    if draws == 0 {
        return Err(Error::param("draws", 0.0, "must be at least 1"));
    }
    for x in xs {
        first.check_dim(x)?;
    }
    let values: Vec<f64> = (0..draws as u64)
        .map(|draw| {
            let signs = rng::rademacher_signs(seed, draw, xs.len());
            let mut u = Vector::zeros(first.dim());
            for (s, x) in signs.iter().zip(xs) {
                u.axpy(*s, x);
            }
            u.norm()
        })
        .collect();
    let (mean, std_error) = mean_and_se(&values);
    let rhs = xs.iter().map(Vector::norm_sq).sum::<f64>().sqrt();
    Ok(TypeCheck {
        lhs_estimate: mean,
        std_error,
        rhs,
    })
}

/// Sample mean and its standard error (0 for a single value).
pub(crate) fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    #[test]
    fn inner_examples() {
        assert_eq!(inner(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(inner(&v(&[1.0, 2.0]), &v(&[3.0, 4.0])).unwrap(), 11.0);
        let a = v(&[0.3, -1.7, 2.2]);
        assert!((inner(&a, &a).unwrap() - a.norm_sq()).abs() < 1e-15);
        assert!(matches!(
            inner(&v(&[1.0]), &v(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn norm_examples() {
        assert_eq!(norm(&v(&[0.0, 0.0, 0.0])), 0.0);
        assert_eq!(norm(&v(&[3.0, 4.0])), 5.0);
        assert!((norm(&v(&[1.0, 1.0])) - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_vectors() {
        assert!(matches!(Vector::new(vec![]), Err(Error::EmptyVector)));
        assert!(matches!(
            Vector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFiniteCoordinate { index: 1 })
        ));
        assert!(serde_json::from_str::<Vector>("[]").is_err());
    }

    #[test]
    fn parallelogram_examples() {
        assert_eq!(
            parallelogram_defect(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(),
            0.0
        );
        assert!(
            parallelogram_defect(&v(&[2.0, 3.0]), &v(&[-1.0, 4.0]))
                .unwrap()
                .abs()
                < 1e-9
        );
        assert_eq!(
            parallelogram_defect(&v(&[0.0, 0.0]), &v(&[0.0, 0.0])).unwrap(),
            0.0
        );
    }

    #[test]
    fn type2_examples() {
        let single = type2_check(&[v(&[1.0, 0.0])], 64, 1).unwrap();
        assert_eq!(single.lhs_estimate, 1.0);
        assert_eq!(single.rhs, 1.0);

        let ortho = type2_check(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])], 64, 1).unwrap();
        assert!((ortho.lhs_estimate - 2f64.sqrt()).abs() < 1e-12);
        assert!((ortho.rhs - 2f64.sqrt()).abs() < 1e-12);
        assert!(ortho.std_error < 1e-12);

        // Enumerating the four sign patterns gives (2 + 0 + 0 + 2) / 4 = 1.
        let parallel = type2_check(&[v(&[1.0, 0.0]), v(&[1.0, 0.0])], 4096, 9).unwrap();
        assert!((parallel.lhs_estimate - 1.0).abs() < 3.0 * parallel.std_error);
        assert!((parallel.rhs - 2f64.sqrt()).abs() < 1e-12);
        assert!(parallel.holds());

        assert!(type2_check(&[], 10, 0).is_err());
    }
}
