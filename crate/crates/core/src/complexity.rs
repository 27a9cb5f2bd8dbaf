//! The algorithmic ball `B_r` around `E h_S` and its Rademacher complexity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::DistributionSpec;
use crate::error::{check_delta, Error, Result};
use crate::learners::Algorithm;
use crate::rng;
use crate::vectorspace::{mean_and_se, Vector};

/// Largest n for exhaustive sign enumeration.
pub const MAX_EXHAUSTIVE_N: usize = 20;

pub const DEFAULT_CENTER_REPLICATES: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmicBall {
    pub center: Vector,
    pub radius: f64,
    pub n: usize,
    pub delta: f64,
}

impl AlgorithmicBall {
    /// Ball of radius `D·α·√(2n log(2/δ))`.
    pub fn from_stability(
        center: Vector,
        d_smooth: f64,
        alpha: f64,
        n: usize,
        delta: f64,
    ) -> Result<Self> {
        Ok(AlgorithmicBall {
            radius: ball_radius(d_smooth, alpha, n, delta)?,
            center,
            n,
            delta,
        })
    }

    pub fn contains(&self, h: &Vector) -> bool {
        self.center.distance(h) <= self.radius
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RademacherEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub draws: usize,
    pub seed: u64,
}

/// `r(n, δ) = D·α·√(2n log(2/δ))`.
pub fn ball_radius(d_smooth: f64, alpha: f64, n: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if n == 0 {
        return Err(Error::param("n", 0.0, "must be at least 1"));
    }
    Ok(d_smooth * alpha * (2.0 * n as f64 * (2.0 / delta).ln()).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CenterEstimate {
    pub center: Vector,
    /// Per-coordinate standard error.
    pub std_error: Vec<f64>,
    pub replicates: usize,
}

impl CenterEstimate {
    /// Euclidean norm of the per-coordinate standard errors.
    pub fn std_error_norm(&self) -> f64 {
        self.std_error.iter().map(|s| s * s).sum::<f64>().sqrt()
    }
}

/// Fits of `alg` on `m` independent samples of size `n`, one per replicate.
pub(crate) fn replicate_fits(
    alg: &Algorithm,
    dist: &DistributionSpec,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<Vec<Vector>> {
    (0..m)
        .into_par_iter()
        .map(|j| {
            let sample = dist.sample(
                n,
                rng::derive(seed, &[rng::label("center-sample"), j as u64]),
            )?;
            alg.fit(
                &sample,
                rng::derive(seed, &[rng::label("center-fit"), j as u64]),
            )
            .map_err(|e| e.at(format!("replicate {j}")))
        })
        .collect()
}

/// Estimate `E h_S` by averaging fits on `m` independent samples.
pub fn estimate_center(
    alg: &Algorithm,
    dist: &DistributionSpec,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<CenterEstimate> {
    if m == 0 {
        return Err(Error::param("m", 0.0, "must be at least 1"));
    }
    let fits = replicate_fits(alg, dist, n, m, seed)?;
    Ok(summarize(&fits))
}

pub(crate) fn summarize(fits: &[Vector]) -> CenterEstimate {
    let d = fits[0].dim();
    let (center, std_error): (Vec<f64>, Vec<f64>) = (0..d)
        .map(|k| mean_and_se(&fits.iter().map(|h| h[k]).collect::<Vec<_>>()))
        .unzip();
    CenterEstimate {
        center: Vector::new(center).expect("mean of finite fits"),
        std_error,
        replicates: fits.len(),
    }
}

fn check_points(xs: &[Vector]) -> Result<()> {
    let first = xs.first().ok_or(Error::EmptyVector)?;
    xs.iter().try_for_each(|x| first.check_dim(x))
}

/// `u = Σ σᵢ xᵢ`.
fn signed_sum(xs: &[Vector], signs: &[f64]) -> Vector {
    let mut u = Vector::zeros(xs[0].dim());
    for (x, s) in xs.iter().zip(signs) {
        u.axpy(*s, x);
    }
    u
}

/// `sup_{h ∈ B_r} (1/n) Σ σᵢ⟨h, xᵢ⟩ = (⟨c, u⟩ + r‖u‖)/n`.
pub fn ball_sup(ball: &AlgorithmicBall, xs: &[Vector], signs: &[f64]) -> f64 {
    let u = signed_sum(xs, signs);
    (ball.center.dot(&u) + ball.radius * u.norm()) / xs.len() as f64
}

/// `max_{h ∈ H} (1/n) Σ σᵢ⟨h, xᵢ⟩` for a finite class.
pub fn finite_class_sup(hypotheses: &[Vector], xs: &[Vector], signs: &[f64]) -> f64 {
    let u = signed_sum(xs, signs);
    hypotheses
        .iter()
        .map(|h| h.dot(&u))
        .fold(f64::NEG_INFINITY, f64::max)
        / xs.len() as f64
}

/// Monte-Carlo Rademacher complexity of `B_r` conditioned on `xs`.
pub fn ball_rademacher(
    ball: &AlgorithmicBall,
    xs: &[Vector],
    draws: usize,
    seed: u64,
) -> Result<RademacherEstimate> {
    check_points(xs)?;
    ball.center.check_dim(&xs[0])?;
    if draws < 2 {
        return Err(Error::param("draws", draws as f64, "must be at least 2"));
    }
    let values: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|k| ball_sup(ball, xs, &rng::rademacher_signs(seed, k as u64, xs.len())))
        .collect();
    let (mean, std_error) = mean_and_se(&values);
    Ok(RademacherEstimate {
        mean,
        std_error,
        draws,
        seed,
    })
}

/// Rademacher complexity of a finite class: exact over all `2ⁿ` sign
/// vectors when `exhaustive`, otherwise Monte Carlo over `draws` vectors.
pub fn brute_force_rademacher(
    hypotheses: &[Vector],
    xs: &[Vector],
    exhaustive: bool,
    draws: usize,
    seed: u64,
) -> Result<RademacherEstimate> {
    check_points(xs)?;
    let first = hypotheses
        .first()
        .ok_or_else(|| Error::Invalid("hypothesis class is empty".into()))?;
    for h in hypotheses {
        first.check_dim(h)?;
    }
    first.check_dim(&xs[0])?;
    let n = xs.len();
    if !exhaustive {
        if draws < 2 {
            return Err(Error::param("draws", draws as f64, "must be at least 2"));
        }
        let values: Vec<f64> = (0..draws)
            .into_par_iter()
            .map(|k| finite_class_sup(hypotheses, xs, &rng::rademacher_signs(seed, k as u64, n)))
            .collect();
        let (mean, std_error) = mean_and_se(&values);
        return Ok(RademacherEstimate {
            mean,
            std_error,
            draws,
            seed,
        });
    }
    if n > MAX_EXHAUSTIVE_N {
        return Err(Error::Budget(format!(
            "exhaustive enumeration needs n ≤ {MAX_EXHAUSTIVE_N}, got {n}"
        )));
    }
    // Walk the sign vectors in Gray-code order so each step flips one sign.
    let proj: Vec<Vec<f64>> = hypotheses
        .iter()
        .map(|h| xs.iter().map(|x| h.dot(x)).collect())
        .collect();
    let mut sums: Vec<f64> = proj.iter().map(|p| -p.iter().sum::<f64>()).collect();
    let mut signs = vec![-1.0; n];
    let total = 1usize << n;
    let mut acc = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for k in 1..total {
        let bit = k.trailing_zeros() as usize;
        signs[bit] = -signs[bit];
        let s = signs[bit];
        let mut best = f64::NEG_INFINITY;
        for (sum, p) in sums.iter_mut().zip(&proj) {
            *sum += 2.0 * s * p[bit];
            best = best.max(*sum);
        }
        acc += best;
    }
    Ok(RademacherEstimate {
        mean: acc / (total as f64 * n as f64),
        std_error: 0.0,
        draws: total,
        seed,
    })
}
