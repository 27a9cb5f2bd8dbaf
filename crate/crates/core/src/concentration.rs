//! Tail experiments for vector-valued martingales and for the concentration
//! of `h_S` around `E h_S`.

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexity::{ball_radius, replicate_fits, summarize, CenterEstimate};
use crate::datagen::DistributionSpec;
use crate::error::{check_delta, Error, Result};
use crate::learners::{Algorithm, Sample};
use crate::rng;
use crate::vectorspace::{mean_and_se, Vector};

pub const MIN_TRIALS: usize = 100;
pub const MAX_DOOB_N: usize = 16;
pub const MIN_SUFFIX_DRAWS: usize = 256;
/// Cap on the number of refits in one Doob decomposition.
pub const MAX_DOOB_FITS: usize = 1 << 21;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailExperiment {
    pub threshold: f64,
    pub trials: usize,
    pub violations: usize,
    pub empirical_rate: f64,
    pub theoretical_rate: f64,
    pub seed: u64,
}

impl TailExperiment {
    fn new(
        threshold: f64,
        trials: usize,
        violations: usize,
        theoretical_rate: f64,
        seed: u64,
    ) -> Self {
        TailExperiment {
            threshold,
            trials,
            violations,
            empirical_rate: violations as f64 / trials as f64,
            theoretical_rate,
            seed,
        }
    }

    /// Binomial standard error at the claimed rate.
    pub fn binomial_se(&self) -> f64 {
        let p = self.theoretical_rate;
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// `empirical_rate ≤ theoretical_rate + 3·SE`.
    pub fn within_envelope(&self) -> bool {
        self.empirical_rate <= self.theoretical_rate + 3.0 * self.binomial_se()
    }
}

fn random_unit(d: usize, rng: &mut rng::Rng) -> Vector {
    loop {
        let coords: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            return Vector::new(coords.iter().map(|c| c / norm).collect()).expect("finite");
        }
    }
}

/// Prefix-maximum tail of a bounded martingale with increments
/// `σ_t·b_t·u_t` (`σ_t` Rademacher, `u_t` fixed unit vectors), against
/// `min(1, 2exp(−ε²/(2D²)))` at level `cε`, `c = √(Σ b_t²)`.
pub fn pinelis_tail_experiment(
    increment_bounds: &[f64],
    d: usize,
    trials: usize,
    eps: f64,
    d_smooth: f64,
    seed: u64,
) -> Result<TailExperiment> {
    if trials < MIN_TRIALS {
        return Err(Error::param(
            "trials",
            trials as f64,
            "must be at least 100",
        ));
    }
    if increment_bounds.is_empty()
        || increment_bounds
            .iter()
            .any(|b| !(*b >= 0.0 && b.is_finite()))
    {
        return Err(Error::Invalid(
            "increment bounds must be finite and non-negative".into(),
        ));
    }
    if d == 0 {
        return Err(Error::param("d", 0.0, "must be positive"));
    }
    if !(d_smooth >= 1.0) {
        return Err(Error::param(
            "D",
            d_smooth,
            "Euclidean space is (2,D)-smooth only for D ≥ 1",
        ));
    }
    if !(eps >= 0.0) {
        return Err(Error::param("eps", eps, "must be non-negative"));
    }
    let mut dirs = rng::stream(seed, &[rng::label("pinelis-directions")]);
    let steps: Vec<Vector> = increment_bounds
        .iter()
        .map(|b| random_unit(d, &mut dirs).scaled(*b))
        .collect();
    let c = increment_bounds.iter().map(|b| b * b).sum::<f64>().sqrt();
    let threshold = c * eps;
    let violations = (0..trials)
        .into_par_iter()
        .filter(|&k| {
            let mut g = rng::stream(seed, &[rng::label("pinelis-trial"), k as u64]);
            let mut s = Vector::zeros(d);
            steps.iter().any(|step| {
                s.axpy(if g.random::<bool>() { 1.0 } else { -1.0 }, step);
                s.norm() >= threshold
            })
        })
        .count();
    let theoretical = (2.0 * (-eps * eps / (2.0 * d_smooth * d_smooth)).exp()).min(1.0);
    Ok(TailExperiment::new(
        threshold,
        trials,
        violations,
        theoretical,
        seed,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoobIncrements {
    /// `‖D̂_t‖`, t = 1..n.
    pub norms: Vec<f64>,
    pub increments: Vec<Vector>,
    /// Nested Monte-Carlo standard error of each `D̂_t`.
    pub std_errors: Vec<f64>,
    /// `Ê(h_S | Z_1..Z_t)`, t = 0..n.
    pub conditional_means: Vec<Vector>,
    pub suffix_draws: usize,
}

/// Doob increments `D_t = E(h_S | Z_1..Z_t) − E(h_S | Z_1..Z_{t−1})`.
///
/// Each conditional mean averages `suffix_draws` refits with the prefix of
/// `sample` held fixed and `Z_{t+1}..Z_n` redrawn from `dist`. Every refit
/// uses its own algorithm seed, so the means also integrate over SGD's
/// index stream.
pub fn doob_increment_norms(
    alg: &Algorithm,
    sample: &Sample,
    dist: &DistributionSpec,
    suffix_draws: usize,
    seed: u64,
) -> Result<DoobIncrements> {
    let n = sample.len();
    if n > MAX_DOOB_N {
        return Err(Error::Budget(format!(
            "nested estimation needs n ≤ {MAX_DOOB_N}, got {n}"
        )));
    }
    if suffix_draws < MIN_SUFFIX_DRAWS {
        return Err(Error::param(
            "suffix_draws",
            suffix_draws as f64,
            "must be at least 256",
        ));
    }
    if (n + 1) * suffix_draws > MAX_DOOB_FITS {
        return Err(Error::Budget(format!(
            "{} refits exceed the budget of {MAX_DOOB_FITS}",
            (n + 1) * suffix_draws
        )));
    }
    let levels: Vec<(Vector, Vec<f64>)> = (0..=n)
        .into_par_iter()
        .map(|t| {
            let fits = (0..suffix_draws)
                .map(|k| {
                    let mut g = rng::stream(seed, &[rng::label("doob-suffix"), t as u64, k as u64]);
                    let mut examples = sample.examples()[..t].to_vec();
                    examples.extend((t..n).map(|_| dist.draw(&mut g)));
                    let resampled = Sample::new(examples)?;
                    alg.fit(
                        &resampled,
                        rng::derive(seed, &[rng::label("doob-fit"), t as u64, k as u64]),
                    )
                    .map_err(|e| e.at(format!("prefix {t}, suffix draw {k}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let est: CenterEstimate = summarize(&fits);
            Ok((est.center, est.std_error))
        })
        .collect::<Result<_>>()?;
    let mut increments = Vec::with_capacity(n);
    let mut std_errors = Vec::with_capacity(n);
    for t in 1..=n {
        increments.push(&levels[t].0 - &levels[t - 1].0);
        let var: f64 = levels[t]
            .1
            .iter()
            .chain(&levels[t - 1].1)
            .map(|s| s * s)
            .sum();
        std_errors.push(var.sqrt());
    }
    Ok(DoobIncrements {
        norms: increments.iter().map(Vector::norm).collect(),
        increments,
        std_errors,
        conditional_means: levels.into_iter().map(|(c, _)| c).collect(),
        suffix_draws,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Experiment {
    /// Violations of `‖h_S − ĉ‖ > r + 3·SE(ĉ)`, the radius inflated by the
    /// center's Monte-Carlo envelope.
    pub tail: TailExperiment,
    pub radius: f64,
    /// Violations of `‖h_S − ĉ‖ > r` with no inflation.
    pub raw_violations: usize,
    pub center: CenterEstimate,
    /// Mean of `‖h_S − ĉ‖` over the trials.
    pub mean_distance: f64,
}

impl Lemma1Experiment {
    pub fn raw_rate(&self) -> f64 {
        self.raw_violations as f64 / self.tail.trials as f64
    }
}

/// Concentration of `h_S` in the ball of radius `α√(2n log(2/δ))` around
/// `E h_S`, which is estimated from `center_replicates` fits drawn
/// independently of the `trials` fits.
#[allow(clippy::too_many_arguments)]
pub fn lemma1_tail_experiment(
    alg: &Algorithm,
    dist: &DistributionSpec,
    n: usize,
    trials: usize,
    delta: f64,
    alpha: f64,
    center_replicates: usize,
    seed: u64,
) -> Result<Lemma1Experiment> {
    check_delta(delta)?;
    if trials == 0 {
        return Err(Error::param("trials", 0.0, "must be at least 1"));
    }
    if center_replicates < 4 * trials {
        return Err(Error::param(
            "center_replicates",
            center_replicates as f64,
            "must be at least 4 × trials",
        ));
    }
    let center = summarize(&replicate_fits(
        alg,
        dist,
        n,
        center_replicates,
        rng::derive(seed, &[rng::label("lemma1-center")]),
    )?);
    let fits = replicate_fits(
        alg,
        dist,
        n,
        trials,
        rng::derive(seed, &[rng::label("lemma1-trials")]),
    )?;
    let radius = ball_radius(1.0, alpha, n, delta)?;
    let threshold = radius + 3.0 * center.std_error_norm();
    let distances: Vec<f64> = fits.iter().map(|h| h.distance(&center.center)).collect();
    let violations = distances.iter().filter(|&&d| d > threshold).count();
    let raw_violations = distances.iter().filter(|&&d| d > radius).count();
    Ok(Lemma1Experiment {
        tail: TailExperiment::new(threshold, trials, violations, delta, seed),
        radius,
        raw_violations,
        mean_distance: mean_and_se(&distances).0,
        center,
    })
}
