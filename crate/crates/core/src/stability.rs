//! Replace-one stability: empirical measurement and closed-form coefficients.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::DistributionSpec;
use crate::error::{Error, Result};
use crate::learners::{Algorithm, PenaltySpec, Sample, SgdRegime, SgdSpec, StepSchedule};
use crate::losses::{LabeledExample, LossModel};
use crate::rng;
use crate::vectorspace::Vector;

/// Number of held-out points on which loss gaps are maximized.
pub const BETA_GRID: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexStability {
    pub max_over_replacements: f64,
    pub mean: f64,
}

/// One `(i, replacement)` cell. The last two replacements of every index are
/// the adversarial anchors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityCell {
    pub i: usize,
    pub replacement: usize,
    pub distance: f64,
    pub loss_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub per_index: Vec<IndexStability>,
    pub alpha_hat: f64,
    /// Mean distance over all cells.
    pub mean_distance: f64,
    pub beta_hat: Option<f64>,
    pub n: usize,
    /// Random replacement draws per index, anchors excluded.
    pub trials: usize,
    pub seed: u64,
    pub cells: Vec<StabilityCell>,
}

impl StabilityReport {
    /// Rows `i, replacement, distance, loss_gap`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["i", "replacement", "distance", "loss_gap"])?;
        for c in &self.cells {
            w.write_record([
                c.i.to_string(),
                c.replacement.to_string(),
                c.distance.to_string(),
                c.loss_gap.map(|g| g.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// The two extreme-margin points `±B·h/‖h‖`, each labeled against its margin.
fn anchors(h: &Vector, dist: &DistributionSpec) -> [LabeledExample; 2] {
    let norm = h.norm();
    let dir = if norm > 0.0 {
        h.scaled(1.0 / norm)
    } else {
        Vector::basis(h.dim(), 0)
    };
    let b = dist.feature_bound;
    let y = dist.label_bound();
    [
        LabeledExample::new(dir.scaled(b), -y),
        LabeledExample::new(dir.scaled(-b), y),
    ]
}

/// Estimate `α(n)` (and `β(n)` when `eval_loss` is given) on `sample`.
///
/// For every index `i` the example is replaced by `replacements` fresh draws
/// from `dist` and by two anchors. Both fits use the same seed, so SGD twins
/// follow the same index stream.
pub fn measure_argument_stability(
    alg: &Algorithm,
    sample: &Sample,
    dist: &DistributionSpec,
    replacements: usize,
    eval_loss: Option<&LossModel>,
    seed: u64,
) -> Result<StabilityReport> {
    if replacements == 0 {
        return Err(Error::param("replacements", 0.0, "must be at least 1"));
    }
    let fit_seed = rng::derive(seed, &[rng::label("fit")]);
    let h_s = alg.fit(sample, fit_seed).map_err(|e| e.at("fit on S"))?;
    let grid = match eval_loss {
        Some(loss) => {
            let mut g = rng::stream(seed, &[rng::label("beta-grid")]);
            let points: Vec<LabeledExample> = (0..BETA_GRID).map(|_| dist.draw(&mut g)).collect();
            let base = points
                .iter()
                .map(|z| loss.eval(&h_s, z))
                .collect::<Result<Vec<f64>>>()?;
            Some((loss, points, base))
        }
        None => None,
    };
    let n = sample.len();
    let rows: Vec<Vec<StabilityCell>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut draws = rng::stream(seed, &[rng::label("replacement"), i as u64]);
            let mut candidates: Vec<LabeledExample> =
                (0..replacements).map(|_| dist.draw(&mut draws)).collect();
            candidates.extend(anchors(&h_s, dist));
            candidates
                .into_iter()
                .enumerate()
                .map(|(r, z)| {
                    let context = || format!("index {i}, replacement {r}");
                    let twin = sample.replaced(i, z).map_err(|e| e.at(context()))?;
                    let h_i = alg.fit(&twin, fit_seed).map_err(|e| e.at(context()))?;
                    let loss_gap = match &grid {
                        Some((loss, points, base)) => {
                            let mut gap: f64 = 0.0;
                            for (z, l0) in points.iter().zip(base) {
                                gap = gap.max(
                                    (loss.eval(&h_i, z).map_err(|e| e.at(context()))? - l0).abs(),
                                );
                            }
                            Some(gap)
                        }
                        None => None,
                    };
                    Ok(StabilityCell {
                        i,
                        replacement: r,
                        distance: h_s.distance(&h_i),
                        loss_gap,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let per_index = rows
        .iter()
        .map(|row| IndexStability {
            max_over_replacements: row.iter().map(|c| c.distance).fold(0.0, f64::max),
            mean: row.iter().map(|c| c.distance).sum::<f64>() / row.len() as f64,
        })
        .collect::<Vec<_>>();
    let cells: Vec<StabilityCell> = rows.into_iter().flatten().collect();
    let beta_hat = grid.map(|_| cells.iter().filter_map(|c| c.loss_gap).fold(0.0, f64::max));
    Ok(StabilityReport {
        alpha_hat: per_index
            .iter()
            .map(|s| s.max_over_replacements)
            .fold(0.0, f64::max),
        mean_distance: cells.iter().map(|c| c.distance).sum::<f64>() / cells.len() as f64,
        per_index,
        beta_hat,
        n,
        trials: replacements,
        seed,
        cells,
    })
}

/// `α(n) = (LB/(Cλn))^{1/(ξ−1)}` for penalized ERM.
pub fn theoretical_alpha_rerm(
    l: f64,
    b: f64,
    c: f64,
    lambda: f64,
    n: usize,
    xi: f64,
) -> Result<f64> {
    if !(xi > 1.0) {
        return Err(Error::param("xi", xi, "must exceed 1"));
    }
    if !(c > 0.0) {
        return Err(Error::param("C", c, "must be positive"));
    }
    if !(lambda > 0.0) {
        return Err(Error::param("lambda", lambda, "must be positive"));
    }
    Ok((l * b / (c * lambda * n as f64)).powf(1.0 / (xi - 1.0)))
}

/// `β(n) = (L^ξ B^ξ/(Cλn))^{1/(ξ−1)}`, the direct RERM loss-stability formula.
pub fn theoretical_beta_rerm(
    l: f64,
    b: f64,
    c: f64,
    lambda: f64,
    n: usize,
    xi: f64,
) -> Result<f64> {
    theoretical_alpha_rerm((l * b).powf(xi), 1.0, c, lambda, n, xi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConstant {
    pub xi: f64,
    pub c: f64,
}

/// `ξ = 2`, `C = ¼p(p−1)(M/λ)^{(p−1)/p}` for `N = ‖·‖_p^p`.
pub fn lp_penalty_constant(p: f64, m: f64, lambda: f64) -> Result<PenaltyConstant> {
    PenaltySpec::new(p, lambda)?;
    Ok(PenaltyConstant {
        xi: 2.0,
        c: 0.25 * p * (p - 1.0) * (m / lambda).powf((p - 1.0) / p),
    })
}

/// Midpoint modulus of `‖·‖_p^p` on the cube `|h_k| ≤ radius`:
/// `¼p(p−1)·radius^{p−2}`, which is ½ at p = 2.
pub fn certified_penalty_constant(p: f64, radius: f64) -> Result<PenaltyConstant> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::param("p", p, "must lie in (1, 2]"));
    }
    if !(radius > 0.0) {
        return Err(Error::param("radius", radius, "must be positive"));
    }
    Ok(PenaltyConstant {
        xi: 2.0,
        c: 0.25 * p * (p - 1.0) * radius.powf(p - 2.0),
    })
}

/// SGD argument stability under coupled index streams.
pub fn theoretical_alpha_sgd(
    spec: &SgdSpec,
    l: f64,
    b: f64,
    s: Option<f64>,
    gamma: Option<f64>,
    n: usize,
) -> Result<f64> {
    let nf = n as f64;
    match spec.regime {
        SgdRegime::Nonconvex => {
            let s = s.ok_or_else(|| Error::Invalid("nonconvex regime needs s".into()))?;
            let StepSchedule::Harmonic(c) = spec.schedule else {
                return Err(Error::Invalid("nonconvex regime uses α_t = c/t".into()));
            };
            if n < 2 {
                return Err(Error::param("n", nf, "nonconvex regime needs n ≥ 2"));
            }
            let sc = s * c;
            let t = spec.steps as f64;
            Ok((1.0 + 1.0 / sc) / (nf - 1.0)
                * (2.0 * c * b * l).powf(1.0 / (sc + 1.0))
                * t.powf(sc / (sc + 1.0)))
        }
        SgdRegime::Convex => {
            if let Some(s) = s {
                let first = spec.schedule.step(1);
                if first > 2.0 / s {
                    return Err(Error::StepSizeCap {
                        regime: "convex",
                        t: 1,
                        step: first,
                        cap: 2.0 / s,
                    });
                }
            }
            Ok(2.0 * b * l / nf * spec.schedule.sum(spec.steps))
        }
        SgdRegime::StronglyConvex => {
            let gamma = gamma
                .filter(|g| *g > 0.0)
                .ok_or_else(|| Error::Invalid("strongly convex regime needs γ > 0".into()))?;
            if let Some(s) = s {
                let step = spec.schedule.step(1);
                if step > 1.0 / s {
                    return Err(Error::StepSizeCap {
                        regime: "strongly_convex",
                        t: 1,
                        step,
                        cap: 1.0 / s,
                    });
                }
            }
            Ok(2.0 * b * l / (gamma * nf))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `N(h) + N(h′) − 2N((h+h′)/2) ≥ C‖h − h′‖^ξ`.
pub fn check_penalty_condition(
    penalty: &PenaltySpec,
    h: &Vector,
    h_prime: &Vector,
    xi: f64,
    c: f64,
) -> Result<PenaltyCheck> {
    h.check_dim(h_prime)?;
    let mid = (h + h_prime).scaled(0.5);
    let lhs = penalty.norm_p_p(h) + penalty.norm_p_p(h_prime) - 2.0 * penalty.norm_p_p(&mid);
    let rhs = c * h.distance(h_prime).powf(xi);
    Ok(PenaltyCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - 1e-12,
    })
}

/// `β = L·B·α`.
pub fn theoretical_beta(l: f64, b: f64, alpha: f64) -> f64 {
    l * b * alpha
}

/// Theoretical stability of a configured algorithm at sample size `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoreticalStability {
    /// α(n) with the printed constants; the value every bound consumes.
    pub alpha: f64,
    /// α(n) with the certified penalty modulus (penalized ERM only).
    pub alpha_certified: Option<f64>,
    pub c: Option<f64>,
    pub c_certified: Option<f64>,
    pub xi: Option<f64>,
    /// `L·B·α`.
    pub beta: f64,
    /// Direct penalized-ERM β formula.
    pub beta_direct: Option<f64>,
    /// The two β formulas differ beyond rounding.
    pub beta_disagree: bool,
    pub lipschitz: f64,
    pub feature_bound: f64,
    pub loss_bound: f64,
}

pub fn theoretical_stability(alg: &Algorithm, n: usize) -> Result<TheoreticalStability> {
    let loss = alg.loss();
    let k = loss.constants();
    let (l, b, m) = (k.lipschitz, loss.feature_bound, k.bound);
    let mut out = TheoreticalStability {
        alpha: 0.0,
        alpha_certified: None,
        c: None,
        c_certified: None,
        xi: None,
        beta: 0.0,
        beta_direct: None,
        beta_disagree: false,
        lipschitz: l,
        feature_bound: b,
        loss_bound: m,
    };
    let penalty = match alg {
        Algorithm::Constant { .. } => return Ok(out),
        Algorithm::Ridge { lambda, .. } => Some(PenaltySpec::ridge(*lambda)?),
        Algorithm::Rerm { penalty, .. } => Some(*penalty),
        Algorithm::Sgd { spec, .. } => {
            out.alpha =
                theoretical_alpha_sgd(spec, l, b, k.smoothness, Some(k.strong_convexity), n)?;
            None
        }
    };
    if let Some(penalty) = penalty {
        let printed = lp_penalty_constant(penalty.p, m, penalty.lambda)?;
        let certified = certified_penalty_constant(penalty.p, loss.radius)?;
        out.alpha = theoretical_alpha_rerm(l, b, printed.c, penalty.lambda, n, printed.xi)?;
        out.alpha_certified = Some(theoretical_alpha_rerm(
            l,
            b,
            certified.c,
            penalty.lambda,
            n,
            certified.xi,
        )?);
        out.c = Some(printed.c);
        out.c_certified = Some(certified.c);
        out.xi = Some(printed.xi);
        let direct = theoretical_beta_rerm(l, b, printed.c, penalty.lambda, n, printed.xi)?;
        out.beta_direct = Some(direct);
        out.beta = theoretical_beta(l, b, out.alpha);
        out.beta_disagree = (direct - out.beta).abs() > 1e-12 * out.beta.abs().max(1.0);
        return Ok(out);
    }
    out.beta = theoretical_beta(l, b, out.alpha);
    Ok(out)
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Invalid(
            "slope needs at least two paired points".into(),
        ));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::Invalid("slope needs positive values".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::LossKind;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec()).unwrap()
    }

    fn dist(d: usize) -> DistributionSpec {
        let mut t = vec![0.0; d];
        t[0] = 0.5;
        DistributionSpec::linear_sphere(v(&t), 1.0, 0.05, 1.0).unwrap()
    }

    #[test]
    fn alpha_rerm_examples() {
        assert!(
            (theoretical_alpha_rerm(1.0, 1.0, 0.5, 0.1, 100, 2.0).unwrap() - 0.2).abs() < 1e-12
        );
        assert_eq!(
            theoretical_alpha_rerm(0.0, 1.0, 0.5, 0.1, 100, 2.5).unwrap(),
            0.0
        );
        assert!(
            (theoretical_alpha_rerm(1.0, 1.0, 1.0, 0.01, 100, 3.0).unwrap() - 1.0).abs() < 1e-12
        );
        assert!(theoretical_alpha_rerm(1.0, 1.0, 1.0, 0.01, 100, 1.0).is_err());
    }

    #[test]
    fn penalty_constant_examples() {
        assert_eq!(
            lp_penalty_constant(2.0, 1.0, 1.0).unwrap(),
            PenaltyConstant { xi: 2.0, c: 0.5 }
        );
        assert!((lp_penalty_constant(2.0, 4.0, 1.0).unwrap().c - 1.0).abs() < 1e-15);
        assert!((lp_penalty_constant(1.5, 1.0, 1.0).unwrap().c - 0.1875).abs() < 1e-15);
        assert!(lp_penalty_constant(1.0, 1.0, 1.0).is_err());
        assert!(lp_penalty_constant(2.5, 1.0, 1.0).is_err());
        assert_eq!(certified_penalty_constant(2.0, 7.0).unwrap().c, 0.5);
    }

    #[test]
    fn alpha_sgd_examples() {
        let mut spec = SgdSpec {
            regime: SgdRegime::StronglyConvex,
            steps: 10,
            schedule: StepSchedule::Constant(0.5),
            projection_radius: Some(1.0),
            seed: 0,
        };
        assert!(
            (theoretical_alpha_sgd(&spec, 1.0, 1.0, None, Some(0.5), 200).unwrap() - 0.02).abs()
                < 1e-15
        );
        assert!(theoretical_alpha_sgd(&spec, 1.0, 1.0, None, None, 200).is_err());
        assert!(theoretical_alpha_sgd(&spec, 1.0, 1.0, Some(4.0), Some(0.5), 200).is_err());

        spec.regime = SgdRegime::Convex;
        spec.steps = 100;
        spec.schedule = StepSchedule::Constant(0.01);
        assert!(
            (theoretical_alpha_sgd(&spec, 1.0, 1.0, None, None, 100).unwrap() - 0.02).abs() < 1e-12
        );

        spec.regime = SgdRegime::Nonconvex;
        spec.schedule = StepSchedule::Harmonic(1.0);
        let a = theoretical_alpha_sgd(&spec, 1.0, 1.0, Some(1.0), None, 101).unwrap();
        assert!((a - 0.02 * 2f64.sqrt() * 10.0).abs() < 1e-12);
        assert!((a - 0.28284).abs() < 1e-5);
    }

    #[test]
    fn penalty_condition_examples() {
        let ridge = PenaltySpec::ridge(1.0).unwrap();
        let (h, hp) = (v(&[0.3, -1.2]), v(&[2.0, 0.7]));
        let check = check_penalty_condition(&ridge, &h, &hp, 2.0, 0.5).unwrap();
        assert!((check.lhs - h.distance(&hp).powi(2) / 2.0).abs() < 1e-12);
        assert!((check.lhs - check.rhs).abs() < 1e-12 && check.holds);
        let same = check_penalty_condition(&ridge, &h, &h, 2.0, 0.5).unwrap();
        assert_eq!((same.lhs, same.rhs, same.holds), (0.0, 0.0, true));
    }

    #[test]
    fn lp_condition_on_unit_cube() {
        let pen = PenaltySpec::new(1.5, 1.0).unwrap();
        let k = lp_penalty_constant(1.5, 1.0, 1.0).unwrap();
        let mut g = rng::stream(5, &[]);
        use rand::Rng as _;
        for _ in 0..2000 {
            let h = v(&(0..3)
                .map(|_| g.random_range(-1.0..1.0))
                .collect::<Vec<_>>());
            let hp = v(&(0..3)
                .map(|_| g.random_range(-1.0..1.0))
                .collect::<Vec<_>>());
            assert!(
                check_penalty_condition(&pen, &h, &hp, k.xi, k.c)
                    .unwrap()
                    .holds
            );
        }
    }

    #[test]
    fn beta_examples() {
        assert!((theoretical_beta(1.0, 1.0, 0.2) - 0.2).abs() < 1e-15);
        assert_eq!(theoretical_beta(1.0, 1.0, 0.0), 0.0);
        assert!((theoretical_beta(2.0, 3.0, 0.1) - 0.6).abs() < 1e-12);
        let (l, b, c, lambda) = (2.0, 1.5, 0.3, 0.1);
        let direct = theoretical_beta_rerm(l, b, c, lambda, 50, 2.0).unwrap();
        let linked = theoretical_beta(
            l,
            b,
            theoretical_alpha_rerm(l, b, c, lambda, 50, 2.0).unwrap(),
        );
        assert!((direct - linked).abs() < 1e-12);
        let direct3 = theoretical_beta_rerm(l, b, c, lambda, 50, 3.0).unwrap();
        let linked3 = theoretical_beta(
            l,
            b,
            theoretical_alpha_rerm(l, b, c, lambda, 50, 3.0).unwrap(),
        );
        // (LB)^{ξ/(ξ−1)} either way: the two formulas agree for every ξ.
        assert!((direct3 - linked3).abs() < 1e-12 * linked3);
    }

    #[test]
    fn constant_algorithm_is_perfectly_stable() {
        let loss = LossModel::new(LossKind::Squared, 1.0, 1.0).unwrap();
        let alg = Algorithm::constant(Vector::zeros(3), loss);
        let d = dist(3);
        let s = d.sample(10, 1).unwrap();
        let rep = measure_argument_stability(&alg, &s, &d, 3, Some(&loss), 9).unwrap();
        assert_eq!(rep.alpha_hat, 0.0);
        assert_eq!(rep.beta_hat, Some(0.0));
        assert_eq!(rep.cells.len(), 10 * 5);
    }

    #[test]
    fn ridge_replace_one_hand_case() {
        let alg = Algorithm::ridge(1.0, 1.0, 1.0).unwrap();
        let ex = |x: f64, y: f64| LabeledExample::new(v(&[x]), y);
        let s = Sample::new(vec![ex(1.0, 1.0), ex(1.0, 1.0)]).unwrap();
        let h = alg.fit(&s, 0).unwrap();
        let h2 = alg.fit(&s.replaced(1, ex(1.0, 0.0)).unwrap(), 0).unwrap();
        assert!((h[0] - 0.5).abs() < 1e-15 && (h2[0] - 0.25).abs() < 1e-15);
        assert!((h.distance(&h2) - 0.25).abs() < 1e-15);
        let copy = alg.fit(&s.replaced(1, ex(1.0, 1.0)).unwrap(), 0).unwrap();
        assert_eq!(h.distance(&copy), 0.0);
    }

    #[test]
    fn ridge_measurement_is_dominated_and_linked() {
        let alg = Algorithm::ridge(1.0, 1.0, 1.0).unwrap();
        let d = dist(4);
        let s = d.sample(30, 2).unwrap();
        let rep = measure_argument_stability(&alg, &s, &d, 4, Some(alg.loss()), 3).unwrap();
        let theory = theoretical_stability(&alg, 30).unwrap();
        assert!(rep.alpha_hat > 0.0 && rep.alpha_hat <= theory.alpha);
        let k = alg.loss().constants();
        assert!(rep.beta_hat.unwrap() <= k.lipschitz * 1.0 * rep.alpha_hat + 1e-9);
        assert!(rep.per_index.iter().all(|p| p.mean <= rep.alpha_hat));
        // Printed C = ½√(M/λ) = 1 here, twice the certified ½.
        assert_eq!(theory.c, Some(1.0));
        assert_eq!(theory.c_certified, Some(0.5));
        assert!(!theory.beta_disagree);
    }

    #[test]
    fn coupled_twins_on_identical_samples_coincide() {
        let loss = LossModel::new(LossKind::Logistic, 1.0, 1.0).unwrap();
        let spec = SgdSpec {
            regime: SgdRegime::Convex,
            steps: 40,
            schedule: StepSchedule::Constant(1.0),
            projection_radius: None,
            seed: 0,
        };
        let alg = Algorithm::sgd(loss.kind, 1.0, 1.0, 0.0, spec).unwrap();
        let d = dist(3);
        let s = d.sample(8, 4).unwrap();
        for i in 0..8 {
            let twin = s.replaced(i, s.examples()[i].clone()).unwrap();
            assert_eq!(alg.fit(&s, 77).unwrap(), alg.fit(&twin, 77).unwrap());
        }
    }

    #[test]
    fn report_csv_and_determinism() {
        let alg = Algorithm::ridge(0.5, 1.0, 1.0).unwrap();
        let d = dist(2);
        let s = d.sample(5, 2).unwrap();
        let a = measure_argument_stability(&alg, &s, &d, 2, None, 3).unwrap();
        let b = measure_argument_stability(&alg, &s, &d, 2, None, 3).unwrap();
        assert_eq!(a, b);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("i,replacement,distance,loss_gap\n"));
        assert_eq!(text.lines().count(), 1 + 5 * 4);
    }

    #[test]
    fn slope_of_power_law() {
        let xs = [25.0, 50.0, 100.0, 200.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 / x).collect();
        assert!((log_log_slope(&xs, &ys).unwrap() + 1.0).abs() < 1e-12);
    }
}
