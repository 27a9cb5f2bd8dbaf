//! Experiment harness: config ingestion, orchestration over an n grid,
//! report persistence and plot-ready CSV.

mod config;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{AlgorithmConfig, Budgets, ExperimentConfig};

use crate::bounds::{
    cor1_bound, deformed_gap, rerm_bound, sgd_bound, thm1_bound, thm2_bound, BoundBreakdown,
    RermBoundInput, SgdBoundInput,
};
use crate::complexity::{
    ball_rademacher, ball_radius, estimate_center, AlgorithmicBall, CenterEstimate,
};
use crate::concentration::{lemma1_tail_experiment, Lemma1Experiment};
use crate::datagen::{true_risk, RiskEstimate};
use crate::error::{Error, Result};
use crate::learners::Algorithm;
use crate::rng;
use crate::stability::{
    log_log_slope, measure_argument_stability, theoretical_stability, StabilityReport,
    TheoreticalStability,
};
use crate::vectorspace::Vector;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Replications needed before coverage is meaningful.
pub const MIN_COVERAGE_RUNS: usize = 100;
const CONSISTENCY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RademacherRecord {
    pub mean: f64,
    pub std_error: f64,
    pub draws: usize,
    pub seed: u64,
    pub r: f64,
    pub delta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaps {
    pub true_risk: RiskEstimate,
    pub empirical_risk: f64,
    /// `R(h_S) − R_S(h_S)`.
    pub plain: f64,
    /// `R(h_S) − (a/(a−1))·R_S(h_S)`.
    pub deformed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageRun {
    pub replication: usize,
    pub gaps: Gaps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NRecord {
    pub n: usize,
    pub theory: TheoreticalStability,
    pub stability: StabilityReport,
    pub center: CenterEstimate,
    pub rademacher: RademacherRecord,
    pub bounds: Vec<BoundBreakdown>,
    pub gaps: Gaps,
    pub coverage: Vec<CoverageRun>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<Lemma1Experiment>,
}

impl NRecord {
    pub fn bound(&self, name: &str) -> Option<&BoundBreakdown> {
        self.bounds.iter().find(|b| b.name == name)
    }
}

/// Least-squares log–log slopes over the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub alpha_hat_slope: Option<f64>,
    pub mean_distance_slope: Option<f64>,
    pub alpha_theory_slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum Status {
    Complete,
    Failed {
        n: usize,
        stage: String,
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub artifact_version: String,
    pub config: ExperimentConfig,
    pub status: Status,
    pub records: Vec<NRecord>,
    pub rate: Option<RateRecord>,
    /// Excluded from the digest.
    pub wall_time_secs: f64,
    /// SHA-256 of the report with `wall_time_secs` and `digest` removed.
    pub digest: String,
}

impl ExperimentReport {
    pub fn compute_digest(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(map) = value.as_object_mut() {
            map.remove("wall_time_secs");
            map.remove("digest");
        }
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&value)?)))
    }

    pub fn is_complete(&self) -> bool {
        self.status == Status::Complete
    }

    /// `Err` carrying the `(n, stage)` coordinate when the run failed.
    pub fn into_result(self) -> Result<Self> {
        match &self.status {
            Status::Complete => Ok(self),
            Status::Failed { n, stage, message } => {
                Err(Error::Invalid(format!("n={n}, stage={stage}: {message}")))
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// `report.json`, one stability CSV per n, and every plot CSV.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        for rec in &self.records {
            rec.stability.write_csv(fs::File::create(
                dir.join(format!("stability_n{}.csv", rec.n)),
            )?)?;
        }
        for kind in PlotKind::ALL {
            fs::write(
                dir.join(format!("plot_{}.csv", kind.as_str())),
                emit_plot_data(self, kind)?,
            )?;
        }
        Ok(())
    }
}

struct StageError {
    stage: &'static str,
    error: Error,
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageError>;
}

impl<T> Stage<T> for Result<T> {
    fn stage(self, stage: &'static str) -> std::result::Result<T, StageError> {
        self.map_err(|error| StageError { stage, error })
    }
}

fn seed_for(base: u64, stage: &str, index: u64) -> u64 {
    rng::derive(base, &[rng::label(stage), index])
}

fn gaps(
    config: &ExperimentConfig,
    alg: &Algorithm,
    h: &Vector,
    sample: &crate::learners::Sample,
    seed: u64,
) -> Result<Gaps> {
    let loss = alg.loss();
    let risk = true_risk(
        h,
        &config.distribution,
        loss,
        config.budgets.risk_precision,
        seed,
    )?;
    let empirical = sample.empirical_risk(loss, h)?;
    Ok(Gaps {
        true_risk: risk,
        empirical_risk: empirical,
        plain: risk.value - empirical,
        deformed: deformed_gap(risk.value, empirical, config.a)?,
    })
}

/// Every bound applicable to `alg` at size `n`, all at the α recorded in `theory`.
pub fn record_bounds(
    config: &ExperimentConfig,
    alg: &Algorithm,
    theory: &TheoreticalStability,
    n: usize,
) -> Result<Vec<BoundBreakdown>> {
    let (l, b, m, alpha) = (
        theory.lipschitz,
        theory.feature_bound,
        theory.loss_bound,
        theory.alpha,
    );
    let (delta, a) = (config.delta, config.a);
    let mut out = vec![
        thm1_bound(config.d_smooth, 1.0, b, delta, alpha, n, 2.0)?,
        cor1_bound(l, b, m, delta, alpha, n)?,
        thm2_bound(l, b, m, delta, alpha, n, a)?,
    ];
    match alg {
        Algorithm::Constant { .. } => {}
        Algorithm::Ridge { .. } | Algorithm::Rerm { .. } => {
            let lambda = match alg {
                Algorithm::Ridge { lambda, .. } => *lambda,
                Algorithm::Rerm { penalty, .. } => penalty.lambda,
                _ => unreachable!(),
            };
            out.push(rerm_bound(&RermBoundInput {
                l,
                b,
                m,
                c: theory.c.expect("penalized algorithms record C"),
                lambda,
                xi: theory.xi.expect("penalized algorithms record ξ"),
                delta,
                n,
                a,
            })?);
        }
        Algorithm::Sgd { loss, spec } => {
            let k = loss.constants();
            out.push(sgd_bound(&SgdBoundInput {
                spec: spec.clone(),
                l,
                b,
                m,
                s: k.smoothness,
                gamma: Some(k.strong_convexity),
                n,
                delta,
                a,
                d_smooth: config.d_smooth,
            })?);
        }
    }
    Ok(out)
}

/// Problems found when checking that every bound uses the record's own
/// constants and α.
pub fn consistency_problems(config: &ExperimentConfig, rec: &NRecord) -> Vec<String> {
    let t = &rec.theory;
    let mut problems = Vec::new();
    let mut expect = |bound: &str, key: &str, got: Option<f64>, want: f64| match got {
        Some(g) if (g - want).abs() <= CONSISTENCY_TOLERANCE * want.abs().max(1.0) => {}
        _ => problems.push(format!(
            "n={}: {bound}.{key} = {got:?}, expected {want}",
            rec.n
        )),
    };
    let sgd_strong = matches!(
        config.algorithm.preset,
        Some(crate::learners::PresetName::SgdStronglyConvex)
    );
    for bd in &rec.bounds {
        let alpha = if sgd_strong && bd.name.starts_with("sgd-") {
            config.d_smooth * t.alpha
        } else {
            t.alpha
        };
        expect(&bd.name, "alpha", bd.constants.get("alpha").copied(), alpha);
        expect(
            &bd.name,
            "B",
            bd.constants.get("B").copied(),
            t.feature_bound,
        );
        if bd.name != "thm1" {
            expect(&bd.name, "L", bd.constants.get("L").copied(), t.lipschitz);
            expect(&bd.name, "M", bd.constants.get("M").copied(), t.loss_bound);
        }
        expect(
            &bd.name,
            "delta",
            bd.constants.get("delta").copied(),
            config.delta,
        );
    }
    if rec.stability.n != rec.n {
        problems.push(format!(
            "n={}: stability report is for n={}",
            rec.n, rec.stability.n
        ));
    }
    let r = ball_radius(config.d_smooth, t.alpha, rec.n, config.delta).unwrap_or(f64::NAN);
    if (rec.rademacher.r - r).abs() > CONSISTENCY_TOLERANCE * r.max(1.0) {
        problems.push(format!(
            "n={}: radius {} but α gives {r}",
            rec.n, rec.rademacher.r
        ));
    }
    problems
}

fn run_n(config: &ExperimentConfig, n: usize) -> std::result::Result<NRecord, StageError> {
    let base = rng::derive(config.seed, &[rng::label(&config.name), n as u64]);
    let budgets = &config.budgets;
    let alg = config
        .algorithm
        .build(&config.distribution, n)
        .stage("build")?;
    let theory = theoretical_stability(&alg, n).stage("theory")?;

    let sample = config
        .distribution
        .sample(n, seed_for(base, "sample", 0))
        .stage("sample")?;
    let h = alg.fit(&sample, seed_for(base, "fit", 0)).stage("fit")?;
    let stability = measure_argument_stability(
        &alg,
        &sample,
        &config.distribution,
        budgets.replacements,
        Some(alg.loss()),
        seed_for(base, "stability", 0),
    )
    .stage("stability")?;

    let center = estimate_center(
        &alg,
        &config.distribution,
        n,
        budgets.center_replicates,
        seed_for(base, "center", 0),
    )
    .stage("center")?;
    let ball = AlgorithmicBall::from_stability(
        center.center.clone(),
        config.d_smooth,
        theory.alpha,
        n,
        config.delta,
    )
    .stage("rademacher")?;
    let xs: Vec<Vector> = sample.iter().map(|z| z.x.clone()).collect();
    let est = ball_rademacher(&ball, &xs, budgets.draws, seed_for(base, "rademacher", 0))
        .stage("rademacher")?;
    let rademacher = RademacherRecord {
        mean: est.mean,
        std_error: est.std_error,
        draws: est.draws,
        seed: est.seed,
        r: ball.radius,
        delta: config.delta,
    };

    let bounds = record_bounds(config, &alg, &theory, n).stage("bounds")?;
    let main_gaps = gaps(config, &alg, &h, &sample, seed_for(base, "risk", 0)).stage("risk")?;

    let coverage = (0..budgets.trials)
        .into_par_iter()
        .map(|j| {
            let j64 = j as u64;
            let s = config
                .distribution
                .sample(n, seed_for(base, "coverage-sample", j64))?;
            let h = alg.fit(&s, seed_for(base, "coverage-fit", j64))?;
            Ok(CoverageRun {
                replication: j,
                gaps: gaps(config, &alg, &h, &s, seed_for(base, "coverage-risk", j64))?,
            })
        })
        .collect::<Result<Vec<_>>>()
        .stage("coverage")?;

    let tail = match budgets.tail_trials {
        Some(trials) => Some(
            lemma1_tail_experiment(
                &alg,
                &config.distribution,
                n,
                trials,
                config.delta,
                config.d_smooth * theory.alpha,
                budgets.center_replicates.max(4 * trials),
                seed_for(base, "tail", 0),
            )
            .stage("tail")?,
        ),
        None => None,
    };

    let rec = NRecord {
        n,
        theory,
        stability,
        center,
        rademacher,
        bounds,
        gaps: main_gaps,
        coverage,
        tail,
    };
    let problems = consistency_problems(config, &rec);
    if !problems.is_empty() {
        return Err(StageError {
            stage: "consistency",
            error: Error::Invalid(problems.join("; ")),
        });
    }
    Ok(rec)
}

fn slope_of(records: &[NRecord], f: impl Fn(&NRecord) -> f64) -> Option<f64> {
    let xs: Vec<f64> = records.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = records.iter().map(f).collect();
    log_log_slope(&xs, &ys).ok()
}

/// Run every stage at every n. A stage failure stops the run and is recorded
/// in `status`; the records completed so far are kept. When `output_dir` is
/// set the report is written there either way.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let mut records = Vec::with_capacity(config.n_grid.len());
    let mut status = Status::Complete;
    for &n in &config.n_grid {
        match run_n(config, n) {
            Ok(rec) => records.push(rec),
            Err(StageError { stage, error }) => {
                status = Status::Failed {
                    n,
                    stage: stage.to_owned(),
                    message: error.to_string(),
                };
                break;
            }
        }
    }
    let rate = (records.len() >= 2).then(|| RateRecord {
        alpha_hat_slope: slope_of(&records, |r| r.stability.alpha_hat),
        mean_distance_slope: slope_of(&records, |r| r.stability.mean_distance),
        alpha_theory_slope: slope_of(&records, |r| r.theory.alpha),
    });
    let mut report = ExperimentReport {
        artifact_version: ARTIFACT_VERSION.to_owned(),
        config: config.clone(),
        status,
        records,
        rate,
        wall_time_secs: start.elapsed().as_secs_f64(),
        digest: String::new(),
    };
    report.digest = report.compute_digest()?;
    if let Some(dir) = &config.output_dir {
        report.write(dir)?;
    }
    Ok(report)
}

/// Whether the gap a bound controls is the plain or the deformed one.
fn gap_for(bound: &str, gaps: &Gaps) -> Option<f64> {
    match bound {
        "cor1" => Some(gaps.plain),
        "thm2" | "rerm" => Some(gaps.deformed),
        b if b.starts_with("sgd-") => Some(gaps.deformed),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageCheck {
    pub bound: String,
    pub n: usize,
    pub runs: usize,
    pub violations: usize,
    /// Per-event δ.
    pub delta: f64,
    /// `2δ`, the failure probability the bound allows.
    pub nominal: f64,
    pub empirical: f64,
    /// `runs·nominal + 3√(runs·nominal·(1 − nominal))`.
    pub envelope: f64,
    pub within: bool,
}

/// Count, per n, the replications whose gap exceeds the bound total.
pub fn validate_bound_coverage(
    report: &ExperimentReport,
    which: &str,
) -> Result<Vec<CoverageCheck>> {
    let delta = report.config.delta;
    let nominal = (2.0 * delta).min(1.0);
    let mut out = Vec::with_capacity(report.records.len());
    for rec in &report.records {
        let bound = rec
            .bound(which)
            .ok_or_else(|| Error::Invalid(format!("no bound `{which}` at n={}", rec.n)))?;
        if gap_for(which, &rec.gaps).is_none() {
            return Err(Error::Invalid(format!(
                "bound `{which}` does not control a risk gap"
            )));
        }
        let runs = rec.coverage.len();
        if runs < MIN_COVERAGE_RUNS {
            return Err(Error::InsufficientReplications {
                got: runs,
                needed: MIN_COVERAGE_RUNS,
            });
        }
        let violations = rec
            .coverage
            .iter()
            .filter(|c| gap_for(which, &c.gaps).is_some_and(|g| g > bound.total))
            .count();
        let rf = runs as f64;
        let envelope = rf * nominal + 3.0 * (rf * nominal * (1.0 - nominal)).sqrt();
        out.push(CoverageCheck {
            bound: which.to_owned(),
            n: rec.n,
            runs,
            violations,
            delta,
            nominal,
            empirical: violations as f64 / rf,
            envelope,
            within: violations as f64 <= envelope,
        });
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlotKind {
    #[serde(rename = "rate")]
    Rate,
    #[serde(rename = "coverage")]
    Coverage,
    #[serde(rename = "bound-vs-gap")]
    BoundVsGap,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [PlotKind::Rate, PlotKind::Coverage, PlotKind::BoundVsGap];

    pub fn as_str(self) -> &'static str {
        match self {
            PlotKind::Rate => "rate",
            PlotKind::Coverage => "coverage",
            PlotKind::BoundVsGap => "bound-vs-gap",
        }
    }

    fn header(self) -> &'static str {
        match self {
            PlotKind::Rate => "# columns: n (integer), alpha_hat (float), alpha_theory (float)",
            PlotKind::Coverage => {
                "# columns: delta (float), nominal (float), empirical (float), bound (string), n (integer)"
            }
            PlotKind::BoundVsGap => {
                "# columns: n (integer), gap (float), bound_total (float), vacuous_flag (0 or 1), bound (string)"
            }
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlotKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                Error::Invalid(format!(
                    "unknown plot kind `{s}` (expected rate, coverage or bound-vs-gap)"
                ))
            })
    }
}

/// Tidy CSV: a `# columns:` comment line, a header row, one observation per row.
/// Coverage rows are only produced at n with enough replications.
pub fn emit_plot_data(report: &ExperimentReport, kind: PlotKind) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match kind {
        PlotKind::Rate => {
            w.write_record(["n", "alpha_hat", "alpha_theory"])?;
            for rec in &report.records {
                w.write_record([
                    rec.n.to_string(),
                    rec.stability.alpha_hat.to_string(),
                    rec.theory.alpha.to_string(),
                ])?;
            }
        }
        PlotKind::Coverage => {
            w.write_record(["delta", "nominal", "empirical", "bound", "n"])?;
            let names: Vec<String> = report
                .records
                .first()
                .map(|r| r.bounds.iter().map(|b| b.name.clone()).collect())
                .unwrap_or_default();
            for name in names.iter().filter(|b| gap_for(b, &Gaps::ZERO).is_some()) {
                let Ok(checks) = validate_bound_coverage(report, name) else {
                    continue;
                };
                for c in checks {
                    w.write_record([
                        c.delta.to_string(),
                        c.nominal.to_string(),
                        c.empirical.to_string(),
                        c.bound,
                        c.n.to_string(),
                    ])?;
                }
            }
        }
        PlotKind::BoundVsGap => {
            w.write_record(["n", "gap", "bound_total", "vacuous_flag", "bound"])?;
            for rec in &report.records {
                for bd in &rec.bounds {
                    if let Some(gap) = gap_for(&bd.name, &rec.gaps) {
                        w.write_record([
                            rec.n.to_string(),
                            gap.to_string(),
                            bd.total.to_string(),
                            u8::from(bd.vacuous).to_string(),
                            bd.name.clone(),
                        ])?;
                    }
                }
            }
        }
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
        .map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(format!("{}\n{body}", kind.header()))
}

impl Gaps {
    const ZERO: Gaps = Gaps {
        true_risk: RiskEstimate {
            value: 0.0,
            std_error: 0.0,
            closed_form: true,
        },
        empirical_risk: 0.0,
        plain: 0.0,
        deformed: 0.0,
    };
}

/// Outcome of re-checking a stored report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportValidation {
    pub digest_matches: bool,
    pub problems: Vec<String>,
    pub coverage: Vec<CoverageCheck>,
}

impl ReportValidation {
    pub fn passes(&self) -> bool {
        self.digest_matches && self.problems.is_empty()
    }
}

/// Digest, status, cross-field consistency and (when replications suffice)
/// bound coverage.
pub fn validate_report(report: &ExperimentReport) -> Result<ReportValidation> {
    let mut out = ReportValidation {
        digest_matches: report.compute_digest()? == report.digest,
        ..Default::default()
    };
    if !out.digest_matches {
        out.problems
            .push("digest does not match report contents".into());
    }
    if let Status::Failed { n, stage, message } = &report.status {
        out.problems
            .push(format!("run failed at n={n}, stage={stage}: {message}"));
    }
    for rec in &report.records {
        out.problems
            .extend(consistency_problems(&report.config, rec));
    }
    let names: Vec<String> = report
        .records
        .first()
        .map(|r| r.bounds.iter().map(|b| b.name.clone()).collect())
        .unwrap_or_default();
    for name in names.iter().filter(|b| gap_for(b, &Gaps::ZERO).is_some()) {
        if let Ok(checks) = validate_bound_coverage(report, name) {
            for c in &checks {
                if !c.within {
                    out.problems.push(format!(
                        "n={}: {} violated on {}/{} runs, envelope {:.2}",
                        c.n, c.bound, c.violations, c.runs, c.envelope
                    ));
                }
            }
            out.coverage.extend(checks);
        }
    }
    Ok(out)
}
