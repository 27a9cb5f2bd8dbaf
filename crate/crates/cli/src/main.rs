use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use argstab::bounds::{
    cor1_bound, rerm_bound, sgd_bound, thm1_bound, thm2_bound, BoundBreakdown, RermBoundInput,
    SgdBoundInput, DEFAULT_A,
};
use argstab::certify::certify_loss;
use argstab::complexity::{ball_rademacher, estimate_center, AlgorithmicBall};
use argstab::concentration::{lemma1_tail_experiment, pinelis_tail_experiment, TailExperiment};
use argstab::lab::{
    run_experiment, validate_report, ExperimentConfig, ExperimentReport, RademacherRecord,
};
use argstab::stability::{measure_argument_stability, theoretical_stability};
use argstab::{Error, LossKind, LossModel, Vector};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "argstab",
    version,
    about = "Argument stability, Rademacher estimates and generalization bounds"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed; overrides the config's seed where one is read.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Measure argument stability once, on a sample drawn per an experiment config.
    Stability(OneShot),
    /// Monte-Carlo Rademacher complexity of the algorithmic ball.
    Complexity(OneShot),
    /// Evaluate a bound from a JSON file of problem constants.
    Bounds { constants: PathBuf },
    /// Tail-probability experiments.
    #[command(subcommand)]
    Concentrate(Concentrate),
    #[command(subcommand)]
    Experiment(Experiment),
    /// Certify a loss's gradient and constants by random probing.
    Losscheck(Losscheck),
}

#[derive(Args)]
struct OneShot {
    config: PathBuf,
    /// Sample size; defaults to the first entry of the config's grid.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Subcommand)]
enum Concentrate {
    /// Prefix-maximum tail of a bounded random walk.
    Pinelis {
        /// Number of steps, each with increment bound `--bound`.
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        bound: f64,
        #[arg(long, default_value_t = 3)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
    },
    /// Concentration of the fitted hypothesis around its mean.
    Lemma1 {
        config: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        /// Defaults to the config's δ.
        #[arg(long)]
        delta: Option<f64>,
        /// Defaults to 4 × trials.
        #[arg(long)]
        center_replicates: Option<usize>,
    },
}

#[derive(Subcommand)]
enum Experiment {
    /// Run a config and write report.json plus CSV tables.
    Run { config: PathBuf },
    /// Recheck a stored report's digest, consistency and coverage.
    Validate { report: PathBuf },
}

#[derive(Args)]
struct Losscheck {
    #[arg(long, default_value = "logistic")]
    loss: LossKind,
    #[arg(long, default_value_t = 1.0)]
    feature_bound: f64,
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[arg(long, default_value_t = 1.0)]
    label_bound: f64,
    #[arg(long, default_value_t = 4)]
    d: usize,
    #[arg(long, default_value_t = 1000)]
    points: usize,
    #[arg(long, default_value_t = 10_000)]
    triples: usize,
}

/// Contents of the `bounds` constants file.
#[derive(Deserialize)]
#[serde(tag = "bound", rename_all = "snake_case", deny_unknown_fields)]
enum BoundRequest {
    Thm1 {
        #[serde(default = "one")]
        d_smooth: f64,
        #[serde(default = "one")]
        c_p: f64,
        b: f64,
        delta: f64,
        alpha: f64,
        n: usize,
        #[serde(default = "two")]
        p: f64,
    },
    Cor1 {
        l: f64,
        b: f64,
        m: f64,
        delta: f64,
        alpha: f64,
        n: usize,
    },
    Thm2 {
        l: f64,
        b: f64,
        m: f64,
        delta: f64,
        alpha: f64,
        n: usize,
        #[serde(default = "default_a")]
        a: f64,
    },
    Rerm(RermBoundInput),
    Sgd(SgdBoundInput),
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn default_a() -> f64 {
    DEFAULT_A
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Json(_) | Error::Invalid(_) | Error::InvalidParameter { .. } => {
                Failure::Validation(e.to_string())
            }
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failure: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let g = &cli.global;
    match cli.command {
        Command::Stability(args) => stability(g, &args),
        Command::Complexity(args) => complexity(g, &args),
        Command::Bounds { constants } => bounds(g, &constants),
        Command::Concentrate(c) => concentrate(g, c),
        Command::Experiment(Experiment::Run { config }) => experiment_run(g, &config),
        Command::Experiment(Experiment::Validate { report }) => experiment_validate(g, &report),
        Command::Losscheck(args) => losscheck(g, &args),
    }
}

fn load_config(g: &Global, path: &Path) -> Result<ExperimentConfig, Failure> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    if let Some(dir) = &g.out_dir {
        config.output_dir = Some(dir.clone());
    }
    Ok(config)
}

/// Print `value` as JSON, or `csv` rows when that format is requested, and
/// mirror the output into `--out-dir/<stem>.<ext>`.
fn emit<T: Serialize>(g: &Global, stem: &str, value: &T, csv: Option<String>) -> Outcome {
    let (text, ext) = match (g.format, csv) {
        (Format::Csv, Some(rows)) => (rows, "csv"),
        (Format::Csv, None) => return Err(Failure::Validation(format!("{stem} has no CSV form"))),
        (Format::Json, _) => (
            serde_json::to_string_pretty(value).map_err(Error::from)?,
            "json",
        ),
    };
    println!("{text}");
    if let Some(dir) = &g.out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{stem}.{ext}")), &text)?;
    }
    Ok(())
}

fn csv_rows(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn stability(g: &Global, args: &OneShot) -> Outcome {
    let config = load_config(g, &args.config)?;
    let n = args.n.unwrap_or(config.n_grid[0]);
    let alg = config.algorithm.build(&config.distribution, n)?;
    let sample = config.distribution.sample(n, config.seed)?;
    let report = measure_argument_stability(
        &alg,
        &sample,
        &config.distribution,
        config.budgets.replacements,
        Some(alg.loss()),
        config.seed,
    )?;
    let theory = theoretical_stability(&alg, n)?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv)?;
    let value = serde_json::json!({ "stability": report, "theory": theory });
    emit(
        g,
        "stability",
        &value,
        Some(String::from_utf8_lossy(&csv).into_owned()),
    )
}

fn complexity(g: &Global, args: &OneShot) -> Outcome {
    let config = load_config(g, &args.config)?;
    let n = args.n.unwrap_or(config.n_grid[0]);
    let alg = config.algorithm.build(&config.distribution, n)?;
    let theory = theoretical_stability(&alg, n)?;
    let sample = config.distribution.sample(n, config.seed)?;
    let center = estimate_center(
        &alg,
        &config.distribution,
        n,
        config.budgets.center_replicates,
        config.seed,
    )?;
    let ball = AlgorithmicBall::from_stability(
        center.center,
        config.d_smooth,
        theory.alpha,
        n,
        config.delta,
    )?;
    let xs: Vec<Vector> = sample.iter().map(|z| z.x.clone()).collect();
    let est = ball_rademacher(&ball, &xs, config.budgets.draws, config.seed)?;
    let rec = RademacherRecord {
        mean: est.mean,
        std_error: est.std_error,
        draws: est.draws,
        seed: est.seed,
        r: ball.radius,
        delta: config.delta,
    };
    let csv = csv_rows(
        &["n", "mean", "std_error", "draws", "r", "delta"],
        [vec![
            n.to_string(),
            rec.mean.to_string(),
            rec.std_error.to_string(),
            rec.draws.to_string(),
            rec.r.to_string(),
            rec.delta.to_string(),
        ]],
    );
    emit(
        g,
        "complexity",
        &serde_json::json!({ "n": n, "rademacher": rec }),
        Some(csv),
    )
}

fn bounds(g: &Global, path: &Path) -> Outcome {
    let request: BoundRequest =
        serde_json::from_str(&fs::read_to_string(path)?).map_err(Error::from)?;
    let breakdown: BoundBreakdown = match request {
        BoundRequest::Thm1 {
            d_smooth,
            c_p,
            b,
            delta,
            alpha,
            n,
            p,
        } => thm1_bound(d_smooth, c_p, b, delta, alpha, n, p)?,
        BoundRequest::Cor1 {
            l,
            b,
            m,
            delta,
            alpha,
            n,
        } => cor1_bound(l, b, m, delta, alpha, n)?,
        BoundRequest::Thm2 {
            l,
            b,
            m,
            delta,
            alpha,
            n,
            a,
        } => thm2_bound(l, b, m, delta, alpha, n, a)?,
        BoundRequest::Rerm(input) => rerm_bound(&input)?,
        BoundRequest::Sgd(input) => sgd_bound(&input)?,
    };
    let mut rows: Vec<Vec<String>> = breakdown
        .terms
        .iter()
        .map(|t| vec![t.label.clone(), t.value.to_string()])
        .collect();
    rows.push(vec!["total".into(), breakdown.total.to_string()]);
    if g.format == Format::Json {
        eprintln!("{} (confidence {}):", breakdown.name, breakdown.confidence);
        for row in &rows {
            eprintln!(
                "  {:<22}{:>14.6}",
                row[0],
                row[1].parse::<f64>().unwrap_or(f64::NAN)
            );
        }
        if breakdown.vacuous {
            eprintln!("  vacuous: total exceeds M");
        }
    }
    emit(
        g,
        "bounds",
        &breakdown,
        Some(csv_rows(&["term", "value"], rows)),
    )
}

fn tail_csv(t: &TailExperiment) -> String {
    csv_rows(
        &[
            "threshold",
            "trials",
            "violations",
            "empirical_rate",
            "theoretical_rate",
            "seed",
        ],
        [vec![
            t.threshold.to_string(),
            t.trials.to_string(),
            t.violations.to_string(),
            t.empirical_rate.to_string(),
            t.theoretical_rate.to_string(),
            t.seed.to_string(),
        ]],
    )
}

fn concentrate(g: &Global, c: Concentrate) -> Outcome {
    match c {
        Concentrate::Pinelis {
            n,
            bound,
            d,
            eps,
            trials,
        } => {
            let t =
                pinelis_tail_experiment(&vec![bound; n], d, trials, eps, 1.0, g.seed.unwrap_or(0))?;
            emit(g, "pinelis", &t, Some(tail_csv(&t)))
        }
        Concentrate::Lemma1 {
            config,
            n,
            trials,
            delta,
            center_replicates,
        } => {
            let config = load_config(g, &config)?;
            let n = n.unwrap_or(config.n_grid[0]);
            let delta = delta.unwrap_or(config.delta);
            let alg = config.algorithm.build(&config.distribution, n)?;
            let alpha = config.d_smooth * theoretical_stability(&alg, n)?.alpha;
            let exp = lemma1_tail_experiment(
                &alg,
                &config.distribution,
                n,
                trials,
                delta,
                alpha,
                center_replicates.unwrap_or(4 * trials),
                config.seed,
            )?;
            let csv = tail_csv(&exp.tail);
            emit(g, "lemma1", &exp, Some(csv))
        }
    }
}

fn experiment_run(g: &Global, path: &Path) -> Outcome {
    let config = load_config(g, path)?;
    let report = run_experiment(&config)?;
    let summary = serde_json::json!({
        "name": report.config.name,
        "status": report.status,
        "digest": report.digest,
        "rate": report.rate,
        "wall_time_secs": report.wall_time_secs,
        "output_dir": config.output_dir,
    });
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).map_err(Error::from)?
    );
    report.into_result()?;
    Ok(())
}

fn experiment_validate(g: &Global, path: &Path) -> Outcome {
    let report = ExperimentReport::load(path).map_err(|e| Failure::Validation(e.to_string()))?;
    let validation = validate_report(&report)?;
    let csv = csv_rows(
        &[
            "bound",
            "n",
            "runs",
            "violations",
            "nominal",
            "envelope",
            "within",
        ],
        validation.coverage.iter().map(|c| {
            vec![
                c.bound.clone(),
                c.n.to_string(),
                c.runs.to_string(),
                c.violations.to_string(),
                c.nominal.to_string(),
                c.envelope.to_string(),
                c.within.to_string(),
            ]
        }),
    );
    emit(g, "validation", &validation, Some(csv))?;
    if validation.passes() {
        Ok(())
    } else {
        Err(Failure::Validation(validation.problems.join("; ")))
    }
}

fn losscheck(g: &Global, args: &Losscheck) -> Outcome {
    let loss =
        LossModel::with_label_bound(args.loss, args.feature_bound, args.radius, args.label_bound)?;
    let report = certify_loss(
        &loss,
        args.d,
        args.points,
        args.triples,
        g.seed.unwrap_or(0),
    )?;
    let mut certs = BTreeMap::new();
    certs.insert("gradient", report.gradient);
    certs.insert("lipschitz", report.lipschitz);
    certs.insert("bound", report.bound);
    if let Some(s) = report.smoothness {
        certs.insert("smoothness", s);
    }
    let csv = csv_rows(
        &["certificate", "checked", "violations", "worst"],
        certs.iter().map(|(k, c)| {
            vec![
                k.to_string(),
                c.checked.to_string(),
                c.violations.to_string(),
                c.worst.to_string(),
            ]
        }),
    );
    emit(g, "losscheck", &report, Some(csv))?;
    if report.passes() {
        Ok(())
    } else {
        Err(Failure::Validation(format!(
            "{} failed certification",
            args.loss
        )))
    }
}
