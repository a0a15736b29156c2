//! Command-line front end: experiment sweeps, oracle verification, and
//! one-off certificates for imported prediction matrices.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use votebound::ensemble::load_prediction_matrix;
use votebound::experiment::{self, ExperimentConfig};
use votebound::pac_bayes::{Family, Posterior, Prior};
use votebound::s2d::{self, McSettings, PartitionBoundInput, StochasticCertificate};
use votebound::BoundReport;

#[derive(Parser)]
#[command(
    name = "votebound",
    about = "Certified deterministic bounds for weighted majority votes",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a dataset × family × method × seed sweep and emit report tables.
    Run(RunArgs),
    /// Drive the Monte-Carlo and brute-force oracles; nonzero exit on failure.
    OracleCheck(OracleArgs),
    /// Compute one bound report from a posterior file and a prediction matrix.
    Bound(BoundArgs),
    /// Validate an external prediction matrix and summarize it.
    ImportPredictions(ImportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset: `desk-binary` (stump comparison tables) or
    /// `desk-forest` (multi-class forest run).
    #[arg(long, default_value = "desk-binary")]
    preset: String,
    /// Output directory; overrides the config and the VOTEBOUND_OUT variable.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 30_000)]
    samples: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Test fixture: bias the named closed form ("prop3", "prop5", "prop7",
    /// "prop11") so the failure path can be exercised.
    #[arg(long, hide = true)]
    tamper: Option<String>,
}

#[derive(Args)]
struct BoundArgs {
    /// Posterior file: `family = ...` and `params = p1, p2, ...`.
    #[arg(long)]
    posterior: PathBuf,
    /// CSV of m rows × n columns of class indices.
    #[arg(long)]
    predictions: PathBuf,
    /// One true class index per line.
    #[arg(long)]
    labels: PathBuf,
    /// Optional per-voter training-half tags (1/2) for the data-dependent
    /// cross certificate.
    #[arg(long)]
    halves: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Cross-split mixture weight (only with --halves).
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
}

#[derive(Args)]
struct ImportArgs {
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    halves: Option<PathBuf>,
    /// Write normalized copies of the matrices here.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run(args) => run(args),
        Command::OracleCheck(args) => oracle_check(args),
        Command::Bound(args) => bound(args),
        Command::ImportPredictions(args) => import_predictions(args),
    };
    match code {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

fn resolve_out_dir(cli_out: Option<PathBuf>, config_out: PathBuf) -> PathBuf {
    cli_out
        .or_else(|| std::env::var_os("VOTEBOUND_OUT").map(PathBuf::from))
        .unwrap_or(config_out)
}

fn run(args: RunArgs) -> Result<i32> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            ExperimentConfig::from_flat_kv(&text)?
        }
        None => match args.preset.as_str() {
            "desk-binary" => ExperimentConfig::desk_binary(),
            "desk-forest" => ExperimentConfig::desk_forest(),
            other => bail!("unknown preset '{other}' (use desk-binary or desk-forest)"),
        },
    };
    config.out_dir = resolve_out_dir(args.out, config.out_dir.clone());
    let artifacts = experiment::run(&config)?;
    let written = experiment::write_artifacts(&config, &artifacts)?;
    println!("{}", artifacts.header);
    println!();
    println!("{}", artifacts.table_md);
    println!("{}", artifacts.per_family_md);
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(0)
}

fn oracle_check(args: OracleArgs) -> Result<i32> {
    let summary = experiment::oracle_check(args.samples, args.seed, args.tamper.as_deref())?;
    for check in &summary.checks {
        println!(
            "{} {} — {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name,
            check.detail
        );
    }
    if summary.checks.is_empty() {
        println!("PASS (no checks requested)");
    }
    Ok(if summary.all_passed() { 0 } else { 1 })
}

fn parse_posterior(path: &Path) -> Result<Posterior> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading posterior {}", path.display()))?;
    let mut family = None;
    let mut params: Vec<f64> = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("posterior file: expected key = value, got '{line}'");
        };
        match key.trim() {
            "family" => family = Some(Family::parse(value.trim())?),
            "params" => {
                params = value
                    .split(',')
                    .filter(|t| !t.trim().is_empty())
                    .map(|t| t.trim().parse::<f64>().context("bad posterior parameter"))
                    .collect::<Result<_>>()?;
            }
            other => bail!("posterior file: unknown key '{other}'"),
        }
    }
    let family = family.context("posterior file: missing 'family'")?;
    Ok(Posterior::new(family, params)?)
}

fn bound(args: BoundArgs) -> Result<i32> {
    let voters = load_prediction_matrix(
        &args.predictions,
        &args.labels,
        args.halves.as_deref(),
    )?;
    let posterior = parse_posterior(&args.posterior)?;
    let prior = Prior::default_for(posterior.family, posterior.n());
    let indices: Vec<usize> = (0..voters.m).collect();
    let (halves, certificate);
    if args.halves.is_some() {
        let mid = indices.len() / 2;
        halves = (indices[..mid].to_vec(), indices[mid..].to_vec());
        certificate = StochasticCertificate::CrossSplit {
            s1: &halves.0,
            s2: &halves.1,
            alpha: args.alpha,
        };
    } else {
        certificate = StochasticCertificate::Seeger;
    }
    let outcome = s2d::partition_bound(PartitionBoundInput {
        voters: &voters,
        posterior: &posterior,
        prior: &prior,
        train_idx: &indices,
        delta: args.delta,
        certificate,
        scale_cap: votebound::partition::DEFAULT_SCALED_TOTAL_CAP,
        mc: McSettings::default(),
    })?;
    let mut report = BoundReport::new("part", "imported", "imported", 0);
    report.family = Some(posterior.family.as_str().to_string());
    report.k = voters.k;
    report.n_voters = voters.n;
    report.m_train = voters.m;
    report.bound = outcome.bound;
    report.raw_bound = outcome.raw;
    report.vacuous = outcome.raw >= 1.0;
    report.delta = args.delta;
    report.delta_split = vec![args.delta];
    report.l_tilde = Some(outcome.l_tilde);
    report.b_tilde = Some(outcome.b_lower);
    report.c_tilde = Some(outcome.c_lower);
    report.kl = Some(outcome.kl);
    report.emp_stochastic_risk = Some(outcome.emp_risk);
    report.fallback_factor2 = Some(outcome.fallback_factor2);
    report.prior = Some(prior.describe());
    if let Some(cert) = &outcome.certificate {
        report = report.with_partition(cert);
    }
    println!("{}", BoundReport::CSV_HEADER);
    println!("{}", report.to_csv_row());
    println!("{}", report.to_json());
    Ok(0)
}

fn import_predictions(args: ImportArgs) -> Result<i32> {
    let voters = load_prediction_matrix(
        &args.predictions,
        &args.labels,
        args.halves.as_deref(),
    )?;
    let indices: Vec<usize> = (0..voters.m).collect();
    let means = voters.voter_error_means(&indices);
    let mean_err: f64 = means.iter().sum::<f64>() / means.len().max(1) as f64;
    println!(
        "imported {} examples × {} voters, {} classes; mean voter error {:.4}; halves: {}",
        voters.m,
        voters.n,
        voters.k,
        mean_err,
        if voters.half.is_some() { "tagged" } else { "untagged" }
    );
    if let Some(dir) = args.out {
        std::fs::create_dir_all(&dir)?;
        let mut preds = String::new();
        for j in 0..voters.m {
            let row: Vec<String> =
                (0..voters.n).map(|i| voters.prediction(j, i).to_string()).collect();
            preds.push_str(&row.join(","));
            preds.push('\n');
        }
        std::fs::write(dir.join("predictions.csv"), preds)?;
        let labels: String =
            voters.labels.iter().map(|y| format!("{y}\n")).collect();
        std::fs::write(dir.join("labels.txt"), labels)?;
        if let Some(tags) = &voters.half {
            let halves: String = tags
                .iter()
                .map(|t| match t {
                    votebound::ensemble::VoterHalf::One => "1\n",
                    votebound::ensemble::VoterHalf::Two => "2\n",
                })
                .collect();
            std::fs::write(dir.join("halves.txt"), halves)?;
        }
        println!("wrote normalized copies under {}", dir.display());
    }
    Ok(0)
}
