//! Desk-scale experiment runner: dataset sweeps, method sweeps, seed sweeps,
//! and report emission.

use crate::baselines::{self};
use crate::ensemble::{
    build_forest, build_stumps, load_dataset, DataFormat, Dataset, SplitPlan, VoterOutputs,
};
use crate::optimizer::{full_pipeline, Objective, PipelineOutcome, TrainConfig};
use crate::oracle;
use crate::pac_bayes::{kl_divergence, Family, Posterior, Prior};
use crate::report::BoundReport;
use crate::s2d::{self, McSettings};
use crate::synth::synth_dataset;
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

/// Where a dataset comes from.
#[derive(Debug, Clone)]
pub enum DatasetSpec {
    /// Built-in deterministic synthetic stand-in.
    Synth { name: String },
    /// A file on disk.
    File { path: PathBuf, format: DataFormat },
}

impl DatasetSpec {
    /// `haber` → synthetic; `path.svm:svmlight` / `path.csv:csv` → file.
    pub fn parse(token: &str) -> Result<Self> {
        match token.rsplit_once(':') {
            Some((path, fmt)) if !path.is_empty() => Ok(DatasetSpec::File {
                path: PathBuf::from(path),
                format: DataFormat::parse(fmt)?,
            }),
            _ => Ok(DatasetSpec::Synth { name: token.trim().to_string() }),
        }
    }

    fn load(&self, subsample: Option<usize>, seed: u64) -> Result<Dataset> {
        match self {
            DatasetSpec::Synth { name } => synth_dataset(name, subsample),
            DatasetSpec::File { path, format } => {
                let data = load_dataset(path, *format)?;
                Ok(match subsample {
                    Some(cap) if cap < data.m => subsample_dataset(&data, cap, seed),
                    _ => data,
                })
            }
        }
    }
}

fn subsample_dataset(data: &Dataset, cap: usize, seed: u64) -> Dataset {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut order: Vec<usize> = (0..data.m).collect();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5353_5542);
    order.shuffle(&mut rng);
    order.truncate(cap);
    let mut features = Vec::with_capacity(cap * data.d);
    let mut labels = Vec::with_capacity(cap);
    for &j in &order {
        features.extend_from_slice(data.row(j));
        labels.push(data.labels[j]);
    }
    Dataset::new(data.name.clone(), features, labels, data.d).expect("subsample keeps the shape")
}

/// Voter-construction setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    /// Data-independent binary stumps with the plain Seeger certificate.
    Stumps,
    /// Per-half random forests with the cross-split certificate.
    Forest,
}

impl Setting {
    pub fn as_str(&self) -> &'static str {
        match self {
            Setting::Stumps => "stumps",
            Setting::Forest => "forest",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stumps" => Ok(Setting::Stumps),
            "forest" => Ok(Setting::Forest),
            other => Err(Error::Config(format!("unknown setting '{other}'"))),
        }
    }
}

/// The bounding methods of the comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    Fo,
    So,
    Bin,
    CBnd,
    Vc,
    Part,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Fo, Method::So, Method::Bin, Method::CBnd, Method::Vc, Method::Part];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Fo => "fo",
            Method::So => "so",
            Method::Bin => "bin",
            Method::CBnd => "cbnd",
            Method::Vc => "vc",
            Method::Part => "part",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fo" => Ok(Method::Fo),
            "so" => Ok(Method::So),
            "bin" => Ok(Method::Bin),
            "cbnd" => Ok(Method::CBnd),
            "vc" => Ok(Method::Vc),
            "part" => Ok(Method::Part),
            other => Err(Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Applicability of each bounding method per (family, class count), for the
/// PAC-Bayes methods; the VC bound is posterior-free and always applies.
pub fn applicable(method: Method, family: Family, k: usize) -> bool {
    match method {
        Method::Vc => true,
        Method::Part => !(family == Family::Gaussian && k > 2),
        Method::CBnd => family == Family::Categorical && k == 2,
        Method::Fo | Method::So | Method::Bin => family != Family::Dirichlet,
    }
}

/// Full experiment configuration; every report records the split fraction,
/// δ, and hyperparameters it ran with.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSpec>,
    pub setting: Setting,
    pub families: Vec<Family>,
    pub methods: Vec<Method>,
    pub delta: f64,
    pub seeds: Vec<u64>,
    pub train: TrainConfig,
    pub train_fraction: f64,
    pub thresholds_per_feature: usize,
    pub trees: usize,
    /// Draw count for the binomial baseline.
    pub bin_draws: usize,
    pub heuristics: bool,
    pub mvn_samples: usize,
    /// Cross-split mixture weight (forest setting).
    pub alpha: f64,
    /// Cap on examples per dataset.
    pub subsample: Option<usize>,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            datasets: Vec::new(),
            setting: Setting::Stumps,
            families: vec![Family::Categorical, Family::Dirichlet, Family::Gaussian],
            methods: Method::ALL.to_vec(),
            delta: 0.05,
            seeds: vec![0, 1, 2, 3, 4],
            train: TrainConfig::default(),
            train_fraction: 0.5,
            thresholds_per_feature: 10,
            trees: 200,
            bin_draws: 100,
            heuristics: true,
            mvn_samples: 100_000,
            alpha: 0.5,
            subsample: None,
            out_dir: PathBuf::from("runs"),
        }
    }
}

impl ExperimentConfig {
    /// The comparison-table preset over the four binary benchmarks.
    ///
    /// The split keeps 80% for training; the binomial baseline runs at one
    /// draw, where it coincides with the first-order bound.
    pub fn desk_binary() -> Self {
        Self {
            datasets: ["haber", "ttt", "svmg", "mush"]
                .iter()
                .map(|n| DatasetSpec::Synth { name: n.to_string() })
                .collect(),
            train_fraction: 0.65,
            bin_draws: 1,
            ..Self::default()
        }
    }

    /// The multi-class forest preset (Categorical mixture posterior).
    pub fn desk_forest() -> Self {
        Self {
            datasets: vec![DatasetSpec::Synth { name: "pend".to_string() }],
            setting: Setting::Forest,
            families: vec![Family::Categorical],
            methods: vec![Method::Fo, Method::So, Method::Bin, Method::Vc, Method::Part],
            seeds: vec![0],
            trees: 200,
            train_fraction: 0.5,
            subsample: Some(2000),
            train: TrainConfig { max_epochs: 30, ..TrainConfig::default() },
            ..Self::default()
        }
    }

    /// Parse the flat `key = value` config format. Unknown keys are errors;
    /// `#` starts a comment.
    pub fn from_flat_kv(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no + 1,
                reason: format!("expected key = value, got '{line}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |what: &str| Error::Parse {
                line: line_no + 1,
                reason: format!("bad {what}: '{value}'"),
            };
            match key {
                "datasets" => {
                    config.datasets = value
                        .split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(DatasetSpec::parse)
                        .collect::<Result<_>>()?;
                }
                "setting" => config.setting = Setting::parse(value)?,
                "families" => {
                    config.families = value
                        .split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(Family::parse)
                        .collect::<Result<_>>()?;
                }
                "methods" => {
                    config.methods = value
                        .split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(Method::parse)
                        .collect::<Result<_>>()?;
                }
                "delta" => config.delta = value.parse().map_err(|_| bad("delta"))?,
                "seeds" => {
                    config.seeds = value
                        .split(',')
                        .filter(|t| !t.trim().is_empty())
                        .map(|t| t.trim().parse().map_err(|_| bad("seed")))
                        .collect::<Result<_>>()?;
                }
                "split" => config.train_fraction = value.parse().map_err(|_| bad("split"))?,
                "thresholds" => {
                    config.thresholds_per_feature = value.parse().map_err(|_| bad("thresholds"))?
                }
                "trees" => config.trees = value.parse().map_err(|_| bad("trees"))?,
                "bin_draws" => config.bin_draws = value.parse().map_err(|_| bad("bin_draws"))?,
                "heuristics" => {
                    config.heuristics = value.parse().map_err(|_| bad("heuristics"))?
                }
                "mvn_samples" => {
                    config.mvn_samples = value.parse().map_err(|_| bad("mvn_samples"))?
                }
                "alpha" => config.alpha = value.parse().map_err(|_| bad("alpha"))?,
                "subsample" => {
                    config.subsample = Some(value.parse().map_err(|_| bad("subsample"))?)
                }
                "out" => config.out_dir = PathBuf::from(value),
                "batch" => config.train.batch_size = value.parse().map_err(|_| bad("batch"))?,
                "lr" => config.train.learning_rate = value.parse().map_err(|_| bad("lr"))?,
                "epochs" => config.train.max_epochs = value.parse().map_err(|_| bad("epochs"))?,
                "patience" => {
                    config.train.early_stop_patience = value.parse().map_err(|_| bad("patience"))?
                }
                "scheduler_factor" => {
                    config.train.scheduler_factor =
                        value.parse().map_err(|_| bad("scheduler_factor"))?
                }
                "scheduler_patience" => {
                    config.train.scheduler_patience =
                        value.parse().map_err(|_| bad("scheduler_patience"))?
                }
                other => {
                    return Err(Error::Parse {
                        line: line_no + 1,
                        reason: format!("unknown config key '{other}'"),
                    })
                }
            }
        }
        config.validate()?;
        Ok(config)
    }

    /// Check every (method, family, k-independent) combination up front; the
    /// forest setting additionally restricts families to the Categorical
    /// mixture the cross-split certificate covers.
    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("no datasets configured".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("no seeds configured".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Config(format!("delta {} outside (0,1]", self.delta)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "split {} outside (0,1)",
                self.train_fraction
            )));
        }
        if self.setting == Setting::Forest {
            for family in &self.families {
                if *family != Family::Categorical {
                    return Err(Error::Config(format!(
                        "the forest setting supports the categorical mixture posterior only, \
                         got {family}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Everything one `run` produces, before any files are written.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub reports: Vec<BoundReport>,
    pub header: String,
    pub table_md: String,
    pub table_csv: String,
    pub per_family_md: String,
    pub curves: Vec<(String, String)>,
}

/// Run the full sweep and assemble the comparison tables.
pub fn run(config: &ExperimentConfig) -> Result<RunArtifacts> {
    config.validate()?;
    let mut reports = Vec::new();
    let mut curves = Vec::new();
    for spec in &config.datasets {
        for &seed in &config.seeds {
            let (mut run_reports, mut run_curves) = run_one(config, spec, seed)?;
            reports.append(&mut run_reports);
            curves.append(&mut run_curves);
        }
    }
    let header = run_header(config);
    let (table_md, table_csv) = assemble_main_table(&reports, &config.methods, &header);
    let per_family_md = assemble_per_family_table(&reports, &header);
    Ok(RunArtifacts { reports, header, table_md, table_csv, per_family_md, curves })
}

/// Write the artifacts under the configured output directory.
pub fn write_artifacts(config: &ExperimentConfig, artifacts: &RunArtifacts) -> Result<Vec<PathBuf>> {
    use std::fs;
    fs::create_dir_all(&config.out_dir)?;
    let mut written = Vec::new();
    let mut reports_csv = String::from(BoundReport::CSV_HEADER);
    reports_csv.push('\n');
    let mut sidecar = String::new();
    for r in &artifacts.reports {
        reports_csv.push_str(&r.to_csv_row());
        reports_csv.push('\n');
        sidecar.push_str(&r.to_json());
        sidecar.push('\n');
    }
    for (name, contents) in [
        ("reports.csv", &reports_csv),
        ("reports.jsonl", &sidecar),
        ("table.md", &artifacts.table_md),
        ("table.csv", &artifacts.table_csv),
        ("per_family.md", &artifacts.per_family_md),
    ] {
        let path = config.out_dir.join(name);
        fs::write(&path, contents)?;
        written.push(path);
    }
    let curve_dir = config.out_dir.join("curves");
    fs::create_dir_all(&curve_dir)?;
    for (name, contents) in &artifacts.curves {
        let path = curve_dir.join(name);
        fs::write(&path, contents)?;
        written.push(path);
    }
    Ok(written)
}

fn run_header(config: &ExperimentConfig) -> String {
    format!(
        "setting={} split={} delta={} seeds={} batch={} lr={} epochs={} thresholds={} trees={} \
bin_draws={} alpha={} heuristics={} priors=uniform/all-ones/zero-mean",
        config.setting.as_str(),
        config.train_fraction,
        config.delta,
        config.seeds.len(),
        config.train.batch_size,
        config.train.learning_rate,
        config.train.max_epochs,
        config.thresholds_per_feature,
        config.trees,
        config.bin_draws,
        config.alpha,
        config.heuristics,
    )
}

fn run_one(
    config: &ExperimentConfig,
    spec: &DatasetSpec,
    seed: u64,
) -> Result<(Vec<BoundReport>, Vec<(String, String)>)> {
    let mut data = spec.load(config.subsample, seed)?;
    let split = SplitPlan::new(data.m, config.train_fraction, seed)?;
    data.min_max_scale(Some(&split.train));
    let voters = match config.setting {
        Setting::Stumps => build_stumps(&data, config.thresholds_per_feature)?,
        Setting::Forest => build_forest(&data, &split, config.trees, seed)?,
    };
    let mut reports = Vec::new();
    let mut curves = Vec::new();
    for &family in &config.families {
        let (family_reports, curve) =
            run_family(config, &data, &split, &voters, family, seed)?;
        reports.extend(family_reports);
        curves.push((
            format!("{}_{}_{}.csv", data.name, family.as_str(), seed),
            curve,
        ));
    }
    Ok((reports, curves))
}

fn run_family(
    config: &ExperimentConfig,
    data: &Dataset,
    split: &SplitPlan,
    voters: &VoterOutputs,
    family: Family,
    seed: u64,
) -> Result<(Vec<BoundReport>, String)> {
    let prior = Prior::default_for(family, voters.n);
    let mc = McSettings { samples: config.mvn_samples, seed };
    let (objective, halves) = match config.setting {
        Setting::Stumps => (Objective::Seeger, None),
        Setting::Forest => (
            Objective::CrossSplit { alpha: config.alpha },
            Some((split.half_one.as_slice(), split.half_two.as_slice())),
        ),
    };
    let train_config = TrainConfig {
        seed: seed ^ (family as u64 + 1).wrapping_mul(0x9e37_79b9),
        delta: config.delta,
        ..config.train.clone()
    };
    let pipeline = full_pipeline(
        voters,
        family,
        &prior,
        &split.train,
        halves,
        objective,
        &train_config,
        config.heuristics,
        mc,
    )?;
    let posterior = &pipeline.posterior;
    let train_error = s2d::deterministic_risk(voters, posterior, &split.train)?;
    let test_error = s2d::deterministic_risk(voters, posterior, &split.test)?;
    let kl = kl_divergence(posterior, &prior)?;
    let mut curve = String::from("epoch,objective,learning_rate,partition_bound\n");
    for rec in &pipeline.curve {
        let _ = writeln!(
            curve,
            "{},{},{},{}",
            rec.epoch, rec.objective, rec.learning_rate, pipeline.outcome.bound
        );
    }
    let mut reports = Vec::new();
    let base = |method: &str| {
        let mut r = BoundReport::new(method, &data.name, config.setting.as_str(), seed);
        r.family = Some(family.as_str().to_string());
        r.k = data.k;
        r.n_voters = voters.n;
        r.m_train = split.train.len();
        r.delta = config.delta;
        r.test_error = Some(test_error);
        r.train_error = Some(train_error);
        r.kl = Some(kl);
        r.prior = Some(prior.describe());
        r
    };

    // Partition bound (always reported when applicable for the family/k).
    if applicable(Method::Part, family, data.k) && config.methods.contains(&Method::Part) {
        let out = &pipeline.outcome;
        let mut r = base("part");
        r.bound = out.bound;
        r.raw_bound = out.raw;
        r.vacuous = out.raw >= 1.0;
        r.l_tilde = Some(out.l_tilde);
        r.b_tilde = Some(out.b_lower);
        r.c_tilde = Some(out.c_lower);
        r.emp_stochastic_risk = Some(out.emp_risk);
        r.fallback_factor2 = Some(out.fallback_factor2);
        r.delta_split = vec![config.delta];
        if let Some(cert) = &out.certificate {
            r = r.with_partition(cert);
        }
        let trace: Vec<String> =
            pipeline.trace.entries.iter().map(|e| e.bound.to_string()).collect();
        r.notes = Some(format!(
            "post_training_bound={} heuristic_steps={} reverted={} trace={}",
            pipeline.post_training.bound,
            pipeline.trace.entries.len(),
            pipeline.reverted,
            trace.join(";")
        ));
        reports.push(r);
    }

    // Moment-based baselines. FO, Bin and CBnd read the certificate-trained
    // posterior; the second-order baseline trains against its own tandem
    // objective (which favors decorrelated voters), as a shared posterior
    // cannot serve both a first- and a second-moment bound.
    let moment_methods: Vec<Method> = [Method::Fo, Method::So, Method::Bin, Method::CBnd]
        .into_iter()
        .filter(|m| config.methods.contains(m) && applicable(*m, family, data.k))
        .collect();
    if !moment_methods.is_empty() {
        match config.setting {
            Setting::Stumps => {
                let moments =
                    baselines::estimate_moments(voters, posterior, &split.train, mc)?;
                for method in moment_methods {
                    let value = match method {
                        Method::Fo => baselines::fo_bound(&moments, kl, config.delta)?,
                        Method::So => {
                            let so_config = TrainConfig {
                                seed: seed ^ 0x50_4f,
                                delta: config.delta,
                                ..config.train.clone()
                            };
                            let (so_posterior, _) = crate::optimizer::train(
                                voters,
                                family,
                                &split.train,
                                None,
                                Objective::SecondOrder,
                                &so_config,
                            )?;
                            let so_kl = kl_divergence(&so_posterior, &prior)?;
                            let so_moments = baselines::estimate_moments(
                                voters,
                                &so_posterior,
                                &split.train,
                                mc,
                            )?;
                            let value = baselines::so_bound(&so_moments, so_kl, config.delta)?;
                            let mut r = base(Method::So.as_str());
                            r.bound = value.value;
                            r.raw_bound = value.raw;
                            r.vacuous = value.vacuous;
                            r.emp_stochastic_risk = Some(so_moments.i2_hat);
                            r.kl = Some(so_kl);
                            r.test_error =
                                Some(s2d::deterministic_risk(voters, &so_posterior, &split.test)?);
                            r.train_error =
                                Some(s2d::deterministic_risk(voters, &so_posterior, &split.train)?);
                            r.delta_split = vec![config.delta];
                            r.notes = Some("posterior trained on the tandem objective".into());
                            reports.push(r);
                            continue;
                        }
                        Method::Bin => {
                            baselines::bin_bound(&moments, config.bin_draws, kl, config.delta)?
                        }
                        Method::CBnd => baselines::c_bound(&moments, kl, config.delta)?,
                        _ => unreachable!(),
                    };
                    let mut r = base(method.as_str());
                    r.bound = value.value;
                    r.raw_bound = value.raw;
                    r.vacuous = value.vacuous;
                    r.emp_stochastic_risk = Some(moments.i1_hat);
                    r.delta_split = match method {
                        Method::CBnd => vec![config.delta / 2.0, config.delta / 2.0],
                        _ => vec![config.delta],
                    };
                    reports.push(r);
                }
            }
            Setting::Forest => {
                for method in moment_methods {
                    let value = cross_baseline(
                        method,
                        voters,
                        posterior,
                        split,
                        config.alpha,
                        config.delta,
                        config.bin_draws,
                    )?;
                    let mut r = base(method.as_str());
                    r.bound = value.value;
                    r.raw_bound = value.raw;
                    r.vacuous = value.vacuous;
                    r.delta_split = vec![config.delta];
                    reports.push(r);
                }
            }
        }
    }

    // VC bound on the deterministic vote.
    if config.methods.contains(&Method::Vc) {
        let value = baselines::vc_bound(train_error, split.train.len(), voters.n, config.delta)?;
        let mut r = base("vc");
        r.bound = value.value;
        r.raw_bound = value.raw;
        r.vacuous = value.vacuous;
        r.delta_split = vec![config.delta];
        reports.push(r);
    }
    let _ = &pipeline as &PipelineOutcome;
    Ok((reports, curve))
}

/// FO/SO/Bin for the data-dependent setting: each half's moment is measured
/// on the opposite half and certified through the cross-split budget. The
/// tandem mixture uses the convexity bound
/// `(αW₁+(1−α)W₂)² ≤ αW₁² + (1−α)W₂²`, so the certified quantity dominates
/// the mixture posterior's tandem loss.
fn cross_baseline(
    method: Method,
    voters: &VoterOutputs,
    posterior: &Posterior,
    split: &SplitPlan,
    alpha: f64,
    delta: f64,
    bin_draws: usize,
) -> Result<baselines::BaselineValue> {
    use crate::ensemble::VoterHalf;
    use crate::special::{kl_inverse_upper, log_binomial_term};
    let t1 = voters.half_indices(VoterHalf::One);
    let t2 = voters.half_indices(VoterHalf::Two);
    let mass1: f64 = t1.iter().map(|&i| posterior.params[i]).sum();
    if (mass1 - alpha).abs() > 1e-6 {
        return Err(Error::Config(
            "cross baselines need the posterior in mixture form".into(),
        ));
    }
    let q1: Vec<f64> = t1.iter().map(|&i| posterior.params[i] / alpha).collect();
    let q2: Vec<f64> = t2.iter().map(|&i| posterior.params[i] / (1.0 - alpha)).collect();
    let kl_of = |q: &[f64]| -> f64 {
        let n = q.len() as f64;
        q.iter().filter(|&&x| x > 0.0).map(|&x| x * (x * n).ln()).sum::<f64>().max(0.0)
    };
    let (kl1, kl2) = (kl_of(&q1), kl_of(&q2));
    let (j, m) = (split.half_one.len(), split.train.len());
    let moment = |power: u32| -> (f64, f64) {
        let w_mean = |q: &[f64], ids: &[usize], idx: &[usize]| -> f64 {
            let total: f64 = idx
                .iter()
                .map(|&ex| {
                    let w: f64 =
                        ids.iter().zip(q).map(|(&i, &wq)| wq * voters.error(ex, i)).sum();
                    w.powi(power as i32)
                })
                .sum();
            total / idx.len().max(1) as f64
        };
        (w_mean(&q1, &t1, &split.half_two), w_mean(&q2, &t2, &split.half_one))
    };
    let budget = |kl_scale: f64| -> f64 {
        alpha * kl_scale * kl2 / j as f64
            + (1.0 - alpha) * kl_scale * kl1 / (m - j) as f64
            + (4.0 * ((j * (m - j)) as f64).sqrt() / delta).ln() / m as f64
    };
    let (r1, r2) = moment(1);
    let i1_up = kl_inverse_upper(alpha * r1 + (1.0 - alpha) * r2, budget(1.0))?.value;
    let raw = match method {
        Method::Fo => 2.0 * i1_up,
        Method::So => {
            let (t1m, t2m) = moment(2);
            let i2_up =
                kl_inverse_upper(alpha * t1m + (1.0 - alpha) * t2m, budget(2.0))?.value;
            4.0 * i2_up
        }
        Method::Bin => {
            let n = bin_draws as u64;
            let mut tail = 0.0;
            for jj in bin_draws.div_ceil(2) as u64..=n {
                tail += log_binomial_term(n, jj, i1_up)?.exp();
            }
            2.0 * tail
        }
        _ => {
            return Err(Error::NotApplicable(format!(
                "{} has no data-dependent variant here",
                method.as_str()
            )))
        }
    };
    Ok(baselines::BaselineValue { value: raw.clamp(0.0, 1.0), raw, vacuous: raw >= 1.0 })
}

// ---------------------------------------------------------------------------
// Table assembly (pure functions of the report list, so regeneration is
// byte-identical).
// ---------------------------------------------------------------------------

/// One best-family summary cell of the comparison table: mean ± std over
/// seeds of the raw bound and of the matching test error.
#[derive(Debug, Clone, Copy)]
pub struct Cell {
    pub bound_mean: f64,
    pub bound_std: f64,
    pub err_mean: f64,
    pub err_std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len().max(1) as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Collect (dataset → method → best-family cell), mirroring the comparison
/// table: each method reports its best family by mean raw bound.
pub fn best_family_cells(
    reports: &[BoundReport],
    methods: &[Method],
) -> BTreeMap<String, BTreeMap<&'static str, Cell>> {
    let mut grid: BTreeMap<String, BTreeMap<&'static str, Cell>> = BTreeMap::new();
    let mut datasets: Vec<String> = reports.iter().map(|r| r.dataset.clone()).collect();
    datasets.sort();
    datasets.dedup();
    for dataset in datasets {
        let mut row = BTreeMap::new();
        for method in methods {
            let tag = method.as_str();
            // Group this method's reports by family.
            let mut by_family: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
            for r in reports.iter().filter(|r| r.dataset == dataset && r.method == tag) {
                let fam = r.family.clone().unwrap_or_default();
                let entry = by_family.entry(fam).or_default();
                entry.0.push(r.raw_bound);
                entry.1.push(r.test_error.unwrap_or(f64::NAN));
            }
            let best = by_family
                .into_iter()
                .map(|(_, (bounds, errs))| {
                    let (bm, bs) = mean_std(&bounds);
                    let (em, es) = mean_std(&errs);
                    Cell { bound_mean: bm, bound_std: bs, err_mean: em, err_std: es }
                })
                .min_by(|a, b| a.bound_mean.total_cmp(&b.bound_mean));
            if let Some(cell) = best {
                row.insert(tag, cell);
            }
        }
        grid.insert(dataset, row);
    }
    grid
}

fn fmt_cell(cell: Option<&Cell>, best: bool) -> String {
    match cell {
        None => "N/A | N/A".to_string(),
        Some(c) => format!(
            "{}{:.1} ± {:.1}{} | {:.1} ± {:.1}",
            if best { "**" } else { "" },
            100.0 * c.bound_mean,
            100.0 * c.bound_std,
            if best { "**" } else { "" },
            100.0 * c.err_mean,
            100.0 * c.err_std,
        ),
    }
}

fn assemble_main_table(
    reports: &[BoundReport],
    methods: &[Method],
    header: &str,
) -> (String, String) {
    let grid = best_family_cells(reports, methods);
    let mut md = format!("<!-- {header} -->\n\n| Task |");
    for m in methods {
        let _ = write!(md, " {} (bound \\| test err) |", m.as_str().to_uppercase());
    }
    md.push_str(" Best |\n|---|");
    for _ in methods {
        md.push_str("---|");
    }
    md.push_str("---|\n");
    let mut csv = format!("# {header}\ndataset,method,bound_mean,bound_std,test_err_mean,test_err_std,best\n");
    for (dataset, row) in &grid {
        let best_method = row
            .iter()
            .min_by(|a, b| a.1.bound_mean.total_cmp(&b.1.bound_mean))
            .map(|(m, _)| *m)
            .unwrap_or("");
        let _ = write!(md, "| {dataset} |");
        for m in methods {
            let cell = row.get(m.as_str());
            let _ = write!(md, " {} |", fmt_cell(cell, cell.is_some() && m.as_str() == best_method));
        }
        let _ = writeln!(md, " {} |", best_method.to_uppercase());
        for m in methods {
            match row.get(m.as_str()) {
                None => {
                    let _ = writeln!(csv, "{dataset},{},N/A,N/A,N/A,N/A,false", m.as_str());
                }
                Some(c) => {
                    let _ = writeln!(
                        csv,
                        "{dataset},{},{},{},{},{},{}",
                        m.as_str(),
                        100.0 * c.bound_mean,
                        100.0 * c.bound_std,
                        100.0 * c.err_mean,
                        100.0 * c.err_std,
                        m.as_str() == best_method
                    );
                }
            }
        }
    }
    (md, csv)
}

fn assemble_per_family_table(reports: &[BoundReport], header: &str) -> String {
    let mut md = format!("<!-- {header} -->\n\n| Task | Family | Part bound | Test error |\n|---|---|---|---|\n");
    let mut keys: Vec<(String, String)> = reports
        .iter()
        .filter(|r| r.method == "part")
        .map(|r| (r.dataset.clone(), r.family.clone().unwrap_or_default()))
        .collect();
    keys.sort();
    keys.dedup();
    for (dataset, family) in keys {
        let bounds: Vec<f64> = reports
            .iter()
            .filter(|r| r.method == "part" && r.dataset == dataset && r.family.as_deref() == Some(&family))
            .map(|r| r.raw_bound)
            .collect();
        let errs: Vec<f64> = reports
            .iter()
            .filter(|r| r.method == "part" && r.dataset == dataset && r.family.as_deref() == Some(&family))
            .map(|r| r.test_error.unwrap_or(f64::NAN))
            .collect();
        let (bm, bs) = mean_std(&bounds);
        let (em, es) = mean_std(&errs);
        let _ = writeln!(
            md,
            "| {dataset} | {family} | {:.1} ± {:.1} | {:.1} ± {:.1} |",
            100.0 * bm,
            100.0 * bs,
            100.0 * em,
            100.0 * es
        );
    }
    md
}

// ---------------------------------------------------------------------------
// Oracle check: the CLI-facing verification suite.
// ---------------------------------------------------------------------------

/// One oracle check outcome.
#[derive(Debug, Clone)]
pub struct OracleCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Summary of an `oracle-check` run.
#[derive(Debug, Clone)]
pub struct OracleSummary {
    pub checks: Vec<OracleCheck>,
}

impl OracleSummary {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Drive the Monte-Carlo and brute-force oracles against the closed forms.
///
/// `tamper` is a test fixture: naming a closed form ("prop3", "prop5",
/// "prop7") biases that form before comparison, so the failure path and exit
/// code can be exercised deterministically.
pub fn oracle_check(samples: usize, seed: u64, tamper: Option<&str>) -> Result<OracleSummary> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    if samples == 0 {
        return Ok(OracleSummary { checks });
    }
    let toy = |k: usize, n: usize, m: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        let labels: Vec<usize> = (0..m).map(|_| rng.random_range(0..k)).collect();
        let preds: Vec<u16> = (0..m * n)
            .map(|idx| {
                let j = idx / n;
                if rng.random_range(0.0..1.0) < 0.65 {
                    labels[j] as u16
                } else {
                    rng.random_range(0..k) as u16
                }
            })
            .collect();
        VoterOutputs::from_predictions(preds, labels, k, None).unwrap()
    };
    let bias = |name: &str| if tamper == Some(name) { 0.08 } else { 0.0 };

    // Closed form vs Monte Carlo per family.
    for (name, family, k) in [
        ("prop3", Family::Categorical, 2usize),
        ("prop5", Family::Dirichlet, 2),
        ("prop7", Family::Gaussian, 2),
    ] {
        let voters = toy(k, 6, 60, &mut rng);
        let posterior = match family {
            Family::Categorical => {
                Posterior::new(family, vec![0.3, 0.25, 0.2, 0.15, 0.07, 0.03]).unwrap()
            }
            Family::Dirichlet => {
                Posterior::new(family, vec![1.2, 0.7, 2.0, 0.4, 1.0, 0.6]).unwrap()
            }
            Family::Gaussian => {
                Posterior::new(family, vec![0.6, -0.2, 0.4, 0.1, -0.05, 0.3]).unwrap()
            }
        };
        let idx: Vec<usize> = (0..voters.m).collect();
        let closed =
            s2d::stochastic_risk(&voters, &posterior, &idx, McSettings::default())?.mean
                + bias(name);
        let mc = oracle::mc_stochastic_risk(&voters, &posterior, &idx, samples, seed ^ 17)?;
        let se = mc.std_error.unwrap_or(0.0).max(1e-9);
        let diff = (closed - mc.mean).abs();
        checks.push(OracleCheck {
            name: format!("{name} closed form vs MC"),
            passed: diff <= 3.0 * se,
            detail: format!("closed={closed:.6} mc={:.6} (3σ={:.6})", mc.mean, 3.0 * se),
        });
    }
    // Multi-class Gaussian (sampled closed form) vs direct draw MC.
    {
        let voters = toy(3, 6, 25, &mut rng);
        let posterior = Posterior::new(Family::Gaussian, vec![0.5, -0.1, 0.3, 0.2, 0.0, 0.4]).unwrap();
        let idx: Vec<usize> = (0..voters.m).collect();
        let profile = s2d::stochastic_risk_gaussian_multiclass(
            &voters,
            &posterior.params,
            &idx,
            McSettings { samples: samples.max(20_000), seed: seed ^ 3 },
        )?;
        let closed = profile.mean + bias("prop11");
        let mc = oracle::mc_stochastic_risk(&voters, &posterior, &idx, samples, seed ^ 23)?;
        let se = (mc.std_error.unwrap_or(0.0).powi(2) + profile.mean_se.unwrap_or(0.0).powi(2))
            .sqrt()
            .max(1e-9);
        let diff = (closed - mc.mean).abs();
        checks.push(OracleCheck {
            name: "prop11 closed form vs MC".into(),
            passed: diff <= 3.0 * se,
            detail: format!("closed={closed:.6} mc={:.6} (3σ={:.6})", mc.mean, 3.0 * se),
        });
    }
    // Partition certificates vs brute force.
    {
        let mut worst = 0.0f64;
        let mut sound = true;
        for _ in 0..40 {
            let n = rng.random_range(2..14);
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
            let exact_a =
                oracle::brute_force_partition(&p, oracle::PartitionVariant::MinSubsetSumAtLeastHalf);
            let cert_a = crate::partition::min_subset_sum_at_least_half(&p)?;
            let exact_b =
                oracle::brute_force_partition(&p, oracle::PartitionVariant::MinAbsSignedDifference);
            let cert_b = crate::partition::min_abs_signed_difference(&p)?;
            sound &= cert_a.certified_value <= exact_a + 1e-9
                && cert_a.achieved_value >= exact_a - 1e-9
                && cert_b.certified_value <= exact_b + 1e-9
                && cert_b.achieved_value >= exact_b - 1e-9;
            worst = worst
                .max(cert_a.achieved_value - cert_a.certified_value - 2.0 * cert_a.slack)
                .max(cert_b.achieved_value - cert_b.certified_value - 2.0 * cert_b.slack);
        }
        checks.push(OracleCheck {
            name: "partition certificates vs brute force".into(),
            passed: sound && worst <= 1e-9,
            detail: format!("sound={sound} worst-gap-excess={worst:.3e}"),
        });
    }
    // Empirical stochastic/deterministic identity.
    {
        let voters = toy(2, 5, 40, &mut rng);
        let p = Posterior::new(Family::Categorical, vec![0.4, 0.3, 0.15, 0.1, 0.05]).unwrap();
        let idx: Vec<usize> = (0..voters.m).collect();
        let profile = s2d::stochastic_risk(&voters, &p, &idx, McSettings::default())?;
        let errs = s2d::deterministic_errors(&voters, &p, &idx)?;
        let cond = s2d::conditional_split(&profile, &errs)?;
        let m = idx.len() as f64;
        let recon = cond.c_hat.unwrap_or(0.0) * cond.m1 as f64 / m
            + cond.b_hat.unwrap_or(0.0) * cond.m0 as f64 / m;
        let diff = (recon - profile.mean).abs();
        checks.push(OracleCheck {
            name: "conditional decomposition identity".into(),
            passed: diff < 1e-10,
            detail: format!("|reconstruction − mean| = {diff:.3e}"),
        });
    }
    Ok(OracleSummary { checks })
}
