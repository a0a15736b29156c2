//! End-to-end runner checks: reproducibility, idempotent report assembly,
//! applicability rendering, and the imported-predictions surface.

use votebound::ensemble::{load_prediction_matrix, VoterHalf};
use votebound::experiment::{self, DatasetSpec, ExperimentConfig, Method, Setting};
use votebound::pac_bayes::Family;
use votebound::report::BoundReport;

fn tiny_config(out: &str) -> ExperimentConfig {
    ExperimentConfig {
        datasets: vec![DatasetSpec::Synth { name: "haber".into() }],
        setting: Setting::Stumps,
        families: vec![Family::Categorical, Family::Dirichlet],
        methods: Method::ALL.to_vec(),
        seeds: vec![0, 1],
        train: votebound::optimizer::TrainConfig {
            max_epochs: 5,
            ..votebound::optimizer::TrainConfig::default()
        },
        train_fraction: 0.8,
        bin_draws: 1,
        out_dir: std::env::temp_dir().join(out),
        ..ExperimentConfig::default()
    }
}

#[test]
fn runs_are_reproducible_byte_for_byte() {
    let config = tiny_config("votebound-repro");
    let a = experiment::run(&config).unwrap();
    let b = experiment::run(&config).unwrap();
    let rows_a: Vec<String> = a.reports.iter().map(BoundReport::to_csv_row).collect();
    let rows_b: Vec<String> = b.reports.iter().map(BoundReport::to_csv_row).collect();
    assert_eq!(rows_a, rows_b, "two runs of the same config must emit identical reports");
    assert_eq!(a.table_md, b.table_md);
}

#[test]
fn report_assembly_is_idempotent() {
    // Regenerating tables from persisted reports must be bit-identical.
    let config = tiny_config("votebound-idem");
    let artifacts = experiment::run(&config).unwrap();
    let dir_a = std::env::temp_dir().join("votebound-idem-a");
    let dir_b = std::env::temp_dir().join("votebound-idem-b");
    let mut ca = config.clone();
    ca.out_dir = dir_a.clone();
    let mut cb = config.clone();
    cb.out_dir = dir_b.clone();
    experiment::write_artifacts(&ca, &artifacts).unwrap();
    experiment::write_artifacts(&cb, &artifacts).unwrap();
    for name in ["reports.csv", "reports.jsonl", "table.md", "table.csv", "per_family.md"] {
        let a = std::fs::read(dir_a.join(name)).unwrap();
        let b = std::fs::read(dir_b.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between regenerations");
    }
}

#[test]
fn applicability_gaps_render_as_na() {
    // Dirichlet rows exist only for the partition bound; the main table must
    // show N/A for a Dirichlet-only run on every inapplicable method.
    let mut config = tiny_config("votebound-na");
    config.families = vec![Family::Dirichlet];
    let artifacts = experiment::run(&config).unwrap();
    assert!(
        artifacts.reports.iter().all(|r| r.method == "part" || r.method == "vc"),
        "only part and vc apply to Dirichlet posteriors"
    );
    assert!(artifacts.table_md.contains("N/A"), "inapplicable cells must render as N/A");
}

#[test]
fn desk_table_includes_exactly_the_applicable_methods() {
    let config = tiny_config("votebound-applicable");
    let artifacts = experiment::run(&config).unwrap();
    for family in [Family::Categorical, Family::Dirichlet] {
        for method in Method::ALL {
            let present = artifacts.reports.iter().any(|r| {
                r.method == method.as_str() && r.family.as_deref() == Some(family.as_str())
            });
            let expected = experiment::applicable(method, family, 2);
            assert_eq!(
                present, expected,
                "method {} family {family}: presence {present} vs applicability {expected}",
                method.as_str()
            );
        }
    }
}

#[test]
fn csv_export_round_trips_through_the_loader() {
    // Exporting a bundled dataset to CSV and loading it back preserves the
    // shape exactly (306 × 3, two classes).
    use std::fmt::Write as _;
    let data = votebound::synth::synth_dataset("haber", None).unwrap();
    let mut csv = String::from("f1,f2,f3,label\n");
    for j in 0..data.m {
        for f in 0..data.d {
            let _ = write!(csv, "{},", data.feature(j, f));
        }
        let _ = writeln!(csv, "{}", data.labels[j]);
    }
    let path = std::env::temp_dir().join("votebound-haber-roundtrip.csv");
    std::fs::write(&path, csv).unwrap();
    let loaded = votebound::ensemble::load_dataset(&path, votebound::ensemble::DataFormat::Csv)
        .unwrap();
    assert_eq!((loaded.m, loaded.d, loaded.k), (306, 3, 2));
    assert_eq!(loaded.labels, data.labels);
    assert_eq!(loaded.row(42), data.row(42));
}

#[test]
fn imported_prediction_matrices_feed_the_bound_pipeline() {
    use std::io::Write;
    let dir = std::env::temp_dir().join("votebound-import");
    std::fs::create_dir_all(&dir).unwrap();
    let preds = dir.join("preds.csv");
    let labels = dir.join("labels.txt");
    let halves = dir.join("halves.txt");
    let mut f = std::fs::File::create(&preds).unwrap();
    // 6 examples × 4 voters.
    writeln!(f, "0,1,0,0\n1,1,0,1\n0,0,1,0\n1,1,1,1\n0,0,0,1\n1,0,1,1").unwrap();
    std::fs::write(&labels, "0\n1\n0\n1\n0\n1\n").unwrap();
    std::fs::write(&halves, "1\n1\n2\n2\n").unwrap();
    let voters = load_prediction_matrix(&preds, &labels, Some(halves.as_path())).unwrap();
    assert_eq!((voters.m, voters.n, voters.k), (6, 4, 2));
    assert_eq!(voters.half_indices(VoterHalf::One), vec![0, 1]);
    // The imported matrix supports a full partition-bound evaluation.
    let posterior =
        votebound::Posterior::new(Family::Categorical, vec![0.4, 0.3, 0.2, 0.1]).unwrap();
    let prior = votebound::Prior::default_for(Family::Categorical, 4);
    let idx: Vec<usize> = (0..6).collect();
    let out = votebound::s2d::partition_bound(votebound::s2d::PartitionBoundInput::seeger(
        &voters, &posterior, &prior, &idx, 0.1,
    ))
    .unwrap();
    assert!(out.bound >= 0.0 && out.bound <= 1.0);
}
