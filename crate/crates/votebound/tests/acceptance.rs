//! Acceptance suite: one pass/fail line per criterion.
//!
//! Each test prints `ACCEPTANCE criterion N: PASS — detail` when it holds;
//! a failing criterion panics with the measured numbers.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use votebound::ensemble::VoterOutputs;
use votebound::experiment::{self, best_family_cells, ExperimentConfig, Method};
use votebound::oracle;
use votebound::pac_bayes::{
    kl_divergence, seeger_bound, CertificateInput, Family, Posterior, Prior,
};
use votebound::partition;
use votebound::s2d::{self, McSettings};
use votebound::special::{kl, kl_inverse_lower, kl_inverse_upper, kl_inverse_upper_with_grads};

fn random_voters(rng: &mut ChaCha8Rng, m: usize, n: usize, k: usize) -> VoterOutputs {
    let labels: Vec<usize> = (0..m).map(|_| rng.random_range(0..k)).collect();
    let predictions: Vec<u16> = (0..m * n)
        .map(|idx| {
            let j = idx / n;
            if rng.random_range(0.0..1.0) < 0.55 {
                labels[j] as u16
            } else {
                rng.random_range(0..k) as u16
            }
        })
        .collect();
    VoterOutputs::from_predictions(predictions, labels, k, None).unwrap()
}

fn random_posterior(rng: &mut ChaCha8Rng, family: Family, n: usize) -> Posterior {
    let params = match family {
        Family::Categorical => {
            let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = raw.iter().sum();
            raw.into_iter().map(|x| x / total).collect()
        }
        Family::Dirichlet => (0..n).map(|_| rng.random_range(0.2..3.0)).collect(),
        Family::Gaussian => (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };
    Posterior::new(family, params).unwrap()
}

/// Criterion 1: each closed-form stochastic risk agrees with the independent
/// Monte-Carlo oracle within 3 standard errors on ≥ 19/20 random instances.
#[test]
fn criterion_1_closed_forms_vs_monte_carlo() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let samples = 100_000;
    let mut summary = Vec::new();
    for (name, family, ks) in [
        ("prop3", Family::Categorical, vec![2usize, 3, 5]),
        ("prop5", Family::Dirichlet, vec![2, 3, 5]),
        ("prop7", Family::Gaussian, vec![2]),
        ("prop11", Family::Gaussian, vec![3, 5]),
    ] {
        let mut hits = 0;
        for case in 0..20 {
            let n = if case % 2 == 0 { 5 } else { 20 };
            let m = if (case / 2) % 2 == 0 { 10 } else { 100 };
            let k = ks[case % ks.len()];
            let voters = random_voters(&mut rng, m, n, k);
            let posterior = random_posterior(&mut rng, family, n);
            let idx: Vec<usize> = (0..m).collect();
            let (closed, closed_se) = if name == "prop11" {
                let profile = s2d::stochastic_risk_gaussian_multiclass(
                    &voters,
                    &posterior.params,
                    &idx,
                    McSettings { samples: 40_000, seed: 0x11C + case as u64 },
                )
                .unwrap();
                (profile.mean, profile.mean_se.unwrap_or(0.0))
            } else {
                let profile =
                    s2d::stochastic_risk(&voters, &posterior, &idx, McSettings::default())
                        .unwrap();
                (profile.mean, 0.0)
            };
            let mc = oracle::mc_stochastic_risk(&voters, &posterior, &idx, samples, 7 + case as u64)
                .unwrap();
            let se = (mc.std_error.unwrap_or(0.0).powi(2) + closed_se.powi(2)).sqrt().max(1e-9);
            if (closed - mc.mean).abs() <= 3.0 * se {
                hits += 1;
            }
        }
        assert!(hits >= 19, "criterion 1 FAILED for {name}: only {hits}/20 within 3σ");
        summary.push(format!("{name} {hits}/20"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "criterion 1 exceeded the 2-minute budget: {elapsed:.1}s");
    println!(
        "ACCEPTANCE criterion 1: PASS — {} within 3σ in {elapsed:.1}s",
        summary.join(", ")
    );
}

/// Criterion 2: the empirical conditional decomposition reconstructs the
/// deterministic risk of the posterior-mean vote within 1e−10.
#[test]
fn criterion_2_decomposition_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let families = [Family::Categorical, Family::Dirichlet, Family::Gaussian];
    let mut checked = 0;
    let mut worst = 0.0f64;
    while checked < 100 {
        let family = families[checked % 3];
        let n = rng.random_range(3..12);
        let m = rng.random_range(20..120);
        let voters = random_voters(&mut rng, m, n, 2);
        let posterior = random_posterior(&mut rng, family, n);
        let idx: Vec<usize> = (0..m).collect();
        let profile =
            s2d::stochastic_risk(&voters, &posterior, &idx, McSettings::default()).unwrap();
        let det = s2d::deterministic_errors(&voters, &posterior, &idx).unwrap();
        let cond = s2d::conditional_split(&profile, &det).unwrap();
        let (Some(b), Some(c)) = (cond.b_hat, cond.c_hat) else { continue };
        if (c - b).abs() < 1e-6 {
            continue;
        }
        let det_risk = det.iter().map(|&e| e as f64).sum::<f64>() / m as f64;
        let reconstruction = (profile.mean - b) / (c - b);
        worst = worst.max((reconstruction - det_risk).abs());
        checked += 1;
    }
    assert!(worst < 1e-10, "criterion 2 FAILED: worst reconstruction error {worst:e}");
    println!("ACCEPTANCE criterion 2: PASS — 100 instances, worst error {worst:.2e}");
}

/// Criterion 3: certified partition values sandwich the brute-force optimum
/// on 500 random vectors, with gap ≤ 2n/S.
#[test]
fn criterion_3_partition_soundness() {
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut worst_gap_excess = f64::NEG_INFINITY;
    for case in 0..500 {
        let n = rng.random_range(1..=20);
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.001..1.0f64)).collect();
        // Most cases run at the fast search resolution; a slice exercises the
        // full default scale.
        let cap = if case % 10 == 0 {
            partition::DEFAULT_SCALED_TOTAL_CAP
        } else {
            partition::FAST_SCALED_TOTAL_CAP
        };
        let exact_a =
            oracle::brute_force_partition(&p, oracle::PartitionVariant::MinSubsetSumAtLeastHalf);
        let cert_a = partition::min_subset_sum_at_least_half_capped(&p, cap).unwrap();
        let exact_b =
            oracle::brute_force_partition(&p, oracle::PartitionVariant::MinAbsSignedDifference);
        let cert_b = partition::min_abs_signed_difference_capped(&p, cap).unwrap();
        for (cert, exact, tag) in [(&cert_a, exact_a, "subset-sum"), (&cert_b, exact_b, "signed-diff")]
        {
            assert!(
                cert.certified_value <= exact + 1e-9,
                "criterion 3 FAILED ({tag}): certified {} > optimum {exact} on {p:?}",
                cert.certified_value
            );
            assert!(
                cert.achieved_value >= exact - 1e-9,
                "criterion 3 FAILED ({tag}): achieved {} < optimum {exact} on {p:?}",
                cert.achieved_value
            );
            let excess = cert.achieved_value - cert.certified_value - 2.0 * cert.slack;
            worst_gap_excess = worst_gap_excess.max(excess);
            assert!(
                excess <= 1e-9,
                "criterion 3 FAILED ({tag}): gap exceeds 2n/S by {excess:e} on {p:?}"
            );
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "criterion 3 exceeded the 1-minute budget: {elapsed:.1}s");
    println!(
        "ACCEPTANCE criterion 3: PASS — 500 vectors sandwiched, worst gap excess {worst_gap_excess:.2e}, {elapsed:.1}s"
    );
}

/// Criterion 4: inversion round trips within 1e−12 on a 10⁴-point grid;
/// implicit gradients within 1e−6 relative of finite differences.
#[test]
fn criterion_4_kl_machinery() {
    let mut worst_residual = 0.0f64;
    for qi in 0..100 {
        let q = 0.005 + 0.895 * qi as f64 / 99.0;
        for bi in 0..100 {
            let budget = 4e-4 + 0.4 * bi as f64 / 99.0;
            let up = kl_inverse_upper(q, budget).unwrap();
            let down = kl_inverse_lower(q, budget).unwrap();
            for root in [up.value, down.value] {
                let residual = (kl(q, root) - budget).abs();
                if root > 1e-9 && root < 1.0 - 1e-9 && (root - q).abs() > 1e-12 {
                    worst_residual = worst_residual.max(residual);
                }
            }
        }
    }
    assert!(
        worst_residual <= 1e-12,
        "criterion 4 FAILED: round-trip residual {worst_residual:e}"
    );
    let mut worst_rel = 0.0f64;
    let h = 1e-5;
    for &q in &[0.02, 0.1, 0.25, 0.5, 0.75] {
        for &b in &[0.005, 0.05, 0.2, 0.4] {
            let (_, dq, db) = kl_inverse_upper_with_grads(q, b).unwrap();
            let fd_q = (kl_inverse_upper(q + h, b).unwrap().value
                - kl_inverse_upper(q - h, b).unwrap().value)
                / (2.0 * h);
            let fd_b = (kl_inverse_upper(q, b + h).unwrap().value
                - kl_inverse_upper(q, b - h).unwrap().value)
                / (2.0 * h);
            worst_rel = worst_rel.max(((dq - fd_q) / fd_q).abs()).max(((db - fd_b) / fd_b).abs());
        }
    }
    assert!(worst_rel < 1e-6, "criterion 4 FAILED: implicit gradient off by {worst_rel:e}");
    println!(
        "ACCEPTANCE criterion 4: PASS — residual ≤ {worst_residual:.2e}, gradient error ≤ {worst_rel:.2e}"
    );
}

/// Criterion 5: with a uniform Categorical posterior on an even voter count,
/// the partition bound collapses to min(1, 2·L̃) exactly.
#[test]
fn criterion_5_factor_two_recovery() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    // Dyadic voter count: the uniform weights sum to exactly 1.
    let n = 64;
    let m = 200;
    let voters = random_voters(&mut rng, m, n, 2);
    let posterior = Posterior::initial(Family::Categorical, n);
    let prior = Prior::default_for(Family::Categorical, n);
    let idx: Vec<usize> = (0..m).collect();
    let out = s2d::partition_bound(s2d::PartitionBoundInput::seeger(
        &voters, &posterior, &prior, &idx, 0.05,
    ))
    .unwrap();
    assert_eq!(out.c_lower, 0.5, "uniform even weights must certify c̃ = ½ exactly");
    assert_eq!(out.b_lower, 0.0);
    assert_eq!(
        out.bound,
        (2.0 * out.l_tilde).min(1.0),
        "criterion 5 FAILED: partition bound must equal min(1, 2·L̃) bit-for-bit"
    );
    println!(
        "ACCEPTANCE criterion 5: PASS — bound {} = min(1, 2·{})",
        out.bound, out.l_tilde
    );
}

/// Criterion 6: on a synthetic three-voter distribution, the Seeger bound at
/// δ = 0.1 covers the true stochastic risk in ≥ 88% of 1000 resamples.
#[test]
fn criterion_6_seeger_coverage() {
    let start = std::time::Instant::now();
    // Known distribution over 8 input patterns, 3 voters with fixed error
    // patterns per input; the true stochastic risk is a finite sum.
    let pattern_prob = [0.22, 0.18, 0.15, 0.13, 0.12, 0.1, 0.06, 0.04];
    let pattern_errors: [[f64; 3]; 8] = [
        [0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0],
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 1.0],
        [1.0, 0.0, 1.0],
        [1.0, 1.0, 0.0],
        [1.0, 1.0, 1.0],
    ];
    let posterior = [0.5, 0.3, 0.2];
    let true_risk: f64 = pattern_prob
        .iter()
        .zip(&pattern_errors)
        .map(|(&pr, errs)| pr * (0..3).map(|i| posterior[i] * errs[i]).sum::<f64>())
        .sum();
    let q = Posterior::new(Family::Categorical, posterior.to_vec()).unwrap();
    let prior = Prior::default_for(Family::Categorical, 3);
    let kl_div = kl_divergence(&q, &prior).unwrap();
    let (m, delta, resamples) = (200usize, 0.1, 1000usize);
    let mut rng = ChaCha8Rng::seed_from_u64(0xC6);
    let mut covered = 0;
    for _ in 0..resamples {
        let mut emp = 0.0;
        for _ in 0..m {
            let u: f64 = rng.random_range(0.0..1.0);
            let mut acc = 0.0;
            let mut pattern = pattern_prob.len() - 1;
            for (pi, &pr) in pattern_prob.iter().enumerate() {
                acc += pr;
                if u < acc {
                    pattern = pi;
                    break;
                }
            }
            emp += (0..3).map(|i| posterior[i] * pattern_errors[pattern][i]).sum::<f64>();
        }
        emp /= m as f64;
        let bound = seeger_bound(&CertificateInput {
            empirical_risk: emp,
            m,
            kl_div,
            delta,
        })
        .unwrap();
        if bound >= true_risk {
            covered += 1;
        }
    }
    let rate = covered as f64 / resamples as f64;
    assert!(
        rate >= 0.88,
        "criterion 6 FAILED: coverage {rate} below 0.88 (true risk {true_risk})"
    );
    println!(
        "ACCEPTANCE criterion 6: PASS — coverage {rate:.3} over {resamples} resamples ({:.1}s)",
        start.elapsed().as_secs_f64()
    );
}

/// Table 2 reference means (stump setting, percent): FO, SO, Bin, CBnd, VC, Part.
const TABLE2: [(&str, [f64; 6]); 4] = [
    ("haber", [75.2, 110.5, 84.7, 100.0, 112.0, 37.8]),
    ("mush", [12.2, 20.6, 12.6, 22.0, 59.1, 7.9]),
    ("svmg", [17.4, 28.2, 22.0, 29.2, 37.6, 8.7]),
    ("ttt", [75.9, 100.0, 87.2, 94.8, 117.0, 69.8]),
];

/// Criteria 7 and 9: the desk-scale comparison run reproduces the reference
/// table and the heuristic traces never increase.
#[test]
fn criterion_7_and_9_desk_scale_tables() {
    let start = std::time::Instant::now();
    let config = ExperimentConfig { out_dir: std::env::temp_dir().join("votebound-acceptance"), ..ExperimentConfig::desk_binary() };
    let artifacts = experiment::run(&config).expect("desk run");
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < 1800.0, "criterion 7 exceeded the 30-minute budget: {elapsed:.0}s");

    // (a) every reported bound covers its own test error.
    for r in &artifacts.reports {
        let test_error = r.test_error.expect("desk reports carry test errors");
        assert!(
            r.bound >= test_error - 1e-12,
            "criterion 7a FAILED: {} on {} seed {} bound {} < test error {}",
            r.method,
            r.dataset,
            r.seed,
            r.bound,
            test_error
        );
    }

    // (b) the partition bound beats or ties every baseline on ≥ 3 of 4 tasks.
    let cells = best_family_cells(&artifacts.reports, &Method::ALL);
    let mut part_wins = 0;
    for (dataset, row) in &cells {
        let part = row["part"].bound_mean;
        let best_baseline = row
            .iter()
            .filter(|(m, _)| **m != "part")
            .map(|(_, c)| c.bound_mean)
            .fold(f64::INFINITY, f64::min);
        if part <= best_baseline + 1e-12 {
            part_wins += 1;
        } else {
            println!(
                "criterion 7b note: part {:.3} vs best baseline {:.3} on {dataset}",
                part, best_baseline
            );
        }
    }
    assert!(part_wins >= 3, "criterion 7b FAILED: part wins only {part_wins}/4 tasks");

    // (c) every method's best-family mean lands within ±10 points of the
    // reference table.
    let methods = ["fo", "so", "bin", "cbnd", "vc", "part"];
    let mut worst: (f64, String) = (0.0, String::new());
    for (dataset, reference) in TABLE2 {
        let row = cells.get(dataset).unwrap_or_else(|| panic!("no cells for {dataset}"));
        for (mi, method) in methods.iter().enumerate() {
            let got = 100.0
                * row
                    .get(method)
                    .unwrap_or_else(|| panic!("no {method} cell for {dataset}"))
                    .bound_mean;
            let delta = (got - reference[mi]).abs();
            if delta > worst.0 {
                worst = (delta, format!("{method} on {dataset}: {got:.1} vs {:.1}", reference[mi]));
            }
            assert!(
                delta <= 10.0,
                "criterion 7c FAILED: {method} on {dataset} is {got:.1}, reference {:.1} (Δ{delta:.1})",
                reference[mi]
            );
        }
    }
    println!(
        "ACCEPTANCE criterion 7: PASS — (a) bounds ≥ test errors, (b) part wins {part_wins}/4, (c) all 24 cells within ±10 (worst Δ{:.1}: {}), {elapsed:.0}s",
        worst.0, worst.1
    );

    // Criterion 9: heuristic traces nonincreasing; final ≤ post-training.
    let mut violations = 0;
    let mut traces = 0;
    for r in artifacts.reports.iter().filter(|r| r.method == "part") {
        let notes = r.notes.as_deref().unwrap_or("");
        let post_training: f64 = notes
            .split_whitespace()
            .find_map(|tok| tok.strip_prefix("post_training_bound="))
            .and_then(|v| v.parse().ok())
            .expect("part reports carry the post-training bound");
        if r.bound > post_training + 1e-12 {
            violations += 1;
        }
        if let Some(trace) = notes.split_whitespace().find_map(|tok| tok.strip_prefix("trace=")) {
            let values: Vec<f64> =
                trace.split(';').filter(|s| !s.is_empty()).filter_map(|s| s.parse().ok()).collect();
            traces += 1;
            if values.windows(2).any(|w| w[1] > w[0] + 1e-12) {
                violations += 1;
            }
        }
    }
    assert_eq!(violations, 0, "criterion 9 FAILED: {violations} monotonicity violations");
    println!(
        "ACCEPTANCE criterion 9: PASS — {traces} heuristic traces nonincreasing, final ≤ post-training everywhere"
    );
}

/// Forest-path amendment to criterion 7: a small multi-class forest run where
/// the bound covers the test error and the partition bound beats FO.
#[test]
fn criterion_7_forest_path() {
    let start = std::time::Instant::now();
    let config = ExperimentConfig {
        out_dir: std::env::temp_dir().join("votebound-acceptance-forest"),
        ..ExperimentConfig::desk_forest()
    };
    let artifacts = experiment::run(&config).expect("forest run");
    let part: Vec<&votebound::BoundReport> =
        artifacts.reports.iter().filter(|r| r.method == "part").collect();
    let fo: Vec<&votebound::BoundReport> =
        artifacts.reports.iter().filter(|r| r.method == "fo").collect();
    assert!(!part.is_empty() && !fo.is_empty());
    for r in &part {
        assert!(
            r.bound >= r.test_error.unwrap() - 1e-12,
            "forest part bound {} below test error {:?}",
            r.bound,
            r.test_error
        );
    }
    let part_mean: f64 = part.iter().map(|r| r.raw_bound).sum::<f64>() / part.len() as f64;
    let fo_mean: f64 = fo.iter().map(|r| r.raw_bound).sum::<f64>() / fo.len() as f64;
    assert!(
        part_mean <= fo_mean + 1e-12,
        "forest part {part_mean} should not exceed FO {fo_mean}"
    );
    println!(
        "ACCEPTANCE criterion 7 (forest path): PASS — part {:.3} ≤ FO {:.3}, bounds cover test errors ({:.0}s)",
        part_mean,
        fo_mean,
        start.elapsed().as_secs_f64()
    );
}

/// Criterion 8: the Bayes-risk identity holds for Categorical and Gaussian
/// votes (3σ) and fails by construction for the literal Dirichlet loss (5σ).
#[test]
fn criterion_8_bayes_risk_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    // Categorical, binary and multi-class.
    for k in [2usize, 3] {
        let voters = random_voters(&mut rng, 60, 6, k);
        let posterior = random_posterior(&mut rng, Family::Categorical, 6);
        let idx: Vec<usize> = (0..60).collect();
        let bayes = oracle::mc_bayes_risk(&voters, &posterior, &idx, 100_000, 5).unwrap();
        let det = s2d::deterministic_risk(&voters, &posterior, &idx).unwrap();
        let se = bayes.std_error.unwrap_or(0.0).max(1e-9);
        assert!(
            (bayes.mean - det).abs() <= 3.0 * se + 1e-9,
            "criterion 8 FAILED: categorical k={k} identity off: {} vs {det}",
            bayes.mean
        );
    }
    // Binary Gaussian.
    {
        let voters = random_voters(&mut rng, 60, 6, 2);
        let posterior = random_posterior(&mut rng, Family::Gaussian, 6);
        let idx: Vec<usize> = (0..60).collect();
        let bayes = oracle::mc_bayes_risk(&voters, &posterior, &idx, 100_000, 9).unwrap();
        let det = s2d::deterministic_risk(&voters, &posterior, &idx).unwrap();
        let se = bayes.std_error.unwrap_or(0.0).max(1e-9);
        assert!(
            (bayes.mean - det).abs() <= 3.0 * se + 1e-9,
            "criterion 8 FAILED: gaussian identity off: {} vs {det}",
            bayes.mean
        );
    }
    // Dirichlet counterexample: voter 0 always errs, voter 1 never; under the
    // literal full-mass loss threshold the deterministic vote "never errs",
    // while the Q-averaged prediction errs on every example.
    {
        let labels = vec![1usize; 40];
        let mut predictions = Vec::with_capacity(80);
        for _ in 0..40 {
            predictions.push(0u16); // always wrong
            predictions.push(1u16); // always right
        }
        let voters = VoterOutputs::from_predictions(predictions, labels, 2, None).unwrap();
        let posterior = Posterior::new(Family::Dirichlet, vec![3.0, 1.0]).unwrap();
        let idx: Vec<usize> = (0..40).collect();
        let bayes = oracle::mc_bayes_risk(&voters, &posterior, &idx, 100_000, 13).unwrap();
        // Literal reading: error only when the wrong-voter mass reaches the
        // full ‖p‖₁.
        let total: f64 = posterior.params.iter().sum();
        let literal_risk: f64 = idx
            .iter()
            .map(|&j| {
                let p_f: f64 = voters
                    .error_row(j)
                    .iter()
                    .zip(&posterior.params)
                    .map(|(&e, &p)| p * e as f64)
                    .sum();
                f64::from(p_f >= total)
            })
            .sum::<f64>()
            / idx.len() as f64;
        assert_eq!(literal_risk, 0.0, "the planted vote never errs under the literal loss");
        let se = bayes.std_error.unwrap_or(0.0).max(1e-12);
        let gap_sigmas = (bayes.mean - literal_risk).abs() / se;
        assert!(
            gap_sigmas > 5.0,
            "criterion 8 FAILED: Dirichlet counterexample gap only {gap_sigmas:.1}σ"
        );
        // Our half-mass convention restores the identity on the same instance.
        let det = s2d::deterministic_risk(&voters, &posterior, &idx).unwrap();
        assert!((bayes.mean - det).abs() <= 3.0 * se + 1e-9);
        println!(
            "ACCEPTANCE criterion 8: PASS — identities within 3σ; literal Dirichlet reading off by {gap_sigmas:.0}σ"
        );
    }
}
