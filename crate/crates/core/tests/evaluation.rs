use approx::assert_abs_diff_eq;
use mmlda::corpus::{
    simulate_dataset, split_dataset, BlockDocument, ConditionLabel, SimulatorParams,
};
use mmlda::evaluation::*;
use mmlda::models::Z_RS;
use mmlda::{build_model, ArchitectureKind, ComposedModel, ModelDefaults, TrainingSchedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two-sided exact p by listing every sign pattern over the average ranks.
fn sign_enumeration_p(diffs: &[f64]) -> f64 {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nz.len();
    let abs: Vec<f64> = nz.iter().map(|d| d.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|a| {
            let below = abs.iter().filter(|b| *b < a).count() as f64;
            let equal = abs.iter().filter(|b| *b == a).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = nz
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for bits in 0..1u64 << n {
        let w: f64 = (0..n)
            .filter(|i| bits >> i & 1 == 1)
            .map(|i| ranks[i])
            .sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (2.0 * le.min(ge) as f64 / total).min(1.0)
}

fn pairs_from(diffs: &[f64]) -> Vec<(f64, f64)> {
    diffs.iter().map(|&d| (d, 0.0)).collect()
}

#[test]
fn wilcoxon_normal_tracks_sign_enumeration_at_n8() {
    let samples: [[f64; 8]; 3] = [
        [1.5, -0.3, 2.1, 0.8, -1.2, 3.0, 0.4, 1.9],
        [0.2, 0.5, -0.1, 0.9, 1.1, -0.7, 0.3, 0.6],
        [-2.0, -1.0, 0.5, -3.0, -0.25, -1.5, 0.75, -2.5],
    ];
    for diffs in samples {
        let oracle = sign_enumeration_p(&diffs);
        let normal =
            wilcoxon_signed_rank_with(&pairs_from(&diffs), WilcoxonMethod::Normal).unwrap();
        assert!(
            (normal.p_value - oracle).abs() <= 0.02,
            "{diffs:?}: {} vs {oracle}",
            normal.p_value
        );
        let exact = wilcoxon_signed_rank_with(&pairs_from(&diffs), WilcoxonMethod::Exact).unwrap();
        assert_abs_diff_eq!(exact.p_value, oracle, epsilon = 1e-12);
    }
}

#[test]
fn wilcoxon_exact_handles_ties() {
    // Heavy ties: the normal approximation drifts about 0.02 here, the exact
    // path must not.
    let diffs = [1.0, 1.0, -1.0, 2.0, 2.0, -2.0, 3.0, 0.5];
    let exact = wilcoxon_signed_rank_with(&pairs_from(&diffs), WilcoxonMethod::Exact).unwrap();
    assert_abs_diff_eq!(exact.p_value, sign_enumeration_p(&diffs), epsilon = 1e-12);
}

#[test]
fn wilcoxon_symmetric_differences_are_not_significant() {
    let diffs = [1.0, -1.0, 2.0, -2.0, 3.0, -3.0, 4.0, -4.0];
    for method in [WilcoxonMethod::Normal, WilcoxonMethod::Exact] {
        let r = wilcoxon_signed_rank_with(&pairs_from(&diffs), method).unwrap();
        assert!(r.p_value > 0.95, "{method:?}: {}", r.p_value);
    }
}

#[test]
fn chance_level_matches_monte_carlo() {
    assert_abs_diff_eq!(rand_chance_level(6), 26.0 / 36.0, epsilon = 1e-12);
    let truth: Vec<usize> = (0..354).map(|i| i % 6).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let reps = 10_000;
    let mut total = 0.0;
    for _ in 0..reps {
        let guess: Vec<usize> = (0..354).map(|_| rng.random_range(0..6)).collect();
        total += rand_index(&truth, &guess).unwrap();
    }
    let mean = total / f64::from(reps);
    assert!((mean - rand_chance_level(6)).abs() <= 0.01, "mean {mean}");
}

#[test]
fn nmi_extremes_and_hand_value() {
    let diag = PairwiseJoint::new(
        "a",
        "b",
        vec![
            vec![0.2, 0.0, 0.0],
            vec![0.0, 0.5, 0.0],
            vec![0.0, 0.0, 0.3],
        ],
    )
    .unwrap();
    assert_abs_diff_eq!(nmi(&diag), 1.0, epsilon = 1e-9);
    let p = [0.3, 0.7];
    let q = [0.1, 0.6, 0.3];
    let product: Vec<Vec<f64>> = p
        .iter()
        .map(|a| q.iter().map(|b| a * b).collect())
        .collect();
    assert_abs_diff_eq!(
        nmi(&PairwiseJoint::new("a", "b", product).unwrap()),
        0.0,
        epsilon = 1e-9
    );
    let hand = PairwiseJoint::new("a", "b", vec![vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
    assert_abs_diff_eq!(nmi(&hand), 0.2781, epsilon = 1e-3);
}

struct Fixture {
    model: ComposedModel,
    test: mmlda::Dataset,
    settings: EvalSettings,
}

fn fixture(kind: ArchitectureKind) -> Fixture {
    let params = SimulatorParams {
        n_days: 10,
        seed: 4,
        ..Default::default()
    };
    let data = simulate_dataset(&params).unwrap();
    let (train, test) = split_dataset(&data, 0.8, 4).unwrap();
    let schedule = TrainingSchedule::new(20, 2).unwrap();
    let docs: Vec<BlockDocument> = train.blocks().cloned().collect();
    let mut model = build_model(kind, &ModelDefaults::default()).unwrap();
    model.train(&docs, schedule, 4).unwrap();
    Fixture {
        model,
        test,
        settings: EvalSettings {
            schedule: TrainingSchedule::new(10, 1).unwrap(),
            seed: 4,
        },
    }
}

#[test]
fn report_round_trips_and_has_expected_shape() {
    let f = fixture(ArchitectureKind::Ecm);
    let opts = ExtrapolationOptions {
        n_trials: 100,
        reps: 2,
    };
    let report = evaluate(&f.model, &f.test, &f.settings, &opts).unwrap();
    assert_eq!(report.n_test_blocks, 12);
    assert_abs_diff_eq!(report.chance_level, 0.7222, epsilon = 1e-4);
    assert!((0.0..=1.0).contains(&report.rand_index));
    assert_eq!(report.extrapolation.len(), 42);
    assert_eq!(extrapolation_csv(&report.extrapolation).lines().count(), 43);
    let nmi = report.nmi.as_ref().unwrap();
    assert!(nmi
        .values()
        .flat_map(|s| &s.values)
        .all(|v| (0.0..=1.0).contains(v)));
    assert!(report.notices.is_empty());

    let back = EvalReport::from_json(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);
    let again = evaluate(&f.model, &f.test, &f.settings, &opts).unwrap();
    assert_eq!(again.to_json().unwrap(), report.to_json().unwrap());
}

#[test]
fn ncm_report_skips_nmi_with_notice() {
    let f = fixture(ArchitectureKind::Ncm);
    let opts = ExtrapolationOptions {
        n_trials: 50,
        reps: 1,
    };
    let report = evaluate(&f.model, &f.test, &f.settings, &opts).unwrap();
    assert!(report.nmi.is_none());
    assert_eq!(report.notices.len(), 1);
    assert!(report.notices[0].contains("NMI skipped"));
}

#[test]
fn topic_vectors_have_one_row_per_block() {
    let f = fixture(ArchitectureKind::Ipm);
    let docs: Vec<BlockDocument> = f.test.blocks().cloned().collect();
    let csv = export_topic_vectors(&f.model, &docs, Z_RS, &f.settings).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "day,block,condition,theta_0,theta_1,theta_2,theta_3,theta_4,theta_5"
    );
    assert_eq!(lines.len(), docs.len() + 1);
    for line in &lines[1..] {
        let theta: f64 = line
            .split(',')
            .skip(3)
            .map(|v| v.parse::<f64>().unwrap())
            .sum();
        assert_abs_diff_eq!(theta, 1.0, epsilon = 1e-9);
    }
    assert!(export_topic_vectors(&f.model, &docs, "z_missing", &f.settings).is_err());
}

#[test]
fn single_condition_gives_one_summary() {
    let f = fixture(ArchitectureKind::Ecm);
    let docs: Vec<BlockDocument> = f
        .test
        .blocks()
        .filter(|d| d.condition == ConditionLabel::Self50)
        .cloned()
        .collect();
    let summaries = predict_licking_interpolation(&f.model, &docs, &f.settings).unwrap();
    assert_eq!(summaries.len(), 1);
    assert_eq!(summaries[0].condition, ConditionLabel::Self50);
    assert!(interpolation_trend(&summaries, true).is_err());
}

#[test]
fn extrapolation_is_reproducible_and_validated() {
    let f = fixture(ArchitectureKind::Ncm);
    let opts = ExtrapolationOptions {
        n_trials: 100,
        reps: 3,
    };
    let a = predict_licking_extrapolation(&f.model, 0.4, 0.6, &opts, &f.settings).unwrap();
    let b = predict_licking_extrapolation(&f.model, 0.4, 0.6, &opts, &f.settings).unwrap();
    assert_eq!(a, b);
    assert!((0.0..=1.0).contains(&a.0));
    assert!(predict_licking_extrapolation(&f.model, 1.2, 0.5, &opts, &f.settings).is_err());
    let zero = ExtrapolationOptions {
        n_trials: 0,
        reps: 3,
    };
    assert!(predict_licking_extrapolation(&f.model, 0.5, 0.5, &zero, &f.settings).is_err());
    // NCM never sees partner rewards, so the partner probability is inert.
    let c = predict_licking_extrapolation(&f.model, 0.4, 0.9, &opts, &f.settings).unwrap();
    assert_eq!(a, c);
}
