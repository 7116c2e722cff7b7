use mmlda::corpus::{simulate_dataset, split_dataset, BlockDocument, SimulatorParams};
use mmlda::tuning::{kl_divergence, trace_csv, tune_weights, SearchBudget, TuneTarget};
use mmlda::{ArchitectureKind, ModelDefaults, TrainingSchedule};

fn split() -> (Vec<BlockDocument>, Vec<BlockDocument>) {
    let params = SimulatorParams {
        n_days: 5,
        seed: 13,
        ..Default::default()
    };
    let data = simulate_dataset(&params).unwrap();
    let (train, held) = split_dataset(&data, 0.6, 13).unwrap();
    (
        train.blocks().cloned().collect(),
        held.blocks().cloned().collect(),
    )
}

fn target() -> TuneTarget {
    TuneTarget {
        architecture: ArchitectureKind::Ncm,
        defaults: ModelDefaults::default(),
        schedule: TrainingSchedule::new(8, 2).unwrap(),
        seed: 13,
    }
}

#[test]
fn kl_of_identical_distributions_is_zero() {
    assert_eq!(kl_divergence(&[0.25, 0.75], &[0.25, 0.75]).unwrap(), 0.0);
    assert!(kl_divergence(&[0.5, 0.5], &[1.0, 0.0])
        .unwrap()
        .is_infinite());
}

#[test]
fn best_score_is_minimal_and_trace_is_reproducible() {
    let (train, held) = split();
    let budget = SearchBudget {
        n_candidates: 4,
        seed: 3,
        ..Default::default()
    };
    let (best, trace) = tune_weights(&train, &held, &budget, &target()).unwrap();
    assert_eq!(trace.len(), 4);
    assert_eq!(trace[0].weights, ModelDefaults::default().weights);
    let chosen = trace.iter().find(|c| c.weights == best).unwrap();
    assert!(trace.iter().all(|c| chosen.score <= c.score));
    assert!(trace.iter().all(|c| c.score.is_finite() && c.score >= 0.0));

    let (_, again) = tune_weights(&train, &held, &budget, &target()).unwrap();
    assert_eq!(trace_csv(&trace), trace_csv(&again));
    assert_eq!(trace_csv(&trace).lines().count(), 5);
}

#[test]
fn budget_of_one_returns_the_baseline() {
    let (train, held) = split();
    let budget = SearchBudget {
        n_candidates: 1,
        ..Default::default()
    };
    let (best, trace) = tune_weights(&train, &held, &budget, &target()).unwrap();
    assert_eq!(trace.len(), 1);
    assert_eq!(best, ModelDefaults::default().weights);
}

#[test]
fn rejects_bad_inputs() {
    let (train, held) = split();
    let budget = SearchBudget::default();
    assert!(tune_weights(&train, &[], &budget, &target()).is_err());
    assert!(tune_weights(&[], &held, &budget, &target()).is_err());
    assert!(tune_weights(&train, &train[..3], &budget, &target()).is_err());
    let empty = SearchBudget {
        n_candidates: 0,
        ..Default::default()
    };
    assert!(tune_weights(&train, &held, &empty, &target()).is_err());
}
