//! Demo operations with plain `String` errors.

use mmlda::corpus::{encode_licking_day, simulate_dataset, split_dataset, BlockDocument, Modality};
use mmlda::evaluation::{
    classify_subjective_value, extrapolation_sweep, ground_truth, nmi, rand_index, EvalSettings,
    ExtrapolationOptions, PairwiseJoint,
};
use mmlda::{
    build_model, ArchitectureKind, ComposedModel, ModelDefaults, SimulatorParams, TrainingSchedule,
};
use serde::Serialize;

pub struct DemoState {
    model: ComposedModel,
    test: Vec<BlockDocument>,
    settings: EvalSettings,
}

fn text<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

impl DemoState {
    pub fn train(
        arch: &str,
        n_days: usize,
        inner: usize,
        passes: usize,
        seed: u64,
    ) -> Result<Self, String> {
        let kind: ArchitectureKind = arch.parse().map_err(text)?;
        if n_days < 2 {
            return Err("need at least two days to hold one out".into());
        }
        let schedule = TrainingSchedule::new(inner, passes).map_err(text)?;
        let params = SimulatorParams {
            n_days,
            seed,
            ..Default::default()
        };
        let data = simulate_dataset(&params).map_err(text)?;
        let (train, test) = split_dataset(&data, 0.8, seed).map_err(text)?;
        let docs: Vec<BlockDocument> = train.blocks().cloned().collect();
        let mut model = build_model(kind, &ModelDefaults::default()).map_err(text)?;
        model.train(&docs, schedule, seed).map_err(text)?;
        Ok(Self {
            model,
            test: test.blocks().cloned().collect(),
            settings: EvalSettings { schedule, seed },
        })
    }

    pub fn rand_index(&self) -> Result<f64, String> {
        let labels =
            classify_subjective_value(&self.model, &self.test, &self.settings).map_err(text)?;
        rand_index(&ground_truth(&self.test), &labels).map_err(text)
    }

    pub fn extrapolation(&self, n_trials: u32, reps: usize) -> Result<String, String> {
        let options = ExtrapolationOptions { n_trials, reps };
        let points = extrapolation_sweep(&self.model, &options, &self.settings).map_err(text)?;
        serde_json::to_string(&points).map_err(text)
    }
}

#[derive(Serialize)]
struct NmiView {
    nmi: f64,
    mutual_information: f64,
    first_marginal: Vec<f64>,
    second_marginal: Vec<f64>,
}

/// Accepts unnormalized non-negative weights and normalizes them.
pub fn nmi_of_joint(table_json: &str) -> Result<String, String> {
    let raw: Vec<Vec<f64>> = serde_json::from_str(table_json)
        .map_err(|e| format!("table must be a JSON array of rows: {e}"))?;
    let total: f64 = raw.iter().flatten().sum();
    if raw.iter().flatten().any(|v| *v < 0.0 || !v.is_finite()) || total <= 0.0 {
        return Err("weights must be finite, non-negative and not all zero".into());
    }
    let table = raw
        .iter()
        .map(|r| r.iter().map(|v| v / total).collect())
        .collect();
    let joint = PairwiseJoint::new("x", "y", table).map_err(text)?;
    serde_json::to_string(&NmiView {
        nmi: nmi(&joint),
        mutual_information: joint.mutual_information(),
        first_marginal: joint.first_marginal(),
        second_marginal: joint.second_marginal(),
    })
    .map_err(text)
}

pub fn encode_licking(means: &str) -> Result<String, String> {
    let values: Vec<f64> = means
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("not a number: {s:?}"))
        })
        .collect::<Result<_, _>>()?;
    let encoded = encode_licking_day(Modality::SelfLicking, &values).map_err(text)?;
    let rows: Vec<&[u32]> = encoded.iter().map(|f| f.counts()).collect();
    serde_json::to_string(&rows).map_err(text)
}
