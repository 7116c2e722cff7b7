//! Modality-weight search scored by held-out licking KL divergence.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::composition::{node_seed, TrainingSchedule};
use crate::corpus::{BlockDocument, Modality};
use crate::error::{invalid, Error, Result};
use crate::models::{build_model, ArchitectureKind, ModelDefaults, WeightConfig};

/// Added to every predicted probability before renormalizing.
pub const PREDICTION_EPSILON: f64 = 1e-9;

/// `Σ p log(p/q)` in nats. Infinite when `q` misses mass that `p` has.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!(
            "support sizes {} and {}",
            p.len(),
            q.len()
        )));
    }
    if p.iter().chain(q).any(|x| !x.is_finite() || *x < 0.0) {
        return Err(invalid("distributions must be finite and non-negative"));
    }
    let mut total = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        total += a * (a / b).ln();
    }
    Ok(total.max(0.0))
}

/// Add-ε smoothing followed by renormalization.
pub fn smooth(q: &[f64], epsilon: f64) -> Vec<f64> {
    let total: f64 = q.iter().map(|x| x + epsilon).sum();
    q.iter().map(|x| (x + epsilon) / total).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchBudget {
    pub n_candidates: usize,
    pub seed: u64,
    /// Inclusive integer range for every weight.
    pub low: u32,
    pub high: u32,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            n_candidates: 10,
            seed: 0,
            low: 50,
            high: 500,
        }
    }
}

impl SearchBudget {
    pub fn validate(&self) -> Result<()> {
        if self.n_candidates == 0 {
            return Err(invalid("search budget needs at least one candidate"));
        }
        if self.low == 0 || self.low > self.high {
            return Err(invalid(format!(
                "invalid weight range [{}, {}]",
                self.low, self.high
            )));
        }
        Ok(())
    }

    /// Baseline first, then log-uniform draws over the range.
    pub fn candidates(&self, baseline: WeightConfig) -> Vec<WeightConfig> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (lo, hi) = (f64::from(self.low).ln(), f64::from(self.high).ln());
        let mut out = vec![baseline];
        while out.len() < self.n_candidates {
            let mut w = baseline;
            for m in Modality::ALL {
                let v = rng.random_range(lo..=hi).exp().round() as u32;
                w.set(m, v.clamp(self.low, self.high));
            }
            out.push(w);
        }
        out
    }
}

/// What is being tuned and how each candidate is trained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneTarget {
    pub architecture: ArchitectureKind,
    pub defaults: ModelDefaults,
    pub schedule: TrainingSchedule,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuneCandidate {
    pub index: usize,
    pub weights: WeightConfig,
    pub score: f64,
}

/// Mean KL between observed and predicted self-licking over held-out
/// blocks, predicting from every other modality.
pub fn heldout_licking_kl(
    model: &crate::composition::ComposedModel,
    heldout: &[BlockDocument],
    schedule: TrainingSchedule,
    seed: u64,
) -> Result<f64> {
    let scored: Vec<&BlockDocument> = heldout
        .iter()
        .filter(|d| {
            d.observation(Modality::SelfLicking)
                .is_some_and(|v| v.total() > 0)
        })
        .collect();
    if scored.is_empty() {
        return Err(invalid(
            "held-out set has no blocks with self-licking observations",
        ));
    }
    let scores = crate::map_indices(scored.len(), |i| {
        let doc = scored[i];
        let observed = doc
            .observation(Modality::SelfLicking)
            .and_then(|v| v.proportions())
            .expect("filtered above");
        let input = doc.without(&[Modality::SelfLicking]);
        let predicted = model.predict(
            &input,
            Modality::SelfLicking,
            schedule,
            node_seed(seed, i, 6),
        )?;
        kl_divergence(&observed, &smooth(&predicted, PREDICTION_EPSILON))
    })?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Trains one model per candidate and keeps the lowest held-out KL. Ties
/// keep the earlier candidate.
pub fn tune_weights(
    train: &[BlockDocument],
    heldout: &[BlockDocument],
    budget: &SearchBudget,
    target: &TuneTarget,
) -> Result<(WeightConfig, Vec<TuneCandidate>)> {
    budget.validate()?;
    if heldout.is_empty() {
        return Err(invalid("held-out set is empty"));
    }
    if train.is_empty() {
        return Err(invalid("training set is empty"));
    }
    let overlap = heldout.iter().any(|h| {
        train
            .iter()
            .any(|t| t.day_index == h.day_index && t.block_index == h.block_index)
    });
    if overlap {
        return Err(invalid("training and held-out blocks overlap"));
    }
    let mut trace = Vec::with_capacity(budget.n_candidates);
    for (index, weights) in budget
        .candidates(target.defaults.weights)
        .into_iter()
        .enumerate()
    {
        weights.validate()?;
        let defaults = ModelDefaults {
            weights,
            ..target.defaults
        };
        let mut model = build_model(target.architecture, &defaults)?;
        model.train(train, target.schedule, target.seed)?;
        let score = heldout_licking_kl(&model, heldout, target.schedule, target.seed)?;
        trace.push(TuneCandidate {
            index,
            weights,
            score,
        });
    }
    let best = trace
        .iter()
        .fold(None::<&TuneCandidate>, |best, c| match best {
            Some(b) if b.score <= c.score => Some(b),
            _ => Some(c),
        })
        .expect("at least one candidate");
    Ok((best.weights, trace))
}

pub fn trace_csv(trace: &[TuneCandidate]) -> String {
    let mut out = String::from(
        "index,self_licking,partner_licking,self_reward,partner_reward,stimulus,score\n",
    );
    for c in trace {
        let w = &c.weights;
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.index,
            w.self_licking,
            w.partner_licking,
            w.self_reward,
            w.partner_reward,
            w.stimulus,
            c.score
        )
        .expect("string write");
    }
    out
}
