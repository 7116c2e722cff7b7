//! Subjective-value classification and licking prediction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::composition::{node_seed, ComposedModel, HierarchyInference, TrainingSchedule};
use crate::corpus::{encode_rewards, BlockDocument, ConditionLabel, Modality};
use crate::error::{invalid, Error, Result};
use crate::mlda::argmax;
use crate::models::Z_RS;

use super::clustering::Labeling;
use super::stats::{mean_sem, spearman};

/// Inference schedule and base seed shared by every evaluation call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub schedule: TrainingSchedule,
    pub seed: u64,
}

impl EvalSettings {
    fn doc_seed(&self, i: usize, stream: u64) -> u64 {
        node_seed(self.seed, i, stream)
    }
}

/// Hierarchy posterior for each document, each with its own seed.
pub fn infer_blocks(
    model: &ComposedModel,
    docs: &[BlockDocument],
    settings: &EvalSettings,
) -> Result<Vec<HierarchyInference>> {
    crate::map_indices(docs.len(), |i| {
        model.infer(&docs[i], settings.schedule, settings.doc_seed(i, 2))
    })
}

pub fn ground_truth(docs: &[BlockDocument]) -> Labeling {
    docs.iter().map(|d| d.condition.index()).collect()
}

/// Argmax topic of the self subjective-value node, from precomputed
/// inferences.
pub fn labels_from_inferences(inferences: &[HierarchyInference]) -> Result<Labeling> {
    inferences
        .iter()
        .map(|inf| {
            inf.theta(Z_RS)
                .map(argmax)
                .ok_or_else(|| Error::UnknownNode(Z_RS.to_string()))
        })
        .collect()
}

/// Per-block argmax of the self subjective-value posterior.
pub fn classify_subjective_value(
    model: &ComposedModel,
    docs: &[BlockDocument],
    settings: &EvalSettings,
) -> Result<Labeling> {
    if !model.is_trained() {
        return Err(Error::Untrained);
    }
    labels_from_inferences(&infer_blocks(model, docs, settings)?)
}

/// Fraction of predicted mass on the lick token.
pub fn licking_fraction(distribution: &[f64]) -> f64 {
    let total: f64 = distribution.iter().sum();
    if total > 0.0 {
        distribution[0] / total
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: ConditionLabel,
    pub n: usize,
    pub mean: f64,
    pub sem: f64,
}

/// Predicted self-licking from the image alone, summarized per condition.
/// Conditions absent from `docs` are omitted.
pub fn predict_licking_interpolation(
    model: &ComposedModel,
    docs: &[BlockDocument],
    settings: &EvalSettings,
) -> Result<Vec<ConditionSummary>> {
    if !model.is_trained() {
        return Err(Error::Untrained);
    }
    let fractions = crate::map_indices(docs.len(), |i| {
        let input = docs[i].restricted_to(&[Modality::Stimulus]);
        let dist = model.predict(
            &input,
            Modality::SelfLicking,
            settings.schedule,
            settings.doc_seed(i, 3),
        )?;
        Ok(licking_fraction(&dist))
    })?;
    Ok(ConditionLabel::ALL
        .iter()
        .filter_map(|&c| {
            let values: Vec<f64> = docs
                .iter()
                .zip(&fractions)
                .filter(|(d, _)| d.condition == c)
                .map(|(_, f)| *f)
                .collect();
            mean_sem(&values).map(|(mean, sem)| ConditionSummary {
                condition: c,
                n: values.len(),
                mean,
                sem,
            })
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtrapolationOptions {
    /// Simulated trials per synthetic block.
    pub n_trials: u32,
    /// Synthetic blocks averaged per grid point.
    pub reps: usize,
}

impl Default for ExtrapolationOptions {
    fn default() -> Self {
        Self {
            n_trials: 100,
            reps: 10,
        }
    }
}

/// Mean and sem of predicted self-licking for synthetic blocks whose reward
/// outcomes are drawn at `(self_p, partner_p)`. Repetition `r` always uses
/// the same uniforms and inference seed, so grid points differ only through
/// the probabilities.
pub fn predict_licking_extrapolation(
    model: &ComposedModel,
    self_p: f64,
    partner_p: f64,
    options: &ExtrapolationOptions,
    settings: &EvalSettings,
) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&self_p) || !(0.0..=1.0).contains(&partner_p) {
        return Err(invalid("reward probabilities must lie in [0, 1]"));
    }
    if options.n_trials == 0 || options.reps == 0 {
        return Err(invalid(
            "extrapolation needs at least one trial and one repetition",
        ));
    }
    if !model.is_trained() {
        return Err(Error::Untrained);
    }
    let fractions = crate::map_indices(options.reps, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.doc_seed(r, 4));
        let (mut self_hits, mut partner_hits) = (0u32, 0u32);
        for _ in 0..options.n_trials {
            self_hits += u32::from(rng.random::<f64>() < self_p);
            partner_hits += u32::from(rng.random::<f64>() < partner_p);
        }
        let doc = BlockDocument {
            day_index: 0,
            block_index: 0,
            condition: ConditionLabel::Self25,
            observations: [
                (
                    Modality::SelfReward,
                    encode_rewards(
                        Modality::SelfReward,
                        self_hits,
                        options.n_trials - self_hits,
                    )?,
                ),
                (
                    Modality::PartnerReward,
                    encode_rewards(
                        Modality::PartnerReward,
                        partner_hits,
                        options.n_trials - partner_hits,
                    )?,
                ),
            ]
            .into_iter()
            .collect(),
        };
        let dist = model.predict(
            &doc,
            Modality::SelfLicking,
            settings.schedule,
            settings.doc_seed(r, 5),
        )?;
        Ok(licking_fraction(&dist))
    })?;
    Ok(mean_sem(&fractions).expect("reps >= 1"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepKind {
    /// Self probability varies, partner fixed.
    #[serde(rename = "self")]
    SelfVaried,
    /// Partner probability varies, self fixed.
    #[serde(rename = "partner")]
    PartnerVaried,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::SelfVaried => "self",
            SweepKind::PartnerVaried => "partner",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationPoint {
    pub sweep: SweepKind,
    pub self_p: f64,
    pub partner_p: f64,
    pub mean: f64,
    pub sem: f64,
}

/// Grid points 0, 0.05, ..., 1.
pub fn probability_grid() -> Vec<f64> {
    (0..=20).map(|i| f64::from(i) * 0.05).collect()
}

/// Both sweeps over the 5% grid with the other probability held at the
/// fixed value: self sweep first, then partner sweep.
pub fn extrapolation_sweep(
    model: &ComposedModel,
    options: &ExtrapolationOptions,
    settings: &EvalSettings,
) -> Result<Vec<ExtrapolationPoint>> {
    let fixed = ConditionLabel::FIXED_PROBABILITY;
    let mut out = Vec::with_capacity(42);
    for sweep in [SweepKind::SelfVaried, SweepKind::PartnerVaried] {
        for p in probability_grid() {
            let (self_p, partner_p) = match sweep {
                SweepKind::SelfVaried => (p, fixed),
                SweepKind::PartnerVaried => (fixed, p),
            };
            let (mean, sem) =
                predict_licking_extrapolation(model, self_p, partner_p, options, settings)?;
            out.push(ExtrapolationPoint {
                sweep,
                self_p,
                partner_p,
                mean,
                sem,
            });
        }
    }
    Ok(out)
}

/// Spearman correlation of predicted licking with the varied probability.
pub fn sweep_trend(points: &[ExtrapolationPoint], sweep: SweepKind) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| p.sweep == sweep)
        .map(|p| {
            let varied = match sweep {
                SweepKind::SelfVaried => p.self_p,
                SweepKind::PartnerVaried => p.partner_p,
            };
            (varied, p.mean)
        })
        .unzip();
    spearman(&x, &y)
}

/// Spearman correlation of the per-condition means with reward probability
/// over the three conditions of one block type.
pub fn interpolation_trend(summaries: &[ConditionSummary], self_variable: bool) -> Result<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = summaries
        .iter()
        .filter(|s| s.condition.is_self_variable() == self_variable)
        .map(|s| {
            let (ps, pp) = s.condition.reward_probabilities();
            (if self_variable { ps } else { pp }, s.mean)
        })
        .unzip();
    spearman(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_21_points() {
        let g = probability_grid();
        assert_eq!(g.len(), 21);
        assert_eq!(g[0], 0.0);
        assert!((g[20] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn licking_fraction_of_distribution() {
        assert_eq!(licking_fraction(&[0.25, 0.75]), 0.25);
        assert_eq!(licking_fraction(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn trends_from_summaries() {
        let summaries: Vec<ConditionSummary> = ConditionLabel::ALL
            .iter()
            .map(|&c| {
                let (ps, pp) = c.reward_probabilities();
                ConditionSummary {
                    condition: c,
                    n: 1,
                    mean: 0.5 + ps - pp,
                    sem: 0.0,
                }
            })
            .collect();
        assert!((interpolation_trend(&summaries, true).unwrap() - 1.0).abs() < 1e-12);
        assert!((interpolation_trend(&summaries, false).unwrap() + 1.0).abs() < 1e-12);
    }
}
