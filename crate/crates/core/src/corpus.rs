//! Dataset model for the social reward-comparison paradigm.
//!
//! Each experimental block (40 trials under one reward condition) becomes a
//! [`BlockDocument`] carrying one count histogram per modality: self and
//! partner licking, self and partner reward outcomes, and a codebook
//! histogram of the block's visual cue. A day holds six blocks, one per
//! [`ConditionLabel`].
//!
//! The original recordings are not available, so [`simulate_dataset`]
//! generates days from explicit condition-level licking means, binomial
//! reward draws, and a synthetic codebook encoder for the cues.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const LICKING_VOCAB: usize = 2;
pub const REWARD_VOCAB: usize = 2;
pub const STIMULUS_VOCAB: usize = 512;
pub const BLOCKS_PER_DAY: usize = 6;
pub const DATASET_SCHEMA_VERSION: u32 = 1;

/// Scale applied to z-scored licking frequencies before rounding.
pub const LICKING_SCALE: f64 = 1000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConditionLabel {
    Self25,
    Self50,
    Self75,
    Partner25,
    Partner50,
    Partner75,
}

impl ConditionLabel {
    pub const ALL: [ConditionLabel; 6] = [
        ConditionLabel::Self25,
        ConditionLabel::Self50,
        ConditionLabel::Self75,
        ConditionLabel::Partner25,
        ConditionLabel::Partner50,
        ConditionLabel::Partner75,
    ];

    /// The reward probability held fixed on the non-varying side of a block.
    pub const FIXED_PROBABILITY: f64 = 0.20;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    /// `(self_prob, partner_prob)` for the block type.
    pub fn reward_probabilities(self) -> (f64, f64) {
        let fixed = Self::FIXED_PROBABILITY;
        match self {
            ConditionLabel::Self25 => (0.25, fixed),
            ConditionLabel::Self50 => (0.50, fixed),
            ConditionLabel::Self75 => (0.75, fixed),
            ConditionLabel::Partner25 => (fixed, 0.25),
            ConditionLabel::Partner50 => (fixed, 0.50),
            ConditionLabel::Partner75 => (fixed, 0.75),
        }
    }

    pub fn is_self_variable(self) -> bool {
        self.index() < 3
    }

    pub fn name(self) -> &'static str {
        match self {
            ConditionLabel::Self25 => "Self25",
            ConditionLabel::Self50 => "Self50",
            ConditionLabel::Self75 => "Self75",
            ConditionLabel::Partner25 => "Partner25",
            ConditionLabel::Partner50 => "Partner50",
            ConditionLabel::Partner75 => "Partner75",
        }
    }
}

impl fmt::Display for ConditionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Observation channels of a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "As")]
    SelfLicking,
    #[serde(rename = "Ap")]
    PartnerLicking,
    #[serde(rename = "Rs")]
    SelfReward,
    #[serde(rename = "Rp")]
    PartnerReward,
    #[serde(rename = "S")]
    Stimulus,
}

impl Modality {
    pub const ALL: [Modality; 5] = [
        Modality::SelfLicking,
        Modality::PartnerLicking,
        Modality::SelfReward,
        Modality::PartnerReward,
        Modality::Stimulus,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Modality::SelfLicking => "As",
            Modality::PartnerLicking => "Ap",
            Modality::SelfReward => "Rs",
            Modality::PartnerReward => "Rp",
            Modality::Stimulus => "S",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.code() == code)
    }

    pub fn vocab_size(self) -> usize {
        match self {
            Modality::SelfLicking | Modality::PartnerLicking => LICKING_VOCAB,
            Modality::SelfReward | Modality::PartnerReward => REWARD_VOCAB,
            Modality::Stimulus => STIMULUS_VOCAB,
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "w_{}", self.code())
    }
}

/// Non-negative count histogram over one modality's vocabulary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureVector {
    modality: Modality,
    counts: Vec<u32>,
}

impl FeatureVector {
    pub fn new(modality: Modality, counts: Vec<u32>) -> Result<Self> {
        if counts.len() != modality.vocab_size() {
            return Err(Error::VocabularyMismatch {
                modality,
                got: counts.len(),
                expected: modality.vocab_size(),
            });
        }
        Ok(Self { modality, counts })
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }

    /// Normalized histogram; `None` for an empty vector.
    pub fn proportions(&self) -> Option<Vec<f64>> {
        let total = self.total();
        (total > 0).then(|| {
            self.counts
                .iter()
                .map(|&c| f64::from(c) / total as f64)
                .collect()
        })
    }
}

/// One experimental block treated as a document.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockDocument {
    pub day_index: usize,
    pub block_index: usize,
    pub condition: ConditionLabel,
    pub observations: BTreeMap<Modality, FeatureVector>,
}

impl BlockDocument {
    pub fn observation(&self, modality: Modality) -> Option<&FeatureVector> {
        self.observations.get(&modality)
    }

    /// Copy of the block with only the listed modalities kept.
    pub fn restricted_to(&self, keep: &[Modality]) -> BlockDocument {
        BlockDocument {
            observations: self
                .observations
                .iter()
                .filter(|(m, _)| keep.contains(m))
                .map(|(m, v)| (*m, v.clone()))
                .collect(),
            ..self.clone()
        }
    }

    /// Copy of the block without the listed modalities.
    pub fn without(&self, drop: &[Modality]) -> BlockDocument {
        BlockDocument {
            observations: self
                .observations
                .iter()
                .filter(|(m, _)| !drop.contains(m))
                .map(|(m, v)| (*m, v.clone()))
                .collect(),
            ..self.clone()
        }
    }
}

/// Reward outcome histogram `{rewarded, unrewarded}` for one block.
pub fn encode_rewards(
    modality: Modality,
    n_rewarded: u32,
    n_unrewarded: u32,
) -> Result<FeatureVector> {
    if !matches!(modality, Modality::SelfReward | Modality::PartnerReward) {
        return Err(invalid(format!("{modality} is not a reward modality")));
    }
    if n_rewarded == 0 && n_unrewarded == 0 {
        return Err(invalid("reward counts must not both be zero"));
    }
    FeatureVector::new(modality, vec![n_rewarded, n_unrewarded])
}

/// Encodes the six block-level licking means of one day as
/// `{f_lick, f_no_lick}` histograms.
///
/// Values are z-scored across the day (population standard deviation),
/// scaled by [`LICKING_SCALE`], rounded, and shifted so the day's minimum is
/// zero. `f_no_lick` is the distance to the day's maximum, so every block of
/// the day carries the same total mass.
pub fn encode_licking_day(modality: Modality, block_means: &[f64]) -> Result<Vec<FeatureVector>> {
    if !matches!(modality, Modality::SelfLicking | Modality::PartnerLicking) {
        return Err(invalid(format!("{modality} is not a licking modality")));
    }
    if block_means.len() != BLOCKS_PER_DAY {
        return Err(invalid(format!(
            "expected {BLOCKS_PER_DAY} block means, got {}",
            block_means.len()
        )));
    }
    if block_means.iter().any(|v| !v.is_finite()) {
        return Err(invalid("licking means must be finite"));
    }
    let n = block_means.len() as f64;
    let mean = block_means.iter().sum::<f64>() / n;
    let var = block_means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd <= f64::EPSILON * mean.abs().max(1.0) {
        return Err(Error::DegenerateDay);
    }
    let scaled: Vec<i64> = block_means
        .iter()
        .map(|v| ((v - mean) / sd * LICKING_SCALE).round() as i64)
        .collect();
    let min = *scaled.iter().min().expect("six values");
    let max = *scaled.iter().max().expect("six values");
    scaled
        .iter()
        .map(|&s| {
            let lick = (s - min) as u32;
            let no_lick = (max - s) as u32;
            FeatureVector::new(modality, vec![lick, no_lick])
        })
        .collect()
}

/// Default cue templates: eight codebook entries per condition, disjoint
/// across conditions.
pub fn default_stimulus_templates() -> Vec<Vec<(u16, u32)>> {
    const COUNTS: [u32; 8] = [12, 10, 8, 6, 5, 4, 3, 2];
    (0..BLOCKS_PER_DAY as u16)
        .map(|c| {
            COUNTS
                .iter()
                .enumerate()
                .map(|(i, &n)| (c * 64 + 3 * i as u16, n))
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulatorParams {
    pub n_days: usize,
    pub trials_per_block: u32,
    /// Self-licking block means, indexed by [`ConditionLabel::index`].
    pub licking_mean_per_condition: [f64; 6],
    /// Partner-licking block means; follows the partner's own reward
    /// probability.
    pub partner_licking_mean_per_condition: [f64; 6],
    pub licking_noise_sd: f64,
    /// Day-level shift shared by all blocks of a day (removed by z-scoring).
    pub day_baseline_sd: f64,
    /// Sparse `(codebook index, count)` template per condition.
    pub stimulus_base_histograms: Vec<Vec<(u16, u32)>>,
    pub stimulus_noise_tokens: u32,
    pub seed: u64,
}

impl Default for SimulatorParams {
    fn default() -> Self {
        Self {
            n_days: 292,
            trials_per_block: 40,
            licking_mean_per_condition: [0.45, 0.60, 0.75, 0.55, 0.45, 0.35],
            partner_licking_mean_per_condition: [0.40, 0.40, 0.40, 0.45, 0.60, 0.75],
            licking_noise_sd: 0.05,
            day_baseline_sd: 0.10,
            stimulus_base_histograms: default_stimulus_templates(),
            stimulus_noise_tokens: 150,
            seed: 2024,
        }
    }
}

impl SimulatorParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_days == 0 {
            return Err(invalid("n_days must be positive"));
        }
        if self.trials_per_block == 0 {
            return Err(invalid("trials_per_block must be positive"));
        }
        let m = &self.licking_mean_per_condition;
        if !(m[0] < m[1] && m[1] < m[2]) {
            return Err(invalid(
                "self-licking means must increase over Self25/Self50/Self75",
            ));
        }
        if !(m[3] > m[4] && m[4] > m[5]) {
            return Err(invalid(
                "self-licking means must decrease over Partner25/Partner50/Partner75",
            ));
        }
        let all_means = m.iter().chain(&self.partner_licking_mean_per_condition);
        if all_means.into_iter().any(|v| !v.is_finite()) {
            return Err(invalid("licking means must be finite"));
        }
        if !(self.licking_noise_sd >= 0.0 && self.day_baseline_sd >= 0.0) {
            return Err(invalid("noise standard deviations must be non-negative"));
        }
        if self.stimulus_base_histograms.len() != BLOCKS_PER_DAY {
            return Err(invalid("exactly six stimulus templates are required"));
        }
        let mut owner = vec![None; STIMULUS_VOCAB];
        for (c, template) in self.stimulus_base_histograms.iter().enumerate() {
            if template.iter().all(|&(_, n)| n == 0) {
                return Err(invalid(format!("stimulus template {c} is empty")));
            }
            for &(code, _) in template {
                let slot = owner
                    .get_mut(code as usize)
                    .ok_or_else(|| invalid(format!("codebook index {code} out of range")))?;
                match *slot {
                    Some(other) if other != c => {
                        return Err(invalid(format!(
                            "stimulus templates {other} and {c} share codebook index {code}"
                        )))
                    }
                    _ => *slot = Some(c),
                }
            }
        }
        Ok(())
    }
}

/// Codebook histogram for a block's cue: the condition's template plus
/// uniformly drawn noise tokens.
pub fn encode_stimulus<R: Rng + ?Sized>(
    condition: ConditionLabel,
    params: &SimulatorParams,
    rng: &mut R,
) -> Result<FeatureVector> {
    let template = params
        .stimulus_base_histograms
        .get(condition.index())
        .ok_or_else(|| invalid("missing stimulus template"))?;
    let mut counts = vec![0u32; STIMULUS_VOCAB];
    for &(code, n) in template {
        *counts
            .get_mut(code as usize)
            .ok_or_else(|| invalid(format!("codebook index {code} out of range")))? += n;
    }
    for _ in 0..params.stimulus_noise_tokens {
        counts[rng.random_range(0..STIMULUS_VOCAB)] += 1;
    }
    FeatureVector::new(Modality::Stimulus, counts)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train_days: Vec<usize>,
    pub test_days: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    /// Groups of six blocks; each group is one recording day.
    pub days: Vec<Vec<BlockDocument>>,
    pub split: Option<Split>,
}

impl Dataset {
    pub fn n_days(&self) -> usize {
        self.days.len()
    }

    pub fn blocks(&self) -> impl Iterator<Item = &BlockDocument> {
        self.days.iter().flatten()
    }

    pub fn n_blocks(&self) -> usize {
        self.days.iter().map(Vec::len).sum()
    }

    fn subset(&self, day_ids: &[usize]) -> Dataset {
        let keep: std::collections::BTreeSet<usize> = day_ids.iter().copied().collect();
        Dataset {
            days: self
                .days
                .iter()
                .filter(|d| d.first().is_some_and(|b| keep.contains(&b.day_index)))
                .cloned()
                .collect(),
            split: None,
        }
    }

    /// Training and test subsets according to the stored split.
    pub fn split_parts(&self) -> Result<(Dataset, Dataset)> {
        let split = self
            .split
            .as_ref()
            .ok_or_else(|| invalid("dataset carries no train/test split"))?;
        Ok((
            self.subset(&split.train_days),
            self.subset(&split.test_days),
        ))
    }

    /// Mean reward counts per condition as `(self, partner)`.
    pub fn reward_means(&self) -> [(f64, f64); 6] {
        let mut sums = [(0.0, 0.0, 0usize); 6];
        for block in self.blocks() {
            let entry = &mut sums[block.condition.index()];
            if let Some(v) = block.observation(Modality::SelfReward) {
                entry.0 += f64::from(v.counts()[0]);
            }
            if let Some(v) = block.observation(Modality::PartnerReward) {
                entry.1 += f64::from(v.counts()[0]);
            }
            entry.2 += 1;
        }
        sums.map(|(s, p, n)| {
            let n = n.max(1) as f64;
            (s / n, p / n)
        })
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        let header = DatasetHeader {
            schema_version: DATASET_SCHEMA_VERSION,
            kind: DATASET_KIND.to_string(),
            n_days: self.days.len(),
            split: self.split.clone(),
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for block in self.blocks() {
            serde_json::to_writer(&mut out, &BlockRecord::from(block))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Dataset> {
        let mut lines = input.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| invalid("empty dataset file"))??;
        let header: DatasetHeader = serde_json::from_str(&header_line)?;
        if header.schema_version != DATASET_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: header.schema_version,
                expected: DATASET_SCHEMA_VERSION,
            });
        }
        if header.kind != DATASET_KIND {
            return Err(invalid(format!(
                "not a dataset file (kind {:?})",
                header.kind
            )));
        }
        let mut days: Vec<Vec<BlockDocument>> = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: BlockRecord = serde_json::from_str(&line)?;
            let block = record.into_block()?;
            match days.last_mut() {
                Some(day) if day[0].day_index == block.day_index => day.push(block),
                _ => days.push(vec![block]),
            }
        }
        if days.len() != header.n_days {
            return Err(invalid(format!(
                "header announces {} days, file holds {}",
                header.n_days,
                days.len()
            )));
        }
        Ok(Dataset {
            days,
            split: header.split,
        })
    }
}

const DATASET_KIND: &str = "mmlda-dataset";

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    schema_version: u32,
    kind: String,
    n_days: usize,
    split: Option<Split>,
}

#[derive(Serialize, Deserialize)]
struct BlockRecord {
    day: usize,
    block: usize,
    condition: ConditionLabel,
    observations: BTreeMap<Modality, Vec<u32>>,
}

impl From<&BlockDocument> for BlockRecord {
    fn from(b: &BlockDocument) -> Self {
        BlockRecord {
            day: b.day_index,
            block: b.block_index,
            condition: b.condition,
            observations: b
                .observations
                .iter()
                .map(|(m, v)| (*m, v.counts().to_vec()))
                .collect(),
        }
    }
}

impl BlockRecord {
    fn into_block(self) -> Result<BlockDocument> {
        let observations = self
            .observations
            .into_iter()
            .map(|(m, counts)| Ok((m, FeatureVector::new(m, counts)?)))
            .collect::<Result<_>>()?;
        Ok(BlockDocument {
            day_index: self.day,
            block_index: self.block,
            condition: self.condition,
            observations,
        })
    }
}

fn day_rng(seed: u64, day: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(day as u64);
    rng
}

/// Simulates one day; each day draws from its own RNG stream.
pub fn simulate_day(params: &SimulatorParams, day: usize) -> Result<Vec<BlockDocument>> {
    let mut rng = day_rng(params.seed, day);
    let mut order = ConditionLabel::ALL;
    order.shuffle(&mut rng);

    let noise = Normal::new(0.0, params.licking_noise_sd).map_err(|e| invalid(e.to_string()))?;
    let baseline = Normal::new(0.0, params.day_baseline_sd).map_err(|e| invalid(e.to_string()))?;
    let self_offset = baseline.sample(&mut rng);
    let partner_offset = baseline.sample(&mut rng);

    let mut self_lick = [0.0; BLOCKS_PER_DAY];
    let mut partner_lick = [0.0; BLOCKS_PER_DAY];
    let mut rewards = Vec::with_capacity(BLOCKS_PER_DAY);
    let mut stimuli = Vec::with_capacity(BLOCKS_PER_DAY);
    let n = u64::from(params.trials_per_block);
    for (b, &cond) in order.iter().enumerate() {
        let (ps, pp) = cond.reward_probabilities();
        let rs = Binomial::new(n, ps)
            .map_err(|e| invalid(e.to_string()))?
            .sample(&mut rng) as u32;
        let rp = Binomial::new(n, pp)
            .map_err(|e| invalid(e.to_string()))?
            .sample(&mut rng) as u32;
        rewards.push((rs, rp));
        self_lick[b] =
            params.licking_mean_per_condition[cond.index()] + self_offset + noise.sample(&mut rng);
        partner_lick[b] = params.partner_licking_mean_per_condition[cond.index()]
            + partner_offset
            + noise.sample(&mut rng);
        stimuli.push(encode_stimulus(cond, params, &mut rng)?);
    }

    let self_vectors = encode_licking_day(Modality::SelfLicking, &self_lick)?;
    let partner_vectors = encode_licking_day(Modality::PartnerLicking, &partner_lick)?;
    let trials = params.trials_per_block;
    order
        .iter()
        .enumerate()
        .zip(self_vectors.into_iter().zip(partner_vectors))
        .zip(rewards.into_iter().zip(stimuli))
        .map(|(((b, &cond), (lick_s, lick_p)), ((rs, rp), stim))| {
            let mut observations = BTreeMap::new();
            observations.insert(Modality::SelfLicking, lick_s);
            observations.insert(Modality::PartnerLicking, lick_p);
            observations.insert(
                Modality::SelfReward,
                encode_rewards(Modality::SelfReward, rs, trials - rs)?,
            );
            observations.insert(
                Modality::PartnerReward,
                encode_rewards(Modality::PartnerReward, rp, trials - rp)?,
            );
            observations.insert(Modality::Stimulus, stim);
            Ok(BlockDocument {
                day_index: day,
                block_index: b,
                condition: cond,
                observations,
            })
        })
        .collect()
}

pub fn simulate_dataset(params: &SimulatorParams) -> Result<Dataset> {
    params.validate()?;
    #[cfg(feature = "parallel")]
    let days = {
        use rayon::prelude::*;
        (0..params.n_days)
            .into_par_iter()
            .map(|d| simulate_day(params, d))
            .collect::<Result<Vec<_>>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let days = (0..params.n_days)
        .map(|d| simulate_day(params, d))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { days, split: None })
}

/// Random day-level partition; the training side gets `floor(fraction *
/// n_days)` days and the test side the remainder (292 days at 0.8 gives
/// 233 / 59).
pub fn split_days(n_days: usize, train_fraction: f64, seed: u64) -> Result<Split> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(invalid("train_fraction must lie strictly between 0 and 1"));
    }
    let n_train = (train_fraction * n_days as f64 + 1e-9).floor() as usize;
    if n_train == 0 || n_train >= n_days {
        return Err(invalid(format!(
            "fraction {train_fraction} of {n_days} days leaves one side empty"
        )));
    }
    let mut ids: Vec<usize> = (0..n_days).collect();
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train_days = ids[..n_train].to_vec();
    let mut test_days = ids[n_train..].to_vec();
    train_days.sort_unstable();
    test_days.sort_unstable();
    Ok(Split {
        train_days,
        test_days,
    })
}

/// Splits by whole days and returns `(train, test)`.
pub fn split_dataset(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let ids: Vec<usize> = dataset
        .days
        .iter()
        .filter_map(|d| d.first().map(|b| b.day_index))
        .collect();
    let split = split_days(ids.len(), train_fraction, seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| ids[i]).collect::<Vec<_>>();
    let with_ids = Split {
        train_days: pick(&split.train_days),
        test_days: pick(&split.test_days),
    };
    Ok((
        dataset.subset(&with_ids.train_days),
        dataset.subset(&with_ids.test_days),
    ))
}

impl Dataset {
    /// Records a random day-level split in the dataset's metadata.
    pub fn assign_split(&mut self, train_fraction: f64, seed: u64) -> Result<()> {
        let ids: Vec<usize> = self
            .days
            .iter()
            .filter_map(|d| d.first().map(|b| b.day_index))
            .collect();
        let split = split_days(ids.len(), train_fraction, seed)?;
        self.split = Some(Split {
            train_days: split.train_days.iter().map(|&i| ids[i]).collect(),
            test_days: split.test_days.iter().map(|&i| ids[i]).collect(),
        });
        Ok(())
    }
}
