//! Multimodal LDA unit with collapsed Gibbs sampling.
//!
//! A unit shares one document-topic distribution across several modality
//! slots, each with its own vocabulary and Dirichlet prior. Slot histograms
//! are rescaled to a fixed mass ("weight") and expanded into tokens.
//!
//! The per-token conditional is
//!
//! ```text
//! p(z = k) ∝ (n_kj + α) · (n_mwk + β_m) / (n_mk + W_m β_m) · b_j(k)
//! ```
//!
//! where all counts exclude the token being resampled and `b_j` is an
//! optional positive per-document bias supplied by a parent unit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModalityConfig {
    pub name: String,
    pub vocab_size: usize,
    pub beta: f64,
    /// Target histogram mass after rescaling.
    pub weight: u32,
}

impl ModalityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 {
            return Err(invalid(format!("{}: vocab_size must be >= 2", self.name)));
        }
        if self.weight < 1 {
            return Err(invalid(format!("{}: weight must be >= 1", self.name)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("{}: beta must be positive", self.name)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitConfig {
    pub n_topics: usize,
    pub alpha: f64,
    pub modalities: Vec<ModalityConfig>,
}

impl UnitConfig {
    /// Checks the configuration. A single topic is accepted so degenerate
    /// units can be exercised; the composed models always use more.
    pub fn validate(&self) -> Result<()> {
        if self.n_topics == 0 {
            return Err(invalid("n_topics must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(invalid("alpha must be positive"));
        }
        if self.modalities.is_empty() {
            return Err(invalid("a unit needs at least one modality"));
        }
        self.modalities
            .iter()
            .try_for_each(ModalityConfig::validate)
    }
}

/// Rescales a histogram to total mass `weight` using largest-remainder
/// rounding. Ties in the remainder go to the lower index.
pub fn rescale(counts: &[u32], weight: u32) -> Result<Vec<u32>> {
    let total: u64 = counts.iter().map(|&c| u64::from(c)).sum();
    if total == 0 {
        return Err(invalid("cannot rescale a zero-mass histogram"));
    }
    let w = u64::from(weight);
    let mut out = Vec::with_capacity(counts.len());
    let mut remainders = Vec::with_capacity(counts.len());
    let mut assigned = 0u64;
    for (i, &c) in counts.iter().enumerate() {
        let num = u64::from(c) * w;
        let q = num / total;
        out.push(q as u32);
        assigned += q;
        remainders.push((num % total, i));
    }
    // Largest remainder first, lowest index on ties.
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in remainders.iter().take((w - assigned) as usize) {
        out[i] += 1;
    }
    Ok(out)
}

/// Per-slot histograms of one document; `None` marks an unobserved slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitDocument {
    pub slots: Vec<Option<Vec<u32>>>,
}

impl UnitDocument {
    pub fn new(slots: Vec<Option<Vec<u32>>>) -> Self {
        Self { slots }
    }

    pub fn is_empty(&self) -> bool {
        self.slots
            .iter()
            .all(|s| s.as_ref().is_none_or(|h| h.iter().all(|&c| c == 0)))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
struct SlotTokens {
    words: Vec<u32>,
    topics: Vec<u32>,
}

fn expand(hist: &[u32]) -> Vec<u32> {
    hist.iter()
        .enumerate()
        .flat_map(|(w, &c)| std::iter::repeat_n(w as u32, c as usize))
        .collect()
}

/// Topic-word table for one slot, stored topic-major so `topic(k)` is the
/// distribution over words for topic `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicWordTable {
    pub n_topics: usize,
    pub vocab_size: usize,
    data: Vec<f64>,
}

impl TopicWordTable {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_topics = rows.len();
        let vocab_size = rows.first().map_or(0, Vec::len);
        if n_topics == 0 || rows.iter().any(|r| r.len() != vocab_size) {
            return Err(Error::Dimension("ragged topic-word rows".into()));
        }
        Ok(Self {
            n_topics,
            vocab_size,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// `P(word | topic)`.
    pub fn get(&self, word: usize, topic: usize) -> f64 {
        self.data[topic * self.vocab_size + word]
    }

    pub fn topic(&self, topic: usize) -> &[f64] {
        &self.data[topic * self.vocab_size..(topic + 1) * self.vocab_size]
    }

    /// `Σ_k P(w | k) θ_k` for every word.
    pub fn mix(&self, theta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.vocab_size];
        for (k, &t) in theta.iter().enumerate() {
            for (o, &p) in out.iter_mut().zip(self.topic(k)) {
                *o += t * p;
            }
        }
        out
    }
}

/// Trainable unit: configuration, tokens, count tables and sampler RNG.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnitState {
    config: UnitConfig,
    seed: u64,
    docs: Vec<Vec<SlotTokens>>,
    /// Document-topic counts, `j * K + k`.
    n_kj: Vec<u32>,
    /// Per slot word-topic counts, `w * K + k`.
    n_mwk: Vec<Vec<u32>>,
    /// Per slot topic totals.
    n_mk: Vec<Vec<u32>>,
    rng: ChaCha8Rng,
    sweeps: u64,
}

impl PartialEq for UnitState {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.seed == other.seed
            && self.docs == other.docs
            && self.n_kj == other.n_kj
            && self.n_mwk == other.n_mwk
            && self.n_mk == other.n_mk
            && self.rng == other.rng
            && self.sweeps == other.sweeps
    }
}

impl UnitState {
    /// Builds a unit over already-rescaled documents with uniform random
    /// initial assignments.
    pub fn new(config: UnitConfig, docs: &[UnitDocument], seed: u64) -> Result<Self> {
        config.validate()?;
        let k = config.n_topics;
        let mut state = UnitState {
            n_kj: vec![0; docs.len() * k],
            n_mwk: config
                .modalities
                .iter()
                .map(|m| vec![0; m.vocab_size * k])
                .collect(),
            n_mk: vec![vec![0; k]; config.modalities.len()],
            docs: Vec::with_capacity(docs.len()),
            rng: ChaCha8Rng::seed_from_u64(seed),
            config,
            seed,
            sweeps: 0,
        };
        for doc in docs {
            state.check_document(doc)?;
            let mut slots = Vec::with_capacity(doc.slots.len());
            for hist in &doc.slots {
                let words = hist.as_deref().map(expand).unwrap_or_default();
                let topics = (0..words.len())
                    .map(|_| state.rng.random_range(0..k as u32))
                    .collect();
                slots.push(SlotTokens { words, topics });
            }
            state.docs.push(slots);
        }
        for j in 0..state.docs.len() {
            for m in 0..state.docs[j].len() {
                for i in 0..state.docs[j][m].words.len() {
                    let (w, z) = (state.docs[j][m].words[i], state.docs[j][m].topics[i]);
                    state.add(j, m, w as usize, z as usize);
                }
            }
        }
        Ok(state)
    }

    fn check_document(&self, doc: &UnitDocument) -> Result<()> {
        if doc.slots.len() != self.config.modalities.len() {
            return Err(Error::Dimension(format!(
                "document has {} slots, unit has {}",
                doc.slots.len(),
                self.config.modalities.len()
            )));
        }
        for (hist, m) in doc.slots.iter().zip(&self.config.modalities) {
            if let Some(h) = hist {
                if h.len() != m.vocab_size {
                    return Err(Error::Dimension(format!(
                        "{}: histogram length {} != vocab {}",
                        m.name,
                        h.len(),
                        m.vocab_size
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn add(&mut self, j: usize, m: usize, w: usize, z: usize) {
        let k = self.config.n_topics;
        self.n_kj[j * k + z] += 1;
        self.n_mwk[m][w * k + z] += 1;
        self.n_mk[m][z] += 1;
    }

    #[inline]
    fn remove(&mut self, j: usize, m: usize, w: usize, z: usize) {
        let k = self.config.n_topics;
        self.n_kj[j * k + z] -= 1;
        self.n_mwk[m][w * k + z] -= 1;
        self.n_mk[m][z] -= 1;
    }

    pub fn config(&self) -> &UnitConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn n_topics(&self) -> usize {
        self.config.n_topics
    }

    pub fn sweeps_done(&self) -> u64 {
        self.sweeps
    }

    /// Topic assignments of document `j`, slot `m`, in token order.
    pub fn assignments(&self, j: usize, m: usize) -> &[u32] {
        &self.docs[j][m].topics
    }

    pub fn doc_topic_counts(&self, j: usize) -> &[u32] {
        let k = self.config.n_topics;
        &self.n_kj[j * k..(j + 1) * k]
    }

    pub fn word_topic_count(&self, m: usize, w: usize, k: usize) -> u32 {
        self.n_mwk[m][w * self.config.n_topics + k]
    }

    pub fn topic_total(&self, m: usize, k: usize) -> u32 {
        self.n_mk[m][k]
    }

    /// Histogram currently held in slot `m` of document `j`.
    pub fn slot_histogram(&self, j: usize, m: usize) -> Vec<u32> {
        let mut h = vec![0u32; self.config.modalities[m].vocab_size];
        for &w in &self.docs[j][m].words {
            h[w as usize] += 1;
        }
        h
    }

    /// Replaces the tokens of one slot. New tokens are placed one at a time
    /// by sampling from the current conditional.
    pub fn replace_slot(&mut self, j: usize, m: usize, hist: Option<&[u32]>) -> Result<()> {
        if j >= self.docs.len() || m >= self.config.modalities.len() {
            return Err(Error::Dimension(format!("no slot ({j}, {m})")));
        }
        let vocab = self.config.modalities[m].vocab_size;
        if let Some(h) = hist {
            if h.len() != vocab {
                return Err(Error::Dimension(format!(
                    "histogram length {} != vocab {vocab}",
                    h.len()
                )));
            }
        }
        let old = std::mem::take(&mut self.docs[j][m]);
        for (&w, &z) in old.words.iter().zip(&old.topics) {
            self.remove(j, m, w as usize, z as usize);
        }
        let words = hist.map(expand).unwrap_or_default();
        let k = self.config.n_topics;
        let mut weights = vec![0.0; k];
        let mut topics = Vec::with_capacity(words.len());
        for &w in &words {
            self.conditional(j, m, w as usize, None, &mut weights);
            let z = sample_index(&weights, &mut self.rng);
            self.add(j, m, w as usize, z);
            topics.push(z as u32);
        }
        self.docs[j][m] = SlotTokens { words, topics };
        Ok(())
    }

    /// Unnormalized conditional for word `w` of slot `m` in doc `j`, written
    /// as cumulative sums into `out`.
    #[inline]
    fn conditional(&self, j: usize, m: usize, w: usize, bias: Option<&[f64]>, out: &mut [f64]) {
        let k = self.config.n_topics;
        let alpha = self.config.alpha;
        let cfg = &self.config.modalities[m];
        let beta = cfg.beta;
        let wbeta = cfg.vocab_size as f64 * beta;
        let n_kj = &self.n_kj[j * k..(j + 1) * k];
        let n_wk = &self.n_mwk[m][w * k..(w + 1) * k];
        let n_k = &self.n_mk[m];
        let mut acc = 0.0;
        for t in 0..k {
            let mut p = (f64::from(n_kj[t]) + alpha) * (f64::from(n_wk[t]) + beta)
                / (f64::from(n_k[t]) + wbeta);
            if let Some(b) = bias {
                p *= b[t];
            }
            acc += p;
            out[t] = acc;
        }
    }

    /// One pass over every token. `bias[j]` multiplies the conditional of
    /// every token in document `j`.
    pub fn gibbs_sweep(&mut self, bias: Option<&[Vec<f64>]>) -> Result<()> {
        let k = self.config.n_topics;
        let scaled = match bias {
            Some(b) => Some(normalize_biases(b, self.docs.len(), k)?),
            None => None,
        };
        let mut weights = vec![0.0; k];
        for j in 0..self.docs.len() {
            let doc_bias = scaled.as_ref().map(|b| b[j].as_slice());
            for m in 0..self.docs[j].len() {
                for i in 0..self.docs[j][m].words.len() {
                    let w = self.docs[j][m].words[i] as usize;
                    let old = self.docs[j][m].topics[i] as usize;
                    self.remove(j, m, w, old);
                    self.conditional(j, m, w, doc_bias, &mut weights);
                    let z = sample_index(&weights, &mut self.rng);
                    self.add(j, m, w, z);
                    self.docs[j][m].topics[i] = z as u32;
                }
            }
        }
        self.sweeps += 1;
        Ok(())
    }

    /// `θ_kj = (n_kj + α) / (n_j + K α)`.
    pub fn estimate_theta(&self, j: usize) -> Vec<f64> {
        theta_from_counts(self.doc_topic_counts(j), self.config.alpha)
    }

    pub fn estimate_thetas(&self) -> Vec<Vec<f64>> {
        (0..self.docs.len())
            .map(|j| self.estimate_theta(j))
            .collect()
    }

    /// `φ^m_wk = (n_mwk + β_m) / (n_mk + W_m β_m)`.
    pub fn estimate_phi(&self, m: usize) -> TopicWordTable {
        let k = self.config.n_topics;
        let cfg = &self.config.modalities[m];
        let denom_extra = cfg.vocab_size as f64 * cfg.beta;
        let rows = (0..k)
            .map(|t| {
                let denom = f64::from(self.n_mk[m][t]) + denom_extra;
                (0..cfg.vocab_size)
                    .map(|w| (f64::from(self.n_mwk[m][w * k + t]) + cfg.beta) / denom)
                    .collect()
            })
            .collect();
        TopicWordTable::from_rows(rows).expect("rectangular by construction")
    }

    /// Verifies both count-table identities against the token assignments.
    pub fn check_consistency(&self) -> Result<()> {
        let k = self.config.n_topics;
        let mut n_kj = vec![0u32; self.n_kj.len()];
        let mut n_mwk: Vec<Vec<u32>> = self.n_mwk.iter().map(|t| vec![0; t.len()]).collect();
        for (j, doc) in self.docs.iter().enumerate() {
            let mut tokens = 0u64;
            for (m, slot) in doc.iter().enumerate() {
                for (&w, &z) in slot.words.iter().zip(&slot.topics) {
                    if z as usize >= k {
                        return Err(Error::Inconsistent(format!("topic {z} out of range")));
                    }
                    n_kj[j * k + z as usize] += 1;
                    n_mwk[m][w as usize * k + z as usize] += 1;
                    tokens += 1;
                }
            }
            let row: u64 = self.n_kj[j * k..(j + 1) * k]
                .iter()
                .map(|&c| u64::from(c))
                .sum();
            if row != tokens {
                return Err(Error::Inconsistent(format!(
                    "doc {j}: Σ_k n_kj = {row}, tokens = {tokens}"
                )));
            }
        }
        if n_kj != self.n_kj {
            return Err(Error::Inconsistent(
                "n_kj disagrees with assignments".into(),
            ));
        }
        if n_mwk != self.n_mwk {
            return Err(Error::Inconsistent(
                "n_mwk disagrees with assignments".into(),
            ));
        }
        for (m, table) in self.n_mwk.iter().enumerate() {
            for t in 0..k {
                let col: u32 = table.iter().skip(t).step_by(k).sum();
                if col != self.n_mk[m][t] {
                    return Err(Error::Inconsistent(format!(
                        "slot {m}, topic {t}: Σ_w n_mwk = {col}, n_mk = {}",
                        self.n_mk[m][t]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Snapshot of the topic-word tables for inference on unseen documents.
    pub fn frozen(&self) -> FrozenUnit {
        FrozenUnit {
            n_topics: self.config.n_topics,
            alpha: self.config.alpha,
            phi: (0..self.config.modalities.len())
                .map(|m| self.estimate_phi(m))
                .collect(),
        }
    }
}

pub(crate) fn theta_from_counts(counts: &[u32], alpha: f64) -> Vec<f64> {
    let n: f64 = counts.iter().map(|&c| f64::from(c)).sum();
    let denom = n + counts.len() as f64 * alpha;
    counts
        .iter()
        .map(|&c| (f64::from(c) + alpha) / denom)
        .collect()
}

/// Draws an index from cumulative weights.
#[inline]
pub(crate) fn sample_index<R: Rng + ?Sized>(cumulative: &[f64], rng: &mut R) -> usize {
    let total = cumulative[cumulative.len() - 1];
    let u = rng.random::<f64>() * total;
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

/// Validates per-document biases and rescales each so its largest entry is
/// one. The rescaling leaves the sampling distribution unchanged and makes a
/// uniform bias an exact no-op.
fn normalize_biases(bias: &[Vec<f64>], n_docs: usize, k: usize) -> Result<Vec<Vec<f64>>> {
    if bias.len() != n_docs {
        return Err(Error::Dimension(format!(
            "{} bias rows for {n_docs} documents",
            bias.len()
        )));
    }
    bias.iter().map(|row| normalize_bias(row, k)).collect()
}

fn normalize_bias(row: &[f64], k: usize) -> Result<Vec<f64>> {
    if row.len() != k {
        return Err(Error::Dimension(format!(
            "bias of length {} for K = {k}",
            row.len()
        )));
    }
    if row.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
        return Err(invalid("bias entries must be strictly positive"));
    }
    let max = row.iter().copied().fold(f64::MIN, f64::max);
    Ok(row.iter().map(|&b| b / max).collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InferOptions {
    pub iterations: usize,
    /// Sweeps discarded before θ̂ is averaged; defaults to half.
    pub burn_in: Option<usize>,
}

impl InferOptions {
    pub fn new(iterations: usize) -> Self {
        Self {
            iterations,
            burn_in: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Inference {
    /// Posterior mean of θ over the post-burn-in sweeps.
    pub theta: Vec<f64>,
    /// Final assignment per slot, in token order.
    pub assignments: Vec<Vec<u32>>,
}

impl Inference {
    /// Most probable topic (first on ties).
    pub fn argmax(&self) -> usize {
        argmax(&self.theta)
    }
}

pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
            if x > best.1 {
                (i, x)
            } else {
                best
            }
        })
        .0
}

/// Trained unit with its topic-word tables fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrozenUnit {
    pub n_topics: usize,
    pub alpha: f64,
    pub phi: Vec<TopicWordTable>,
}

impl FrozenUnit {
    /// Gibbs sampling over a new document's tokens with the global tables
    /// held fixed. The conditional is `(n_k + α) φ_wk b(k)`.
    pub fn infer_unseen<R: Rng + ?Sized>(
        &self,
        doc: &UnitDocument,
        opts: &InferOptions,
        bias: Option<&[f64]>,
        rng: &mut R,
    ) -> Result<Inference> {
        let k = self.n_topics;
        if doc.slots.len() != self.phi.len() {
            return Err(Error::Dimension(format!(
                "document has {} slots, unit has {}",
                doc.slots.len(),
                self.phi.len()
            )));
        }
        for (h, phi) in doc.slots.iter().zip(&self.phi) {
            if let Some(h) = h {
                if h.len() != phi.vocab_size {
                    return Err(Error::Dimension(format!(
                        "histogram length {} != vocab {}",
                        h.len(),
                        phi.vocab_size
                    )));
                }
            }
        }
        if doc.is_empty() {
            return Err(Error::NothingObserved);
        }
        let bias = bias.map(|b| normalize_bias(b, k)).transpose()?;
        let words: Vec<Vec<u32>> = doc
            .slots
            .iter()
            .map(|h| h.as_deref().map(expand).unwrap_or_default())
            .collect();
        let mut counts = vec![0u32; k];
        let mut topics: Vec<Vec<u32>> = words
            .iter()
            .map(|ws| {
                ws.iter()
                    .map(|_| {
                        let z = rng.random_range(0..k as u32);
                        counts[z as usize] += 1;
                        z
                    })
                    .collect()
            })
            .collect();
        let burn_in = opts
            .burn_in
            .unwrap_or(opts.iterations / 2)
            .min(opts.iterations.saturating_sub(1));
        let mut theta_sum = vec![0.0; k];
        let mut kept = 0usize;
        let mut cumulative = vec![0.0; k];
        for it in 0..opts.iterations {
            for (m, ws) in words.iter().enumerate() {
                let phi = &self.phi[m];
                for (i, &w) in ws.iter().enumerate() {
                    let old = topics[m][i] as usize;
                    counts[old] -= 1;
                    let mut acc = 0.0;
                    for t in 0..k {
                        let mut p = (f64::from(counts[t]) + self.alpha) * phi.get(w as usize, t);
                        if let Some(b) = &bias {
                            p *= b[t];
                        }
                        acc += p;
                        cumulative[t] = acc;
                    }
                    let z = sample_index(&cumulative, rng);
                    counts[z] += 1;
                    topics[m][i] = z as u32;
                }
            }
            if it >= burn_in {
                for (s, v) in theta_sum
                    .iter_mut()
                    .zip(theta_from_counts(&counts, self.alpha))
                {
                    *s += v;
                }
                kept += 1;
            }
        }
        let theta = if kept == 0 {
            theta_from_counts(&counts, self.alpha)
        } else {
            theta_sum.iter().map(|s| s / kept as f64).collect()
        };
        Ok(Inference {
            theta,
            assignments: topics,
        })
    }

    /// `P(w | w_obs) = Σ_z φ^target(w | z) P(z | w_obs)` for an unobserved
    /// target slot.
    pub fn predict_modality<R: Rng + ?Sized>(
        &self,
        doc: &UnitDocument,
        target: usize,
        opts: &InferOptions,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        match doc.slots.get(target) {
            None => return Err(Error::Dimension(format!("no slot {target}"))),
            Some(Some(_)) => return Err(invalid(format!("target slot {target} is observed"))),
            Some(None) => {}
        }
        let inference = self.infer_unseen(doc, opts, None, rng)?;
        Ok(self.phi[target].mix(&inference.theta))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn modality(name: &str, vocab: usize) -> ModalityConfig {
        ModalityConfig {
            name: name.into(),
            vocab_size: vocab,
            beta: 1.0,
            weight: 200,
        }
    }

    fn config(k: usize, vocabs: &[usize]) -> UnitConfig {
        UnitConfig {
            n_topics: k,
            alpha: 1.0,
            modalities: vocabs
                .iter()
                .enumerate()
                .map(|(i, &v)| modality(&format!("m{i}"), v))
                .collect(),
        }
    }

    #[test]
    fn rescale_examples() {
        assert_eq!(rescale(&[30, 10], 200).unwrap(), vec![150, 50]);
        assert_eq!(rescale(&[1, 1, 1], 200).unwrap(), vec![67, 67, 66]);
        assert_eq!(rescale(&[8, 32], 200).unwrap(), vec![40, 160]);
        assert!(rescale(&[0, 0], 200).is_err());
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_from_counts(&[4, 0], 1.0), vec![5.0 / 6.0, 1.0 / 6.0]);
        assert_eq!(theta_from_counts(&[0, 0], 1.0), vec![0.5, 0.5]);
        let t = theta_from_counts(&[10, 10, 10], 1.0);
        for v in t {
            assert_abs_diff_eq!(v, 11.0 / 33.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn phi_examples() {
        // Empty documents leave all counts at zero.
        let state = UnitState::new(config(2, &[3]), &[UnitDocument::new(vec![None])], 1).unwrap();
        let phi = state.estimate_phi(0);
        for k in 0..2 {
            for w in 0..3 {
                assert_abs_diff_eq!(phi.get(w, k), 1.0 / 3.0, epsilon = 1e-15);
            }
        }
        // All nine tokens on word 0 with a single topic.
        let state = UnitState::new(
            config(1, &[3]),
            &[UnitDocument::new(vec![Some(vec![9, 0, 0])])],
            1,
        )
        .unwrap();
        let phi = state.estimate_phi(0);
        assert_abs_diff_eq!(phi.get(0, 0), 10.0 / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi.get(1, 0), 1.0 / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi.get(2, 0), 1.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn single_topic_sweep_is_trivial() {
        let docs = vec![
            UnitDocument::new(vec![Some(vec![3, 1]), Some(vec![2, 0, 5])]),
            UnitDocument::new(vec![Some(vec![0, 4]), None]),
        ];
        let mut state = UnitState::new(config(1, &[2, 3]), &docs, 3).unwrap();
        state.gibbs_sweep(None).unwrap();
        state.check_consistency().unwrap();
        for j in 0..2 {
            for m in 0..2 {
                assert!(state.assignments(j, m).iter().all(|&z| z == 0));
            }
        }
    }

    #[test]
    fn uniform_bias_is_an_exact_no_op() {
        let docs = vec![
            UnitDocument::new(vec![Some(vec![5, 1, 2])]),
            UnitDocument::new(vec![Some(vec![0, 6, 3])]),
        ];
        let mut plain = UnitState::new(config(3, &[3]), &docs, 11).unwrap();
        let mut biased = plain.clone();
        let uniform = vec![vec![1.0 / 3.0; 3]; 2];
        for _ in 0..100 {
            plain.gibbs_sweep(None).unwrap();
            biased.gibbs_sweep(Some(&uniform)).unwrap();
        }
        assert_eq!(plain, biased);
    }

    #[test]
    fn bias_errors() {
        let docs = vec![UnitDocument::new(vec![Some(vec![1, 1])])];
        let mut state = UnitState::new(config(2, &[2]), &docs, 0).unwrap();
        assert!(state.gibbs_sweep(Some(&[vec![0.5, 0.0]])).is_err());
        assert!(state.gibbs_sweep(Some(&[vec![0.5, 0.5, 0.1]])).is_err());
        assert!(state.gibbs_sweep(Some(&[])).is_err());
    }

    #[test]
    fn document_shape_is_checked() {
        let bad = vec![UnitDocument::new(vec![Some(vec![1, 1, 1])])];
        assert!(matches!(
            UnitState::new(config(2, &[2]), &bad, 0),
            Err(Error::Dimension(_))
        ));
        let bad = vec![UnitDocument::new(vec![None, None])];
        assert!(UnitState::new(config(2, &[2]), &bad, 0).is_err());
    }

    #[test]
    fn replace_slot_keeps_tables_consistent() {
        let docs = vec![
            UnitDocument::new(vec![Some(vec![5, 1]), Some(vec![2, 2, 2])]),
            UnitDocument::new(vec![Some(vec![1, 5]), Some(vec![0, 0, 6])]),
        ];
        let mut state = UnitState::new(config(2, &[2, 3]), &docs, 5).unwrap();
        state.replace_slot(1, 1, Some(&[3, 3, 0])).unwrap();
        state.check_consistency().unwrap();
        assert_eq!(state.slot_histogram(1, 1), vec![3, 3, 0]);
        state.replace_slot(0, 0, None).unwrap();
        state.check_consistency().unwrap();
        assert_eq!(state.doc_topic_counts(0).iter().sum::<u32>(), 6);
    }

    #[test]
    fn single_topic_inference_and_prediction() {
        let docs = vec![UnitDocument::new(vec![Some(vec![3, 1]), Some(vec![1, 4])])];
        let mut state = UnitState::new(config(1, &[2, 2]), &docs, 1).unwrap();
        state.gibbs_sweep(None).unwrap();
        let frozen = state.frozen();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let query = UnitDocument::new(vec![Some(vec![2, 2]), None]);
        let inf = frozen
            .infer_unseen(&query, &InferOptions::new(10), None, &mut rng)
            .unwrap();
        assert_eq!(inf.theta, vec![1.0]);
        let pred = frozen
            .predict_modality(&query, 1, &InferOptions::new(10), &mut rng)
            .unwrap();
        assert_eq!(pred, frozen.phi[1].topic(0).to_vec());
    }

    #[test]
    fn inference_errors() {
        let docs = vec![UnitDocument::new(vec![Some(vec![3, 1]), Some(vec![1, 4])])];
        let frozen = UnitState::new(config(2, &[2, 2]), &docs, 1)
            .unwrap()
            .frozen();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let empty = UnitDocument::new(vec![None, None]);
        assert!(matches!(
            frozen.infer_unseen(&empty, &InferOptions::new(5), None, &mut rng),
            Err(Error::NothingObserved)
        ));
        let observed = UnitDocument::new(vec![Some(vec![1, 1]), Some(vec![1, 1])]);
        assert!(frozen
            .predict_modality(&observed, 1, &InferOptions::new(5), &mut rng)
            .is_err());
    }

    #[test]
    fn one_hot_theta_mixes_to_that_column() {
        let table = TopicWordTable::from_rows(vec![vec![0.2, 0.8], vec![0.6, 0.4]]).unwrap();
        assert_eq!(table.mix(&[0.0, 1.0]), vec![0.6, 0.4]);
        assert_eq!(table.mix(&[1.0, 0.0]), vec![0.2, 0.8]);
    }
}
