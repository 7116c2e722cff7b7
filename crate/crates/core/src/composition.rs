//! Hierarchical composition of MLDA units.
//!
//! Nodes form a tree. A child's sampled topic assignments are rescaled into
//! a K-bin histogram and observed by its parent as a pseudo-modality (the
//! forward message). The parent returns `Σ_zp P(z_child | z_p) P(z_p | ·)`
//! for each document (the backward message), which multiplies the child's
//! Gibbs conditional on the next pass.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{BlockDocument, Modality};
use crate::error::{invalid, Error, Result};
use crate::mlda::{
    rescale, sample_index, FrozenUnit, InferOptions, ModalityConfig, UnitConfig, UnitDocument,
    UnitState,
};
use crate::models::ArchitectureKind;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservedSlot {
    pub modality: Modality,
    pub beta: f64,
    pub weight: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChildSlot {
    pub node: NodeId,
    pub beta: f64,
    /// Pseudo-token mass of the child's forward message.
    pub weight: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub n_topics: usize,
    pub alpha: f64,
    pub observed: Vec<ObservedSlot>,
    pub children: Vec<ChildSlot>,
}

impl NodeSpec {
    pub fn n_slots(&self) -> usize {
        self.observed.len() + self.children.len()
    }

    pub fn slot_of_child(&self, child: &NodeId) -> Option<usize> {
        self.children
            .iter()
            .position(|c| &c.node == child)
            .map(|p| self.observed.len() + p)
    }

    pub fn slot_of_modality(&self, modality: Modality) -> Option<usize> {
        self.observed.iter().position(|o| o.modality == modality)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub nodes: Vec<NodeSpec>,
}

impl GraphSpec {
    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id.as_str() == id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id.as_str() == id)
    }

    /// Free topic-word parameters: `K · (W - 1)` per slot.
    pub fn free_parameter_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| {
                let observed: usize = n.observed.iter().map(|o| o.modality.vocab_size() - 1).sum();
                let children: usize = n
                    .children
                    .iter()
                    .filter_map(|c| self.node(c.node.as_str()))
                    .map(|c| c.n_topics - 1)
                    .sum();
                n.n_topics * (observed + children)
            })
            .sum()
    }

    /// Every modality observed somewhere in the graph.
    pub fn modalities(&self) -> BTreeSet<Modality> {
        self.nodes
            .iter()
            .flat_map(|n| n.observed.iter().map(|o| o.modality))
            .collect()
    }

    /// Node that observes `modality` directly, with its slot index.
    pub fn owner_of(&self, modality: Modality) -> Option<(usize, usize)> {
        self.nodes
            .iter()
            .enumerate()
            .find_map(|(i, n)| n.slot_of_modality(modality).map(|s| (i, s)))
    }

    fn unit_config(&self, i: usize) -> UnitConfig {
        let node = &self.nodes[i];
        let mut modalities: Vec<ModalityConfig> = node
            .observed
            .iter()
            .map(|o| ModalityConfig {
                name: o.modality.to_string(),
                vocab_size: o.modality.vocab_size(),
                beta: o.beta,
                weight: o.weight,
            })
            .collect();
        modalities.extend(node.children.iter().map(|c| ModalityConfig {
            name: c.node.to_string(),
            vocab_size: self.node(c.node.as_str()).map_or(0, |n| n.n_topics),
            beta: c.beta,
            weight: c.weight,
        }));
        UnitConfig {
            n_topics: node.n_topics,
            alpha: node.alpha,
            modalities,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct Topology {
    /// Children before parents.
    order: Vec<usize>,
    /// `(parent index, slot index within the parent)`.
    parent: Vec<Option<(usize, usize)>>,
    /// Height above the leaves; nodes sharing a height never depend on each
    /// other.
    height: Vec<usize>,
    top: usize,
}

fn analyze(spec: &GraphSpec) -> Result<Topology> {
    let n = spec.nodes.len();
    if n == 0 {
        return Err(Error::Graph("graph has no nodes".into()));
    }
    let mut index = BTreeMap::new();
    for (i, node) in spec.nodes.iter().enumerate() {
        if index.insert(node.id.clone(), i).is_some() {
            return Err(Error::Graph(format!("duplicate node id {}", node.id)));
        }
    }
    let mut seen_modalities = BTreeMap::new();
    for node in &spec.nodes {
        if node.n_slots() == 0 {
            return Err(Error::Graph(format!("node {} has no inputs", node.id)));
        }
        for o in &node.observed {
            if let Some(other) = seen_modalities.insert(o.modality, node.id.clone()) {
                return Err(Error::Graph(format!(
                    "modality {} attached to both {other} and {}",
                    o.modality, node.id
                )));
            }
        }
    }
    let mut parent = vec![None; n];
    for (i, node) in spec.nodes.iter().enumerate() {
        for (c, child) in node.children.iter().enumerate() {
            let ci = *index.get(&child.node).ok_or_else(|| {
                Error::Graph(format!(
                    "node {} references unknown child {}",
                    node.id, child.node
                ))
            })?;
            if ci == i {
                return Err(Error::Graph(format!("cycle: {} is its own child", node.id)));
            }
            if let Some((p, _)) = parent[ci] {
                let p: usize = p;
                return Err(Error::Graph(format!(
                    "node {} has two parents ({} and {})",
                    child.node, spec.nodes[p].id, node.id
                )));
            }
            parent[ci] = Some((i, node.observed.len() + c));
        }
    }
    // Kahn's algorithm from the leaves upward.
    let mut pending: Vec<usize> = spec.nodes.iter().map(|n| n.children.len()).collect();
    let mut height = vec![0usize; n];
    let mut ready: Vec<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop() {
        order.push(i);
        if let Some((p, _)) = parent[i] {
            height[p] = height[p].max(height[i] + 1);
            pending[p] -= 1;
            if pending[p] == 0 {
                ready.push(p);
            }
        }
    }
    if order.len() != n {
        let stuck: Vec<String> = (0..n)
            .filter(|i| !order.contains(i))
            .map(|i| spec.nodes[i].id.to_string())
            .collect();
        return Err(Error::Graph(format!("cycle among {}", stuck.join(", "))));
    }
    let tops: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
    if tops.len() != 1 {
        let names: Vec<String> = tops.iter().map(|&i| spec.nodes[i].id.to_string()).collect();
        return Err(Error::Graph(format!(
            "graph needs exactly one top node, found {}",
            names.join(", ")
        )));
    }
    // Stable bottom-up order: by height, then declaration order.
    order.sort_by_key(|&i| (height[i], i));
    Ok(Topology {
        order,
        parent,
        height,
        top: tops[0],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingSchedule {
    pub inner_iterations: usize,
    pub global_passes: usize,
}

impl Default for TrainingSchedule {
    fn default() -> Self {
        Self {
            inner_iterations: 100,
            global_passes: 3,
        }
    }
}

impl TrainingSchedule {
    pub fn new(inner_iterations: usize, global_passes: usize) -> Result<Self> {
        let s = Self {
            inner_iterations,
            global_passes,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.inner_iterations == 0 || self.global_passes == 0 {
            return Err(invalid("schedule iterations and passes must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForwardMessage {
    pub source: NodeId,
    /// Per document, a histogram over the source's topics.
    pub histograms: Vec<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackwardMessage {
    pub target: NodeId,
    /// Per document, a strictly positive simplex over the target's topics.
    pub probabilities: Vec<Vec<f64>>,
}

/// Draws `weight` topics from `theta` and returns their histogram.
pub fn sample_assignment_histogram<R: Rng + ?Sized>(
    theta: &[f64],
    weight: u32,
    rng: &mut R,
) -> Vec<u32> {
    let mut cumulative = Vec::with_capacity(theta.len());
    let mut acc = 0.0;
    for &t in theta {
        acc += t;
        cumulative.push(acc);
    }
    let mut hist = vec![0u32; theta.len()];
    for _ in 0..weight {
        hist[sample_index(&cumulative, rng)] += 1;
    }
    hist
}

/// Forward message of a trained unit: for each document, `weight` topics
/// sampled from its current θ.
pub fn forward_message<R: Rng + ?Sized>(
    source: &NodeId,
    unit: &UnitState,
    weight: u32,
    rng: &mut R,
) -> Result<ForwardMessage> {
    if unit.sweeps_done() == 0 {
        return Err(Error::Untrained);
    }
    Ok(ForwardMessage {
        source: source.clone(),
        histograms: (0..unit.n_docs())
            .map(|j| sample_assignment_histogram(&unit.estimate_theta(j), weight, rng))
            .collect(),
    })
}

/// `Σ_zp φ_p^slot(z_child | z_p) θ_p(z_p)` per document, where `slot` is
/// the parent's pseudo-modality for the child.
pub fn backward_message(
    target: &NodeId,
    parent: &UnitState,
    slot: usize,
) -> Result<BackwardMessage> {
    if slot >= parent.config().modalities.len() {
        return Err(Error::Dimension(format!("parent has no slot {slot}")));
    }
    let phi = parent.estimate_phi(slot);
    let probabilities = (0..parent.n_docs())
        .map(|j| normalized(phi.mix(&parent.estimate_theta(j))))
        .collect();
    Ok(BackwardMessage {
        target: target.clone(),
        probabilities,
    })
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Seed for node `i`'s sampler (`stream` 0) or message sampler (`stream` 1).
pub fn node_seed(model_seed: u64, node: usize, stream: u64) -> u64 {
    // splitmix64 finalizer over the combined key
    let mut z = model_seed
        .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(2 * node as u64 + stream + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackwardMode {
    /// Parents' backward messages bias the children.
    #[default]
    Propagate,
    /// Every backward message is replaced by the uniform distribution.
    Uniform,
}

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    pub backward: BackwardMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TrainEvent {
    Swept {
        pass: usize,
        node: NodeId,
        sweeps: usize,
        biased: bool,
    },
    Forward {
        pass: usize,
        from: NodeId,
        to: NodeId,
    },
    Backward {
        pass: usize,
        from: NodeId,
        to: NodeId,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub events: Vec<TrainEvent>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocMeta {
    pub day_index: usize,
    pub block_index: usize,
    pub condition: crate::corpus::ConditionLabel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct NodeRuntime {
    unit: Option<UnitState>,
    message_rng: ChaCha8Rng,
    forward: Option<ForwardMessage>,
    backward: Option<BackwardMessage>,
}

/// A validated graph of units together with their training state.
#[derive(Clone, Debug)]
pub struct ComposedModel {
    spec: GraphSpec,
    architecture: Option<ArchitectureKind>,
    topology: Topology,
    seed: u64,
    schedule: Option<TrainingSchedule>,
    nodes: Vec<NodeRuntime>,
    train_docs: Vec<DocMeta>,
    frozen: Vec<FrozenUnit>,
}

impl PartialEq for ComposedModel {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
            && self.architecture == other.architecture
            && self.seed == other.seed
            && self.schedule == other.schedule
            && self.nodes == other.nodes
            && self.train_docs == other.train_docs
    }
}

impl ComposedModel {
    /// Validates the graph: unique ids, known children, a single parent per
    /// node, no cycles, one top node, each modality attached once.
    pub fn build(spec: GraphSpec) -> Result<Self> {
        let topology = analyze(&spec)?;
        for i in 0..spec.nodes.len() {
            spec.unit_config(i)
                .validate()
                .map_err(|e| Error::Graph(format!("node {}: {e}", spec.nodes[i].id)))?;
        }
        let nodes = (0..spec.nodes.len())
            .map(|i| NodeRuntime {
                unit: None,
                message_rng: ChaCha8Rng::seed_from_u64(node_seed(0, i, 1)),
                forward: None,
                backward: None,
            })
            .collect();
        Ok(Self {
            spec,
            architecture: None,
            topology,
            seed: 0,
            schedule: None,
            nodes,
            train_docs: Vec::new(),
            frozen: Vec::new(),
        })
    }

    pub fn with_architecture(mut self, kind: ArchitectureKind) -> Self {
        self.architecture = Some(kind);
        self
    }

    pub fn architecture(&self) -> Option<ArchitectureKind> {
        self.architecture
    }

    pub fn spec(&self) -> &GraphSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn schedule(&self) -> Option<TrainingSchedule> {
        self.schedule
    }

    pub fn is_trained(&self) -> bool {
        !self.frozen.is_empty()
    }

    /// Node ids in bottom-up execution order.
    pub fn execution_order(&self) -> Vec<NodeId> {
        self.topology
            .order
            .iter()
            .map(|&i| self.spec.nodes[i].id.clone())
            .collect()
    }

    pub fn top(&self) -> &NodeId {
        &self.spec.nodes[self.topology.top].id
    }

    pub fn parent_of(&self, id: &str) -> Option<&NodeId> {
        let i = self.spec.index_of(id)?;
        self.topology.parent[i].map(|(p, _)| &self.spec.nodes[p].id)
    }

    pub fn training_documents(&self) -> &[DocMeta] {
        &self.train_docs
    }

    fn index(&self, id: &str) -> Result<usize> {
        self.spec
            .index_of(id)
            .ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn unit(&self, id: &str) -> Result<&UnitState> {
        let i = self.index(id)?;
        self.nodes[i].unit.as_ref().ok_or(Error::Untrained)
    }

    pub fn frozen_unit(&self, id: &str) -> Result<&FrozenUnit> {
        let i = self.index(id)?;
        self.frozen.get(i).ok_or(Error::Untrained)
    }

    /// Latest forward message emitted by `id` during training.
    pub fn last_forward(&self, id: &str) -> Result<&ForwardMessage> {
        let i = self.index(id)?;
        self.nodes[i].forward.as_ref().ok_or(Error::Untrained)
    }

    /// Latest backward message received by `id` during training.
    pub fn last_backward(&self, id: &str) -> Result<Option<&BackwardMessage>> {
        let i = self.index(id)?;
        Ok(self.nodes[i].backward.as_ref())
    }

    /// Recomputes the backward message from the parent of `child` using the
    /// current parent state.
    pub fn backward_message(&self, child: &str) -> Result<BackwardMessage> {
        let ci = self.index(child)?;
        let (p, slot) = self.topology.parent[ci]
            .ok_or_else(|| Error::Graph(format!("node {child} has no parent")))?;
        let parent = self.nodes[p].unit.as_ref().ok_or(Error::Untrained)?;
        backward_message(&self.spec.nodes[ci].id, parent, slot)
    }

    /// Training θ of every document for node `id`.
    pub fn training_thetas(&self, id: &str) -> Result<Vec<Vec<f64>>> {
        Ok(self.unit(id)?.estimate_thetas())
    }

    fn observed_histograms(
        &self,
        i: usize,
        doc: &BlockDocument,
        require: bool,
    ) -> Result<Vec<Option<Vec<u32>>>> {
        self.spec.nodes[i]
            .observed
            .iter()
            .map(|o| match doc.observation(o.modality) {
                Some(v) if v.total() > 0 => Ok(Some(rescale(v.counts(), o.weight)?)),
                _ if require => Err(Error::MissingModality(o.modality.to_string())),
                _ => Ok(None),
            })
            .collect()
    }

    pub fn train(
        &mut self,
        docs: &[BlockDocument],
        schedule: TrainingSchedule,
        seed: u64,
    ) -> Result<TrainLog> {
        self.train_with(docs, schedule, seed, &TrainOptions::default())
    }

    /// Runs `global_passes` rounds. Each round sweeps every node
    /// `inner_iterations` times bottom-up, sending a fresh forward message
    /// after each node, then refreshes all backward messages top-down.
    pub fn train_with(
        &mut self,
        docs: &[BlockDocument],
        schedule: TrainingSchedule,
        seed: u64,
        opts: &TrainOptions,
    ) -> Result<TrainLog> {
        schedule.validate()?;
        if docs.is_empty() {
            return Err(invalid("no training documents"));
        }
        let n_nodes = self.spec.nodes.len();
        let observed: Vec<Vec<Vec<Option<Vec<u32>>>>> = (0..n_nodes)
            .map(|i| {
                docs.iter()
                    .map(|d| self.observed_histograms(i, d, true))
                    .collect()
            })
            .collect::<Result<_>>()?;

        self.seed = seed;
        self.schedule = Some(schedule);
        self.frozen.clear();
        self.train_docs = docs
            .iter()
            .map(|d| DocMeta {
                day_index: d.day_index,
                block_index: d.block_index,
                condition: d.condition,
            })
            .collect();
        for (i, node) in self.nodes.iter_mut().enumerate() {
            node.unit = None;
            node.forward = None;
            node.backward = None;
            node.message_rng = ChaCha8Rng::seed_from_u64(node_seed(seed, i, 1));
        }

        let mut log = TrainLog::default();
        let max_height = *self.topology.height.iter().max().unwrap_or(&0);
        for pass in 0..schedule.global_passes {
            for level in 0..=max_height {
                let members: Vec<usize> = self
                    .topology
                    .order
                    .iter()
                    .copied()
                    .filter(|&i| self.topology.height[i] == level)
                    .collect();
                let inputs: Vec<(usize, Vec<UnitDocument>)> = members
                    .iter()
                    .map(|&i| Ok((i, self.unit_documents(i, &observed[i])?)))
                    .collect::<Result<_>>()?;
                let results = self.run_level(inputs, schedule, seed, opts)?;
                for (i, biased) in results {
                    let node = &self.spec.nodes[i];
                    log.events.push(TrainEvent::Swept {
                        pass,
                        node: node.id.clone(),
                        sweeps: schedule.inner_iterations,
                        biased,
                    });
                    if let Some((p, _)) = self.topology.parent[i] {
                        log.events.push(TrainEvent::Forward {
                            pass,
                            from: node.id.clone(),
                            to: self.spec.nodes[p].id.clone(),
                        });
                    }
                }
            }
            // Downward refresh, parents first.
            for &i in self.topology.order.iter().rev() {
                if let Some((p, slot)) = self.topology.parent[i] {
                    let target = self.spec.nodes[i].id.clone();
                    let parent = self.nodes[p].unit.as_ref().ok_or(Error::Untrained)?;
                    let msg = backward_message(&target, parent, slot)?;
                    log.events.push(TrainEvent::Backward {
                        pass,
                        from: self.spec.nodes[p].id.clone(),
                        to: target,
                    });
                    self.nodes[i].backward = Some(msg);
                }
            }
        }
        self.freeze();
        Ok(log)
    }

    fn unit_documents(
        &self,
        i: usize,
        observed: &[Vec<Option<Vec<u32>>>],
    ) -> Result<Vec<UnitDocument>> {
        let node = &self.spec.nodes[i];
        let child_msgs: Vec<&ForwardMessage> = node
            .children
            .iter()
            .map(|c| {
                let ci = self.index(c.node.as_str())?;
                self.nodes[ci].forward.as_ref().ok_or(Error::Untrained)
            })
            .collect::<Result<_>>()?;
        Ok(observed
            .iter()
            .enumerate()
            .map(|(j, obs)| {
                let mut slots = obs.clone();
                slots.extend(child_msgs.iter().map(|m| Some(m.histograms[j].clone())));
                UnitDocument::new(slots)
            })
            .collect())
    }

    fn run_level(
        &mut self,
        inputs: Vec<(usize, Vec<UnitDocument>)>,
        schedule: TrainingSchedule,
        seed: u64,
        opts: &TrainOptions,
    ) -> Result<Vec<(usize, bool)>> {
        let spec = &self.spec;
        let topology = &self.topology;
        let mut work: Vec<(usize, Vec<UnitDocument>, &mut NodeRuntime)> = Vec::new();
        let mut inputs = inputs.into_iter().peekable();
        for (i, node) in self.nodes.iter_mut().enumerate() {
            if inputs.peek().is_some_and(|(k, _)| *k == i) {
                let (_, docs) = inputs.next().expect("peeked");
                work.push((i, docs, node));
            }
        }
        let step = |(i, docs, node): (usize, Vec<UnitDocument>, &mut NodeRuntime)| -> Result<(usize, bool)> {
            let n_observed = spec.nodes[i].observed.len();
            match node.unit.as_mut() {
                None => {
                    node.unit = Some(UnitState::new(spec.unit_config(i), &docs, node_seed(seed, i, 0))?);
                }
                Some(unit) => {
                    for (j, doc) in docs.iter().enumerate() {
                        for (s, hist) in doc.slots.iter().enumerate().skip(n_observed) {
                            unit.replace_slot(j, s, hist.as_deref())?;
                        }
                    }
                }
            }
            let unit = node.unit.as_mut().expect("initialized above");
            let bias: Option<Vec<Vec<f64>>> = match (opts.backward, &node.backward) {
                (_, None) => None,
                (BackwardMode::Propagate, Some(msg)) => Some(msg.probabilities.clone()),
                (BackwardMode::Uniform, Some(msg)) => Some(
                    msg.probabilities
                        .iter()
                        .map(|row| vec![1.0 / row.len() as f64; row.len()])
                        .collect(),
                ),
            };
            for _ in 0..schedule.inner_iterations {
                unit.gibbs_sweep(bias.as_deref())?;
            }
            if let Some((p, slot)) = topology.parent[i] {
                let weight = spec.nodes[p].children[slot - spec.nodes[p].observed.len()].weight;
                node.forward = Some(forward_message(&spec.nodes[i].id, unit, weight, &mut node.message_rng)?);
            }
            Ok((i, bias.is_some()))
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            work.into_par_iter().map(step).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            work.into_iter().map(step).collect()
        }
    }

    fn freeze(&mut self) {
        self.frozen = self
            .nodes
            .iter()
            .filter_map(|n| n.unit.as_ref().map(UnitState::frozen))
            .collect();
        if self.frozen.len() != self.nodes.len() {
            self.frozen.clear();
        }
    }

    /// Posterior θ̂ for every node given a possibly partial document, with
    /// all topic-word tables frozen.
    ///
    /// Nodes without evidence below them are not sampled; their θ̂ is the
    /// backward message from their parent.
    pub fn infer(
        &self,
        doc: &BlockDocument,
        schedule: TrainingSchedule,
        seed: u64,
    ) -> Result<HierarchyInference> {
        if !self.is_trained() {
            return Err(Error::Untrained);
        }
        schedule.validate()?;
        let n = self.spec.nodes.len();
        let observed: Vec<Vec<Option<Vec<u32>>>> = (0..n)
            .map(|i| self.observed_histograms(i, doc, false))
            .collect::<Result<_>>()?;
        let mut evidence = vec![false; n];
        for &i in &self.topology.order {
            let own = observed[i].iter().any(Option::is_some);
            let below = self.spec.nodes[i].children.iter().any(|c| {
                self.spec
                    .index_of(c.node.as_str())
                    .is_some_and(|ci| evidence[ci])
            });
            evidence[i] = own || below;
        }
        if !evidence[self.topology.top] {
            return Err(Error::NothingObserved);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let opts = InferOptions::new(schedule.inner_iterations);
        let mut theta: Vec<Option<Vec<f64>>> = vec![None; n];
        let mut bias: Vec<Option<Vec<f64>>> = vec![None; n];
        let mut forward: Vec<Option<Vec<u32>>> = vec![None; n];
        for _ in 0..schedule.global_passes {
            for &i in &self.topology.order {
                if !evidence[i] {
                    continue;
                }
                let node = &self.spec.nodes[i];
                let mut slots = observed[i].clone();
                for c in &node.children {
                    let ci = self.index(c.node.as_str())?;
                    slots.push(forward[ci].clone());
                }
                let result = self.frozen[i].infer_unseen(
                    &UnitDocument::new(slots),
                    &opts,
                    bias[i].as_deref(),
                    &mut rng,
                )?;
                if let Some((p, slot)) = self.topology.parent[i] {
                    let weight = self.spec.nodes[p].children
                        [slot - self.spec.nodes[p].observed.len()]
                    .weight;
                    forward[i] = Some(sample_assignment_histogram(&result.theta, weight, &mut rng));
                }
                theta[i] = Some(result.theta);
            }
            for &i in self.topology.order.iter().rev() {
                if !evidence[i] {
                    theta[i] = Some(bias[i].clone().unwrap_or_else(|| {
                        vec![1.0 / self.spec.nodes[i].n_topics as f64; self.spec.nodes[i].n_topics]
                    }));
                }
                let parent_theta = theta[i].clone().expect("set above or sampled");
                for c in &self.spec.nodes[i].children {
                    let ci = self.index(c.node.as_str())?;
                    let slot = self.spec.nodes[i]
                        .slot_of_child(&c.node)
                        .expect("child slot");
                    bias[ci] = Some(normalized(self.frozen[i].phi[slot].mix(&parent_theta)));
                }
            }
        }
        Ok(HierarchyInference {
            ids: self.spec.nodes.iter().map(|n| n.id.clone()).collect(),
            thetas: theta
                .into_iter()
                .map(|t| t.expect("every node resolved"))
                .collect(),
        })
    }

    /// Distribution over the vocabulary of an unobserved modality.
    pub fn predict(
        &self,
        doc: &BlockDocument,
        target: Modality,
        schedule: TrainingSchedule,
        seed: u64,
    ) -> Result<Vec<f64>> {
        if doc.observation(target).is_some() {
            return Err(invalid(format!("target modality {target} is observed")));
        }
        let (i, slot) = self
            .spec
            .owner_of(target)
            .ok_or_else(|| Error::MissingModality(target.to_string()))?;
        let inference = self.infer(doc, schedule, seed)?;
        Ok(self.frozen[i].phi[slot].mix(&inference.thetas[i]))
    }

    pub fn write_snapshot<W: Write>(&self, out: W) -> Result<()> {
        let snapshot = ModelSnapshot {
            schema_version: MODEL_SCHEMA_VERSION,
            kind: MODEL_KIND.to_string(),
            architecture: self.architecture,
            spec: self.spec.clone(),
            seed: self.seed,
            schedule: self.schedule,
            nodes: self.nodes.clone(),
            train_docs: self.train_docs.clone(),
        };
        serde_json::to_writer(out, &snapshot)?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(input: R) -> Result<Self> {
        // Version first, so files from other schemas fail with a clear error
        // rather than a missing-field one.
        let value: serde_json::Value = serde_json::from_reader(input)?;
        let found = value
            .get("schema_version")
            .and_then(serde_json::Value::as_u64);
        if found != Some(u64::from(MODEL_SCHEMA_VERSION)) {
            return Err(Error::SchemaVersion {
                found: found.and_then(|v| u32::try_from(v).ok()).unwrap_or(0),
                expected: MODEL_SCHEMA_VERSION,
            });
        }
        let snapshot: ModelSnapshot = serde_json::from_value(value)?;
        if snapshot.kind != MODEL_KIND {
            return Err(invalid(format!(
                "not a model snapshot (kind {:?})",
                snapshot.kind
            )));
        }
        let mut model = ComposedModel::build(snapshot.spec)?;
        if snapshot.nodes.len() != model.nodes.len() {
            return Err(invalid("snapshot node count does not match its graph"));
        }
        for node in snapshot.nodes.iter().filter_map(|n| n.unit.as_ref()) {
            node.check_consistency()?;
        }
        model.architecture = snapshot.architecture;
        model.seed = snapshot.seed;
        model.schedule = snapshot.schedule;
        model.nodes = snapshot.nodes;
        model.train_docs = snapshot.train_docs;
        model.freeze();
        Ok(model)
    }
}

const MODEL_KIND: &str = "mmlda-model";

#[derive(Serialize, Deserialize)]
struct ModelSnapshot {
    schema_version: u32,
    kind: String,
    architecture: Option<ArchitectureKind>,
    spec: GraphSpec,
    seed: u64,
    schedule: Option<TrainingSchedule>,
    nodes: Vec<NodeRuntime>,
    train_docs: Vec<DocMeta>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyInference {
    ids: Vec<NodeId>,
    thetas: Vec<Vec<f64>>,
}

impl HierarchyInference {
    pub fn theta(&self, id: &str) -> Option<&[f64]> {
        self.ids
            .iter()
            .position(|n| n.as_str() == id)
            .map(|i| self.thetas[i].as_slice())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &[f64])> {
        self.ids.iter().zip(self.thetas.iter().map(Vec::as_slice))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(id: &str, modality: Modality) -> NodeSpec {
        NodeSpec {
            id: id.into(),
            n_topics: 3,
            alpha: 1.0,
            observed: vec![ObservedSlot {
                modality,
                beta: 1.0,
                weight: 50,
            }],
            children: vec![],
        }
    }

    fn with_children(mut node: NodeSpec, children: &[&str]) -> NodeSpec {
        node.children = children
            .iter()
            .map(|c| ChildSlot {
                node: (*c).into(),
                beta: 1.0,
                weight: 50,
            })
            .collect();
        node
    }

    #[test]
    fn subjective_value_pair_builds() {
        let spec = GraphSpec {
            nodes: vec![
                leaf("z_A", Modality::SelfLicking),
                with_children(leaf("z_R", Modality::SelfReward), &["z_A"]),
            ],
        };
        let model = ComposedModel::build(spec).unwrap();
        assert_eq!(model.top().as_str(), "z_R");
        assert_eq!(
            model.execution_order(),
            vec![NodeId::from("z_A"), NodeId::from("z_R")]
        );
    }

    #[test]
    fn mutual_children_form_a_cycle() {
        let spec = GraphSpec {
            nodes: vec![
                with_children(leaf("z_S", Modality::Stimulus), &["z_Rs"]),
                with_children(leaf("z_Rs", Modality::SelfReward), &["z_S"]),
            ],
        };
        let err = ComposedModel::build(spec).unwrap_err();
        assert!(
            matches!(err, Error::Graph(ref m) if m.contains("cycle")),
            "{err}"
        );
    }

    #[test]
    fn graph_errors_are_descriptive() {
        let dup = GraphSpec {
            nodes: vec![
                leaf("a", Modality::SelfLicking),
                leaf("a", Modality::SelfReward),
            ],
        };
        assert!(
            matches!(ComposedModel::build(dup), Err(Error::Graph(m)) if m.contains("duplicate"))
        );

        let orphan = GraphSpec {
            nodes: vec![with_children(leaf("a", Modality::SelfLicking), &["ghost"])],
        };
        assert!(
            matches!(ComposedModel::build(orphan), Err(Error::Graph(m)) if m.contains("unknown child"))
        );

        let two_tops = GraphSpec {
            nodes: vec![
                leaf("a", Modality::SelfLicking),
                leaf("b", Modality::SelfReward),
            ],
        };
        assert!(
            matches!(ComposedModel::build(two_tops), Err(Error::Graph(m)) if m.contains("one top"))
        );

        let shared = GraphSpec {
            nodes: vec![
                leaf("a", Modality::SelfLicking),
                with_children(leaf("b", Modality::SelfLicking), &["a"]),
            ],
        };
        assert!(
            matches!(ComposedModel::build(shared), Err(Error::Graph(m)) if m.contains("attached to both"))
        );

        let two_parents = GraphSpec {
            nodes: vec![
                leaf("a", Modality::SelfLicking),
                with_children(leaf("b", Modality::SelfReward), &["a"]),
                with_children(leaf("c", Modality::PartnerReward), &["a"]),
                with_children(leaf("d", Modality::Stimulus), &["b", "c"]),
            ],
        };
        assert!(
            matches!(ComposedModel::build(two_parents), Err(Error::Graph(m)) if m.contains("two parents"))
        );
    }

    #[test]
    fn assignment_histogram_has_requested_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = sample_assignment_histogram(&[0.2, 0.3, 0.5], 200, &mut rng);
        assert_eq!(h.iter().sum::<u32>(), 200);
        assert_eq!(sample_assignment_histogram(&[1.0], 17, &mut rng), vec![17]);
        assert_eq!(
            sample_assignment_histogram(&[0.0, 1.0, 0.0], 9, &mut rng),
            vec![0, 9, 0]
        );
    }

    #[test]
    fn node_seeds_differ_per_node_and_stream() {
        let a = node_seed(1, 0, 0);
        assert_ne!(a, node_seed(1, 0, 1));
        assert_ne!(a, node_seed(1, 1, 0));
        assert_ne!(a, node_seed(2, 0, 0));
        assert_eq!(a, node_seed(1, 0, 0));
    }
}
