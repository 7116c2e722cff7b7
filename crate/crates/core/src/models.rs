//! Graph factories for the three social-comparison architectures.
//!
//! * IPM: both monkeys get a licking unit and a subjective-value unit; the
//!   situation node integrates the cue and both subjective values.
//! * NCM: the self chain only.
//! * ECM: no partner subjective-value unit; the partner's reward counts
//!   and licking unit attach directly to the situation node.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::composition::{ChildSlot, ComposedModel, GraphSpec, NodeId, NodeSpec, ObservedSlot};
use crate::corpus::Modality;
use crate::error::{invalid, Error, Result};

pub const Z_AS: &str = "z_As";
pub const Z_AP: &str = "z_Ap";
pub const Z_RS: &str = "z_Rs";
pub const Z_RP: &str = "z_Rp";
pub const Z_S: &str = "z_S";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArchitectureKind {
    #[serde(rename = "IPM")]
    Ipm,
    #[serde(rename = "NCM")]
    Ncm,
    #[serde(rename = "ECM")]
    Ecm,
}

impl ArchitectureKind {
    pub const ALL: [ArchitectureKind; 3] = [
        ArchitectureKind::Ipm,
        ArchitectureKind::Ncm,
        ArchitectureKind::Ecm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArchitectureKind::Ipm => "IPM",
            ArchitectureKind::Ncm => "NCM",
            ArchitectureKind::Ecm => "ECM",
        }
    }
}

impl fmt::Display for ArchitectureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArchitectureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "IPM" => Ok(ArchitectureKind::Ipm),
            "NCM" => Ok(ArchitectureKind::Ncm),
            "ECM" => Ok(ArchitectureKind::Ecm),
            other => Err(invalid(format!("unknown architecture {other:?}"))),
        }
    }
}

/// Per-modality weights (target histogram mass).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WeightConfig {
    pub self_licking: u32,
    pub partner_licking: u32,
    pub self_reward: u32,
    pub partner_reward: u32,
    pub stimulus: u32,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            self_licking: 200,
            partner_licking: 200,
            self_reward: 200,
            partner_reward: 200,
            stimulus: 300,
        }
    }
}

impl WeightConfig {
    pub fn get(&self, modality: Modality) -> u32 {
        match modality {
            Modality::SelfLicking => self.self_licking,
            Modality::PartnerLicking => self.partner_licking,
            Modality::SelfReward => self.self_reward,
            Modality::PartnerReward => self.partner_reward,
            Modality::Stimulus => self.stimulus,
        }
    }

    pub fn set(&mut self, modality: Modality, weight: u32) {
        match modality {
            Modality::SelfLicking => self.self_licking = weight,
            Modality::PartnerLicking => self.partner_licking = weight,
            Modality::SelfReward => self.self_reward = weight,
            Modality::PartnerReward => self.partner_reward = weight,
            Modality::Stimulus => self.stimulus = weight,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if Modality::ALL.iter().any(|&m| self.get(m) == 0) {
            return Err(invalid("all modality weights must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelDefaults {
    pub n_topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub weights: WeightConfig,
    /// Pseudo-token mass of every forward message.
    pub forward_weight: u32,
}

impl Default for ModelDefaults {
    fn default() -> Self {
        Self {
            n_topics: 6,
            alpha: 1.0,
            beta: 1.0,
            weights: WeightConfig::default(),
            forward_weight: 200,
        }
    }
}

impl ModelDefaults {
    fn node(&self, id: &str, observed: &[Modality], children: &[&str]) -> NodeSpec {
        NodeSpec {
            id: NodeId::new(id),
            n_topics: self.n_topics,
            alpha: self.alpha,
            observed: observed
                .iter()
                .map(|&modality| ObservedSlot {
                    modality,
                    beta: self.beta,
                    weight: self.weights.get(modality),
                })
                .collect(),
            children: children
                .iter()
                .map(|c| ChildSlot {
                    node: NodeId::new(*c),
                    beta: self.beta,
                    weight: self.forward_weight,
                })
                .collect(),
        }
    }
}

pub fn ipm_spec(d: &ModelDefaults) -> GraphSpec {
    GraphSpec {
        nodes: vec![
            d.node(Z_AS, &[Modality::SelfLicking], &[]),
            d.node(Z_AP, &[Modality::PartnerLicking], &[]),
            d.node(Z_RS, &[Modality::SelfReward], &[Z_AS]),
            d.node(Z_RP, &[Modality::PartnerReward], &[Z_AP]),
            d.node(Z_S, &[Modality::Stimulus], &[Z_RS, Z_RP]),
        ],
    }
}

pub fn ncm_spec(d: &ModelDefaults) -> GraphSpec {
    GraphSpec {
        nodes: vec![
            d.node(Z_AS, &[Modality::SelfLicking], &[]),
            d.node(Z_RS, &[Modality::SelfReward], &[Z_AS]),
            d.node(Z_S, &[Modality::Stimulus], &[Z_RS]),
        ],
    }
}

pub fn ecm_spec(d: &ModelDefaults) -> GraphSpec {
    GraphSpec {
        nodes: vec![
            d.node(Z_AS, &[Modality::SelfLicking], &[]),
            d.node(Z_AP, &[Modality::PartnerLicking], &[]),
            d.node(Z_RS, &[Modality::SelfReward], &[Z_AS]),
            d.node(
                Z_S,
                &[Modality::Stimulus, Modality::PartnerReward],
                &[Z_RS, Z_AP],
            ),
        ],
    }
}

pub fn spec_for(kind: ArchitectureKind, defaults: &ModelDefaults) -> GraphSpec {
    match kind {
        ArchitectureKind::Ipm => ipm_spec(defaults),
        ArchitectureKind::Ncm => ncm_spec(defaults),
        ArchitectureKind::Ecm => ecm_spec(defaults),
    }
}

/// Validated, untrained model of the given architecture.
pub fn build_model(kind: ArchitectureKind, defaults: &ModelDefaults) -> Result<ComposedModel> {
    Ok(ComposedModel::build(spec_for(kind, defaults))?.with_architecture(kind))
}
