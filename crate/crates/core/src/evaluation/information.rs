//! Normalized mutual information over analytically marginalized joints.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::composition::ComposedModel;
use crate::error::{invalid, Error, Result};
use crate::models::{ArchitectureKind, Z_RS, Z_S};

use super::stats::{iqr, median, wilcoxon_signed_rank};

const MASS_TOLERANCE: f64 = 1e-9;

/// Bivariate distribution of two named variables; rows index `first`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseJoint {
    pub first: String,
    pub second: String,
    table: Vec<Vec<f64>>,
}

impl PairwiseJoint {
    pub fn new(
        first: impl Into<String>,
        second: impl Into<String>,
        table: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let cols = table.first().map_or(0, Vec::len);
        if table.is_empty() || cols == 0 || table.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension(
                "joint table must be a non-empty rectangle".into(),
            ));
        }
        if table.iter().flatten().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(invalid("joint entries must be finite and non-negative"));
        }
        let total: f64 = table.iter().flatten().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(invalid(format!("joint sums to {total}, expected 1")));
        }
        Ok(Self {
            first: first.into(),
            second: second.into(),
            table,
        })
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn first_marginal(&self) -> Vec<f64> {
        self.table.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn second_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.table[0].len()];
        for row in &self.table {
            for (o, p) in out.iter_mut().zip(row) {
                *o += p;
            }
        }
        out
    }

    pub fn mutual_information(&self) -> f64 {
        let joint: Vec<f64> = self.table.iter().flatten().copied().collect();
        entropy(&self.first_marginal()) + entropy(&self.second_marginal()) - entropy(&joint)
    }
}

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// `2 I(A;B) / (H(A) + H(B))`, or 0 when both marginals are degenerate.
pub fn nmi(joint: &PairwiseJoint) -> f64 {
    let denom = entropy(&joint.first_marginal()) + entropy(&joint.second_marginal());
    if denom <= 0.0 {
        return 0.0;
    }
    (2.0 * joint.mutual_information() / denom).clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq)]
struct FactorVar {
    name: String,
    parent: Option<usize>,
    /// One row per parent state (a single row for the root).
    table: Vec<Vec<f64>>,
}

/// Tree-structured factorization of discrete variables: a root prior and a
/// conditional table per child.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FactorTree {
    vars: Vec<FactorVar>,
}

fn check_rows(rows: &[Vec<f64>]) -> Result<usize> {
    let cols = rows.first().map_or(0, Vec::len);
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Dimension(
            "conditional table must be a non-empty rectangle".into(),
        ));
    }
    for row in rows {
        let total: f64 = row.iter().sum();
        if row.iter().any(|p| *p < 0.0) || (total - 1.0).abs() > 1e-6 {
            return Err(invalid("every conditional row must be a distribution"));
        }
    }
    Ok(cols)
}

impl FactorTree {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_root(&mut self, name: impl Into<String>, prior: Vec<f64>) -> Result<usize> {
        if !self.vars.is_empty() {
            return Err(Error::Graph("factor tree already has a root".into()));
        }
        check_rows(std::slice::from_ref(&prior))?;
        self.vars.push(FactorVar {
            name: name.into(),
            parent: None,
            table: vec![prior],
        });
        Ok(0)
    }

    /// `conditional[parent_state][own_state]`.
    pub fn add_child(
        &mut self,
        name: impl Into<String>,
        parent: usize,
        conditional: Vec<Vec<f64>>,
    ) -> Result<usize> {
        let parent_states = self
            .vars
            .get(parent)
            .ok_or_else(|| Error::Graph(format!("unknown parent variable {parent}")))?
            .table[0]
            .len();
        check_rows(&conditional)?;
        if conditional.len() != parent_states {
            return Err(Error::Dimension(format!(
                "conditional has {} rows, parent has {parent_states} states",
                conditional.len()
            )));
        }
        self.vars.push(FactorVar {
            name: name.into(),
            parent: Some(parent),
            table: conditional,
        });
        Ok(self.vars.len() - 1)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().map(|v| v.name.as_str())
    }

    fn states(&self, v: usize) -> usize {
        self.vars[v].table[0].len()
    }

    fn marginal(&self, v: usize) -> Vec<f64> {
        match self.vars[v].parent {
            None => self.vars[v].table[0].clone(),
            Some(p) => vec_mat(&self.marginal(p), &self.vars[v].table),
        }
    }

    /// Variable followed by its ancestors up to the root.
    fn lineage(&self, mut v: usize) -> Vec<usize> {
        let mut out = vec![v];
        while let Some(p) = self.vars[v].parent {
            out.push(p);
            v = p;
        }
        out
    }

    /// `P(v | ancestor)` as a matrix indexed `[ancestor_state][v_state]`.
    fn transfer(&self, ancestor: usize, v: usize) -> Matrix {
        let mut path = Vec::new();
        let mut cur = v;
        while cur != ancestor {
            path.push(cur);
            cur = self.vars[cur].parent.expect("ancestor lies on the lineage");
        }
        let mut m = identity(self.states(ancestor));
        for &step in path.iter().rev() {
            m = mat_mul(&m, &self.vars[step].table);
        }
        m
    }

    /// Exact joint of two variables, marginalizing everything else.
    pub fn pairwise(&self, a: usize, b: usize) -> Result<PairwiseJoint> {
        if a >= self.vars.len() || b >= self.vars.len() {
            return Err(Error::Graph("unknown variable".into()));
        }
        let lineage_a = self.lineage(a);
        let lca = *self
            .lineage(b)
            .iter()
            .find(|v| lineage_a.contains(v))
            .expect("tree has a single root");
        let prior = self.marginal(lca);
        let ta = self.transfer(lca, a);
        let tb = self.transfer(lca, b);
        let mut table = vec![vec![0.0; self.states(b)]; self.states(a)];
        for (l, pl) in prior.iter().enumerate() {
            if *pl == 0.0 {
                continue;
            }
            for (x, row) in table.iter_mut().enumerate() {
                let px = pl * ta[l][x];
                if px == 0.0 {
                    continue;
                }
                for (y, cell) in row.iter_mut().enumerate() {
                    *cell += px * tb[l][y];
                }
            }
        }
        // Absorb floating-point drift so the table validates.
        let total: f64 = table.iter().flatten().sum();
        for cell in table.iter_mut().flatten() {
            *cell /= total;
        }
        PairwiseJoint::new(self.vars[a].name.clone(), self.vars[b].name.clone(), table)
    }

    /// Factorization of a trained hierarchy: the top node takes `top_prior`,
    /// each child node and observed modality hangs off its parent with the
    /// learned topic-word table as the conditional.
    pub fn from_model(model: &ComposedModel, top_prior: &[f64]) -> Result<Self> {
        let spec = model.spec();
        let mut tree = FactorTree::new();
        let mut var_of = BTreeMap::new();
        let top = model.top().clone();
        let mut stack = vec![(top.clone(), None::<(usize, usize)>)];
        while let Some((id, attach)) = stack.pop() {
            let node = spec
                .node(id.as_str())
                .ok_or_else(|| Error::UnknownNode(id.to_string()))?;
            let v = match attach {
                None => tree.add_root(id.as_str(), top_prior.to_vec())?,
                Some((parent_var, slot)) => {
                    let parent_id = model
                        .parent_of(id.as_str())
                        .expect("attached nodes have parents");
                    let table = &model.frozen_unit(parent_id.as_str())?.phi[slot];
                    tree.add_child(id.as_str(), parent_var, conditional_rows(table))?
                }
            };
            var_of.insert(id.clone(), v);
            let frozen = model.frozen_unit(id.as_str())?;
            for (slot, o) in node.observed.iter().enumerate() {
                tree.add_child(
                    o.modality.to_string(),
                    v,
                    conditional_rows(&frozen.phi[slot]),
                )?;
            }
            for c in node.children.iter().rev() {
                let slot = node.slot_of_child(&c.node).expect("declared child");
                stack.push((c.node.clone(), Some((v, slot))));
            }
        }
        Ok(tree)
    }
}

type Matrix = Vec<Vec<f64>>;

fn identity(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter().map(|row| vec_mat(row, b)).collect()
}

fn vec_mat(v: &[f64], m: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; m[0].len()];
    for (x, row) in v.iter().zip(m) {
        if *x == 0.0 {
            continue;
        }
        for (o, p) in out.iter_mut().zip(row) {
            *o += x * p;
        }
    }
    out
}

fn conditional_rows(table: &crate::mlda::TopicWordTable) -> Matrix {
    (0..table.n_topics)
        .map(|k| {
            let row = table.topic(k);
            let total: f64 = row.iter().sum();
            row.iter().map(|p| p / total).collect()
        })
        .collect()
}

/// Bivariate joints of every other variable with the self subjective-value
/// node, oriented `(variable, z_Rs)`.
pub fn factorized_joint(model: &ComposedModel, top_prior: &[f64]) -> Result<Vec<PairwiseJoint>> {
    match model.architecture() {
        Some(ArchitectureKind::Ipm) | Some(ArchitectureKind::Ecm) => {}
        Some(ArchitectureKind::Ncm) => {
            return Err(Error::Unsupported(
                "NMI analysis covers IPM and ECM only".into(),
            ))
        }
        None => {
            return Err(Error::Unsupported(
                "NMI analysis needs a named architecture".into(),
            ))
        }
    }
    if !model.is_trained() {
        return Err(Error::Untrained);
    }
    let tree = FactorTree::from_model(model, top_prior)?;
    let target = tree
        .index_of(Z_RS)
        .ok_or_else(|| Error::UnknownNode(Z_RS.into()))?;
    (0..tree.vars.len())
        .filter(|&v| v != target)
        .map(|v| tree.pairwise(v, target))
        .collect()
}

/// Day prior for the top node: the mean of the day's block-level θ̂.
pub fn day_prior<'a>(block_thetas: impl IntoIterator<Item = &'a [f64]>) -> Result<Vec<f64>> {
    let mut sum: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for theta in block_thetas {
        if sum.is_empty() {
            sum = vec![0.0; theta.len()];
        } else if sum.len() != theta.len() {
            return Err(Error::Dimension("block thetas differ in length".into()));
        }
        for (s, t) in sum.iter_mut().zip(theta) {
            *s += t;
        }
        n += 1;
    }
    if n == 0 {
        return Err(invalid("a day needs at least one block"));
    }
    Ok(sum.into_iter().map(|s| s / n as f64).collect())
}

/// Per-variable NMI with `z_Rs`, one value per day. `day_top_thetas` holds
/// each day's block-level θ̂ of the top node.
pub fn nmi_by_day(
    model: &ComposedModel,
    day_top_thetas: &[Vec<Vec<f64>>],
) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for day in day_top_thetas {
        let prior = day_prior(day.iter().map(Vec::as_slice))?;
        for joint in factorized_joint(model, &prior)? {
            out.entry(joint.first.clone())
                .or_default()
                .push(nmi(&joint));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NmiSummary {
    pub model: String,
    pub values: Vec<f64>,
    pub median: f64,
    pub iqr: f64,
}

impl NmiSummary {
    pub fn new(model: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let median = median(&values).ok_or_else(|| invalid("no NMI values"))?;
        let iqr = iqr(&values).expect("non-empty");
        Ok(Self {
            model: model.into(),
            values,
            median,
            iqr,
        })
    }
}

/// NMI of one variable with `z_Rs` under two models, with a paired test
/// across days when both models contain the variable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NmiRecord {
    pub node: String,
    pub target: String,
    pub first: Option<NmiSummary>,
    pub second: Option<NmiSummary>,
    pub z: Option<f64>,
    pub p_value: Option<f64>,
}

pub fn compare_nmi(
    first_name: &str,
    first: &BTreeMap<String, Vec<f64>>,
    second_name: &str,
    second: &BTreeMap<String, Vec<f64>>,
) -> Result<Vec<NmiRecord>> {
    let nodes: BTreeSet<&String> = first.keys().chain(second.keys()).collect();
    nodes
        .into_iter()
        .map(|node| {
            let a = first.get(node);
            let b = second.get(node);
            let (z, p_value) = match (a, b) {
                (Some(a), Some(b)) => {
                    if a.len() != b.len() {
                        return Err(Error::Dimension(format!(
                            "{node}: {} vs {} days",
                            a.len(),
                            b.len()
                        )));
                    }
                    let pairs: Vec<(f64, f64)> = a.iter().copied().zip(b.iter().copied()).collect();
                    match wilcoxon_signed_rank(&pairs) {
                        Ok(r) => (Some(r.z), Some(r.p_value)),
                        Err(_) => (None, None),
                    }
                }
                _ => (None, None),
            };
            Ok(NmiRecord {
                node: node.clone(),
                target: Z_RS.to_string(),
                first: a
                    .map(|v| NmiSummary::new(first_name, v.clone()))
                    .transpose()?,
                second: b
                    .map(|v| NmiSummary::new(second_name, v.clone()))
                    .transpose()?,
                z,
                p_value,
            })
        })
        .collect()
}

/// Name of the node whose θ̂ feeds the day prior.
pub const DAY_PRIOR_NODE: &str = Z_S;
