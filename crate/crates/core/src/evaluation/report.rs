//! Summary report and plot-ready tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::composition::{ComposedModel, HierarchyInference};
use crate::corpus::{BlockDocument, Dataset};
use crate::error::{Error, Result};
use crate::models::{ArchitectureKind, Z_S};

use super::clustering::{rand_chance_level, rand_index};
use super::information::{nmi_by_day, NmiRecord, NmiSummary};
use super::prediction::{
    extrapolation_sweep, ground_truth, infer_blocks, interpolation_trend, labels_from_inferences,
    predict_licking_interpolation, sweep_trend, ConditionSummary, EvalSettings,
    ExtrapolationOptions, ExtrapolationPoint, SweepKind,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
const REPORT_KIND: &str = "mmlda-eval-report";

/// Spearman trends of one prediction path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trends {
    pub self_rho: f64,
    pub partner_rho: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub kind: String,
    pub architecture: Option<ArchitectureKind>,
    pub seed: u64,
    pub n_test_blocks: usize,
    pub rand_index: f64,
    pub chance_level: f64,
    pub interpolation: Vec<ConditionSummary>,
    pub interpolation_trend: Option<Trends>,
    pub extrapolation: Vec<ExtrapolationPoint>,
    pub extrapolation_trend: Trends,
    /// NMI with `z_Rs` per variable; absent for architectures outside the
    /// NMI comparison.
    pub nmi: Option<BTreeMap<String, NmiSummary>>,
    pub nmi_comparison: Option<Vec<NmiRecord>>,
    pub notices: Vec<String>,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let report: EvalReport = serde_json::from_str(s)?;
        if report.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: report.schema_version,
                expected: REPORT_SCHEMA_VERSION,
            });
        }
        Ok(report)
    }

    /// Per-day NMI values keyed by variable, for paired comparison.
    pub fn nmi_values(&self) -> Option<BTreeMap<String, Vec<f64>>> {
        self.nmi.as_ref().map(|m| {
            m.iter()
                .map(|(k, v)| (k.clone(), v.values.clone()))
                .collect()
        })
    }
}

/// Runs the full evaluation suite on the test days.
pub fn evaluate(
    model: &ComposedModel,
    test: &Dataset,
    settings: &EvalSettings,
    extrapolation: &ExtrapolationOptions,
) -> Result<EvalReport> {
    if !model.is_trained() {
        return Err(Error::Untrained);
    }
    let docs: Vec<BlockDocument> = test.blocks().cloned().collect();
    let inferences = infer_blocks(model, &docs, settings)?;
    let predicted = labels_from_inferences(&inferences)?;
    let rand = rand_index(&ground_truth(&docs), &predicted)?;

    let interpolation = predict_licking_interpolation(model, &docs, settings)?;
    let interpolation_trend = match (
        interpolation_trend(&interpolation, true),
        interpolation_trend(&interpolation, false),
    ) {
        (Ok(self_rho), Ok(partner_rho)) => Some(Trends {
            self_rho,
            partner_rho,
        }),
        _ => None,
    };
    let sweep = extrapolation_sweep(model, extrapolation, settings)?;
    let extrapolation_trend = Trends {
        self_rho: sweep_trend(&sweep, SweepKind::SelfVaried)?,
        partner_rho: sweep_trend(&sweep, SweepKind::PartnerVaried)?,
    };

    let mut notices = Vec::new();
    let nmi = match model.architecture() {
        Some(kind @ (ArchitectureKind::Ipm | ArchitectureKind::Ecm)) => {
            let per_day = day_top_thetas(test, &inferences)?;
            let table = nmi_by_day(model, &per_day)?;
            Some(
                table
                    .into_iter()
                    .map(|(k, v)| Ok((k, NmiSummary::new(kind.name(), v)?)))
                    .collect::<Result<BTreeMap<_, _>>>()?,
            )
        }
        other => {
            let name = other.map_or("unnamed", ArchitectureKind::name);
            notices.push(format!(
                "NMI skipped: only IPM and ECM are compared ({name} given)"
            ));
            None
        }
    };

    Ok(EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        kind: REPORT_KIND.to_string(),
        architecture: model.architecture(),
        seed: settings.seed,
        n_test_blocks: docs.len(),
        rand_index: rand,
        chance_level: rand_chance_level(6),
        interpolation,
        interpolation_trend,
        extrapolation: sweep,
        extrapolation_trend,
        nmi,
        nmi_comparison: None,
        notices,
    })
}

/// Per-day NMI values of every variable with `z_Rs` on the test days.
pub fn nmi_table(
    model: &ComposedModel,
    test: &Dataset,
    settings: &EvalSettings,
) -> Result<BTreeMap<String, Vec<f64>>> {
    match model.architecture() {
        Some(ArchitectureKind::Ipm | ArchitectureKind::Ecm) => {}
        other => {
            let name = other.map_or("unnamed", ArchitectureKind::name);
            return Err(Error::Unsupported(format!(
                "NMI is compared only for IPM and ECM ({name} given)"
            )));
        }
    }
    let docs: Vec<BlockDocument> = test.blocks().cloned().collect();
    let inferences = infer_blocks(model, &docs, settings)?;
    nmi_by_day(model, &day_top_thetas(test, &inferences)?)
}

/// Top-node θ̂ of each block, grouped by day in dataset order.
fn day_top_thetas(test: &Dataset, inferences: &[HierarchyInference]) -> Result<Vec<Vec<Vec<f64>>>> {
    let mut it = inferences.iter();
    test.days
        .iter()
        .map(|day| {
            day.iter()
                .map(|_| {
                    it.next()
                        .and_then(|inf| inf.theta(Z_S))
                        .map(<[f64]>::to_vec)
                        .ok_or_else(|| Error::UnknownNode(Z_S.to_string()))
                })
                .collect()
        })
        .collect()
}

/// One row per block: day, block, condition and θ̂ of `node`.
pub fn export_topic_vectors(
    model: &ComposedModel,
    docs: &[BlockDocument],
    node: &str,
    settings: &EvalSettings,
) -> Result<String> {
    let k = model
        .spec()
        .node(node)
        .ok_or_else(|| Error::UnknownNode(node.to_string()))?
        .n_topics;
    let inferences = infer_blocks(model, docs, settings)?;
    let mut out = String::from("day,block,condition");
    for t in 0..k {
        write!(out, ",theta_{t}").expect("string write");
    }
    out.push('\n');
    for (doc, inf) in docs.iter().zip(&inferences) {
        let theta = inf.theta(node).expect("node checked above");
        write!(
            out,
            "{},{},{}",
            doc.day_index, doc.block_index, doc.condition
        )
        .expect("string write");
        for v in theta {
            write!(out, ",{v}").expect("string write");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn interpolation_csv(summaries: &[ConditionSummary]) -> String {
    let mut out = String::from("condition,n,mean,sem\n");
    for s in summaries {
        writeln!(out, "{},{},{},{}", s.condition, s.n, s.mean, s.sem).expect("string write");
    }
    out
}

pub fn extrapolation_csv(points: &[ExtrapolationPoint]) -> String {
    let mut out = String::from("sweep,self_p,partner_p,mean,sem\n");
    for p in points {
        writeln!(
            out,
            "{},{:.2},{:.2},{},{}",
            p.sweep.name(),
            p.self_p,
            p.partner_p,
            p.mean,
            p.sem
        )
        .expect("string write");
    }
    out
}

pub fn nmi_comparison_csv(records: &[NmiRecord]) -> String {
    fn cell(v: Option<f64>) -> String {
        v.map(|x| x.to_string()).unwrap_or_default()
    }
    let mut out = String::from("node,target,first_model,first_median,first_iqr,second_model,second_median,second_iqr,z,p\n");
    for r in records {
        let (fm, fmed, fiqr) = r.first.as_ref().map_or((String::new(), None, None), |s| {
            (s.model.clone(), Some(s.median), Some(s.iqr))
        });
        let (sm, smed, siqr) = r.second.as_ref().map_or((String::new(), None, None), |s| {
            (s.model.clone(), Some(s.median), Some(s.iqr))
        });
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.node,
            r.target,
            fm,
            cell(fmed),
            cell(fiqr),
            sm,
            cell(smed),
            cell(siqr),
            cell(r.z),
            cell(r.p_value)
        )
        .expect("string write");
    }
    out
}
