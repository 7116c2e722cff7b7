//! Exact enumeration of the collapsed posterior on a corpus small enough to
//! list every assignment, plus the matching long-run sampler statistics.

#![allow(dead_code)]

use mmlda::mlda::{ModalityConfig, UnitConfig, UnitDocument, UnitState};

pub const K: usize = 2;
pub const W: usize = 3;
pub const ALPHA: f64 = 1.0;
pub const BETA: f64 = 1.0;

// Word histograms for two documents of three tokens each.
pub const DOCS: [[u32; W]; 2] = [[2, 1, 0], [0, 1, 2]];

fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// Tokens as (doc, word) in the sampler's expansion order.
pub fn tokens() -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (d, hist) in DOCS.iter().enumerate() {
        for (w, &c) in hist.iter().enumerate() {
            for _ in 0..c {
                out.push((d, w));
            }
        }
    }
    out
}

/// Unnormalized log of the collapsed joint times the per-token bias.
fn log_joint(z: &[usize], toks: &[(usize, usize)], bias: &[[f64; K]; 2]) -> f64 {
    let mut ndk = [[0usize; K]; 2];
    let mut nkw = [[0usize; W]; K];
    let mut lb = 0.0;
    for (&k, &(d, w)) in z.iter().zip(toks) {
        ndk[d][k] += 1;
        nkw[k][w] += 1;
        lb += bias[d][k].ln();
    }
    let mut lp = lb;
    for row in &ndk {
        for &n in row {
            lp += ln_gamma(n as f64 + ALPHA);
        }
    }
    for row in &nkw {
        let total: usize = row.iter().sum();
        for &n in row {
            lp += ln_gamma(n as f64 + BETA);
        }
        lp -= ln_gamma(total as f64 + W as f64 * BETA);
    }
    lp
}

/// Exact probability of every configuration, indexed by the bit pattern of
/// token topics.
pub fn exact(bias: &[[f64; K]; 2]) -> Vec<f64> {
    let toks = tokens();
    let n = toks.len();
    let logs: Vec<f64> = (0..1usize << n)
        .map(|bits| {
            let z: Vec<usize> = (0..n).map(|i| (bits >> i) & 1).collect();
            log_joint(&z, &toks, bias)
        })
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.iter().map(|w| w / total).collect()
}

pub fn sampled(bias: Option<&[Vec<f64>]>, sweeps: usize, burn_in: usize, seed: u64) -> Vec<f64> {
    let config = UnitConfig {
        n_topics: K,
        alpha: ALPHA,
        modalities: vec![ModalityConfig {
            name: "w".into(),
            vocab_size: W,
            beta: BETA,
            weight: 3,
        }],
    };
    let docs: Vec<UnitDocument> = DOCS
        .iter()
        .map(|h| UnitDocument::new(vec![Some(h.to_vec())]))
        .collect();
    let mut unit = UnitState::new(config, &docs, seed).unwrap();
    let n = tokens().len();
    let mut counts = vec![0u64; 1 << n];
    for sweep in 0..burn_in + sweeps {
        unit.gibbs_sweep(bias).unwrap();
        if sweep >= burn_in {
            let z: Vec<u32> = (0..2)
                .flat_map(|j| unit.assignments(j, 0).to_vec())
                .collect();
            let bits = z
                .iter()
                .enumerate()
                .fold(0usize, |acc, (i, &k)| acc | ((k as usize) << i));
            counts[bits] += 1;
        }
    }
    counts.iter().map(|&c| c as f64 / sweeps as f64).collect()
}

pub fn token_marginals(dist: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            dist.iter()
                .enumerate()
                .filter(|(bits, _)| (bits >> i) & 1 == 1)
                .map(|(_, p)| p)
                .sum()
        })
        .collect()
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
