//! Centrality-weighted pair schedules and the random-pairing baseline.
//!
//! Topology mode draws the first endpoint from a softmax over centrality
//! scores (restricted to non-isolated nodes) and the partner uniformly from
//! its neighbors, so every scheduled pair is an edge of the graph. Draws are
//! with replacement; the same edge may recur within one schedule.

use rand::Rng;

use crate::centrality::CentralityScores;
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Ordered training pairs; order is significant and seed-deterministic.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct PairSchedule {
    pub pairs: Vec<(usize, usize)>,
}

/// Numerically stable softmax (max-subtraction).
pub fn softmax(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// First-endpoint probabilities in topology mode: softmax over scores with
/// isolated nodes zeroed out and the rest renormalized.
pub fn endpoint_probabilities(g: &Graph, scores: &CentralityScores) -> Result<Vec<f64>> {
    assert_eq!(g.node_count(), scores.len());
    let mut probs = softmax(scores.as_slice())?;
    let mut live_mass = 0.0;
    for (v, p) in probs.iter_mut().enumerate() {
        if g.degree(v) == 0 {
            *p = 0.0;
        } else {
            live_mass += *p;
        }
    }
    if live_mass == 0.0 {
        return Err(Error::EdgelessGraph);
    }
    for p in &mut probs {
        *p /= live_mass;
    }
    Ok(probs)
}

fn draw_categorical(probs: &[f64], rng: &mut impl Rng) -> usize {
    let mut ticket: f64 = rng.random();
    for (i, &p) in probs.iter().enumerate() {
        if ticket < p {
            return i;
        }
        ticket -= p;
    }
    // ticket fell off the end due to rounding; return the last live index
    probs
        .iter()
        .rposition(|&p| p > 0.0)
        .expect("probabilities sum to 1")
}

/// Draw `count` pairs, with replacement: first endpoint from the softmaxed
/// scores (non-isolated nodes only), partner uniform among its neighbors.
pub fn sample_schedule(
    g: &Graph,
    scores: &CentralityScores,
    count: usize,
    rng: &mut impl Rng,
) -> Result<PairSchedule> {
    if g.edge_count() == 0 {
        return Err(Error::EdgelessGraph);
    }
    let probs = endpoint_probabilities(g, scores)?;
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        let u = draw_categorical(&probs, rng);
        let neighbors = g.neighbors(u);
        let v = neighbors[rng.random_range(0..neighbors.len())];
        pairs.push((u, v));
    }
    Ok(PairSchedule { pairs })
}

/// `count` pairs drawn uniformly from all unordered pairs of `0..n`, with
/// replacement and no graph constraint.
pub fn random_baseline_schedule(
    n: usize,
    count: usize,
    rng: &mut impl Rng,
) -> Result<PairSchedule> {
    if n < 2 {
        return Err(Error::TooFewAgents(n));
    }
    let mut pairs = Vec::with_capacity(count);
    for _ in 0..count {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        pairs.push((a.min(b), a.max(b)));
    }
    Ok(PairSchedule { pairs })
}
