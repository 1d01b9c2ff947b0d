//! Per-node importance scores used to bias pair sampling.
//!
//! Degree, shortest-path betweenness (Brandes), PageRank, and a uniform
//! control. Graphs are static for the lifetime of a run, so scores are
//! computed once when the graph is generated.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// The sampling-bias measures under study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentralityKind {
    Degree,
    Betweenness,
    PageRank,
    /// Equal score for every node (control condition).
    Uniform,
}

impl std::fmt::Display for CentralityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CentralityKind::Degree => "degree",
            CentralityKind::Betweenness => "betweenness",
            CentralityKind::PageRank => "pagerank",
            CentralityKind::Uniform => "uniform",
        };
        f.write_str(s)
    }
}

/// Per-node score vector; all entries finite and non-negative.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CentralityScores(pub Vec<f64>);

impl CentralityScores {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// `deg(v) / (n-1)`.
pub fn degree_centrality(g: &Graph) -> Result<CentralityScores> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::TooFewNodes(n));
    }
    let denom = (n - 1) as f64;
    Ok(CentralityScores(
        (0..n).map(|v| g.degree(v) as f64 / denom).collect(),
    ))
}

/// Unweighted shortest-path betweenness, pair-normalized by
/// `2/((n-1)(n-2))`. Disconnected pairs contribute nothing. For `n < 3` the
/// normalization is undefined and all scores are zero.
pub fn betweenness_centrality(g: &Graph) -> CentralityScores {
    let n = g.node_count();
    let mut scores = vec![0.0; n];
    if n < 3 {
        return CentralityScores(scores);
    }
    // Brandes: one BFS per source with dependency accumulation.
    for s in 0..n {
        let mut stack: Vec<usize> = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![-1i64; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::new();
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &w in g.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0f64; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                scores[w] += delta[w];
            }
        }
    }
    // Each unordered pair was counted from both endpoints; fold that factor
    // into the pair normalization.
    let norm = 1.0 / ((n - 1) as f64 * (n - 2) as f64);
    for s in &mut scores {
        *s *= norm;
    }
    CentralityScores(scores)
}

/// PageRank by power iteration on the undirected graph treated as
/// bidirected. Isolated nodes are dangling and redistribute their mass
/// uniformly, so the output is a probability vector for any graph.
pub fn pagerank(
    g: &Graph,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CentralityScores> {
    assert!(damping > 0.0 && damping < 1.0, "damping must be in (0, 1)");
    let n = g.node_count();
    if n == 0 {
        return Err(Error::TooFewNodes(0));
    }
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    let mut next = vec![0.0f64; n];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let dangling_mass: f64 = (0..n)
            .filter(|&v| g.degree(v) == 0)
            .map(|v| x[v])
            .sum();
        let base = (1.0 - damping) / nf + damping * dangling_mass / nf;
        for item in next.iter_mut() {
            *item = base;
        }
        for v in 0..n {
            let d = g.degree(v);
            if d == 0 {
                continue;
            }
            let share = damping * x[v] / d as f64;
            for &w in g.neighbors(v) {
                next[w] += share;
            }
        }
        residual = x
            .iter()
            .zip(next.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        std::mem::swap(&mut x, &mut next);
        if residual < tol {
            return Ok(CentralityScores(x));
        }
    }
    Err(Error::PageRankDiverged { max_iter, residual })
}

/// All entries `1/n` (control condition).
pub fn uniform_scores(n: usize) -> CentralityScores {
    assert!(n >= 1, "uniform_scores requires n >= 1");
    CentralityScores(vec![1.0 / n as f64; n])
}

/// Dispatch for the configured measure. PageRank constants come from the
/// caller's config.
pub fn compute(
    kind: CentralityKind,
    g: &Graph,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CentralityScores> {
    match kind {
        CentralityKind::Degree => degree_centrality(g),
        CentralityKind::Betweenness => Ok(betweenness_centrality(g)),
        CentralityKind::PageRank => pagerank(g, damping, tol, max_iter),
        CentralityKind::Uniform => Ok(uniform_scores(g.node_count())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_er, Graph};
    use crate::rng::{substream, Stream};

    fn star5() -> Graph {
        let mut g = Graph::empty(5);
        for leaf in 1..5 {
            g.add_edge(0, leaf);
        }
        g
    }

    fn complete(n: usize) -> Graph {
        let mut g = Graph::empty(n);
        for u in 0..n {
            for v in (u + 1)..n {
                g.add_edge(u, v);
            }
        }
        g
    }

    fn cycle(n: usize) -> Graph {
        let mut g = Graph::empty(n);
        for u in 0..n {
            g.add_edge(u, (u + 1) % n);
        }
        g
    }

    #[test]
    fn degree_star_and_path() {
        let s = degree_centrality(&star5()).unwrap();
        assert_eq!(s.0[0], 1.0);
        for leaf in 1..5 {
            assert_eq!(s.0[leaf], 0.25);
        }

        let mut path = Graph::empty(3);
        path.add_edge(0, 1);
        path.add_edge(1, 2);
        let s = degree_centrality(&path).unwrap();
        assert_eq!(s.0, vec![0.5, 1.0, 0.5]);

        let mut with_isolated = Graph::empty(3);
        with_isolated.add_edge(0, 1);
        assert_eq!(degree_centrality(&with_isolated).unwrap().0[2], 0.0);

        assert!(degree_centrality(&Graph::empty(1)).is_err());
    }

    #[test]
    fn betweenness_known_graphs() {
        let s = betweenness_centrality(&star5());
        assert!((s.0[0] - 1.0).abs() < 1e-12);
        for leaf in 1..5 {
            assert_eq!(s.0[leaf], 0.0);
        }

        let s = betweenness_centrality(&cycle(4));
        for v in 0..4 {
            assert!((s.0[v] - 1.0 / 6.0).abs() < 1e-12, "C4 node {v}: {}", s.0[v]);
        }

        let s = betweenness_centrality(&complete(6));
        assert!(s.0.iter().all(|&x| x == 0.0));

        assert_eq!(betweenness_centrality(&Graph::empty(2)).0, vec![0.0, 0.0]);
    }

    /// Brute-force oracle: enumerate every shortest path explicitly by DFS
    /// over the BFS predecessor DAG and count interior visits.
    pub fn betweenness_oracle(g: &Graph) -> Vec<f64> {
        let n = g.node_count();
        let mut scores = vec![0.0; n];
        if n < 3 {
            return scores;
        }
        for s in 0..n {
            for t in 0..n {
                if s == t {
                    continue;
                }
                // BFS distances from s
                let mut dist = vec![usize::MAX; n];
                dist[s] = 0;
                let mut queue = std::collections::VecDeque::from([s]);
                while let Some(v) = queue.pop_front() {
                    for &w in g.neighbors(v) {
                        if dist[w] == usize::MAX {
                            dist[w] = dist[v] + 1;
                            queue.push_back(w);
                        }
                    }
                }
                if dist[t] == usize::MAX {
                    continue;
                }
                // enumerate all geodesics s -> t
                let mut paths: Vec<Vec<usize>> = Vec::new();
                let mut stack = vec![vec![s]];
                while let Some(path) = stack.pop() {
                    let v = *path.last().unwrap();
                    if v == t {
                        paths.push(path);
                        continue;
                    }
                    for &w in g.neighbors(v) {
                        if dist[w] == dist[v] + 1 && dist[w] <= dist[t] {
                            let mut next = path.clone();
                            next.push(w);
                            stack.push(next);
                        }
                    }
                }
                let total = paths.len() as f64;
                for path in &paths {
                    for &v in &path[1..path.len() - 1] {
                        scores[v] += 1.0 / total;
                    }
                }
            }
        }
        // ordered pairs were enumerated: halve, then pair-normalize
        let norm = 1.0 / ((n - 1) as f64 * (n - 2) as f64);
        for s in &mut scores {
            *s *= norm;
        }
        scores
    }

    #[test]
    fn betweenness_matches_brute_force_on_small_graphs() {
        for seed in 0..40 {
            let mut rng = substream(seed, Stream::Graph);
            let n = 3 + (seed as usize % 6);
            let g = generate_er(n, 0.4, &mut rng);
            let fast = betweenness_centrality(&g);
            let slow = betweenness_oracle(&g);
            for v in 0..n {
                assert!(
                    (fast.0[v] - slow[v]).abs() < 1e-10,
                    "seed {seed} node {v}: {} vs {}",
                    fast.0[v],
                    slow[v]
                );
            }
        }
    }

    #[test]
    fn pagerank_cycle_is_uniform() {
        let s = pagerank(&cycle(8), 0.85, 1e-10, 10_000).unwrap();
        for v in 0..8 {
            assert!((s.0[v] - 0.125).abs() < 1e-9);
        }
    }

    #[test]
    fn pagerank_sums_to_one_with_isolated_nodes() {
        let mut g = Graph::empty(6);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        let s = pagerank(&g, 0.85, 1e-10, 10_000).unwrap();
        let sum: f64 = s.0.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(s.0.iter().all(|&x| x > 0.0));
    }

    /// Dense power-iteration oracle over the explicit transition matrix.
    pub fn pagerank_oracle(g: &Graph, damping: f64) -> Vec<f64> {
        let n = g.node_count();
        let nf = n as f64;
        // column-stochastic transition including dangling redistribution
        let mut m = vec![vec![0.0f64; n]; n];
        for v in 0..n {
            let d = g.degree(v);
            if d == 0 {
                for row in m.iter_mut() {
                    row[v] = 1.0 / nf;
                }
            } else {
                for &w in g.neighbors(v) {
                    m[w][v] = 1.0 / d as f64;
                }
            }
        }
        let mut x = vec![1.0 / nf; n];
        for _ in 0..100_000 {
            let mut next = vec![(1.0 - damping) / nf; n];
            for (r, row) in m.iter().enumerate() {
                for (c, &mv) in row.iter().enumerate() {
                    next[r] += damping * mv * x[c];
                }
            }
            let diff: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
            x = next;
            if diff < 1e-14 {
                break;
            }
        }
        x
    }

    #[test]
    fn pagerank_star_matches_dense_oracle() {
        let g = star5();
        let s = pagerank(&g, 0.85, 1e-12, 10_000).unwrap();
        let oracle = pagerank_oracle(&g, 0.85);
        for v in 0..5 {
            assert!((s.0[v] - oracle[v]).abs() < 1e-8);
        }
    }

    #[test]
    fn pagerank_nonconvergence_is_an_error() {
        let err = pagerank(&star5(), 0.85, 1e-12, 2).unwrap_err();
        assert!(matches!(err, Error::PageRankDiverged { .. }));
    }

    #[test]
    fn pagerank_invariant_under_relabeling() {
        let mut g = Graph::empty(4);
        g.add_edge(0, 1);
        g.add_edge(1, 2);
        g.add_edge(2, 3);
        // relabeled copy under permutation 0->3, 1->2, 2->1, 3->0
        let mut h = Graph::empty(4);
        h.add_edge(3, 2);
        h.add_edge(2, 1);
        h.add_edge(1, 0);
        let sg = pagerank(&g, 0.85, 1e-12, 10_000).unwrap();
        let sh = pagerank(&h, 0.85, 1e-12, 10_000).unwrap();
        let perm = [3, 2, 1, 0];
        for v in 0..4 {
            assert!((sg.0[v] - sh.0[perm[v]]).abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_scores_examples() {
        assert_eq!(uniform_scores(4).0, vec![0.25; 4]);
        assert_eq!(uniform_scores(1).0, vec![1.0]);
    }
}
