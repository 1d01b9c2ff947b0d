//! Random graph generation with controlled node and edge counts.
//!
//! Three generators (Erdős–Rényi, Watts–Strogatz, Barabási–Albert) plus the
//! parameter-control formulas that map a target `(n, e)` onto each model's
//! free parameter. The formulas are approximate by construction: ER hits `e`
//! only in expectation, and BA realizes `m(n-m) <= e` edges. Callers that
//! care about the mismatch read it from [`GraphParams::edge_count_note`].

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// Undirected simple graph over agent indices `0..n`.
///
/// Adjacency lists are kept sorted and deduplicated; every mutation goes
/// through [`Graph::add_edge`] so the symmetry invariant holds throughout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            adjacency: vec![Vec::new(); n],
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Insert edge `{u, v}`. Returns false if it already exists or is a loop.
    pub fn add_edge(&mut self, u: usize, v: usize) -> bool {
        if u == v || self.has_edge(u, v) {
            return false;
        }
        let pos_u = self.adjacency[u].binary_search(&v).unwrap_err();
        self.adjacency[u].insert(pos_u, v);
        let pos_v = self.adjacency[v].binary_search(&u).unwrap_err();
        self.adjacency[v].insert(pos_v, u);
        true
    }

    /// Remove edge `{u, v}` if present.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        if let Ok(pos) = self.adjacency[u].binary_search(&v) {
            self.adjacency[u].remove(pos);
            let pos_v = self.adjacency[v].binary_search(&u).unwrap();
            self.adjacency[v].remove(pos_v);
            true
        } else {
            false
        }
    }

    /// All edges as `(u, v)` with `u < v`, ascending.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for u in 0..self.n {
            for &v in &self.adjacency[u] {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Text dump: first line `n e`, then one `u v` pair per line, `u < v`,
    /// ascending.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.n, self.edge_count());
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{} {}", u, v);
        }
        s
    }
}

/// The interaction substrates under study, plus the no-graph control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Er,
    Ws,
    Ba,
    /// No graph: pairs are drawn uniformly from all agent pairs.
    RandomBaseline,
}

impl std::fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TopologyKind::Er => "er",
            TopologyKind::Ws => "ws",
            TopologyKind::Ba => "ba",
            TopologyKind::RandomBaseline => "random",
        };
        f.write_str(s)
    }
}

/// Resolved generation parameters for one topology at a target `(n, e)`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GraphParams {
    pub n: usize,
    pub e: usize,
    pub p_er: Option<f64>,
    pub k_ws: Option<usize>,
    pub p_rewire_ws: f64,
    pub m_ba: Option<usize>,
    /// Human-readable note about any target-vs-realized edge count mismatch;
    /// echoed into the run manifest.
    pub edge_count_note: Option<String>,
}

/// ER edge probability hitting `e` edges in expectation.
///
/// Uses the control formula `p = e / (n^2 / 2)`, which approximates the
/// number of pairs `C(n,2)` by `n^2/2`; the realized expectation is
/// therefore `e * (n-1) / n`, slightly below the target.
pub fn er_param(n: usize, e: usize) -> Result<f64> {
    assert!(n >= 2, "er_param requires n >= 2");
    let p = e as f64 / (n as f64 * n as f64 / 2.0);
    if p > 1.0 {
        return Err(Error::ErProbabilityOutOfRange { n, e, p });
    }
    Ok(p)
}

/// WS ring degree `k = 2e/n`; errors unless `k` is a positive even integer.
pub fn ws_param(n: usize, e: usize) -> Result<usize> {
    assert!(n >= 3, "ws_param requires n >= 3");
    let raw = 2.0 * e as f64 / n as f64;
    if (2 * e) % n != 0 {
        return Err(Error::WsDegreeInvalid { n, e, raw });
    }
    let k = 2 * e / n;
    if k == 0 || k % 2 != 0 || k >= n {
        return Err(Error::WsDegreeInvalid { n, e, raw });
    }
    Ok(k)
}

/// BA attachment count: the floor of the smaller root of `m^2 - nm + e = 0`.
///
/// The realized edge count is `m(n-m) <= e`; the mismatch is reported in the
/// resolved [`GraphParams`].
pub fn ba_param(n: usize, e: usize) -> Result<usize> {
    assert!(n >= 2, "ba_param requires n >= 2");
    let disc = (n * n) as f64 - 4.0 * e as f64;
    if disc < 0.0 {
        return Err(Error::BaNoRealRoot { n, e });
    }
    let root = (n as f64 - disc.sqrt()) / 2.0;
    let m = root.floor() as usize;
    let m = m.max(1);
    if m >= n {
        return Err(Error::InvalidGraphParams(format!(
            "BA attachment count m={m} must be < n={n}"
        )));
    }
    Ok(m)
}

/// Resolve the free parameter for `kind` at target `(n, e)`.
pub fn resolve_params(
    kind: TopologyKind,
    n: usize,
    e: usize,
    p_rewire_ws: f64,
) -> Result<GraphParams> {
    let mut params = GraphParams {
        n,
        e,
        p_er: None,
        k_ws: None,
        p_rewire_ws,
        m_ba: None,
        edge_count_note: None,
    };
    match kind {
        TopologyKind::Er => {
            let p = er_param(n, e)?;
            params.p_er = Some(p);
            params.edge_count_note = Some(format!(
                "ER realizes e in expectation only; formula p=e/(n^2/2) gives expected edges {:.2}",
                p * (n * (n - 1) / 2) as f64
            ));
        }
        TopologyKind::Ws => {
            params.k_ws = Some(ws_param(n, e)?);
        }
        TopologyKind::Ba => {
            let m = ba_param(n, e)?;
            params.m_ba = Some(m);
            let realized = m * (n - m);
            if realized != e {
                params.edge_count_note = Some(format!(
                    "BA realizes m(n-m) = {realized} edges for target e = {e}"
                ));
            }
        }
        TopologyKind::RandomBaseline => {}
    }
    Ok(params)
}

/// Erdős–Rényi: each unordered pair present independently with probability
/// `p`.
pub fn generate_er(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    assert!((0.0..=1.0).contains(&p), "p must be in [0, 1]");
    let mut g = Graph::empty(n);
    for u in 0..n {
        for v in (u + 1)..n {
            if rng.random::<f64>() < p {
                g.add_edge(u, v);
            }
        }
    }
    g
}

/// Watts–Strogatz: ring lattice of degree `k`, then each original edge has
/// its far endpoint rewired with probability `p_rewire`. Edge count is
/// exactly `nk/2` for every seed; a rewiring that would create a loop or a
/// duplicate is re-drawn (skipped if no valid target exists).
pub fn generate_ws(n: usize, k: usize, p_rewire: f64, rng: &mut impl Rng) -> Graph {
    assert!(k % 2 == 0 && k > 0 && k < n, "k must be even, 0 < k < n");
    assert!((0.0..=1.0).contains(&p_rewire));
    let mut g = Graph::empty(n);
    for j in 1..=(k / 2) {
        for u in 0..n {
            g.add_edge(u, (u + j) % n);
        }
    }
    // Rewire lattice edges in the construction order of the ring.
    for j in 1..=(k / 2) {
        for u in 0..n {
            let v = (u + j) % n;
            if rng.random::<f64>() >= p_rewire {
                continue;
            }
            if g.degree(u) >= n - 1 {
                continue; // saturated, no valid rewiring target
            }
            loop {
                let w = rng.random_range(0..n);
                if w != u && !g.has_edge(u, w) {
                    g.remove_edge(u, v);
                    g.add_edge(u, w);
                    break;
                }
            }
        }
    }
    g
}

/// Barabási–Albert: `m` isolated seed nodes; each arriving node connects to
/// `m` distinct existing nodes drawn with probability proportional to their
/// current degree (uniform at the first arrival, when all degrees are zero).
/// Edge count is exactly `m(n-m)`.
pub fn generate_ba(n: usize, m: usize, rng: &mut impl Rng) -> Graph {
    assert!(m >= 1 && m < n, "need 1 <= m < n");
    let mut g = Graph::empty(n);
    for arrival in m..n {
        let mut chosen: Vec<usize> = Vec::with_capacity(m);
        for _ in 0..m {
            let total: usize = (0..arrival)
                .filter(|v| !chosen.contains(v))
                .map(|v| g.degree(v))
                .sum();
            let pick = if total == 0 {
                // All remaining candidates have degree zero: uniform.
                let candidates: Vec<usize> =
                    (0..arrival).filter(|v| !chosen.contains(v)).collect();
                *candidates.choose(rng).expect("m < n guarantees candidates")
            } else {
                let mut ticket = rng.random_range(0..total);
                let mut found = None;
                for v in 0..arrival {
                    if chosen.contains(&v) {
                        continue;
                    }
                    let d = g.degree(v);
                    if ticket < d {
                        found = Some(v);
                        break;
                    }
                    ticket -= d;
                }
                found.expect("ticket within total degree")
            };
            chosen.push(pick);
        }
        for v in chosen {
            g.add_edge(arrival, v);
        }
    }
    g
}

/// Generate a graph for the resolved `params`. `RandomBaseline` yields the
/// empty graph (the sampler ignores it).
pub fn generate(kind: TopologyKind, params: &GraphParams, rng: &mut impl Rng) -> Graph {
    match kind {
        TopologyKind::Er => generate_er(params.n, params.p_er.expect("resolved"), rng),
        TopologyKind::Ws => generate_ws(
            params.n,
            params.k_ws.expect("resolved"),
            params.p_rewire_ws,
            rng,
        ),
        TopologyKind::Ba => generate_ba(params.n, params.m_ba.expect("resolved"), rng),
        TopologyKind::RandomBaseline => Graph::empty(params.n),
    }
}

/// Histogram mapping degree to node count; values sum to `n`.
pub fn degree_distribution(g: &Graph) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for v in 0..g.node_count() {
        *hist.entry(g.degree(v)).or_insert(0) += 1;
    }
    hist
}
