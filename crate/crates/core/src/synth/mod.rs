//! Seeded random graph generators sweeping density, degree skew, and
//! clustering.
//!
//! Every generator is a pure function of its spec: randomness comes from
//! counter-based streams keyed by `(seed, vertex or edge index)`, so output
//! is identical regardless of thread count or iteration order. Generated
//! graphs never contain self-loops and are emitted in canonical source-sorted
//! COO order.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::rng::Stream;
use crate::topology::{CooGraph, SortOrder, VertexId};

pub const DEFAULT_NUM_VERTICES: usize = 10_000;
pub const DEFAULT_MEAN_DEGREE: f64 = 20.0;

/// Parameters of one synthetic graph, expressible entirely via CLI flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SynthSpec {
    ErdosRenyi {
        num_vertices: usize,
        density: f64,
        seed: u64,
    },
    ChungLuPowerlaw {
        num_vertices: usize,
        exponent: f64,
        mean_degree: f64,
        seed: u64,
    },
    WattsStrogatz {
        num_vertices: usize,
        ring_degree: usize,
        rewire_probability: f64,
        seed: u64,
    },
}

impl SynthSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            SynthSpec::ErdosRenyi { .. } => "erdos_renyi",
            SynthSpec::ChungLuPowerlaw { .. } => "chung_lu_powerlaw",
            SynthSpec::WattsStrogatz { .. } => "watts_strogatz",
        }
    }

    pub fn num_vertices(&self) -> usize {
        match *self {
            SynthSpec::ErdosRenyi { num_vertices, .. } => num_vertices,
            SynthSpec::ChungLuPowerlaw { num_vertices, .. } => num_vertices,
            SynthSpec::WattsStrogatz { num_vertices, .. } => num_vertices,
        }
    }

    /// Compact one-line description used in CSV report columns.
    pub fn describe(&self) -> String {
        match self {
            SynthSpec::ErdosRenyi {
                num_vertices,
                density,
                seed,
            } => format!("er(n={num_vertices} density={density} seed={seed})"),
            SynthSpec::ChungLuPowerlaw {
                num_vertices,
                exponent,
                mean_degree,
                seed,
            } => format!(
                "powerlaw(n={num_vertices} exponent={exponent} mean_degree={mean_degree} seed={seed})"
            ),
            SynthSpec::WattsStrogatz {
                num_vertices,
                ring_degree,
                rewire_probability,
                seed,
            } => format!(
                "ws(n={num_vertices} k={ring_degree} p={rewire_probability} seed={seed})"
            ),
        }
    }

    pub fn generate(&self) -> Result<CooGraph> {
        match *self {
            SynthSpec::ErdosRenyi {
                num_vertices,
                density,
                seed,
            } => gen_erdos_renyi(num_vertices, density, seed),
            SynthSpec::ChungLuPowerlaw {
                num_vertices,
                exponent,
                mean_degree,
                seed,
            } => gen_chung_lu_powerlaw(num_vertices, exponent, mean_degree, seed),
            SynthSpec::WattsStrogatz {
                num_vertices,
                ring_degree,
                rewire_probability,
                seed,
            } => gen_watts_strogatz(num_vertices, ring_degree, rewire_probability, seed),
        }
    }
}

/// Assembles per-source rows of ascending destinations into a canonical COO.
fn rows_to_coo(num_vertices: usize, rows: Vec<Vec<VertexId>>) -> Result<CooGraph> {
    let total: usize = rows.iter().map(|r| r.len()).sum();
    let mut src = Vec::with_capacity(total);
    let mut dst = Vec::with_capacity(total);
    for (u, row) in rows.into_iter().enumerate() {
        src.extend(std::iter::repeat_n(u as VertexId, row.len()));
        dst.extend(row);
    }
    CooGraph::from_parts(num_vertices, src, dst, None, SortOrder::Source)
}

/// Directed G(n, p): every ordered pair (u, v), u != v, is an edge
/// independently with probability `density`.
///
/// Sampling walks each source row with geometric skips, so the cost is
/// proportional to the number of edges rather than n^2; each row owns its
/// own counter stream, making the result independent of parallelism.
pub fn gen_erdos_renyi(n: usize, density: f64, seed: u64) -> Result<CooGraph> {
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "density",
            reason: format!("must lie in (0, 1], got {density}"),
        });
    }
    if n == 0 {
        return Ok(CooGraph::empty(0));
    }
    let slots = n - 1;
    let complete = density >= 1.0;
    let ln_q = (1.0 - density).ln();
    let rows = exec::map_indexed(n, |u| {
        let mut row = Vec::new();
        if complete {
            row.extend((0..n as VertexId).filter(|&v| v as usize != u));
            return row;
        }
        let mut s = Stream::new(seed, u as u64);
        let mut slot: i64 = -1;
        loop {
            let r = s.next_unit();
            // Geometric skip: P(jump = j) = (1-p)^(j-1) * p.
            let jump = 1 + ((1.0 - r).ln() / ln_q) as i64;
            slot += jump;
            if slot >= slots as i64 {
                break;
            }
            let v = if (slot as usize) < u {
                slot as usize
            } else {
                slot as usize + 1
            };
            row.push(v as VertexId);
        }
        row
    });
    rows_to_coo(n, rows)
}

/// Expected-degree weights for the Chung-Lu model: raw weights follow
/// `(i+1)^(-1/(exponent-1))`, scaled so they sum to `n * mean_degree` with
/// every weight capped at sqrt of that sum (the feasibility cap that keeps
/// all pair probabilities at most 1). Returns the weights and their sum.
fn chung_lu_weights(n: usize, exponent: f64, mean_degree: f64) -> (Vec<f64>, f64) {
    let beta = 1.0 / (exponent - 1.0);
    let raw: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).powf(-beta)).collect();
    let target: f64 = n as f64 * mean_degree;
    let cap = target.sqrt();
    let capped_sum = |c: f64| -> f64 { raw.iter().map(|&r| (c * r).min(cap)).sum() };
    // The capped sum is monotone in c; bisect to hit the target.
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while capped_sum(hi) < target {
        hi *= 2.0;
        if hi > 1e18 {
            break;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if capped_sum(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = 0.5 * (lo + hi);
    let weights: Vec<f64> = raw.iter().map(|&r| (c * r).min(cap)).collect();
    let total: f64 = weights.iter().sum();
    (weights, total)
}

/// Chung-Lu power-law graph: ordered pair (u, v), u != v, is an edge
/// independently with probability `min(1, w_u * w_v / sum(w))`, where the
/// expected-degree weights follow a power law with the given exponent.
///
/// Rows are sampled with the skip-and-reject walk over descending weights,
/// which draws each edge with exactly the Bernoulli probability above while
/// doing work proportional to the row's expected degree.
pub fn gen_chung_lu_powerlaw(
    n: usize,
    exponent: f64,
    mean_degree: f64,
    seed: u64,
) -> Result<CooGraph> {
    if exponent <= 1.0 {
        return Err(Error::InvalidParameter {
            name: "exponent",
            reason: format!("must exceed 1, got {exponent}"),
        });
    }
    if mean_degree <= 0.0 || mean_degree >= n as f64 {
        return Err(Error::InvalidParameter {
            name: "mean_degree",
            reason: format!("must lie in (0, n), got {mean_degree} for n = {n}"),
        });
    }
    let (weights, total) = chung_lu_weights(n, exponent, mean_degree);
    let rows = exec::map_indexed(n, |u| {
        let mut row = Vec::new();
        let wu = weights[u];
        if wu <= 0.0 {
            return row;
        }
        let mut s = Stream::new(seed, u as u64);
        let mut v = 0usize;
        while v < n {
            // Envelope probability at the current position; weights are
            // descending in v, so it bounds every later pair probability.
            let p = (wu * weights[v] / total).min(1.0);
            if p <= 0.0 {
                break;
            }
            if p < 1.0 {
                let r = s.next_unit();
                let jump = ((1.0 - r).ln() / (1.0 - p).ln()) as usize;
                v = v.saturating_add(jump);
                if v >= n {
                    break;
                }
            }
            let q = (wu * weights[v] / total).min(1.0);
            if (q >= p || s.next_unit() < q / p) && v != u {
                row.push(v as VertexId);
            }
            v += 1;
        }
        row
    });
    rows_to_coo(n, rows)
}

/// Watts-Strogatz small world: a ring lattice where every vertex connects to
/// its k nearest neighbors (k even), each lattice edge rewired with
/// probability p. The undirected result is emitted as a symmetrized directed
/// COO, so the directed edge count is exactly n * k.
///
/// Rewiring decisions draw from per-edge streams, but the pass itself is
/// sequential because collision avoidance consults the evolving adjacency.
pub fn gen_watts_strogatz(n: usize, k: usize, p: f64, seed: u64) -> Result<CooGraph> {
    if !k.is_multiple_of(2) || k >= n {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: format!("ring degree must be even and smaller than n, got k = {k}, n = {n}"),
        });
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: format!("rewire probability must lie in [0, 1], got {p}"),
        });
    }
    let half = k / 2;
    let mut edges: Vec<(VertexId, VertexId)> = Vec::with_capacity(n * half);
    let mut adj: Vec<std::collections::HashSet<VertexId>> = vec![Default::default(); n];
    for u in 0..n {
        for j in 1..=half {
            let v = ((u + j) % n) as VertexId;
            edges.push((u as VertexId, v));
            adj[u].insert(v);
            adj[v as usize].insert(u as VertexId);
        }
    }
    const MAX_ATTEMPTS: usize = 64;
    for (idx, edge) in edges.iter_mut().enumerate() {
        let mut s = Stream::new(seed, idx as u64);
        if s.next_unit() >= p {
            continue;
        }
        let (u, old_v) = *edge;
        for _ in 0..MAX_ATTEMPTS {
            let cand = s.next_below(n as u64) as VertexId;
            if cand != u && !adj[u as usize].contains(&cand) {
                adj[u as usize].remove(&old_v);
                adj[old_v as usize].remove(&u);
                adj[u as usize].insert(cand);
                adj[cand as usize].insert(u);
                *edge = (u, cand);
                break;
            }
            // Dense corner cases may exhaust attempts; the edge then stays.
        }
    }
    let mut directed = Vec::with_capacity(edges.len() * 2);
    for &(a, b) in &edges {
        directed.push((a, b));
        directed.push((b, a));
    }
    CooGraph::from_edge_list(&directed, n, None)
}
