//! Structural statistics used to characterize workloads.
//!
//! All quantities are deterministic functions of the graph. In-degree is the
//! load-bearing direction because aggregation gathers along incoming edges,
//! so imbalance over destinations predicts write contention and partial-sum
//! pressure.

use serde::{Deserialize, Serialize};

use crate::exec;
use crate::topology::{CooGraph, VertexId};

/// Summary of a graph's aggregation-relevant structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub num_vertices: usize,
    pub num_edges: usize,
    /// Directed density `E / (N * (N - 1))`; 0 for graphs with fewer than
    /// two vertices.
    pub density: f64,
    pub max_in_degree: u32,
    pub mean_in_degree: f64,
    /// `max_in_degree / mean_in_degree`; defined as 1.0 for edgeless graphs.
    pub load_imbalance: f64,
    /// Continuous maximum-likelihood power-law exponent of the in-degree
    /// tail, absent when no usable tail exists.
    pub powerlaw_exponent_mle: Option<f64>,
    /// Transitivity of the undirected simple projection: three times the
    /// triangle count over the number of connected triples.
    pub global_clustering_coefficient: f64,
}

/// Computes all statistics in one pass over the graph.
pub fn compute_stats(g: &CooGraph) -> GraphStats {
    let n = g.num_vertices();
    let e = g.num_edges();
    let density = if n < 2 {
        0.0
    } else {
        e as f64 / (n as f64 * (n as f64 - 1.0))
    };
    let in_deg = g.in_degrees();
    let max_in_degree = in_deg.iter().copied().max().unwrap_or(0);
    let mean_in_degree = if n == 0 { 0.0 } else { e as f64 / n as f64 };
    let load_imbalance = if e == 0 {
        1.0
    } else {
        max_in_degree as f64 / mean_in_degree
    };
    GraphStats {
        num_vertices: n,
        num_edges: e,
        density,
        max_in_degree,
        mean_in_degree,
        load_imbalance,
        powerlaw_exponent_mle: powerlaw_mle(&in_deg),
        global_clustering_coefficient: global_clustering(g),
    }
}

/// Minimum number of tail samples required before an exponent is reported.
const MIN_TAIL: usize = 10;

/// Continuous maximum-likelihood estimate of the power-law exponent of a
/// degree tail.
///
/// The cutoff `x_min` is chosen from the observed degree values (never below
/// 2) by minimizing the Kolmogorov-Smirnov distance between the empirical
/// tail and the fitted law, and the exponent for a candidate cutoff is
/// `1 + m / sum(ln(d_i / (x_min - 0.5)))` over the `m` tail degrees. Degrees
/// below 2 never enter the fit; returns `None` when fewer than `MIN_TAIL`
/// degrees remain above every candidate cutoff.
pub fn powerlaw_mle(degrees: &[u32]) -> Option<f64> {
    let mut vals: Vec<u32> = degrees.iter().copied().filter(|&d| d >= 2).collect();
    if vals.len() < MIN_TAIL {
        return None;
    }
    vals.sort_unstable();
    let ln: Vec<f64> = vals.iter().map(|&d| (d as f64).ln()).collect();
    // suffix_ln[i] = sum of ln(vals[j]) for j >= i.
    let mut suffix_ln = vec![0.0f64; vals.len() + 1];
    for i in (0..vals.len()).rev() {
        suffix_ln[i] = suffix_ln[i + 1] + ln[i];
    }
    let mut best: Option<(f64, f64)> = None;
    let mut i = 0usize;
    while i < vals.len() {
        let xmin = vals[i];
        let m = vals.len() - i;
        if m < MIN_TAIL {
            break;
        }
        let shift = xmin as f64 - 0.5;
        let sum_ln = suffix_ln[i] - m as f64 * shift.ln();
        if sum_ln > 0.0 {
            let alpha = 1.0 + m as f64 / sum_ln;
            let mut ks = 0.0f64;
            let mut j = i;
            while j < vals.len() {
                let x = vals[j];
                let emp = (vals.len() - j) as f64 / m as f64;
                let fit = ((x as f64 - 0.5) / shift).powf(1.0 - alpha);
                ks = ks.max((emp - fit).abs());
                while j < vals.len() && vals[j] == x {
                    j += 1;
                }
            }
            match best {
                Some((best_ks, _)) if best_ks <= ks => {}
                _ => best = Some((ks, alpha)),
            }
        }
        while i < vals.len() && vals[i] == xmin {
            i += 1;
        }
    }
    best.map(|(_, alpha)| alpha)
}

/// Global clustering coefficient (transitivity) of the undirected simple
/// projection: self-loops dropped, duplicates and directions collapsed.
pub fn global_clustering(g: &CooGraph) -> f64 {
    let n = g.num_vertices();
    if n == 0 {
        return 0.0;
    }
    // Undirected unique pairs.
    let mut pairs: Vec<(VertexId, VertexId)> = g
        .src()
        .iter()
        .zip(g.dst().iter())
        .filter(|(&s, &d)| s != d)
        .map(|(&s, &d)| (s.min(d), s.max(d)))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    if pairs.is_empty() {
        return 0.0;
    }
    // Adjacency in both directions; rows come out sorted because the pairs
    // are lexicographically sorted.
    let mut deg = vec![0usize; n];
    for &(a, b) in &pairs {
        deg[a as usize] += 1;
        deg[b as usize] += 1;
    }
    let mut offsets = vec![0usize; n + 1];
    for v in 0..n {
        offsets[v + 1] = offsets[v] + deg[v];
    }
    let mut cursor = offsets.clone();
    let mut nbrs = vec![0 as VertexId; pairs.len() * 2];
    for &(a, b) in &pairs {
        nbrs[cursor[a as usize]] = b;
        cursor[a as usize] += 1;
        nbrs[cursor[b as usize]] = a;
        cursor[b as usize] += 1;
    }
    let triples: u64 = deg
        .iter()
        .map(|&d| (d as u64) * (d.saturating_sub(1) as u64) / 2)
        .sum();
    if triples == 0 {
        return 0.0;
    }
    // Degree order caps forward-list length at O(sqrt(E)), keeping the
    // intersection pass near E^1.5 in the worst case.
    let mut rank = vec![0u32; n];
    {
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_unstable_by_key(|&v| (deg[v as usize], v));
        for (r, &v) in order.iter().enumerate() {
            rank[v as usize] = r as u32;
        }
    }
    let mut fwd_offsets = vec![0usize; n + 1];
    for v in 0..n {
        let count = nbrs[offsets[v]..offsets[v + 1]]
            .iter()
            .filter(|&&u| rank[u as usize] > rank[v])
            .count();
        fwd_offsets[v + 1] = fwd_offsets[v] + count;
    }
    let mut fwd = vec![0 as VertexId; fwd_offsets[n]];
    for v in 0..n {
        let mut pos = fwd_offsets[v];
        for &u in &nbrs[offsets[v]..offsets[v + 1]] {
            if rank[u as usize] > rank[v] {
                fwd[pos] = u;
                pos += 1;
            }
        }
    }
    let triangle_counts = exec::map_indexed(n, |v| {
        let fv = &fwd[fwd_offsets[v]..fwd_offsets[v + 1]];
        let mut count = 0u64;
        for &u in fv {
            let fu = &fwd[fwd_offsets[u as usize]..fwd_offsets[u as usize + 1]];
            count += sorted_intersection_len(fv, fu);
        }
        count
    });
    let triangles: u64 = triangle_counts.iter().sum();
    3.0 * triangles as f64 / triples as f64
}

fn sorted_intersection_len(a: &[VertexId], b: &[VertexId]) -> u64 {
    let (mut i, mut j, mut count) = (0usize, 0usize, 0u64);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use crate::topology::CooGraph;

    #[test]
    fn triangle_stats() {
        let g = CooGraph::from_edge_list(&[(0, 1), (1, 2), (2, 0)], 3, None).unwrap();
        let s = compute_stats(&g);
        assert_eq!(s.num_vertices, 3);
        assert_eq!(s.num_edges, 3);
        assert!((s.density - 0.5).abs() < 1e-12);
        assert_eq!(s.max_in_degree, 1);
        assert!((s.mean_in_degree - 1.0).abs() < 1e-12);
        assert!((s.load_imbalance - 1.0).abs() < 1e-12);
        assert!((s.global_clustering_coefficient - 1.0).abs() < 1e-12);
        assert!(s.powerlaw_exponent_mle.is_none());
    }

    #[test]
    fn star_load_imbalance() {
        let g = CooGraph::from_edge_list(&[(1, 0), (2, 0), (3, 0), (4, 0)], 5, None).unwrap();
        let s = compute_stats(&g);
        assert_eq!(s.max_in_degree, 4);
        assert!((s.load_imbalance - 5.0).abs() < 1e-12);
        // A star has no triangles.
        assert_eq!(s.global_clustering_coefficient, 0.0);
    }

    #[test]
    fn empty_graph_stats_are_defined() {
        let s = compute_stats(&CooGraph::empty(4));
        assert_eq!(s.num_edges, 0);
        assert_eq!(s.density, 0.0);
        assert_eq!(s.load_imbalance, 1.0);
        assert!(s.powerlaw_exponent_mle.is_none());
        assert_eq!(s.global_clustering_coefficient, 0.0);
    }

    #[test]
    fn clustering_ignores_direction_duplicates_and_loops() {
        // Both orientations plus a duplicate and a self-loop still describe
        // one undirected triangle.
        let g = CooGraph::from_edge_list(
            &[(0, 1), (1, 0), (1, 2), (2, 0), (2, 0), (1, 1)],
            3,
            None,
        )
        .unwrap();
        assert!((global_clustering(&g) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clustering_on_path_is_zero() {
        let g = CooGraph::from_edge_list(&[(0, 1), (1, 2)], 3, None).unwrap();
        assert_eq!(global_clustering(&g), 0.0);
    }

    #[test]
    fn clustering_4clique_is_one() {
        let mut edges = Vec::new();
        for a in 0..4u32 {
            for b in 0..4u32 {
                if a != b {
                    edges.push((a, b));
                }
            }
        }
        let g = CooGraph::from_edge_list(&edges, 4, None).unwrap();
        assert!((global_clustering(&g) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn powerlaw_absent_without_tail() {
        assert!(powerlaw_mle(&[]).is_none());
        assert!(powerlaw_mle(&[0, 0, 0, 1, 1]).is_none());
        assert!(powerlaw_mle(&[2; 9]).is_none());
    }

    #[test]
    fn powerlaw_recovers_exponent_on_ideal_sample() {
        // Inverse-CDF sample of a continuous Pareto with alpha = 2.5,
        // discretized by rounding. The estimator should land near 2.5.
        let mut s = Stream::new(17, 0);
        let alpha = 2.5f64;
        let degrees: Vec<u32> = (0..20000)
            .map(|_| {
                let u = s.next_unit().max(1e-12);
                let x = 2.0 * u.powf(-1.0 / (alpha - 1.0));
                x.round().min(1e9) as u32
            })
            .collect();
        let est = powerlaw_mle(&degrees).unwrap();
        assert!(
            (est - alpha).abs() < 0.15,
            "estimated {est}, expected about {alpha}"
        );
    }

    #[test]
    fn powerlaw_on_uniform_degrees_is_large() {
        // All degrees equal: the fitted tail is a step, the exponent blows up
        // rather than faking a heavy tail.
        let est = powerlaw_mle(&[10; 50]).unwrap();
        assert!(est > 5.0, "estimated {est}");
    }

    #[test]
    fn stats_ranges_on_random_graphs() {
        for seed in 0..100u64 {
            let mut s = Stream::new(seed, 0);
            let n = 2 + s.next_below(40) as usize;
            let e = s.next_below(120) as usize;
            let edges: Vec<(u32, u32)> = (0..e)
                .map(|_| (s.next_below(n as u64) as u32, s.next_below(n as u64) as u32))
                .collect();
            let g = CooGraph::from_edge_list(&edges, n, None).unwrap();
            let st = compute_stats(&g);
            assert!(st.density >= 0.0);
            assert!((0.0..=1.0).contains(&st.global_clustering_coefficient));
            assert!(st.load_imbalance >= 1.0 - 1e-12);
            assert!(st.mean_in_degree >= 0.0);
            assert!(st.max_in_degree as f64 >= st.mean_in_degree || e == 0);
            if let Some(a) = st.powerlaw_exponent_mle {
                assert!(a > 1.0);
            }
        }
    }
}
