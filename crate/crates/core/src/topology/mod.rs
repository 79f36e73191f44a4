//! Graph containers and conversions.
//!
//! Three views of the same directed multigraph, matching how the aggregation
//! abstractions consume topology:
//!
//! * [`CooGraph`]: coordinate pairs, the scatter abstraction's native format.
//! * [`CsrGraph`]: compressed rows keyed by destination, so a row lists the
//!   in-neighborhood that reduce- and pull-based aggregation walk.
//! * [`CscGraph`]: compressed columns keyed by source, the push abstraction's
//!   outgoing view.
//!
//! Vertex ids are `u32`. Self-loops and duplicate edges are legal everywhere.
//! Constructors validate all structural invariants; once built, a graph can
//! be converted without further checks.

mod io;
mod stats;

pub use io::{parse_edge_list, read_edge_list, write_edge_list};
pub use stats::{compute_stats, global_clustering, powerlaw_mle, GraphStats};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = u32;

/// Edge ordering guarantee carried by a [`CooGraph`].
///
/// `Source` means lexicographic by `(src, dst)`; `Destination` means
/// lexicographic by `(dst, src)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SortOrder {
    Source,
    Destination,
    Unsorted,
}

/// Directed multigraph in coordinate format with optional per-edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CooGraph {
    num_vertices: usize,
    src: Vec<VertexId>,
    dst: Vec<VertexId>,
    weights: Option<Vec<f32>>,
    sorted_by: SortOrder,
}

fn check_ids(ids: &[VertexId], num_vertices: usize) -> Result<()> {
    for (index, &id) in ids.iter().enumerate() {
        if (id as usize) >= num_vertices {
            return Err(Error::VertexOutOfRange {
                index,
                id,
                num_vertices,
            });
        }
    }
    Ok(())
}

fn check_weights(weights: &Option<Vec<f32>>, num_edges: usize) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != num_edges {
            return Err(Error::ShapeMismatch {
                context: "edge weights",
                expected: format!("{num_edges} values"),
                actual: format!("{} values", w.len()),
            });
        }
        for (i, v) in w.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: 0 });
            }
        }
    }
    Ok(())
}

impl CooGraph {
    /// Graph with `num_vertices` vertices and no edges.
    pub fn empty(num_vertices: usize) -> Self {
        CooGraph {
            num_vertices,
            src: Vec::new(),
            dst: Vec::new(),
            weights: None,
            sorted_by: SortOrder::Source,
        }
    }

    /// Builds a canonical COO graph from `(src, dst)` pairs, sorting stably
    /// by `(src, dst)` and keeping duplicates. `weights[i]` belongs to
    /// `edges[i]` and follows its edge through the sort.
    pub fn from_edge_list(
        edges: &[(VertexId, VertexId)],
        num_vertices: usize,
        weights: Option<Vec<f32>>,
    ) -> Result<Self> {
        check_weights(&weights, edges.len())?;
        for (index, &(s, d)) in edges.iter().enumerate() {
            let bad = if (s as usize) >= num_vertices {
                Some(s)
            } else if (d as usize) >= num_vertices {
                Some(d)
            } else {
                None
            };
            if let Some(id) = bad {
                return Err(Error::VertexOutOfRange {
                    index,
                    id,
                    num_vertices,
                });
            }
        }
        if edges.len() > u32::MAX as usize {
            return Err(Error::InvalidParameter {
                name: "edges",
                reason: format!("{} edges exceed u32 edge addressing", edges.len()),
            });
        }
        let mut perm: Vec<u32> = (0..edges.len() as u32).collect();
        perm.sort_by_key(|&e| edges[e as usize]);
        let src = perm.iter().map(|&e| edges[e as usize].0).collect();
        let dst = perm.iter().map(|&e| edges[e as usize].1).collect();
        let weights = weights.map(|w| perm.iter().map(|&e| w[e as usize]).collect());
        Ok(CooGraph {
            num_vertices,
            src,
            dst,
            weights,
            sorted_by: SortOrder::Source,
        })
    }

    /// Builds a COO graph from parallel arrays, verifying the claimed sort
    /// order instead of re-sorting.
    pub fn from_parts(
        num_vertices: usize,
        src: Vec<VertexId>,
        dst: Vec<VertexId>,
        weights: Option<Vec<f32>>,
        sorted_by: SortOrder,
    ) -> Result<Self> {
        if src.len() != dst.len() {
            return Err(Error::ShapeMismatch {
                context: "CooGraph::from_parts",
                expected: format!("{} destinations", src.len()),
                actual: format!("{} destinations", dst.len()),
            });
        }
        if src.len() > u32::MAX as usize {
            return Err(Error::InvalidParameter {
                name: "edges",
                reason: format!("{} edges exceed u32 edge addressing", src.len()),
            });
        }
        check_ids(&src, num_vertices)?;
        check_ids(&dst, num_vertices)?;
        check_weights(&weights, src.len())?;
        let ordered = match sorted_by {
            SortOrder::Source => (1..src.len()).all(|i| (src[i - 1], dst[i - 1]) <= (src[i], dst[i])),
            SortOrder::Destination => {
                (1..src.len()).all(|i| (dst[i - 1], src[i - 1]) <= (dst[i], src[i]))
            }
            SortOrder::Unsorted => true,
        };
        if !ordered {
            return Err(Error::InvalidStructure {
                format: "COO",
                reason: format!("edges do not satisfy claimed {sorted_by:?} order"),
            });
        }
        Ok(CooGraph {
            num_vertices,
            src,
            dst,
            weights,
            sorted_by,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.src.len()
    }

    pub fn src(&self) -> &[VertexId] {
        &self.src
    }

    pub fn dst(&self) -> &[VertexId] {
        &self.dst
    }

    pub fn weights(&self) -> Option<&[f32]> {
        self.weights.as_deref()
    }

    pub fn sorted_by(&self) -> SortOrder {
        self.sorted_by
    }

    #[inline]
    pub fn edge(&self, e: usize) -> (VertexId, VertexId) {
        (self.src[e], self.dst[e])
    }

    /// Number of incoming edges per vertex, duplicates counted.
    pub fn in_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.num_vertices];
        for &d in &self.dst {
            deg[d as usize] += 1;
        }
        deg
    }

    /// Number of outgoing edges per vertex, duplicates counted.
    pub fn out_degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.num_vertices];
        for &s in &self.src {
            deg[s as usize] += 1;
        }
        deg
    }

    /// Canonical copy sorted by `(src, dst)`.
    pub fn canonicalized(&self) -> CooGraph {
        if self.sorted_by == SortOrder::Source {
            return self.clone();
        }
        let edges: Vec<(VertexId, VertexId)> =
            self.src.iter().copied().zip(self.dst.iter().copied()).collect();
        CooGraph::from_edge_list(&edges, self.num_vertices, self.weights.clone())
            .expect("canonicalizing a valid graph cannot fail")
    }

    /// Undirected closure with set semantics: for every edge `(u, v)` both
    /// directions are present exactly once. Duplicates collapse; when
    /// weighted, the first occurrence in the original edge order wins and is
    /// shared by both directions.
    pub fn symmetrized(&self) -> CooGraph {
        match &self.weights {
            None => {
                let mut pairs: Vec<(VertexId, VertexId)> = Vec::with_capacity(self.src.len() * 2);
                for e in 0..self.src.len() {
                    pairs.push((self.src[e], self.dst[e]));
                    pairs.push((self.dst[e], self.src[e]));
                }
                pairs.sort_unstable();
                pairs.dedup();
                CooGraph::from_edge_list(&pairs, self.num_vertices, None)
                    .expect("symmetrizing a valid graph cannot fail")
            }
            Some(w) => {
                let mut triples: Vec<(VertexId, VertexId, f32)> =
                    Vec::with_capacity(self.src.len() * 2);
                for (e, &weight) in w.iter().enumerate() {
                    triples.push((self.src[e], self.dst[e], weight));
                    triples.push((self.dst[e], self.src[e], weight));
                }
                triples.sort_by_key(|&(s, d, _)| (s, d));
                triples.dedup_by_key(|&mut (s, d, _)| (s, d));
                let pairs: Vec<(VertexId, VertexId)> =
                    triples.iter().map(|&(s, d, _)| (s, d)).collect();
                let weights: Vec<f32> = triples.iter().map(|&(_, _, w)| w).collect();
                CooGraph::from_edge_list(&pairs, self.num_vertices, Some(weights))
                    .expect("symmetrizing a valid graph cannot fail")
            }
        }
    }

    /// Converts to CSR (rows keyed by destination, columns sorted ascending).
    pub fn to_csr(&self) -> CsrGraph {
        self.to_csr_with_perm().0
    }

    /// CSR conversion that also reports, for each CSR slot, the index of the
    /// originating edge in canonical COO order.
    pub fn to_csr_with_perm(&self) -> (CsrGraph, Vec<u32>) {
        let canon;
        let g = if self.sorted_by == SortOrder::Source {
            self
        } else {
            canon = self.canonicalized();
            &canon
        };
        let n = g.num_vertices;
        let e = g.num_edges();
        let mut row_ptr = vec![0usize; n + 1];
        for &d in &g.dst {
            row_ptr[d as usize + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut cursor = row_ptr.clone();
        let mut col_idx = vec![0 as VertexId; e];
        let mut perm = vec![0u32; e];
        let mut weights = g.weights.as_ref().map(|_| vec![0.0f32; e]);
        for edge in 0..e {
            let d = g.dst[edge] as usize;
            let pos = cursor[d];
            cursor[d] += 1;
            col_idx[pos] = g.src[edge];
            perm[pos] = edge as u32;
            if let (Some(out), Some(w)) = (weights.as_mut(), g.weights.as_ref()) {
                out[pos] = w[edge];
            }
        }
        (
            CsrGraph {
                num_vertices: n,
                row_ptr,
                col_idx,
                weights,
            },
            perm,
        )
    }

    /// Converts to CSC (columns keyed by source, rows sorted ascending).
    pub fn to_csc(&self) -> CscGraph {
        self.to_csc_with_perm().0
    }

    /// CSC conversion that also reports, for each CSC slot, the index of the
    /// originating edge in canonical COO order.
    pub fn to_csc_with_perm(&self) -> (CscGraph, Vec<u32>) {
        let canon;
        let g = if self.sorted_by == SortOrder::Source {
            self
        } else {
            canon = self.canonicalized();
            &canon
        };
        let n = g.num_vertices;
        let e = g.num_edges();
        let mut col_ptr = vec![0usize; n + 1];
        for &s in &g.src {
            col_ptr[s as usize + 1] += 1;
        }
        for i in 0..n {
            col_ptr[i + 1] += col_ptr[i];
        }
        // Source-sorted input scatters each column's edges in dst order.
        let mut cursor = col_ptr.clone();
        let mut row_idx = vec![0 as VertexId; e];
        let mut perm = vec![0u32; e];
        let mut weights = g.weights.as_ref().map(|_| vec![0.0f32; e]);
        for edge in 0..e {
            let s = g.src[edge] as usize;
            let pos = cursor[s];
            cursor[s] += 1;
            row_idx[pos] = g.dst[edge];
            perm[pos] = edge as u32;
            if let (Some(out), Some(w)) = (weights.as_mut(), g.weights.as_ref()) {
                out[pos] = w[edge];
            }
        }
        (
            CscGraph {
                num_vertices: n,
                col_ptr,
                row_idx,
                weights,
            },
            perm,
        )
    }

    /// Heap footprint of the edge arrays in bytes.
    pub fn heap_bytes(&self) -> u64 {
        let ids = (self.src.len() + self.dst.len()) * std::mem::size_of::<VertexId>();
        let w = self.weights.as_ref().map_or(0, |w| w.len() * 4);
        (ids + w) as u64
    }
}

/// Compressed sparse rows keyed by destination: `row(v)` lists the sources of
/// v's incoming edges.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrGraph {
    num_vertices: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<VertexId>,
    weights: Option<Vec<f32>>,
}

fn check_compressed(
    format: &'static str,
    num_vertices: usize,
    ptr: &[usize],
    idx: &[VertexId],
) -> Result<()> {
    let fail = |reason: String| Error::InvalidStructure { format, reason };
    if ptr.len() != num_vertices + 1 {
        return Err(fail(format!(
            "pointer array has {} entries, expected {}",
            ptr.len(),
            num_vertices + 1
        )));
    }
    if ptr[0] != 0 {
        return Err(fail(format!("pointer array starts at {}, expected 0", ptr[0])));
    }
    for i in 1..ptr.len() {
        if ptr[i] < ptr[i - 1] {
            return Err(fail(format!(
                "pointer array decreases at position {i}: {} -> {}",
                ptr[i - 1],
                ptr[i]
            )));
        }
    }
    if ptr[num_vertices] != idx.len() {
        return Err(fail(format!(
            "pointer array ends at {}, but there are {} index entries",
            ptr[num_vertices],
            idx.len()
        )));
    }
    check_ids(idx, num_vertices)
}

impl CsrGraph {
    pub fn new(
        num_vertices: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<VertexId>,
        weights: Option<Vec<f32>>,
    ) -> Result<Self> {
        check_compressed("CSR", num_vertices, &row_ptr, &col_idx)?;
        check_weights(&weights, col_idx.len())?;
        Ok(CsrGraph {
            num_vertices,
            row_ptr,
            col_idx,
            weights,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[VertexId] {
        &self.col_idx
    }

    pub fn weights(&self) -> Option<&[f32]> {
        self.weights.as_deref()
    }

    /// Sources of the edges arriving at `v`.
    #[inline]
    pub fn row(&self, v: usize) -> &[VertexId] {
        &self.col_idx[self.row_ptr[v]..self.row_ptr[v + 1]]
    }

    /// Weights aligned with [`CsrGraph::row`].
    #[inline]
    pub fn row_weights(&self, v: usize) -> Option<&[f32]> {
        self.weights
            .as_ref()
            .map(|w| &w[self.row_ptr[v]..self.row_ptr[v + 1]])
    }

    /// Copy of the structure with new weights aligned to CSR slot order.
    pub fn with_weights(&self, weights: Vec<f32>) -> Result<CsrGraph> {
        check_weights(&Some(weights.clone()), self.col_idx.len())?;
        Ok(CsrGraph {
            num_vertices: self.num_vertices,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            weights: Some(weights),
        })
    }

    /// Converts back to canonical COO.
    pub fn to_coo(&self) -> CooGraph {
        let mut edges = Vec::with_capacity(self.num_edges());
        let mut weights = self.weights.as_ref().map(|_| Vec::with_capacity(self.num_edges()));
        for v in 0..self.num_vertices {
            for (k, &s) in self.row(v).iter().enumerate() {
                edges.push((s, v as VertexId));
                if let (Some(out), Some(w)) = (weights.as_mut(), self.row_weights(v)) {
                    out.push(w[k]);
                }
            }
        }
        CooGraph::from_edge_list(&edges, self.num_vertices, weights)
            .expect("converting a valid CSR cannot fail")
    }

    pub fn heap_bytes(&self) -> u64 {
        let ptr = self.row_ptr.len() * std::mem::size_of::<usize>();
        let idx = self.col_idx.len() * std::mem::size_of::<VertexId>();
        let w = self.weights.as_ref().map_or(0, |w| w.len() * 4);
        (ptr + idx + w) as u64
    }
}

/// Compressed sparse columns keyed by source: `col(u)` lists the destinations
/// of u's outgoing edges.
#[derive(Debug, Clone, PartialEq)]
pub struct CscGraph {
    num_vertices: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<VertexId>,
    weights: Option<Vec<f32>>,
}

impl CscGraph {
    pub fn new(
        num_vertices: usize,
        col_ptr: Vec<usize>,
        row_idx: Vec<VertexId>,
        weights: Option<Vec<f32>>,
    ) -> Result<Self> {
        check_compressed("CSC", num_vertices, &col_ptr, &row_idx)?;
        check_weights(&weights, row_idx.len())?;
        Ok(CscGraph {
            num_vertices,
            col_ptr,
            row_idx,
            weights,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[usize] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[VertexId] {
        &self.row_idx
    }

    pub fn weights(&self) -> Option<&[f32]> {
        self.weights.as_deref()
    }

    /// Destinations of the edges leaving `u`.
    #[inline]
    pub fn col(&self, u: usize) -> &[VertexId] {
        &self.row_idx[self.col_ptr[u]..self.col_ptr[u + 1]]
    }

    /// Weights aligned with [`CscGraph::col`].
    #[inline]
    pub fn col_weights(&self, u: usize) -> Option<&[f32]> {
        self.weights
            .as_ref()
            .map(|w| &w[self.col_ptr[u]..self.col_ptr[u + 1]])
    }

    /// Copy of the structure with new weights aligned to CSC slot order.
    pub fn with_weights(&self, weights: Vec<f32>) -> Result<CscGraph> {
        check_weights(&Some(weights.clone()), self.row_idx.len())?;
        Ok(CscGraph {
            num_vertices: self.num_vertices,
            col_ptr: self.col_ptr.clone(),
            row_idx: self.row_idx.clone(),
            weights: Some(weights),
        })
    }

    /// Converts back to canonical COO.
    pub fn to_coo(&self) -> CooGraph {
        let mut edges = Vec::with_capacity(self.num_edges());
        let mut weights = self.weights.as_ref().map(|_| Vec::with_capacity(self.num_edges()));
        for u in 0..self.num_vertices {
            for (k, &d) in self.col(u).iter().enumerate() {
                edges.push((u as VertexId, d));
                if let (Some(out), Some(w)) = (weights.as_mut(), self.col_weights(u)) {
                    out.push(w[k]);
                }
            }
        }
        CooGraph::from_edge_list(&edges, self.num_vertices, weights)
            .expect("converting a valid CSC cannot fail")
    }

    pub fn heap_bytes(&self) -> u64 {
        let ptr = self.col_ptr.len() * std::mem::size_of::<usize>();
        let idx = self.row_idx.len() * std::mem::size_of::<VertexId>();
        let w = self.weights.as_ref().map_or(0, |w| w.len() * 4);
        (ptr + idx + w) as u64
    }
}

/// All three views of one graph, built once so kernels can be compared on
/// identical topology without paying conversion costs inside timed regions.
#[derive(Debug, Clone)]
pub struct GraphViews {
    coo: CooGraph,
    csr: CsrGraph,
    csc: CscGraph,
    csr_perm: Vec<u32>,
    csc_perm: Vec<u32>,
}

impl GraphViews {
    pub fn from_coo(coo: CooGraph) -> Self {
        let coo = coo.canonicalized();
        let (csr, csr_perm) = coo.to_csr_with_perm();
        let (csc, csc_perm) = coo.to_csc_with_perm();
        GraphViews {
            coo,
            csr,
            csc,
            csr_perm,
            csc_perm,
        }
    }

    pub fn coo(&self) -> &CooGraph {
        &self.coo
    }

    pub fn csr(&self) -> &CsrGraph {
        &self.csr
    }

    pub fn csc(&self) -> &CscGraph {
        &self.csc
    }

    pub fn num_vertices(&self) -> usize {
        self.coo.num_vertices()
    }

    pub fn num_edges(&self) -> usize {
        self.coo.num_edges()
    }

    /// Rebuilds the views with per-edge weights given in canonical COO edge
    /// order, permuting them into CSR and CSC slot order.
    pub fn with_coo_weights(&self, weights: &[f32]) -> Result<GraphViews> {
        if weights.len() != self.num_edges() {
            return Err(Error::ShapeMismatch {
                context: "GraphViews::with_coo_weights",
                expected: format!("{} weights", self.num_edges()),
                actual: format!("{} weights", weights.len()),
            });
        }
        let coo = CooGraph::from_parts(
            self.coo.num_vertices(),
            self.coo.src().to_vec(),
            self.coo.dst().to_vec(),
            Some(weights.to_vec()),
            SortOrder::Source,
        )?;
        let csr = self
            .csr
            .with_weights(self.csr_perm.iter().map(|&e| weights[e as usize]).collect())?;
        let csc = self
            .csc
            .with_weights(self.csc_perm.iter().map(|&e| weights[e as usize]).collect())?;
        Ok(GraphViews {
            coo,
            csr,
            csc,
            csr_perm: self.csr_perm.clone(),
            csc_perm: self.csc_perm.clone(),
        })
    }

    pub fn heap_bytes(&self) -> u64 {
        self.coo.heap_bytes()
            + self.csr.heap_bytes()
            + self.csc.heap_bytes()
            + (self.csr_perm.len() * 4 + self.csc_perm.len() * 4) as u64
    }
}
