//! The four aggregation programming abstractions.
//!
//! All kernels compute the same mathematical aggregation: for each
//! destination v, reduce `w_e * x[u]` over incoming edges `e = (u, v)`. They
//! differ in traversal order and in what they materialize, which is exactly
//! what the cost counters expose:
//!
//! * scatter: edge-centric over source-sorted COO; materializes an explicit
//!   E x F message buffer, then reduces messages per destination.
//! * reduce: vertex-centric over CSR; walks each destination row and folds
//!   source features directly, no message buffer.
//! * pull: CSR SpMM; weighted-add matrix semantics, row-major traversal.
//! * push: CSC SpMM; source-major traversal accumulating into an N x F
//!   partial-sum buffer.
//!
//! Counter conventions (E edges, N vertices, F feature width, A = number of
//! destinations with at least one in-edge):
//!
//! | kernel            | messages | reads      | writes     | partial sums | peak aux bytes            |
//! |-------------------|----------|------------|------------|--------------|---------------------------|
//! | scatter_messages  | E*F      | E*F        | E*F        | 0            | 4*E*F                     |
//! | gather_reduce     | 0        | E*F (+A*F) | E*F (+A*F) | F if E>0     | grouping + 4*N*F          |
//! | scatter_aggregate | E*F      | 2*E*F (+..)| 2*E*F (+..)| F if E>0     | 4*E*F + grouping + 4*N*F  |
//! | reduce_aggregate  | 0        | E*F (+A*F) | E*F (+A*F) | F if E>0     | 4*N*F                     |
//! | pull_spmm         | 0        | E*F        | E*F        | F if E>0     | 4*N*F                     |
//! | push_spmm         | 0        | E*F        | E*F        | N*F          | 4*N*F                     |
//!
//! where grouping = 8*(N+1) + 4*E bytes for the destination index the
//! scatter path builds, and the (+A*F) terms are the extra pass a mean
//! reduction spends dividing active rows. `edges_traversed` is E for every
//! full aggregation; the fused scatter path counts one logical traversal
//! even though it touches each edge in both stages. Peak figures include the
//! kernel's own output accumulator, since for push that buffer is the
//! defining partial-sum store.
//!
//! Parallel execution partitions by destination row (never by edge), so
//! results are bitwise identical at any thread count. push_spmm stays
//! sequential: its accumulation is keyed by source, and making it race-free
//! would change the abstraction being measured.

pub mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::features::FeatureMatrix;
use crate::topology::{CooGraph, CscGraph, CsrGraph, GraphViews, SortOrder, VertexId};

/// Reduction operator applied per destination neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReduceOp {
    Add,
    Max,
    Mean,
}

impl ReduceOp {
    pub const ALL: [ReduceOp; 3] = [ReduceOp::Add, ReduceOp::Max, ReduceOp::Mean];

    pub fn name(&self) -> &'static str {
        match self {
            ReduceOp::Add => "add",
            ReduceOp::Max => "max",
            ReduceOp::Mean => "mean",
        }
    }
}

impl std::str::FromStr for ReduceOp {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "add" => Ok(ReduceOp::Add),
            "max" => Ok(ReduceOp::Max),
            "mean" => Ok(ReduceOp::Mean),
            other => Err(Error::InvalidParameter {
                name: "op",
                reason: format!("unknown reduce op `{other}` (expected add, max, or mean)"),
            }),
        }
    }
}

/// One of the four aggregation programming abstractions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abstraction {
    Scatter,
    Reduce,
    Pull,
    Push,
}

impl Abstraction {
    pub const ALL: [Abstraction; 4] = [
        Abstraction::Scatter,
        Abstraction::Reduce,
        Abstraction::Pull,
        Abstraction::Push,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Abstraction::Scatter => "scatter",
            Abstraction::Reduce => "reduce",
            Abstraction::Pull => "pull",
            Abstraction::Push => "push",
        }
    }

    /// Matrix-view abstractions only support weighted-add semantics; max has
    /// no SpMM formulation.
    pub fn supports(&self, op: ReduceOp) -> bool {
        match self {
            Abstraction::Scatter | Abstraction::Reduce => true,
            Abstraction::Pull | Abstraction::Push => op != ReduceOp::Max,
        }
    }
}

impl std::str::FromStr for Abstraction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scatter" => Ok(Abstraction::Scatter),
            "reduce" => Ok(Abstraction::Reduce),
            "pull" => Ok(Abstraction::Pull),
            "push" => Ok(Abstraction::Push),
            other => Err(Error::InvalidParameter {
                name: "abstraction",
                reason: format!(
                    "unknown abstraction `{other}` (expected scatter, reduce, pull, or push)"
                ),
            }),
        }
    }
}

/// Deterministic, machine-independent cost model of one aggregation run.
/// All element counts are feature elements (f32 values), not bytes, except
/// `peak_aux_bytes`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostCounters {
    /// Feature elements written into an explicit per-edge message buffer.
    pub messages_materialized: u64,
    /// Feature elements read from matrices.
    pub feature_reads: u64,
    /// Feature elements written to matrices (messages and accumulators).
    pub feature_writes: u64,
    /// Peak feature elements held in auxiliary accumulators at once.
    pub partial_sum_elements: u64,
    /// Logical edge visits of the aggregation pass.
    pub edges_traversed: u64,
    /// Largest simultaneously-live auxiliary allocation in bytes, including
    /// the kernel's own output accumulator.
    pub peak_aux_bytes: u64,
}

/// Explicit per-edge messages: row e holds the message of the e-th edge in
/// canonical COO order.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageBuffer {
    matrix: FeatureMatrix,
}

impl MessageBuffer {
    pub fn matrix(&self) -> &FeatureMatrix {
        &self.matrix
    }

    pub fn num_messages(&self) -> usize {
        self.matrix.rows()
    }

    pub fn feature_len(&self) -> usize {
        self.matrix.cols()
    }
}

/// Stable index from destination vertex to the edge ids entering it. This is
/// what makes scatter-path reduction deterministic under parallelism: each
/// destination row reduces its own edge list in ascending edge order.
pub(crate) struct DstGrouping {
    offsets: Vec<usize>,
    edge_ids: Vec<u32>,
}

impl DstGrouping {
    pub(crate) fn build(num_vertices: usize, dst: &[VertexId]) -> Self {
        let mut offsets = vec![0usize; num_vertices + 1];
        for &d in dst {
            offsets[d as usize + 1] += 1;
        }
        for i in 0..num_vertices {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut edge_ids = vec![0u32; dst.len()];
        for (e, &d) in dst.iter().enumerate() {
            let pos = cursor[d as usize];
            cursor[d as usize] += 1;
            edge_ids[pos] = e as u32;
        }
        DstGrouping { offsets, edge_ids }
    }

    #[inline]
    pub(crate) fn edges_of(&self, v: usize) -> &[u32] {
        &self.edge_ids[self.offsets[v]..self.offsets[v + 1]]
    }

    pub(crate) fn heap_bytes(&self) -> u64 {
        (self.offsets.len() * std::mem::size_of::<usize>() + self.edge_ids.len() * 4) as u64
    }
}

fn check_features(x: &FeatureMatrix, num_vertices: usize) -> Result<()> {
    if x.rows() != num_vertices {
        return Err(Error::ShapeMismatch {
            context: "aggregation features",
            expected: format!("{num_vertices} rows"),
            actual: format!("{} rows", x.rows()),
        });
    }
    Ok(())
}

fn edge_weights_or_err(
    weights: Option<&[f32]>,
    use_edge_weight: bool,
) -> Result<Option<&[f32]>> {
    if !use_edge_weight {
        return Ok(None);
    }
    match weights {
        Some(w) => Ok(Some(w)),
        None => Err(Error::InvalidParameter {
            name: "use_edge_weight",
            reason: "edge weights requested but the graph carries none".into(),
        }),
    }
}

/// Scatter stage: writes `w_e * x[source(e)]` into row e of a fresh message
/// buffer, edge-parallel.
pub fn scatter_messages(
    g: &CooGraph,
    x: &FeatureMatrix,
    use_edge_weight: bool,
) -> Result<(MessageBuffer, CostCounters)> {
    if g.sorted_by() != SortOrder::Source {
        return Err(Error::ContractViolation(
            "scatter requires a source-sorted COO graph".into(),
        ));
    }
    check_features(x, g.num_vertices())?;
    let w = edge_weights_or_err(g.weights(), use_edge_weight)?;
    let e = g.num_edges();
    let f = x.cols();
    let mut msgs = FeatureMatrix::zeros(e, f);
    let src = g.src();
    exec::for_each_chunk_mut(msgs.data_mut(), f, |edge, row| {
        let xrow = x.row(src[edge] as usize);
        match w {
            None => row.copy_from_slice(xrow),
            Some(w) => {
                let we = w[edge];
                for (o, &v) in row.iter_mut().zip(xrow.iter()) {
                    *o = we * v;
                }
            }
        }
    });
    let ef = (e * f) as u64;
    let counters = CostCounters {
        messages_materialized: ef,
        feature_reads: ef,
        feature_writes: ef,
        partial_sum_elements: 0,
        edges_traversed: e as u64,
        peak_aux_bytes: msgs.heap_bytes(),
    };
    Ok((MessageBuffer { matrix: msgs }, counters))
}

/// Gather stage: reduces messages per destination in ascending edge order.
/// Empty neighborhoods yield zero rows for every operator.
pub fn gather_reduce(
    msgs: &MessageBuffer,
    g: &CooGraph,
    op: ReduceOp,
) -> Result<(FeatureMatrix, CostCounters)> {
    if msgs.num_messages() != g.num_edges() {
        return Err(Error::ShapeMismatch {
            context: "gather_reduce messages",
            expected: format!("{} rows", g.num_edges()),
            actual: format!("{} rows", msgs.num_messages()),
        });
    }
    let n = g.num_vertices();
    let e = g.num_edges();
    let f = msgs.feature_len();
    let grouping = DstGrouping::build(n, g.dst());
    let mut out = FeatureMatrix::zeros(n, f);
    let m = msgs.matrix();
    exec::for_each_chunk_mut(out.data_mut(), f, |v, row| {
        let edges = grouping.edges_of(v);
        match op {
            ReduceOp::Add | ReduceOp::Mean => {
                for &eid in edges {
                    for (o, &mv) in row.iter_mut().zip(m.row(eid as usize).iter()) {
                        *o += mv;
                    }
                }
                if op == ReduceOp::Mean && !edges.is_empty() {
                    let inv = 1.0 / edges.len() as f32;
                    for o in row.iter_mut() {
                        *o *= inv;
                    }
                }
            }
            ReduceOp::Max => {
                for (k, &eid) in edges.iter().enumerate() {
                    let mrow = m.row(eid as usize);
                    if k == 0 {
                        row.copy_from_slice(mrow);
                    } else {
                        for (o, &mv) in row.iter_mut().zip(mrow.iter()) {
                            if mv > *o {
                                *o = mv;
                            }
                        }
                    }
                }
            }
        }
    });
    let ef = (e * f) as u64;
    let active = if op == ReduceOp::Mean {
        grouping_active_rows(&grouping, n) as u64 * f as u64
    } else {
        0
    };
    let counters = CostCounters {
        messages_materialized: 0,
        feature_reads: ef + active,
        feature_writes: ef + active,
        partial_sum_elements: if e > 0 { f as u64 } else { 0 },
        edges_traversed: e as u64,
        peak_aux_bytes: grouping.heap_bytes() + out.heap_bytes(),
    };
    Ok((out, counters))
}

fn grouping_active_rows(grouping: &DstGrouping, n: usize) -> usize {
    (0..n).filter(|&v| !grouping.edges_of(v).is_empty()).count()
}

/// Fused scatter-based aggregation: materialize all messages, then gather.
/// The message buffer stays live through the gather stage, so the peak is
/// the sum of both stages' allocations.
pub fn scatter_aggregate(
    g: &CooGraph,
    x: &FeatureMatrix,
    op: ReduceOp,
    use_edge_weight: bool,
) -> Result<(FeatureMatrix, CostCounters)> {
    let (msgs, c1) = scatter_messages(g, x, use_edge_weight)?;
    let (out, c2) = gather_reduce(&msgs, g, op)?;
    let counters = CostCounters {
        messages_materialized: c1.messages_materialized + c2.messages_materialized,
        feature_reads: c1.feature_reads + c2.feature_reads,
        feature_writes: c1.feature_writes + c2.feature_writes,
        partial_sum_elements: c1.partial_sum_elements.max(c2.partial_sum_elements),
        edges_traversed: g.num_edges() as u64,
        peak_aux_bytes: c1.peak_aux_bytes + c2.peak_aux_bytes,
    };
    Ok((out, counters))
}

/// Reduce-based aggregation: segmented reduction over CSR rows, folding
/// source features left to right in CSR entry order. No message buffer.
pub fn reduce_aggregate(
    g: &CsrGraph,
    x: &FeatureMatrix,
    op: ReduceOp,
    use_edge_weight: bool,
) -> Result<(FeatureMatrix, CostCounters)> {
    check_features(x, g.num_vertices())?;
    edge_weights_or_err(g.weights(), use_edge_weight)?;
    let n = g.num_vertices();
    let e = g.num_edges();
    let f = x.cols();
    let mut out = FeatureMatrix::zeros(n, f);
    let mut active = 0u64;
    if op == ReduceOp::Mean {
        active = (0..n).filter(|&v| !g.row(v).is_empty()).count() as u64 * f as u64;
    }
    exec::for_each_chunk_mut(out.data_mut(), f, |v, row| {
        let nbrs = g.row(v);
        let w = if use_edge_weight { g.row_weights(v) } else { None };
        match op {
            ReduceOp::Add | ReduceOp::Mean => {
                for (k, &u) in nbrs.iter().enumerate() {
                    let xrow = x.row(u as usize);
                    match w {
                        None => {
                            for (o, &xv) in row.iter_mut().zip(xrow.iter()) {
                                *o += xv;
                            }
                        }
                        Some(w) => {
                            let we = w[k];
                            for (o, &xv) in row.iter_mut().zip(xrow.iter()) {
                                *o += we * xv;
                            }
                        }
                    }
                }
                if op == ReduceOp::Mean && !nbrs.is_empty() {
                    let inv = 1.0 / nbrs.len() as f32;
                    for o in row.iter_mut() {
                        *o *= inv;
                    }
                }
            }
            ReduceOp::Max => {
                for (k, &u) in nbrs.iter().enumerate() {
                    let xrow = x.row(u as usize);
                    let we = w.map_or(1.0, |w| w[k]);
                    if k == 0 {
                        for (o, &xv) in row.iter_mut().zip(xrow.iter()) {
                            *o = we * xv;
                        }
                    } else {
                        for (o, &xv) in row.iter_mut().zip(xrow.iter()) {
                            let cand = we * xv;
                            if cand > *o {
                                *o = cand;
                            }
                        }
                    }
                }
            }
        }
    });
    let ef = (e * f) as u64;
    let counters = CostCounters {
        messages_materialized: 0,
        feature_reads: ef + active,
        feature_writes: ef + active,
        partial_sum_elements: if e > 0 { f as u64 } else { 0 },
        edges_traversed: e as u64,
        peak_aux_bytes: out.heap_bytes(),
    };
    Ok((out, counters))
}

/// Pull-based aggregation: SpMM with weighted-add matrix semantics,
/// row-major over CSR. `output = A_hat * X` where `A_hat[v][u]` sums the
/// weights of all `(u, v)` edges (1 each if unweighted).
pub fn pull_spmm(
    g: &CsrGraph,
    x: &FeatureMatrix,
    use_edge_weight: bool,
) -> Result<(FeatureMatrix, CostCounters)> {
    check_features(x, g.num_vertices())?;
    edge_weights_or_err(g.weights(), use_edge_weight)?;
    let n = g.num_vertices();
    let e = g.num_edges();
    let f = x.cols();
    let mut out = FeatureMatrix::zeros(n, f);
    exec::for_each_chunk_mut(out.data_mut(), f, |v, row| {
        let nbrs = g.row(v);
        let w = if use_edge_weight { g.row_weights(v) } else { None };
        for (k, &u) in nbrs.iter().enumerate() {
            let xrow = x.row(u as usize);
            match w {
                None => {
                    for (o, &xv) in row.iter_mut().zip(xrow.iter()) {
                        *o += xv;
                    }
                }
                Some(w) => {
                    let we = w[k];
                    for (o, &xv) in row.iter_mut().zip(xrow.iter()) {
                        *o += we * xv;
                    }
                }
            }
        }
    });
    let ef = (e * f) as u64;
    let counters = CostCounters {
        messages_materialized: 0,
        feature_reads: ef,
        feature_writes: ef,
        partial_sum_elements: if e > 0 { f as u64 } else { 0 },
        edges_traversed: e as u64,
        peak_aux_bytes: out.heap_bytes(),
    };
    Ok((out, counters))
}

/// Push-based aggregation: source-major over CSC, broadcasting each source
/// row onto its out-edges and accumulating into an N x F partial-sum buffer.
/// Runs sequentially; parallelizing would require per-destination
/// synchronization, which is the cost signature this abstraction exists to
/// expose.
pub fn push_spmm(
    g: &CscGraph,
    x: &FeatureMatrix,
    use_edge_weight: bool,
) -> Result<(FeatureMatrix, CostCounters)> {
    check_features(x, g.num_vertices())?;
    edge_weights_or_err(g.weights(), use_edge_weight)?;
    let n = g.num_vertices();
    let e = g.num_edges();
    let f = x.cols();
    let mut out = FeatureMatrix::zeros(n, f);
    for u in 0..n {
        let targets = g.col(u);
        if targets.is_empty() {
            continue;
        }
        let w = if use_edge_weight { g.col_weights(u) } else { None };
        for (k, &v) in targets.iter().enumerate() {
            let base = v as usize * f;
            let xrow = x.row(u);
            let orow = &mut out.data_mut()[base..base + f];
            match w {
                None => {
                    for (o, &xv) in orow.iter_mut().zip(xrow.iter()) {
                        *o += xv;
                    }
                }
                Some(w) => {
                    let we = w[k];
                    for (o, &xv) in orow.iter_mut().zip(xrow.iter()) {
                        *o += we * xv;
                    }
                }
            }
        }
    }
    let ef = (e * f) as u64;
    let counters = CostCounters {
        messages_materialized: 0,
        feature_reads: ef,
        feature_writes: ef,
        partial_sum_elements: (n * f) as u64,
        edges_traversed: e as u64,
        peak_aux_bytes: out.heap_bytes(),
    };
    Ok((out, counters))
}

/// Dispatches one aggregation through the chosen abstraction.
///
/// Mean on the matrix-view abstractions (pull/push) runs as weighted add
/// followed by a per-row division by in-edge count; max on pull/push is an
/// unsupported-reduce error because SpMM has no max formulation.
pub fn aggregate(
    views: &GraphViews,
    abstraction: Abstraction,
    x: &FeatureMatrix,
    op: ReduceOp,
    use_edge_weight: bool,
) -> Result<(FeatureMatrix, CostCounters)> {
    if !abstraction.supports(op) {
        return Err(Error::UnsupportedReduce {
            op: op.name(),
            abstraction: abstraction.name(),
        });
    }
    match abstraction {
        Abstraction::Scatter => scatter_aggregate(views.coo(), x, op, use_edge_weight),
        Abstraction::Reduce => reduce_aggregate(views.csr(), x, op, use_edge_weight),
        Abstraction::Pull | Abstraction::Push => {
            let (mut out, mut counters) = if abstraction == Abstraction::Pull {
                pull_spmm(views.csr(), x, use_edge_weight)?
            } else {
                push_spmm(views.csc(), x, use_edge_weight)?
            };
            if op == ReduceOp::Mean {
                divide_by_in_degree(views, &mut out, &mut counters);
            }
            Ok((out, counters))
        }
    }
}

/// Post-pass turning an add result into a mean: divide each row by its
/// in-edge count (duplicates counted), leaving zero-count rows untouched.
pub(crate) fn divide_rows_by_counts(
    out: &mut FeatureMatrix,
    counts: &[u32],
    counters: &mut CostCounters,
) {
    let f = out.cols();
    exec::for_each_chunk_mut(out.data_mut(), f.max(1), |v, row| {
        let c = counts[v];
        if c > 0 {
            let inv = 1.0 / c as f32;
            for o in row.iter_mut() {
                *o *= inv;
            }
        }
    });
    let active = counts.iter().filter(|&&c| c > 0).count() as u64 * f as u64;
    counters.feature_reads += active;
    counters.feature_writes += active;
    // The count vector is live alongside the finished output.
    counters.peak_aux_bytes += (counts.len() * 4) as u64;
}

fn divide_by_in_degree(views: &GraphViews, out: &mut FeatureMatrix, counters: &mut CostCounters) {
    let counts = views.coo().in_degrees();
    divide_rows_by_counts(out, &counts, counters);
}
