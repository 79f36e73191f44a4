//! Brute-force double-precision oracle and the equivalence checker built on
//! it.
//!
//! For add and mean the oracle materializes the explicit N x N adjacency
//! with duplicate edges summed and reduces per destination in f64. Max
//! cannot be expressed through a summed adjacency (duplicate edges with
//! different weights would collapse), so the max oracle scans the edge list
//! directly, still in f64. Products of two f32 values are exact in f64 and
//! rounding to f32 commutes with max, so max comparisons against any kernel
//! are by value equality, not tolerance.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::kernels::{aggregate, Abstraction, ReduceOp};
use crate::topology::{CooGraph, GraphViews};

/// Largest vertex count for which the dense N x N adjacency is built.
pub const DENSE_ORACLE_MAX_VERTICES: usize = 4096;

/// Row-major f64 matrix holding oracle outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct F64Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl F64Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        F64Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Rounds every entry to f32. Monotone rounding means this commutes with
    /// max, which is what makes exact max comparisons legitimate.
    pub fn to_f32(&self) -> FeatureMatrix {
        let mut out = FeatureMatrix::zeros(self.rows, self.cols);
        for (o, &v) in out.data_mut().iter_mut().zip(self.data.iter()) {
            *o = v as f32;
        }
        out
    }
}

/// Ground truth for all equivalence tests.
pub fn dense_oracle(
    g: &CooGraph,
    x: &FeatureMatrix,
    op: ReduceOp,
    use_edge_weight: bool,
) -> Result<F64Matrix> {
    if x.rows() != g.num_vertices() {
        return Err(Error::ShapeMismatch {
            context: "dense_oracle features",
            expected: format!("{} rows", g.num_vertices()),
            actual: format!("{} rows", x.rows()),
        });
    }
    if use_edge_weight && g.weights().is_none() {
        return Err(Error::InvalidParameter {
            name: "use_edge_weight",
            reason: "edge weights requested but the graph carries none".into(),
        });
    }
    let n = g.num_vertices();
    let f = x.cols();
    let e = g.num_edges();
    let weight_of = |edge: usize| -> f64 {
        if use_edge_weight {
            g.weights().unwrap()[edge] as f64
        } else {
            1.0
        }
    };
    match op {
        ReduceOp::Add | ReduceOp::Mean => {
            if n > DENSE_ORACLE_MAX_VERTICES {
                return Err(Error::InvalidParameter {
                    name: "num_vertices",
                    reason: format!(
                        "dense oracle limited to {DENSE_ORACLE_MAX_VERTICES} vertices, got {n}"
                    ),
                });
            }
            let mut adj = vec![0.0f64; n * n];
            for edge in 0..e {
                let (u, v) = g.edge(edge);
                adj[v as usize * n + u as usize] += weight_of(edge);
            }
            let in_deg = g.in_degrees();
            let mut out = F64Matrix::zeros(n, f);
            for v in 0..n {
                for u in 0..n {
                    let a = adj[v * n + u];
                    if a != 0.0 {
                        let xrow = x.row(u);
                        for (o, &xv) in out.data[v * f..(v + 1) * f].iter_mut().zip(xrow) {
                            *o += a * xv as f64;
                        }
                    }
                }
                if op == ReduceOp::Mean && in_deg[v] > 0 {
                    let inv = 1.0 / in_deg[v] as f64;
                    for j in 0..f {
                        out.data[v * f + j] *= inv;
                    }
                }
            }
            Ok(out)
        }
        ReduceOp::Max => {
            let mut out = F64Matrix::zeros(n, f);
            let mut seen = vec![false; n];
            for edge in 0..e {
                let (u, v) = g.edge(edge);
                let w = weight_of(edge);
                let xrow = x.row(u as usize);
                let base = v as usize * f;
                let row_out = &mut out.data[base..base + f];
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    for (o, &xv) in row_out.iter_mut().zip(xrow) {
                        *o = w * xv as f64;
                    }
                } else {
                    for (o, &xv) in row_out.iter_mut().zip(xrow) {
                        let cand = w * xv as f64;
                        if cand > *o {
                            *o = cand;
                        }
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Largest absolute elementwise difference, computed in f64.
pub fn max_abs_diff(a: &FeatureMatrix, reference: &F64Matrix) -> f64 {
    a.data()
        .iter()
        .zip(reference.data().iter())
        .map(|(&p, &q)| (p as f64 - q).abs())
        .fold(0.0, f64::max)
}

/// Max-norm relative error of `a` against the oracle: the largest absolute
/// difference divided by the oracle's largest magnitude. Zero differences
/// give zero regardless of the oracle's scale.
pub fn matrix_rel_error(a: &FeatureMatrix, reference: &F64Matrix) -> f64 {
    let diff = max_abs_diff(a, reference);
    if diff == 0.0 {
        return 0.0;
    }
    let scale = reference
        .data()
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    diff / scale
}

/// Max-norm relative error between two f32 matrices, treating `reference`
/// as ground truth (promoted to f64).
pub fn pairwise_rel_error(a: &FeatureMatrix, reference: &FeatureMatrix) -> f64 {
    matrix_rel_error(a, &to_f64(reference))
}

/// One comparison made by [`verify_views`].
#[derive(Debug, Clone, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub max_abs_diff: f64,
    pub rel_error: f64,
    pub exact: bool,
    pub pass: bool,
}

/// Result of running the equivalence suite on one graph.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub num_vertices: usize,
    pub num_edges: usize,
    pub feature_len: usize,
    pub seed: u64,
    pub rtol: f64,
    /// "dense-oracle" for graphs the N x N oracle can afford, else
    /// "pairwise" with the scatter path as reference.
    pub mode: String,
    pub checks: Vec<VerifyCheck>,
    pub passed: bool,
}

fn tolerance_check(name: String, out: &FeatureMatrix, reference: &F64Matrix, rtol: f64) -> VerifyCheck {
    let diff = max_abs_diff(out, reference);
    let rel = matrix_rel_error(out, reference);
    VerifyCheck {
        name,
        max_abs_diff: diff,
        rel_error: rel,
        exact: false,
        pass: rel <= rtol,
    }
}

fn exact_check(name: String, out: &FeatureMatrix, reference: &FeatureMatrix) -> VerifyCheck {
    let mut diff = 0.0f64;
    let mut equal = true;
    for (&p, &q) in out.data().iter().zip(reference.data().iter()) {
        if p != q {
            equal = false;
        }
        diff = diff.max((p as f64 - q as f64).abs());
    }
    VerifyCheck {
        name,
        max_abs_diff: diff,
        rel_error: if equal { 0.0 } else { diff },
        exact: true,
        pass: equal,
    }
}

fn to_f64(m: &FeatureMatrix) -> F64Matrix {
    let mut out = F64Matrix::zeros(m.rows(), m.cols());
    for (o, &v) in out.data.iter_mut().zip(m.data().iter()) {
        *o = v as f64;
    }
    out
}

/// Runs every legal abstraction against ground truth on seeded random
/// features. Graphs small enough for the dense oracle are checked against
/// it; larger graphs fall back to pairwise comparison with the scatter path
/// as reference (max always keeps its edge-scan oracle).
pub fn verify_views(
    views: &GraphViews,
    feature_len: usize,
    seed: u64,
    rtol: f64,
) -> Result<VerifyReport> {
    let n = views.num_vertices();
    let weighted = views.coo().weights().is_some();
    let x = FeatureMatrix::random(n, feature_len, seed);
    let dense_mode = n <= DENSE_ORACLE_MAX_VERTICES;
    let mut checks = Vec::new();
    for op in [ReduceOp::Add, ReduceOp::Mean] {
        if dense_mode {
            let reference = dense_oracle(views.coo(), &x, op, weighted)?;
            for a in Abstraction::ALL {
                let (out, _) = aggregate(views, a, &x, op, weighted)?;
                checks.push(tolerance_check(
                    format!("{}/{} vs oracle", a.name(), op.name()),
                    &out,
                    &reference,
                    rtol,
                ));
            }
        } else {
            let (reference, _) = aggregate(views, Abstraction::Scatter, &x, op, weighted)?;
            let ref64 = to_f64(&reference);
            for a in [Abstraction::Reduce, Abstraction::Pull, Abstraction::Push] {
                let (out, _) = aggregate(views, a, &x, op, weighted)?;
                checks.push(tolerance_check(
                    format!("{}/{} vs scatter", a.name(), op.name()),
                    &out,
                    &ref64,
                    rtol,
                ));
            }
        }
    }
    // Max has an O(E*F) oracle at any scale, and matches must be exact.
    let max_ref = dense_oracle(views.coo(), &x, ReduceOp::Max, weighted)?.to_f32();
    for a in [Abstraction::Scatter, Abstraction::Reduce] {
        let (out, _) = aggregate(views, a, &x, ReduceOp::Max, weighted)?;
        checks.push(exact_check(
            format!("{}/max vs oracle", a.name()),
            &out,
            &max_ref,
        ));
    }
    let passed = checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        num_vertices: n,
        num_edges: views.num_edges(),
        feature_len,
        seed,
        rtol,
        mode: if dense_mode { "dense-oracle" } else { "pairwise" }.into(),
        checks,
        passed,
    })
}
