//! GNN layer kernels built on the aggregation abstractions.
//!
//! Four message-passing layers with distinct aggregation signatures:
//!
//! * gcn: symmetric normalization over the self-loop-augmented graph. The
//!   dense transform runs first, so aggregation moves `out_dim`-wide rows.
//!   The reduction operator is configurable; every other model fixes add.
//! * gin: sum aggregation at input width, then `(1 + eps) * x` residual and
//!   the dense combine. Aggregate-then-combine is the defining order: its
//!   counters scale with `in_dim`, not `out_dim`.
//! * gat: single-head attention. Scores need per-destination softmax
//!   normalization, which only the scatter and reduce abstractions can
//!   express; requesting pull or push is an unsupported combination.
//! * pdn: scalar edge weights learned from edge features via a sigmoid gate,
//!   then weighted-add aggregation under any abstraction.
//!
//! Cost counters cover the aggregation side only: the dense transforms
//! (`x * W`, the gin combine) are ordinary matmuls whose traffic would drown
//! the signal the counters exist to expose. Model-specific feature traffic
//! that is part of aggregation is counted: the gin residual adds `N*F` reads
//! and writes, gat attention adds `2*N*F` reads for the per-vertex score dot
//! products, and pdn adds `E*edge_feature_len` reads. Scalar per-edge score
//! traffic is not feature traffic and is not counted.
//!
//! `peak_aux_bytes` in the returned counters is replaced by a layer-level
//! figure: everything the forward pass allocates (transformed features,
//! reweighted graph copies, per-abstraction views, kernel buffers including
//! the output), tracked through an allocation meter. Caller-owned inputs
//! (the graph views, input features, parameters) are not counted.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::features::{DenseWeights, FeatureMatrix};
use crate::kernels::{self, Abstraction, CostCounters, DstGrouping, ReduceOp};
use crate::topology::{CooGraph, GraphViews, SortOrder};

/// The four layer models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Gcn,
    Gin,
    Gat,
    Pdn,
}

impl Model {
    pub const ALL: [Model; 4] = [Model::Gcn, Model::Gin, Model::Gat, Model::Pdn];

    pub fn name(&self) -> &'static str {
        match self {
            Model::Gcn => "gcn",
            Model::Gin => "gin",
            Model::Gat => "gat",
            Model::Pdn => "pdn",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gcn" => Ok(Model::Gcn),
            "gin" => Ok(Model::Gin),
            "gat" => Ok(Model::Gat),
            "pdn" => Ok(Model::Pdn),
            other => Err(Error::InvalidParameter {
                name: "model",
                reason: format!("unknown model `{other}` (expected gcn, gin, gat, or pdn)"),
            }),
        }
    }
}

/// Model-specific learned parameters. The dense transform weights are kept
/// separate because every model has one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelParams {
    Gcn,
    Gin {
        epsilon: f32,
    },
    Gat {
        att_src: Vec<f32>,
        att_dst: Vec<f32>,
    },
    Pdn {
        edge_map_weight: Vec<f32>,
        edge_map_bias: f32,
    },
}

impl ModelParams {
    pub fn model(&self) -> Model {
        match self {
            ModelParams::Gcn => Model::Gcn,
            ModelParams::Gin { .. } => Model::Gin,
            ModelParams::Gat { .. } => Model::Gat,
            ModelParams::Pdn { .. } => Model::Pdn,
        }
    }
}

/// Full description of one layer execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub model: Model,
    pub abstraction: Abstraction,
    pub reduce_op: ReduceOp,
    pub in_dim: usize,
    pub out_dim: usize,
    pub params: ModelParams,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.out_dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dims",
                reason: format!(
                    "in_dim and out_dim must be positive, got {}x{}",
                    self.in_dim, self.out_dim
                ),
            });
        }
        if self.params.model() != self.model {
            return Err(Error::InvalidParameter {
                name: "params",
                reason: format!(
                    "params are for model {}, spec says {}",
                    self.params.model().name(),
                    self.model.name()
                ),
            });
        }
        if self.model != Model::Gcn && self.reduce_op != ReduceOp::Add {
            return Err(Error::InvalidParameter {
                name: "op",
                reason: format!(
                    "model {} fixes the add reduction; only gcn exposes the op",
                    self.model.name()
                ),
            });
        }
        if self.model == Model::Gat
            && matches!(self.abstraction, Abstraction::Pull | Abstraction::Push)
        {
            return Err(Error::UnsupportedCombination {
                model: self.model.name(),
                abstraction: self.abstraction.name(),
            });
        }
        if !self.abstraction.supports(self.reduce_op) {
            return Err(Error::UnsupportedReduce {
                op: self.reduce_op.name(),
                abstraction: self.abstraction.name(),
            });
        }
        match &self.params {
            ModelParams::Gat { att_src, att_dst } => {
                if att_src.len() != self.out_dim || att_dst.len() != self.out_dim {
                    return Err(Error::ShapeMismatch {
                        context: "gat attention vectors",
                        expected: format!("length {}", self.out_dim),
                        actual: format!("{} and {}", att_src.len(), att_dst.len()),
                    });
                }
            }
            ModelParams::Pdn {
                edge_map_weight, ..
            } if edge_map_weight.is_empty() => {
                return Err(Error::InvalidParameter {
                    name: "edge_map_weight",
                    reason: "pdn needs at least one edge feature dimension".into(),
                });
            }
            _ => {}
        }
        Ok(())
    }
}

/// Abstractions able to express the given model and reduction. Attention
/// needs per-destination normalization, so gat is limited to scatter and
/// reduce; max has no matrix-view formulation, so it excludes pull and push.
pub fn legal_abstractions(model: Model, op: ReduceOp) -> Vec<Abstraction> {
    Abstraction::ALL
        .iter()
        .copied()
        .filter(|a| {
            model != Model::Gat || matches!(a, Abstraction::Scatter | Abstraction::Reduce)
        })
        .filter(|a| a.supports(op))
        .collect()
}

/// Layer output plus the deterministic cost model of producing it.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerOutput {
    pub features: FeatureMatrix,
    pub counters: CostCounters,
}

/// Tracks live auxiliary bytes through a forward pass to report the peak.
#[derive(Default)]
struct AuxMeter {
    live: u64,
    peak: u64,
}

impl AuxMeter {
    fn alloc(&mut self, bytes: u64) {
        self.live += bytes;
        self.peak = self.peak.max(self.live);
    }

    fn free(&mut self, bytes: u64) {
        self.live = self.live.saturating_sub(bytes);
    }

    /// Records a transient allocation that vanishes before the next call.
    fn observe(&mut self, transient: u64) {
        self.peak = self.peak.max(self.live + transient);
    }
}

/// Self-loop-augmented symmetric normalization: the returned graph holds the
/// original edges plus one self-loop per vertex, edge `(u, v)` weighted by
/// `1 / sqrt(d[u] * d[v])` where `d` is the in-degree after augmentation.
/// Weights already on the input graph are ignored; the normalization defines
/// its own.
pub fn gcn_edge_weights(g: &CooGraph) -> Result<CooGraph> {
    let n = g.num_vertices();
    let e = g.num_edges();
    let mut deg = g.in_degrees();
    for d in deg.iter_mut() {
        *d += 1;
    }
    let inv_sqrt: Vec<f64> = deg.iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
    let mut edges = Vec::with_capacity(e + n);
    for i in 0..e {
        edges.push(g.edge(i));
    }
    for v in 0..n {
        edges.push((v as u32, v as u32));
    }
    let weights: Vec<f32> = edges
        .iter()
        .map(|&(u, v)| (inv_sqrt[u as usize] * inv_sqrt[v as usize]) as f32)
        .collect();
    CooGraph::from_edge_list(&edges, n, Some(weights))
}

fn leaky_relu(x: f32) -> f32 {
    if x >= 0.0 {
        x
    } else {
        0.2 * x
    }
}

/// Single-head attention coefficients in canonical COO edge order. Raw score
/// of edge `(u, v)` is `leaky_relu(att_src . xw[u] + att_dst . xw[v])` with
/// slope 0.2, normalized by a max-shifted softmax over each destination's
/// incoming edges. The softmax accumulates in f64 and walks edges in
/// ascending id order, so coefficients are deterministic.
pub fn gat_edge_weights(
    g: &CooGraph,
    xw: &FeatureMatrix,
    att_src: &[f32],
    att_dst: &[f32],
) -> Result<Vec<f32>> {
    let n = g.num_vertices();
    if xw.rows() != n {
        return Err(Error::ShapeMismatch {
            context: "gat transformed features",
            expected: format!("{n} rows"),
            actual: format!("{} rows", xw.rows()),
        });
    }
    if att_src.len() != xw.cols() || att_dst.len() != xw.cols() {
        return Err(Error::ShapeMismatch {
            context: "gat attention vectors",
            expected: format!("length {}", xw.cols()),
            actual: format!("{} and {}", att_src.len(), att_dst.len()),
        });
    }
    let dot = |att: &[f32], row: &[f32]| -> f32 {
        att.iter().zip(row.iter()).map(|(a, b)| a * b).sum()
    };
    let src_score: Vec<f32> = (0..n).map(|v| dot(att_src, xw.row(v))).collect();
    let dst_score: Vec<f32> = (0..n).map(|v| dot(att_dst, xw.row(v))).collect();
    let src = g.src();
    let dst = g.dst();
    let mut scores: Vec<f32> = (0..g.num_edges())
        .map(|e| leaky_relu(src_score[src[e] as usize] + dst_score[dst[e] as usize]))
        .collect();
    let grouping = DstGrouping::build(n, dst);
    for v in 0..n {
        let edges = grouping.edges_of(v);
        if edges.is_empty() {
            continue;
        }
        let mx = edges
            .iter()
            .map(|&e| scores[e as usize])
            .fold(f32::NEG_INFINITY, f32::max);
        let mut denom = 0.0f64;
        for &e in edges {
            denom += ((scores[e as usize] - mx) as f64).exp();
        }
        for &e in edges {
            let num = ((scores[e as usize] - mx) as f64).exp();
            scores[e as usize] = (num / denom) as f32;
        }
    }
    Ok(scores)
}

/// Learned scalar edge weights in canonical COO edge order:
/// `sigmoid(edge_map_weight . edge_features[e] + edge_map_bias)`.
pub fn pdn_edge_weights(
    g: &CooGraph,
    edge_features: &FeatureMatrix,
    edge_map_weight: &[f32],
    edge_map_bias: f32,
) -> Result<Vec<f32>> {
    if edge_map_weight.is_empty() {
        return Err(Error::InvalidParameter {
            name: "edge_map_weight",
            reason: "pdn needs at least one edge feature dimension".into(),
        });
    }
    if edge_features.rows() != g.num_edges() {
        return Err(Error::ShapeMismatch {
            context: "pdn edge features",
            expected: format!("{} rows", g.num_edges()),
            actual: format!("{} rows", edge_features.rows()),
        });
    }
    if edge_features.cols() != edge_map_weight.len() {
        return Err(Error::ShapeMismatch {
            context: "pdn edge feature width",
            expected: format!("{} columns", edge_map_weight.len()),
            actual: format!("{} columns", edge_features.cols()),
        });
    }
    Ok(exec::map_indexed(g.num_edges(), |e| {
        let mut z = edge_map_bias as f64;
        for (a, b) in edge_map_weight.iter().zip(edge_features.row(e).iter()) {
            z += (*a as f64) * (*b as f64);
        }
        (1.0 / (1.0 + (-z).exp())) as f32
    }))
}

/// One aggregation over a weighted COO, building only the view the chosen
/// abstraction needs. `view_bytes` is the size of that derived view (zero
/// for scatter, which consumes the COO directly).
struct ViewRun {
    out: FeatureMatrix,
    counters: CostCounters,
    view_bytes: u64,
}

fn aggregate_weighted_coo(
    coo: &CooGraph,
    abstraction: Abstraction,
    x: &FeatureMatrix,
    op: ReduceOp,
) -> Result<ViewRun> {
    if !abstraction.supports(op) {
        return Err(Error::UnsupportedReduce {
            op: op.name(),
            abstraction: abstraction.name(),
        });
    }
    match abstraction {
        Abstraction::Scatter => {
            let (out, counters) = kernels::scatter_aggregate(coo, x, op, true)?;
            Ok(ViewRun {
                out,
                counters,
                view_bytes: 0,
            })
        }
        Abstraction::Reduce => {
            let csr = coo.to_csr();
            let (out, counters) = kernels::reduce_aggregate(&csr, x, op, true)?;
            Ok(ViewRun {
                out,
                counters,
                view_bytes: csr.heap_bytes(),
            })
        }
        Abstraction::Pull => {
            let csr = coo.to_csr();
            let (mut out, mut counters) = kernels::pull_spmm(&csr, x, true)?;
            if op == ReduceOp::Mean {
                let counts = coo.in_degrees();
                kernels::divide_rows_by_counts(&mut out, &counts, &mut counters);
            }
            Ok(ViewRun {
                out,
                counters,
                view_bytes: csr.heap_bytes(),
            })
        }
        Abstraction::Push => {
            let csc = coo.to_csc();
            let (mut out, mut counters) = kernels::push_spmm(&csc, x, true)?;
            if op == ReduceOp::Mean {
                let counts = coo.in_degrees();
                kernels::divide_rows_by_counts(&mut out, &counts, &mut counters);
            }
            Ok(ViewRun {
                out,
                counters,
                view_bytes: csc.heap_bytes(),
            })
        }
    }
}

/// Runs one layer forward pass. `edge_features` is required by pdn (one row
/// per canonical COO edge) and rejected for every other model.
pub fn forward_layer(
    spec: &LayerSpec,
    views: &GraphViews,
    x: &FeatureMatrix,
    weights: &DenseWeights,
    edge_features: Option<&FeatureMatrix>,
) -> Result<LayerOutput> {
    spec.validate()?;
    let n = views.num_vertices();
    if x.rows() != n {
        return Err(Error::ShapeMismatch {
            context: "layer input features",
            expected: format!("{n} rows"),
            actual: format!("{} rows", x.rows()),
        });
    }
    if x.cols() != spec.in_dim {
        return Err(Error::ShapeMismatch {
            context: "layer input width",
            expected: format!("{} columns", spec.in_dim),
            actual: format!("{} columns", x.cols()),
        });
    }
    if weights.in_dim() != spec.in_dim || weights.out_dim() != spec.out_dim {
        return Err(Error::ShapeMismatch {
            context: "layer transform weights",
            expected: format!("{}x{}", spec.in_dim, spec.out_dim),
            actual: format!("{}x{}", weights.in_dim(), weights.out_dim()),
        });
    }
    if spec.model != Model::Pdn && edge_features.is_some() {
        return Err(Error::InvalidParameter {
            name: "edge_features",
            reason: "only the pdn model consumes edge features".into(),
        });
    }
    let mut meter = AuxMeter::default();
    match &spec.params {
        ModelParams::Gcn => forward_gcn(spec, views, x, weights, &mut meter),
        ModelParams::Gin { epsilon } => forward_gin(spec, views, x, weights, *epsilon, &mut meter),
        ModelParams::Gat { att_src, att_dst } => {
            forward_gat(spec, views, x, weights, att_src, att_dst, &mut meter)
        }
        ModelParams::Pdn {
            edge_map_weight,
            edge_map_bias,
        } => forward_pdn(
            spec,
            views,
            x,
            weights,
            edge_map_weight,
            *edge_map_bias,
            edge_features,
            &mut meter,
        ),
    }
}

fn forward_gcn(
    spec: &LayerSpec,
    views: &GraphViews,
    x: &FeatureMatrix,
    weights: &DenseWeights,
    meter: &mut AuxMeter,
) -> Result<LayerOutput> {
    let xw = x.matmul(weights)?;
    meter.alloc(xw.heap_bytes());
    let coo = views.coo();
    let aug = gcn_edge_weights(coo)?;
    // The degree scratch is live while the augmented graph is assembled.
    meter.observe(4 * coo.num_vertices() as u64 + aug.heap_bytes());
    meter.alloc(aug.heap_bytes());
    let run = aggregate_weighted_coo(&aug, spec.abstraction, &xw, spec.reduce_op)?;
    meter.observe(run.view_bytes + run.counters.peak_aux_bytes);
    let mut counters = run.counters;
    counters.peak_aux_bytes = meter.peak;
    Ok(LayerOutput {
        features: run.out,
        counters,
    })
}

fn forward_gin(
    spec: &LayerSpec,
    views: &GraphViews,
    x: &FeatureMatrix,
    weights: &DenseWeights,
    epsilon: f32,
    meter: &mut AuxMeter,
) -> Result<LayerOutput> {
    let (mut agg, mut counters) =
        kernels::aggregate(views, spec.abstraction, x, ReduceOp::Add, false)?;
    meter.observe(counters.peak_aux_bytes);
    meter.alloc(agg.heap_bytes());
    let scale = 1.0 + epsilon;
    exec::for_each_chunk_mut(agg.data_mut(), x.cols(), |v, row| {
        for (o, &xv) in row.iter_mut().zip(x.row(v).iter()) {
            *o += scale * xv;
        }
    });
    let nf = (x.rows() * x.cols()) as u64;
    counters.feature_reads += nf;
    counters.feature_writes += nf;
    let out = agg.matmul(weights)?;
    meter.observe(out.heap_bytes());
    meter.free(agg.heap_bytes());
    counters.peak_aux_bytes = meter.peak;
    Ok(LayerOutput {
        features: out,
        counters,
    })
}

#[allow(clippy::too_many_arguments)]
fn forward_gat(
    spec: &LayerSpec,
    views: &GraphViews,
    x: &FeatureMatrix,
    weights: &DenseWeights,
    att_src: &[f32],
    att_dst: &[f32],
    meter: &mut AuxMeter,
) -> Result<LayerOutput> {
    let xw = x.matmul(weights)?;
    meter.alloc(xw.heap_bytes());
    let coo = views.coo();
    let n = coo.num_vertices() as u64;
    let e = coo.num_edges() as u64;
    let alphas = gat_edge_weights(coo, &xw, att_src, att_dst)?;
    // Transient: two per-vertex score vectors plus the softmax grouping.
    meter.observe(8 * n + 4 * e + (8 * (n + 1) + 4 * e));
    meter.alloc(4 * e);
    let wcoo = CooGraph::from_parts(
        coo.num_vertices(),
        coo.src().to_vec(),
        coo.dst().to_vec(),
        Some(alphas),
        SortOrder::Source,
    )?;
    meter.free(4 * e);
    meter.alloc(wcoo.heap_bytes());
    let run = aggregate_weighted_coo(&wcoo, spec.abstraction, &xw, ReduceOp::Add)?;
    meter.observe(run.view_bytes + run.counters.peak_aux_bytes);
    let mut counters = run.counters;
    counters.feature_reads += 2 * n * xw.cols() as u64;
    counters.peak_aux_bytes = meter.peak;
    Ok(LayerOutput {
        features: run.out,
        counters,
    })
}

#[allow(clippy::too_many_arguments)]
fn forward_pdn(
    spec: &LayerSpec,
    views: &GraphViews,
    x: &FeatureMatrix,
    weights: &DenseWeights,
    edge_map_weight: &[f32],
    edge_map_bias: f32,
    edge_features: Option<&FeatureMatrix>,
    meter: &mut AuxMeter,
) -> Result<LayerOutput> {
    let ef = edge_features.ok_or_else(|| Error::InvalidParameter {
        name: "edge_features",
        reason: "the pdn model requires edge features (one row per edge)".into(),
    })?;
    let xw = x.matmul(weights)?;
    meter.alloc(xw.heap_bytes());
    let coo = views.coo();
    let e = coo.num_edges() as u64;
    let edge_weights = pdn_edge_weights(coo, ef, edge_map_weight, edge_map_bias)?;
    meter.alloc(4 * e);
    let wcoo = CooGraph::from_parts(
        coo.num_vertices(),
        coo.src().to_vec(),
        coo.dst().to_vec(),
        Some(edge_weights),
        SortOrder::Source,
    )?;
    meter.free(4 * e);
    meter.alloc(wcoo.heap_bytes());
    let run = aggregate_weighted_coo(&wcoo, spec.abstraction, &xw, ReduceOp::Add)?;
    meter.observe(run.view_bytes + run.counters.peak_aux_bytes);
    let mut counters = run.counters;
    counters.feature_reads += e * ef.cols() as u64;
    counters.peak_aux_bytes = meter.peak;
    Ok(LayerOutput {
        features: run.out,
        counters,
    })
}

/// Conservative upper bound of `forward_layer`'s peak auxiliary bytes, for
/// admission control before large runs. Always at least the measured peak.
pub fn estimate_peak_bytes(
    model: Model,
    abstraction: Abstraction,
    op: ReduceOp,
    num_vertices: usize,
    num_edges: usize,
    in_dim: usize,
    out_dim: usize,
) -> u64 {
    let n = num_vertices as u64;
    let e = num_edges as u64;
    let fi = in_dim as u64;
    let fo = out_dim as u64;
    // gin aggregates at input width; the others transform first.
    let agg_f = if model == Model::Gin { fi } else { fo };
    // gcn adds one self-loop per vertex.
    let e_agg = if model == Model::Gcn { e + n } else { e };
    let grouping = 8 * (n + 1) + 4 * e_agg;
    let mean_scratch = if op == ReduceOp::Mean { 4 * n } else { 0 };
    let kernel = match abstraction {
        Abstraction::Scatter => 4 * e_agg * agg_f + grouping + 4 * n * agg_f,
        Abstraction::Reduce | Abstraction::Pull | Abstraction::Push => {
            4 * n * agg_f + mean_scratch
        }
    };
    let view = match abstraction {
        Abstraction::Scatter => 0,
        Abstraction::Reduce | Abstraction::Pull | Abstraction::Push => 8 * (n + 1) + 8 * e_agg,
    };
    let layer = match model {
        // xw + degree scratch + augmented weighted COO
        Model::Gcn => 4 * n * fo + 4 * n + 12 * e_agg,
        // retained aggregate + combine output
        Model::Gin => 4 * n * fi + 4 * n * fo,
        // xw + vertex scores + softmax grouping + scores + weighted COO
        Model::Gat => 4 * n * fo + 8 * n + grouping + 4 * e + 12 * e,
        // xw + edge weights + weighted COO (edge features are caller input)
        Model::Pdn => 4 * n * fo + 4 * e + 12 * e,
    };
    kernel + view + layer
}

/// Parameters a benchmark run needs: the dense transform plus the
/// model-specific extras.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedParams {
    pub weights: DenseWeights,
    pub params: ModelParams,
}

/// Reads a `key=path` manifest, one entry per line, `#` starting a comment.
/// Relative paths resolve against the manifest's directory.
pub fn load_params_manifest(path: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io_at(path, e))?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason: format!("expected key=path, got `{line}`"),
        })?;
        map.insert(key.trim().to_string(), dir.join(value.trim()));
    }
    Ok(map)
}

/// Loads all parameters of one layer from a manifest. Every model needs the
/// `weight` key (an `in_dim x out_dim` binary matrix); gin adds `epsilon`
/// (1x1), gat adds `att_src` and `att_dst` (1 x out_dim), pdn adds
/// `edge_map_weight` (1 x edge_feature_len) and `edge_map_bias` (1x1).
pub fn load_layer_params(
    model: Model,
    in_dim: usize,
    out_dim: usize,
    manifest_path: &Path,
) -> Result<LoadedParams> {
    let map = load_params_manifest(manifest_path)?;
    let get = |key: &str| -> Result<FeatureMatrix> {
        let p = map.get(key).ok_or_else(|| Error::InvalidParameter {
            name: "params",
            reason: format!(
                "manifest {} lacks required key `{key}`",
                manifest_path.display()
            ),
        })?;
        FeatureMatrix::read_binary(p)
    };
    let scalar = |key: &str| -> Result<f32> {
        let m = get(key)?;
        if m.rows() != 1 || m.cols() != 1 {
            return Err(Error::ShapeMismatch {
                context: "scalar parameter",
                expected: "1x1".into(),
                actual: format!("{}x{} for `{key}`", m.rows(), m.cols()),
            });
        }
        Ok(m.get(0, 0))
    };
    let vector = |key: &str, len: Option<usize>| -> Result<Vec<f32>> {
        let m = get(key)?;
        let ok = m.rows() == 1 && len.map_or(m.cols() >= 1, |l| m.cols() == l);
        if !ok {
            return Err(Error::ShapeMismatch {
                context: "vector parameter",
                expected: format!(
                    "1x{} for `{key}`",
                    len.map_or("k".to_string(), |l| l.to_string())
                ),
                actual: format!("{}x{}", m.rows(), m.cols()),
            });
        }
        Ok(m.row(0).to_vec())
    };
    let wm = get("weight")?;
    if wm.rows() != in_dim || wm.cols() != out_dim {
        return Err(Error::ShapeMismatch {
            context: "transform weight parameter",
            expected: format!("{in_dim}x{out_dim}"),
            actual: format!("{}x{}", wm.rows(), wm.cols()),
        });
    }
    let weights = DenseWeights::from_matrix(&wm)?;
    let params = match model {
        Model::Gcn => ModelParams::Gcn,
        Model::Gin => ModelParams::Gin {
            epsilon: scalar("epsilon")?,
        },
        Model::Gat => ModelParams::Gat {
            att_src: vector("att_src", Some(out_dim))?,
            att_dst: vector("att_dst", Some(out_dim))?,
        },
        Model::Pdn => ModelParams::Pdn {
            edge_map_weight: vector("edge_map_weight", None)?,
            edge_map_bias: scalar("edge_map_bias")?,
        },
    };
    Ok(LoadedParams { weights, params })
}

/// Seeded default parameters: random dense transform, zero-initialized
/// epsilon (the gin-0 convention) and pdn bias, random attention and edge
/// map vectors.
pub fn random_layer_params(
    model: Model,
    in_dim: usize,
    out_dim: usize,
    edge_feature_len: usize,
    seed: u64,
) -> LoadedParams {
    let weights = DenseWeights::random(in_dim, out_dim, crate::rng::keyed(seed, 101));
    let row = |dim: usize, salt: u64| -> Vec<f32> {
        FeatureMatrix::random(1, dim, crate::rng::keyed(seed, salt))
            .row(0)
            .to_vec()
    };
    let params = match model {
        Model::Gcn => ModelParams::Gcn,
        Model::Gin => ModelParams::Gin { epsilon: 0.0 },
        Model::Gat => ModelParams::Gat {
            att_src: row(out_dim, 102),
            att_dst: row(out_dim, 103),
        },
        Model::Pdn => ModelParams::Pdn {
            edge_map_weight: row(edge_feature_len.max(1), 104),
            edge_map_bias: 0.0,
        },
    };
    LoadedParams { weights, params }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::oracle::pairwise_rel_error;
    use crate::rng::Stream;

    fn views(edges: &[(u32, u32)], n: usize) -> GraphViews {
        GraphViews::from_coo(CooGraph::from_edge_list(edges, n, None).unwrap())
    }

    fn spec(model: Model, abstraction: Abstraction, dims: (usize, usize)) -> LayerSpec {
        let params = match model {
            Model::Gcn => ModelParams::Gcn,
            Model::Gin => ModelParams::Gin { epsilon: 0.0 },
            Model::Gat => ModelParams::Gat {
                att_src: vec![0.0; dims.1],
                att_dst: vec![0.0; dims.1],
            },
            Model::Pdn => ModelParams::Pdn {
                edge_map_weight: vec![0.0; 4],
                edge_map_bias: 0.0,
            },
        };
        LayerSpec {
            model,
            abstraction,
            reduce_op: ReduceOp::Add,
            in_dim: dims.0,
            out_dim: dims.1,
            params,
        }
    }

    #[test]
    fn model_parses() {
        for m in Model::ALL {
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
        }
        assert!("sage".parse::<Model>().is_err());
    }

    #[test]
    fn validate_rejects_illegal_combinations() {
        let gat_pull = spec(Model::Gat, Abstraction::Pull, (2, 2));
        assert!(matches!(
            gat_pull.validate(),
            Err(Error::UnsupportedCombination { .. })
        ));
        let gat_push = spec(Model::Gat, Abstraction::Push, (2, 2));
        assert!(gat_push.validate().is_err());

        let mut gin_mean = spec(Model::Gin, Abstraction::Scatter, (2, 2));
        gin_mean.reduce_op = ReduceOp::Mean;
        assert!(matches!(
            gin_mean.validate(),
            Err(Error::InvalidParameter { name: "op", .. })
        ));

        let mut gcn_max_pull = spec(Model::Gcn, Abstraction::Pull, (2, 2));
        gcn_max_pull.reduce_op = ReduceOp::Max;
        assert!(matches!(
            gcn_max_pull.validate(),
            Err(Error::UnsupportedReduce { .. })
        ));

        let mut mismatched = spec(Model::Gcn, Abstraction::Pull, (2, 2));
        mismatched.params = ModelParams::Gin { epsilon: 0.0 };
        assert!(mismatched.validate().is_err());

        let mut bad_att = spec(Model::Gat, Abstraction::Scatter, (2, 3));
        bad_att.params = ModelParams::Gat {
            att_src: vec![0.0; 2],
            att_dst: vec![0.0; 3],
        };
        assert!(bad_att.validate().is_err());

        let mut empty_map = spec(Model::Pdn, Abstraction::Pull, (2, 2));
        empty_map.params = ModelParams::Pdn {
            edge_map_weight: vec![],
            edge_map_bias: 0.0,
        };
        assert!(empty_map.validate().is_err());
    }

    #[test]
    fn legal_abstraction_sets() {
        assert_eq!(legal_abstractions(Model::Gcn, ReduceOp::Add).len(), 4);
        assert_eq!(
            legal_abstractions(Model::Gcn, ReduceOp::Max),
            vec![Abstraction::Scatter, Abstraction::Reduce]
        );
        assert_eq!(
            legal_abstractions(Model::Gat, ReduceOp::Add),
            vec![Abstraction::Scatter, Abstraction::Reduce]
        );
        assert_eq!(legal_abstractions(Model::Gin, ReduceOp::Add).len(), 4);
        assert_eq!(legal_abstractions(Model::Pdn, ReduceOp::Add).len(), 4);
    }

    #[test]
    fn gcn_weights_on_two_cycle_are_half() {
        let g = CooGraph::from_edge_list(&[(0, 1), (1, 0)], 2, None).unwrap();
        let aug = gcn_edge_weights(&g).unwrap();
        assert_eq!(aug.num_edges(), 4);
        for &w in aug.weights().unwrap() {
            assert_eq!(w, 0.5);
        }
    }

    #[test]
    fn gcn_weight_on_isolated_vertex_is_one() {
        let g = CooGraph::empty(1);
        let aug = gcn_edge_weights(&g).unwrap();
        assert_eq!(aug.num_edges(), 1);
        assert_eq!(aug.weights().unwrap()[0], 1.0);
    }

    #[test]
    fn gcn_weights_on_k_regular_ring() {
        // Directed ring where each vertex receives from its k nearest
        // predecessors, so every in-degree is exactly k.
        for k in [2usize, 4] {
            let n = 12usize;
            let mut edges = Vec::new();
            for v in 0..n {
                for j in 1..=k {
                    edges.push((((v + j) % n) as u32, v as u32));
                }
            }
            let g = CooGraph::from_edge_list(&edges, n, None).unwrap();
            let aug = gcn_edge_weights(&g).unwrap();
            let expected = 1.0f32 / (k as f32 + 1.0);
            for &w in aug.weights().unwrap() {
                assert_eq!(w, expected, "k = {k}");
            }
        }
    }

    #[test]
    fn gin_forward_matches_hand_computed_triangle() {
        let v = views(&[(0, 1), (1, 2), (2, 0)], 3);
        let x = FeatureMatrix::from_rows(&[&[1.0], &[2.0], &[3.0]]).unwrap();
        let w = DenseWeights::identity(1);
        for a in Abstraction::ALL {
            let mut s = spec(Model::Gin, a, (1, 1));
            s.params = ModelParams::Gin { epsilon: 0.0 };
            let out = forward_layer(&s, &v, &x, &w, None).unwrap();
            assert_eq!(out.features.data(), &[4.0, 3.0, 5.0], "{}", a.name());
        }
    }

    #[test]
    fn gin_epsilon_scales_the_self_term() {
        let v = views(&[(0, 1), (1, 2), (2, 0)], 3);
        let x = FeatureMatrix::from_rows(&[&[1.0], &[2.0], &[3.0]]).unwrap();
        let w = DenseWeights::identity(1);
        let mut s = spec(Model::Gin, Abstraction::Reduce, (1, 1));
        s.params = ModelParams::Gin { epsilon: 1.0 };
        let out = forward_layer(&s, &v, &x, &w, None).unwrap();
        assert_eq!(out.features.data(), &[5.0, 5.0, 8.0]);
    }

    #[test]
    fn gin_counters_scale_with_input_width() {
        // Aggregate-then-combine means messages are in_dim wide.
        let v = views(&[(0, 1), (1, 2), (2, 0)], 3);
        let x = FeatureMatrix::random(3, 3, 7);
        let w = DenseWeights::random(3, 1, 8);
        let s = spec(Model::Gin, Abstraction::Scatter, (3, 1));
        let out = forward_layer(&s, &v, &x, &w, None).unwrap();
        assert_eq!(out.counters.messages_materialized, 3 * 3);
    }

    #[test]
    fn gcn_counters_traverse_augmented_edges() {
        let v = views(&[(0, 1), (1, 2), (2, 0)], 3);
        let x = FeatureMatrix::random(3, 2, 1);
        let w = DenseWeights::random(2, 2, 2);
        let s = spec(Model::Gcn, Abstraction::Pull, (2, 2));
        let out = forward_layer(&s, &v, &x, &w, None).unwrap();
        assert_eq!(out.counters.edges_traversed, 3 + 3);
    }

    #[test]
    fn gat_attention_is_uniform_when_scores_are_constant() {
        let g = CooGraph::from_edge_list(&[(1, 0), (2, 0), (3, 0)], 4, None).unwrap();
        let xw = FeatureMatrix::random(4, 2, 3);
        let alphas = gat_edge_weights(&g, &xw, &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        for &a in &alphas {
            assert!((a - 1.0 / 3.0).abs() < 1e-7, "alpha {a}");
        }
    }

    #[test]
    fn gat_softmax_orders_by_score() {
        let g = CooGraph::from_edge_list(&[(1, 0), (2, 0), (3, 0), (4, 0)], 5, None).unwrap();
        let xw =
            FeatureMatrix::from_rows(&[&[0.0], &[1.0], &[2.0], &[3.0], &[4.0]]).unwrap();
        let alphas = gat_edge_weights(&g, &xw, &[1.0], &[0.0]).unwrap();
        assert_eq!(alphas.len(), 4);
        for w in alphas.windows(2) {
            assert!(w[0] < w[1], "alphas should increase with score: {alphas:?}");
        }
        let sum: f64 = alphas.iter().map(|&a| a as f64).sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }

    #[test]
    fn gat_softmax_sums_to_one_per_destination() {
        for seed in 0..100u64 {
            let mut s = Stream::new(900, seed);
            let n = 2 + s.next_below(38) as usize;
            let e = 1 + s.next_below(150) as usize;
            let edges: Vec<(u32, u32)> = (0..e)
                .map(|_| {
                    (
                        s.next_below(n as u64) as u32,
                        s.next_below(n as u64) as u32,
                    )
                })
                .collect();
            let g = CooGraph::from_edge_list(&edges, n, None).unwrap();
            let xw = FeatureMatrix::random(n, 4, seed ^ 0xabc);
            let att_src: Vec<f32> = (0..4).map(|_| s.next_symmetric()).collect();
            let att_dst: Vec<f32> = (0..4).map(|_| s.next_symmetric()).collect();
            let alphas = gat_edge_weights(&g, &xw, &att_src, &att_dst).unwrap();
            let mut sums = vec![0.0f64; n];
            for (i, &a) in alphas.iter().enumerate() {
                sums[g.dst()[i] as usize] += a as f64;
            }
            let counts = g.in_degrees();
            for v in 0..n {
                if counts[v] > 0 {
                    assert!(
                        (sums[v] - 1.0).abs() <= 1e-6,
                        "seed {seed} vertex {v}: sum {}",
                        sums[v]
                    );
                }
            }
        }
    }

    #[test]
    fn pdn_zero_inputs_give_half_weights() {
        let g = CooGraph::from_edge_list(&[(0, 1), (1, 0)], 2, None).unwrap();
        let ef = FeatureMatrix::zeros(2, 3);
        let w = pdn_edge_weights(&g, &ef, &[0.4, -0.2, 0.9], 0.0).unwrap();
        assert_eq!(w, vec![0.5, 0.5]);
    }

    #[test]
    fn pdn_large_bias_saturates() {
        let g = CooGraph::from_edge_list(&[(0, 1)], 2, None).unwrap();
        let ef = FeatureMatrix::zeros(1, 1);
        let w = pdn_edge_weights(&g, &ef, &[1.0], 20.0).unwrap();
        assert!(w[0] > 0.999);
    }

    #[test]
    fn pdn_rejects_zero_width_edge_features() {
        let g = CooGraph::from_edge_list(&[(0, 1)], 2, None).unwrap();
        let ef = FeatureMatrix::zeros(1, 0);
        assert!(pdn_edge_weights(&g, &ef, &[], 0.0).is_err());
    }

    #[test]
    fn gcn_forward_on_two_cycle_averages_self_and_neighbor() {
        let v = views(&[(0, 1), (1, 0)], 2);
        let x = FeatureMatrix::from_rows(&[&[2.0, 4.0], &[6.0, 8.0]]).unwrap();
        let w = DenseWeights::identity(2);
        for a in Abstraction::ALL {
            let s = spec(Model::Gcn, a, (2, 2));
            let out = forward_layer(&s, &v, &x, &w, None).unwrap();
            assert_eq!(
                out.features.data(),
                &[4.0, 6.0, 4.0, 6.0],
                "{}",
                a.name()
            );
        }
    }

    #[test]
    fn forward_zero_weights_give_zero_output() {
        let v = views(&[], 3);
        let x = FeatureMatrix::random(3, 2, 5);
        let w = DenseWeights::new(2, 2, vec![0.0; 4]).unwrap();
        for model in Model::ALL {
            let ef = FeatureMatrix::zeros(0, 4);
            let edge_features = (model == Model::Pdn).then_some(&ef);
            for a in legal_abstractions(model, ReduceOp::Add) {
                let s = spec(model, a, (2, 2));
                let out = forward_layer(&s, &v, &x, &w, edge_features).unwrap();
                assert!(
                    out.features.data().iter().all(|&val| val == 0.0),
                    "{} {}",
                    model.name(),
                    a.name()
                );
            }
        }
    }

    #[test]
    fn forward_rejects_gat_on_matrix_views() {
        let v = views(&[(0, 1)], 2);
        let x = FeatureMatrix::random(2, 2, 1);
        let w = DenseWeights::identity(2);
        let s = spec(Model::Gat, Abstraction::Pull, (2, 2));
        assert!(matches!(
            forward_layer(&s, &v, &x, &w, None),
            Err(Error::UnsupportedCombination { .. })
        ));
    }

    #[test]
    fn forward_polices_edge_features() {
        let v = views(&[(0, 1)], 2);
        let x = FeatureMatrix::random(2, 2, 1);
        let w = DenseWeights::identity(2);
        let ef = FeatureMatrix::zeros(1, 4);
        let gcn = spec(Model::Gcn, Abstraction::Pull, (2, 2));
        assert!(forward_layer(&gcn, &v, &x, &w, Some(&ef)).is_err());
        let pdn = spec(Model::Pdn, Abstraction::Pull, (2, 2));
        assert!(forward_layer(&pdn, &v, &x, &w, None).is_err());
    }

    #[test]
    fn forward_rejects_shape_mismatches() {
        let v = views(&[(0, 1)], 2);
        let w = DenseWeights::identity(2);
        let bad_rows = FeatureMatrix::random(3, 2, 1);
        let s = spec(Model::Gcn, Abstraction::Pull, (2, 2));
        assert!(forward_layer(&s, &v, &bad_rows, &w, None).is_err());
        let bad_cols = FeatureMatrix::random(2, 3, 1);
        assert!(forward_layer(&s, &v, &bad_cols, &w, None).is_err());
        let bad_w = DenseWeights::identity(3);
        let x = FeatureMatrix::random(2, 2, 1);
        assert!(forward_layer(&s, &v, &x, &bad_w, None).is_err());
    }

    fn random_graph(seed: u64, n: usize, e: usize) -> CooGraph {
        let mut s = Stream::new(seed, 0);
        let edges: Vec<(u32, u32)> = (0..e)
            .map(|_| {
                (
                    s.next_below(n as u64) as u32,
                    s.next_below(n as u64) as u32,
                )
            })
            .collect();
        CooGraph::from_edge_list(&edges, n, None).unwrap()
    }

    #[test]
    fn layer_outputs_agree_across_abstractions() {
        let n = 30;
        let g = random_graph(42, n, 120);
        let e = g.num_edges();
        let v = GraphViews::from_coo(g);
        let x = FeatureMatrix::random(n, 5, 7);
        for model in Model::ALL {
            let loaded = random_layer_params(model, 5, 3, 4, 11);
            let ef = FeatureMatrix::random(e, 4, 13);
            let edge_features = (model == Model::Pdn).then_some(&ef);
            let mut outputs = Vec::new();
            for a in legal_abstractions(model, ReduceOp::Add) {
                let s = LayerSpec {
                    model,
                    abstraction: a,
                    reduce_op: ReduceOp::Add,
                    in_dim: 5,
                    out_dim: 3,
                    params: loaded.params.clone(),
                };
                let out = forward_layer(&s, &v, &x, &loaded.weights, edge_features).unwrap();
                outputs.push((a, out.features));
            }
            let (_, base) = &outputs[0];
            for (a, out) in &outputs[1..] {
                let rel = pairwise_rel_error(out, base);
                assert!(
                    rel <= 1e-4,
                    "{} via {} deviates by {rel}",
                    model.name(),
                    a.name()
                );
            }
        }
    }

    #[test]
    fn params_manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let weight = FeatureMatrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        weight.write_binary(&dir.path().join("weight.bin")).unwrap();
        FeatureMatrix::from_rows(&[&[0.5]])
            .unwrap()
            .write_binary(&dir.path().join("eps.bin"))
            .unwrap();
        let manifest = dir.path().join("params.manifest");
        std::fs::write(
            &manifest,
            "# gin layer\nweight = weight.bin\nepsilon = eps.bin\n",
        )
        .unwrap();
        let loaded = load_layer_params(Model::Gin, 2, 2, &manifest).unwrap();
        assert_eq!(loaded.params, ModelParams::Gin { epsilon: 0.5 });
        assert_eq!(loaded.weights.data(), weight.data());
    }

    #[test]
    fn params_manifest_reports_missing_key_and_bad_line() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = dir.path().join("p.manifest");
        std::fs::write(&manifest, "weight = w.bin\n").unwrap();
        FeatureMatrix::zeros(2, 2)
            .write_binary(&dir.path().join("w.bin"))
            .unwrap();
        let err = load_layer_params(Model::Gin, 2, 2, &manifest).unwrap_err();
        assert!(err.to_string().contains("epsilon"), "{err}");

        std::fs::write(&manifest, "weight w.bin\n").unwrap();
        let err = load_params_manifest(&manifest).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn random_params_are_deterministic() {
        for model in Model::ALL {
            let a = random_layer_params(model, 3, 2, 4, 9);
            let b = random_layer_params(model, 3, 2, 4, 9);
            assert_eq!(a.params, b.params);
            assert_eq!(a.weights.data(), b.weights.data());
        }
    }

    #[test]
    fn estimate_dominates_measured_peak() {
        let n = 40;
        let g = crate::synth::gen_erdos_renyi(n, 0.1, 3).unwrap();
        let e = g.num_edges();
        let v = GraphViews::from_coo(g);
        let x = FeatureMatrix::random(n, 6, 1);
        for model in Model::ALL {
            let loaded = random_layer_params(model, 6, 4, 3, 2);
            let ef = FeatureMatrix::random(e, 3, 5);
            let edge_features = (model == Model::Pdn).then_some(&ef);
            for a in legal_abstractions(model, ReduceOp::Add) {
                let s = LayerSpec {
                    model,
                    abstraction: a,
                    reduce_op: ReduceOp::Add,
                    in_dim: 6,
                    out_dim: 4,
                    params: loaded.params.clone(),
                };
                let out = forward_layer(&s, &v, &x, &loaded.weights, edge_features).unwrap();
                let est = estimate_peak_bytes(model, a, ReduceOp::Add, n, e, 6, 4);
                assert!(
                    out.counters.peak_aux_bytes <= est,
                    "{} {}: measured {} > estimate {est}",
                    model.name(),
                    a.name(),
                    out.counters.peak_aux_bytes
                );
            }
        }
    }

    #[test]
    fn gcn_mean_and_max_run_on_supported_abstractions() {
        let v = views(&[(0, 1), (2, 1), (1, 0)], 3);
        let x = FeatureMatrix::from_rows(&[&[1.0], &[2.0], &[4.0]]).unwrap();
        let w = DenseWeights::identity(1);
        for op in [ReduceOp::Mean, ReduceOp::Max] {
            let mut outputs = Vec::new();
            for a in legal_abstractions(Model::Gcn, op) {
                let mut s = spec(Model::Gcn, a, (1, 1));
                s.reduce_op = op;
                let out = forward_layer(&s, &v, &x, &w, None).unwrap();
                outputs.push(out.features);
            }
            for o in &outputs[1..] {
                assert_eq!(o.data(), outputs[0].data(), "{}", op.name());
            }
        }
    }
}
