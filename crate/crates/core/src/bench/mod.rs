//! Characterization harness: timed layer forwards with deterministic cost
//! counters, workload statistics, environment capture, and stable reports.
//!
//! A run is a pure function of its configuration except for the `timing`
//! block: graphs, features, and parameters are seeded, kernels are
//! deterministic at any thread count, and reports serialize with sorted
//! keys. Warmup repetitions execute the full forward pass and are discarded;
//! graph views are built once before the timed region, while model-specific
//! reweighting (normalization, attention, edge gating) happens inside it
//! because it is part of the layer.

mod report;

pub use report::{
    reports_to_csv, summarize, BenchReport, EnvironmentRecord, MemoryReport, ResolvedConfig,
    TimingStats,
};

use std::path::PathBuf;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::exec;
use crate::features::{DenseWeights, FeatureMatrix};
use crate::kernels::{Abstraction, ReduceOp};
use crate::layers::{
    estimate_peak_bytes, forward_layer, legal_abstractions, load_layer_params,
    random_layer_params, LayerSpec, Model, ModelParams,
};
use crate::synth::SynthSpec;
use crate::topology::{compute_stats, read_edge_list, GraphStats, GraphViews};

pub const DEFAULT_REPETITIONS: usize = 300;
pub const DEFAULT_WARMUP: usize = 10;
pub const DEFAULT_OUT_DIM: usize = 8;
pub const DEFAULT_FEATURE_LEN: usize = 32;
pub const DEFAULT_EDGE_FEATURE_LEN: usize = 8;

/// Where the workload graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSource {
    File { path: PathBuf },
    Synthetic { spec: SynthSpec },
}

impl std::fmt::Display for GraphSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphSource::File { path } => write!(f, "{}", path.display()),
            GraphSource::Synthetic { spec } => write!(f, "{}", spec.describe()),
        }
    }
}

/// Benchmark request before resolution. `None` fields fall back to defaults
/// or to shapes discovered in input files.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub model: Model,
    /// Required by `run_benchmark`; `compare_abstractions` fills it per run.
    pub abstraction: Option<Abstraction>,
    pub reduce_op: ReduceOp,
    pub source: GraphSource,
    pub symmetrize: bool,
    pub feature_len: Option<usize>,
    pub features_path: Option<PathBuf>,
    pub out_dim: usize,
    pub edge_feature_len: usize,
    pub params_path: Option<PathBuf>,
    pub repetitions: usize,
    pub warmup: usize,
    /// 0 delegates to the library default pool.
    pub threads: usize,
    pub seed: u64,
    pub memory_limit_bytes: Option<u64>,
    /// Set by frontends that defaulted a generator's mean degree; echoed
    /// into the report so the workload is reconstructible.
    pub assumed_mean_degree: Option<f64>,
}

impl BenchConfig {
    pub fn new(model: Model, source: GraphSource) -> Self {
        BenchConfig {
            model,
            abstraction: None,
            reduce_op: ReduceOp::Add,
            source,
            symmetrize: false,
            feature_len: None,
            features_path: None,
            out_dim: DEFAULT_OUT_DIM,
            edge_feature_len: DEFAULT_EDGE_FEATURE_LEN,
            params_path: None,
            repetitions: DEFAULT_REPETITIONS,
            warmup: DEFAULT_WARMUP,
            threads: 0,
            seed: 0,
            memory_limit_bytes: None,
            assumed_mean_degree: None,
        }
    }
}

/// Everything a timed run needs, built outside the timed region.
pub struct Prepared {
    pub views: GraphViews,
    pub stats: GraphStats,
    pub features: FeatureMatrix,
    pub weights: DenseWeights,
    pub params: ModelParams,
    pub edge_features: Option<FeatureMatrix>,
    pub feature_len: usize,
    pub edge_feature_len: Option<usize>,
}

/// Loads or generates the workload: graph, statistics, prebuilt views,
/// features, and parameters.
pub fn prepare(cfg: &BenchConfig) -> Result<Prepared> {
    if cfg.repetitions == 0 {
        return Err(Error::InvalidParameter {
            name: "reps",
            reason: "at least one timed repetition is required".into(),
        });
    }
    if cfg.out_dim == 0 {
        return Err(Error::InvalidParameter {
            name: "out-dim",
            reason: "output width must be positive".into(),
        });
    }
    if cfg.feature_len == Some(0) {
        return Err(Error::InvalidParameter {
            name: "feature-len",
            reason: "feature width must be positive".into(),
        });
    }
    let mut graph = match &cfg.source {
        GraphSource::File { path } => read_edge_list(path, None)?,
        GraphSource::Synthetic { spec } => spec.generate()?,
    };
    if cfg.symmetrize {
        graph = graph.symmetrized();
    }
    let stats = compute_stats(&graph);
    let n = graph.num_vertices();
    let e = graph.num_edges();
    let views = GraphViews::from_coo(graph);
    let features = match &cfg.features_path {
        Some(path) => {
            let m = FeatureMatrix::read_file(path)?;
            if m.rows() != n {
                return Err(Error::ShapeMismatch {
                    context: "feature file",
                    expected: format!("{n} rows"),
                    actual: format!("{} rows", m.rows()),
                });
            }
            if let Some(fl) = cfg.feature_len {
                if m.cols() != fl {
                    return Err(Error::ShapeMismatch {
                        context: "feature file",
                        expected: format!("{fl} columns"),
                        actual: format!("{} columns", m.cols()),
                    });
                }
            }
            m
        }
        None => {
            let fl = cfg.feature_len.unwrap_or(DEFAULT_FEATURE_LEN);
            FeatureMatrix::random(n, fl, crate::rng::keyed(cfg.seed, 11))
        }
    };
    let feature_len = features.cols();
    let loaded = match &cfg.params_path {
        Some(path) => load_layer_params(cfg.model, feature_len, cfg.out_dim, path)?,
        None => random_layer_params(
            cfg.model,
            feature_len,
            cfg.out_dim,
            cfg.edge_feature_len,
            crate::rng::keyed(cfg.seed, 13),
        ),
    };
    // Loaded pdn parameters fix the edge feature width.
    let edge_feature_len = match &loaded.params {
        ModelParams::Pdn {
            edge_map_weight, ..
        } => Some(edge_map_weight.len()),
        _ => None,
    };
    let edge_features = edge_feature_len
        .map(|len| FeatureMatrix::random(e, len, crate::rng::keyed(cfg.seed, 12)));
    Ok(Prepared {
        views,
        stats,
        features,
        weights: loaded.weights,
        params: loaded.params,
        edge_features,
        feature_len,
        edge_feature_len,
    })
}

fn digest_matrix(m: &FeatureMatrix) -> String {
    let mut hasher = Sha256::new();
    hasher.update((m.rows() as u64).to_le_bytes());
    hasher.update((m.cols() as u64).to_le_bytes());
    for &v in m.data() {
        hasher.update(v.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Runs one timed benchmark. Fails before allocating anything big if the
/// estimated peak exceeds `memory_limit_bytes`.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport> {
    run_with_sweep(cfg, None)
}

fn run_with_sweep(
    cfg: &BenchConfig,
    swept: Option<(&'static str, f64)>,
) -> Result<BenchReport> {
    let abstraction = cfg.abstraction.ok_or_else(|| Error::InvalidParameter {
        name: "abstraction",
        reason: "a benchmark run needs an abstraction (or use compare_abstractions)".into(),
    })?;
    let prepared = prepare(cfg)?;
    let spec = LayerSpec {
        model: cfg.model,
        abstraction,
        reduce_op: cfg.reduce_op,
        in_dim: prepared.feature_len,
        out_dim: cfg.out_dim,
        params: prepared.params.clone(),
    };
    spec.validate()?;
    let n = prepared.stats.num_vertices;
    let e = prepared.stats.num_edges;
    if let Some(limit) = cfg.memory_limit_bytes {
        let estimate = estimate_peak_bytes(
            cfg.model,
            abstraction,
            cfg.reduce_op,
            n,
            e,
            prepared.feature_len,
            cfg.out_dim,
        );
        if estimate > limit {
            return Err(Error::AllocationLimit {
                bytes: estimate,
                limit,
            });
        }
    }
    let mut samples = Vec::with_capacity(cfg.repetitions);
    let output = exec::with_threads(cfg.threads, || -> Result<_> {
        for _ in 0..cfg.warmup {
            forward_layer(
                &spec,
                &prepared.views,
                &prepared.features,
                &prepared.weights,
                prepared.edge_features.as_ref(),
            )?;
        }
        let mut last = None;
        for _ in 0..cfg.repetitions {
            let start = Instant::now();
            let out = forward_layer(
                &spec,
                &prepared.views,
                &prepared.features,
                &prepared.weights,
                prepared.edge_features.as_ref(),
            )?;
            samples.push(start.elapsed().as_nanos() as u64);
            last = Some(out);
        }
        Ok(last.expect("at least one repetition ran"))
    })?;
    if let Some(limit) = cfg.memory_limit_bytes {
        if output.counters.peak_aux_bytes > limit {
            return Err(Error::AllocationLimit {
                bytes: output.counters.peak_aux_bytes,
                limit,
            });
        }
    }
    let memory = MemoryReport {
        peak_aux_bytes: output.counters.peak_aux_bytes,
        output_bytes: output.features.heap_bytes(),
    };
    let config = ResolvedConfig {
        model: cfg.model,
        abstraction,
        reduce_op: cfg.reduce_op,
        source: cfg.source.clone(),
        symmetrize: cfg.symmetrize,
        feature_len: prepared.feature_len,
        out_dim: cfg.out_dim,
        edge_feature_len: prepared.edge_feature_len,
        repetitions: cfg.repetitions,
        warmup: cfg.warmup,
        threads: cfg.threads,
        seed: cfg.seed,
        assumed_mean_degree: cfg.assumed_mean_degree,
        swept_property: swept.map(|(p, _)| p.to_string()),
        swept_value: swept.map(|(_, v)| v),
    };
    let environment = EnvironmentRecord {
        threads: exec::effective_threads(cfg.threads),
        parallel_feature: exec::PARALLEL_ENABLED,
        precision: "f32".into(),
        artifact_version: crate::ARTIFACT_VERSION.into(),
        warmup_policy: format!(
            "{} full forward passes discarded before {} timed repetitions",
            cfg.warmup, cfg.repetitions
        ),
    };
    Ok(BenchReport {
        config,
        graph: prepared.stats,
        counters: output.counters,
        memory,
        output_digest: digest_matrix(&output.features),
        environment,
        timing: summarize(&samples),
    })
}

/// Side-by-side reports plus rankings. The comparison set is scatter,
/// reduce, and pull, filtered to what the model and op can legally run;
/// push is opt-in via a single-abstraction run because its sequential
/// accumulation is not a like-for-like latency contender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub reports: Vec<BenchReport>,
    pub ranking_by_mean_latency_ns: Vec<String>,
    pub ranking_by_peak_memory: Vec<String>,
}

impl ComparisonReport {
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serialization");
        let mut text = serde_json::to_string_pretty(&value).expect("report serialization");
        text.push('\n');
        text
    }
}

const COMPARE_CANDIDATES: [Abstraction; 3] =
    [Abstraction::Scatter, Abstraction::Reduce, Abstraction::Pull];

/// Benchmarks every legal comparison abstraction under one configuration.
pub fn compare_abstractions(cfg: &BenchConfig) -> Result<ComparisonReport> {
    let legal = legal_abstractions(cfg.model, cfg.reduce_op);
    let mut reports = Vec::new();
    for a in COMPARE_CANDIDATES {
        if !legal.contains(&a) {
            continue;
        }
        let mut one = cfg.clone();
        one.abstraction = Some(a);
        reports.push(run_benchmark(&one)?);
    }
    if reports.is_empty() {
        return Err(Error::InvalidParameter {
            name: "op",
            reason: format!(
                "no comparison abstraction supports model {} with op {}",
                cfg.model.name(),
                cfg.reduce_op.name()
            ),
        });
    }
    let mut by_latency: Vec<(f64, &'static str)> = reports
        .iter()
        .map(|r| (r.timing.mean_ns, r.config.abstraction.name()))
        .collect();
    by_latency.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
    let mut by_memory: Vec<(u64, &'static str)> = reports
        .iter()
        .map(|r| (r.memory.peak_aux_bytes, r.config.abstraction.name()))
        .collect();
    by_memory.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(b.1)));
    Ok(ComparisonReport {
        ranking_by_mean_latency_ns: by_latency.iter().map(|&(_, n)| n.to_string()).collect(),
        ranking_by_peak_memory: by_memory.iter().map(|&(_, n)| n.to_string()).collect(),
        reports,
    })
}

/// Property swept across benchmark runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepProperty {
    Density,
    Exponent,
    RewireP,
    FeatureLen,
}

impl SweepProperty {
    pub fn name(&self) -> &'static str {
        match self {
            SweepProperty::Density => "density",
            SweepProperty::Exponent => "exponent",
            SweepProperty::RewireP => "rewire_p",
            SweepProperty::FeatureLen => "feature_len",
        }
    }
}

impl std::str::FromStr for SweepProperty {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "density" => Ok(SweepProperty::Density),
            "exponent" => Ok(SweepProperty::Exponent),
            "rewire_p" => Ok(SweepProperty::RewireP),
            "feature_len" => Ok(SweepProperty::FeatureLen),
            other => Err(Error::InvalidParameter {
                name: "property",
                reason: format!(
                    "unknown sweep property `{other}` (expected density, exponent, rewire_p, or feature_len)"
                ),
            }),
        }
    }
}

fn apply_sweep_value(
    cfg: &BenchConfig,
    property: SweepProperty,
    value: f64,
) -> Result<BenchConfig> {
    let mut out = cfg.clone();
    let family_err = |needed: &str| Error::InvalidParameter {
        name: "property",
        reason: format!(
            "a {} sweep needs a synthetic {needed} source",
            property.name()
        ),
    };
    match property {
        SweepProperty::Density => match &mut out.source {
            GraphSource::Synthetic {
                spec: SynthSpec::ErdosRenyi { density, .. },
            } => *density = value,
            _ => return Err(family_err("erdos_renyi")),
        },
        SweepProperty::Exponent => match &mut out.source {
            GraphSource::Synthetic {
                spec: SynthSpec::ChungLuPowerlaw { exponent, .. },
            } => *exponent = value,
            _ => return Err(family_err("chung_lu_powerlaw")),
        },
        SweepProperty::RewireP => match &mut out.source {
            GraphSource::Synthetic {
                spec: SynthSpec::WattsStrogatz {
                    rewire_probability, ..
                },
            } => *rewire_probability = value,
            _ => return Err(family_err("watts_strogatz")),
        },
        SweepProperty::FeatureLen => {
            if out.features_path.is_some() {
                return Err(Error::InvalidParameter {
                    name: "property",
                    reason: "a feature_len sweep conflicts with an explicit feature file".into(),
                });
            }
            if value < 1.0 || value.fract() != 0.0 {
                return Err(Error::InvalidParameter {
                    name: "values",
                    reason: format!("feature_len values must be positive integers, got {value}"),
                });
            }
            out.feature_len = Some(value as usize);
        }
    }
    Ok(out)
}

/// Runs the base configuration once per value, stamping each report with the
/// swept property. The abstraction stays fixed across the sweep.
pub fn sweep(
    cfg: &BenchConfig,
    property: SweepProperty,
    values: &[f64],
) -> Result<Vec<BenchReport>> {
    if values.is_empty() {
        return Err(Error::InvalidParameter {
            name: "values",
            reason: "a sweep needs at least one value".into(),
        });
    }
    let mut reports = Vec::with_capacity(values.len());
    for &value in values {
        let point = apply_sweep_value(cfg, property, value)?;
        reports.push(run_with_sweep(&point, Some((property.name(), value)))?);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{write_edge_list, CooGraph};

    fn er_source(n: usize, density: f64, seed: u64) -> GraphSource {
        GraphSource::Synthetic {
            spec: SynthSpec::ErdosRenyi {
                num_vertices: n,
                density,
                seed,
            },
        }
    }

    fn quick(model: Model, source: GraphSource) -> BenchConfig {
        let mut cfg = BenchConfig::new(model, source);
        cfg.repetitions = 2;
        cfg.warmup = 1;
        cfg.feature_len = Some(4);
        cfg.out_dim = 3;
        cfg.threads = 1;
        cfg
    }

    #[test]
    fn single_repetition_report_is_consistent() {
        let mut cfg = quick(Model::Gcn, er_source(16, 0.2, 3));
        cfg.abstraction = Some(Abstraction::Pull);
        cfg.repetitions = 1;
        let r = run_benchmark(&cfg).unwrap();
        assert_eq!(r.timing.samples_ns.len(), 1);
        assert_eq!(r.timing.mean_ns, r.timing.samples_ns[0] as f64);
        assert_eq!(r.config.feature_len, 4);
        assert_eq!(r.memory.output_bytes, 16 * 3 * 4);
        assert!(r.memory.peak_aux_bytes >= r.memory.output_bytes);
        assert_eq!(r.output_digest.len(), 64);
        assert!(r.counters.edges_traversed > 0);
        assert!(r.environment.warmup_policy.contains('1'));
    }

    #[test]
    fn reports_are_deterministic_outside_timing() {
        let mut cfg = quick(Model::Gat, er_source(24, 0.15, 9));
        cfg.abstraction = Some(Abstraction::Scatter);
        let a = run_benchmark(&cfg).unwrap();
        let b = run_benchmark(&cfg).unwrap();
        assert_eq!(a.deterministic_payload(), b.deterministic_payload());
        assert_eq!(a.output_digest, b.output_digest);
        assert_eq!(a.counters, b.counters);
    }

    #[test]
    fn json_roundtrip_is_byte_identical() {
        let mut cfg = quick(Model::Gin, er_source(12, 0.2, 5));
        cfg.abstraction = Some(Abstraction::Reduce);
        let r = run_benchmark(&cfg).unwrap();
        let text = r.to_json();
        let back: BenchReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn deterministic_payload_excludes_timing() {
        let mut cfg = quick(Model::Gcn, er_source(10, 0.2, 1));
        cfg.abstraction = Some(Abstraction::Push);
        let r = run_benchmark(&cfg).unwrap();
        let payload = r.deterministic_payload();
        assert!(!payload.contains("samples_ns"));
        assert!(!payload.contains("mean_ns"));
        assert!(payload.contains("output_digest"));
    }

    #[test]
    fn compare_covers_legal_abstractions() {
        let gcn = compare_abstractions(&quick(Model::Gcn, er_source(14, 0.2, 2))).unwrap();
        assert_eq!(gcn.reports.len(), 3);
        assert_eq!(gcn.ranking_by_mean_latency_ns.len(), 3);
        assert_eq!(gcn.ranking_by_peak_memory.len(), 3);
        let gat = compare_abstractions(&quick(Model::Gat, er_source(14, 0.2, 2))).unwrap();
        assert_eq!(gat.reports.len(), 2);
        let names: Vec<_> = gat
            .reports
            .iter()
            .map(|r| r.config.abstraction.name())
            .collect();
        assert_eq!(names, vec!["scatter", "reduce"]);
    }

    #[test]
    fn compare_on_empty_graph_counts_zero_messages() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.edges");
        write_edge_list(&CooGraph::empty(5), &path).unwrap();
        let cfg = quick(Model::Gcn, GraphSource::File { path });
        let cmp = compare_abstractions(&cfg).unwrap();
        assert_eq!(cmp.reports.len(), 3);
        for r in &cmp.reports {
            // The only traffic left is the self-loop augmentation.
            assert_eq!(r.graph.num_edges, 0);
            assert_eq!(r.counters.edges_traversed, 5);
        }
    }

    #[test]
    fn memory_limit_rejects_big_scatter() {
        let mut cfg = quick(Model::Gin, er_source(200, 0.2, 4));
        cfg.abstraction = Some(Abstraction::Scatter);
        cfg.feature_len = Some(32);
        cfg.memory_limit_bytes = Some(1000);
        match run_benchmark(&cfg) {
            Err(Error::AllocationLimit { bytes, limit }) => {
                assert!(bytes > limit);
                assert_eq!(limit, 1000);
            }
            other => panic!("expected allocation limit error, got {other:?}"),
        }
    }

    #[test]
    fn scatter_and_pull_memory_split_matches_messages() {
        // At mean degree E/N = 25 the message buffer dominates: the peak gap
        // between scatter and pull must be the messages within 10%.
        let mut cfg = quick(Model::Gin, er_source(500, 0.05, 6));
        cfg.feature_len = Some(32);
        cfg.out_dim = 8;
        cfg.repetitions = 1;
        cfg.warmup = 0;
        cfg.abstraction = Some(Abstraction::Scatter);
        let scatter = run_benchmark(&cfg).unwrap();
        cfg.abstraction = Some(Abstraction::Pull);
        let pull = run_benchmark(&cfg).unwrap();
        let message_bytes = scatter.counters.messages_materialized * 4;
        assert!(scatter.memory.peak_aux_bytes >= message_bytes);
        assert!(pull.memory.peak_aux_bytes < scatter.memory.peak_aux_bytes);
        let gap = (scatter.memory.peak_aux_bytes - pull.memory.peak_aux_bytes) as f64;
        let rel = (gap - message_bytes as f64).abs() / message_bytes as f64;
        assert!(rel <= 0.10, "gap {gap} vs messages {message_bytes}");
    }

    #[test]
    fn sweep_density_produces_monotone_edges() {
        let mut cfg = quick(Model::Gcn, er_source(200, 0.01, 7));
        cfg.abstraction = Some(Abstraction::Pull);
        let reports = sweep(&cfg, SweepProperty::Density, &[0.01, 0.05, 0.1]).unwrap();
        assert_eq!(reports.len(), 3);
        for pair in reports.windows(2) {
            assert!(pair[1].graph.num_edges >= pair[0].graph.num_edges);
            assert!(pair[1].counters.edges_traversed >= pair[0].counters.edges_traversed);
        }
        for (r, v) in reports.iter().zip([0.01, 0.05, 0.1]) {
            assert_eq!(r.config.swept_property.as_deref(), Some("density"));
            assert_eq!(r.config.swept_value, Some(v));
        }
    }

    #[test]
    fn single_value_sweep_matches_direct_run() {
        let mut cfg = quick(Model::Gin, er_source(60, 0.1, 8));
        cfg.abstraction = Some(Abstraction::Reduce);
        let swept = sweep(&cfg, SweepProperty::FeatureLen, &[4.0]).unwrap();
        let direct = run_benchmark(&cfg).unwrap();
        assert_eq!(swept[0].counters, direct.counters);
        assert_eq!(swept[0].output_digest, direct.output_digest);
    }

    #[test]
    fn sweep_rejects_mismatched_family_and_bad_values() {
        let mut cfg = quick(Model::Gcn, er_source(30, 0.1, 1));
        cfg.abstraction = Some(Abstraction::Pull);
        assert!(sweep(&cfg, SweepProperty::Exponent, &[2.5]).is_err());
        assert!(sweep(&cfg, SweepProperty::RewireP, &[0.5]).is_err());
        assert!(sweep(&cfg, SweepProperty::FeatureLen, &[2.5]).is_err());
        assert!(sweep(&cfg, SweepProperty::Density, &[]).is_err());
    }

    #[test]
    fn csv_has_one_row_per_report_and_aligned_columns() {
        let mut cfg = quick(Model::Gcn, er_source(40, 0.1, 2));
        cfg.abstraction = Some(Abstraction::Pull);
        let reports = sweep(&cfg, SweepProperty::Density, &[0.05, 0.1]).unwrap();
        let csv = reports_to_csv(&reports);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        let header_cols = lines[0].split(',').count();
        for row in &lines[1..] {
            assert_eq!(row.split(',').count(), header_cols, "row: {row}");
        }
        assert!(lines[0].starts_with("model,abstraction,op,"));
    }

    #[test]
    fn feature_file_fixes_width_and_row_count() {
        let dir = tempfile::tempdir().unwrap();
        let g = crate::synth::gen_erdos_renyi(12, 0.2, 3).unwrap();
        let gpath = dir.path().join("g.edges");
        write_edge_list(&g, &gpath).unwrap();
        let feats = FeatureMatrix::random(12, 6, 4);
        let fpath = dir.path().join("x.bin");
        feats.write_binary(&fpath).unwrap();
        let mut cfg = quick(Model::Gcn, GraphSource::File { path: gpath });
        cfg.abstraction = Some(Abstraction::Pull);
        cfg.features_path = Some(fpath.clone());
        cfg.feature_len = None;
        let r = run_benchmark(&cfg).unwrap();
        assert_eq!(r.config.feature_len, 6);
        cfg.feature_len = Some(5);
        assert!(matches!(
            run_benchmark(&cfg),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn pdn_comparison_runs_with_edge_features() {
        let mut cfg = quick(Model::Pdn, er_source(20, 0.2, 5));
        cfg.edge_feature_len = 3;
        let cmp = compare_abstractions(&cfg).unwrap();
        assert_eq!(cmp.reports.len(), 3);
        for r in &cmp.reports {
            assert_eq!(r.config.edge_feature_len, Some(3));
        }
    }

    #[test]
    fn run_rejects_illegal_combination() {
        let mut cfg = quick(Model::Gat, er_source(10, 0.2, 1));
        cfg.abstraction = Some(Abstraction::Pull);
        assert!(matches!(
            run_benchmark(&cfg),
            Err(Error::UnsupportedCombination { .. })
        ));
    }

    #[test]
    fn run_requires_abstraction_and_positive_reps() {
        let cfg = quick(Model::Gcn, er_source(10, 0.2, 1));
        assert!(run_benchmark(&cfg).is_err());
        let mut cfg = quick(Model::Gcn, er_source(10, 0.2, 1));
        cfg.abstraction = Some(Abstraction::Pull);
        cfg.repetitions = 0;
        assert!(run_benchmark(&cfg).is_err());
    }
}
