//! Report structures with stable serialization.
//!
//! JSON output is pretty-printed with alphabetically ordered keys, so two
//! runs of the same configuration differ only inside the `timing` block;
//! `deterministic_payload` strips that block for byte-level comparison.

use serde::{Deserialize, Serialize};

use crate::kernels::{Abstraction, CostCounters, ReduceOp};
use crate::layers::Model;
use crate::topology::GraphStats;

use super::GraphSource;

/// Wall-clock samples of the timed repetitions plus derived statistics.
/// Samples are stored sorted ascending, and every statistic is bit-exactly
/// recomputable from them: the mean is the u128 sum cast to f64 and divided
/// by the count, the median averages the middle of the samples, and the
/// standard deviation sums squared deviations in storage order with the n-1
/// divisor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub samples_ns: Vec<u64>,
    pub mean_ns: f64,
    pub median_ns: f64,
    pub stddev_ns: f64,
    pub min_ns: u64,
    pub max_ns: u64,
}

/// Summarizes a non-empty set of samples.
pub fn summarize(samples: &[u64]) -> TimingStats {
    assert!(!samples.is_empty(), "timing requires at least one sample");
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    let sum: u128 = sorted.iter().map(|&s| s as u128).sum();
    let mean_ns = sum as f64 / n as f64;
    let median_ns = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] as f64 + sorted[n / 2] as f64) / 2.0
    };
    let stddev_ns = if n < 2 {
        0.0
    } else {
        let var = sorted
            .iter()
            .map(|&s| {
                let d = s as f64 - mean_ns;
                d * d
            })
            .sum::<f64>()
            / (n - 1) as f64;
        var.sqrt()
    };
    let (min_ns, max_ns) = (sorted[0], sorted[n - 1]);
    TimingStats {
        samples_ns: sorted,
        mean_ns,
        median_ns,
        stddev_ns,
        min_ns,
        max_ns,
    }
}

/// Every knob of a run after defaults and the environment are applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub model: Model,
    pub abstraction: Abstraction,
    pub reduce_op: ReduceOp,
    pub source: GraphSource,
    pub symmetrize: bool,
    pub feature_len: usize,
    pub out_dim: usize,
    /// Edge feature width; only the pdn model consumes edge features.
    pub edge_feature_len: Option<usize>,
    pub repetitions: usize,
    pub warmup: usize,
    /// Requested worker count; 0 delegates to the library default.
    pub threads: usize,
    pub seed: u64,
    /// Mean degree assumed when a generator needed one but the caller did
    /// not set it.
    pub assumed_mean_degree: Option<f64>,
    /// Present when this run is one point of a parameter sweep.
    pub swept_property: Option<String>,
    pub swept_value: Option<f64>,
}

/// Peak auxiliary allocation over the forward pass and the size of the
/// output it returns. The peak counts the output buffer, so it is never
/// smaller than `output_bytes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryReport {
    pub peak_aux_bytes: u64,
    pub output_bytes: u64,
}

/// Execution environment the run observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentRecord {
    /// Workers actually used after resolving a 0 request.
    pub threads: usize,
    pub parallel_feature: bool,
    /// Accumulation precision of the kernels.
    pub precision: String,
    pub artifact_version: String,
    pub warmup_policy: String,
}

/// One benchmark run: configuration, workload shape, deterministic cost
/// model, memory figures, an output digest, and timing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub config: ResolvedConfig,
    pub graph: GraphStats,
    pub counters: CostCounters,
    pub memory: MemoryReport,
    /// SHA-256 of the output feature matrix in little-endian row-major f32.
    pub output_digest: String,
    pub environment: EnvironmentRecord,
    pub timing: TimingStats,
}

impl BenchReport {
    /// Pretty JSON with alphabetically ordered keys and a trailing newline.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serialization");
        let mut text = serde_json::to_string_pretty(&value).expect("report serialization");
        text.push('\n');
        text
    }

    /// The report minus the `timing` block. Two runs of one configuration
    /// must produce byte-identical payloads.
    pub fn deterministic_payload(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serialization");
        value
            .as_object_mut()
            .expect("report is a JSON object")
            .remove("timing");
        let mut text = serde_json::to_string_pretty(&value).expect("report serialization");
        text.push('\n');
        text
    }

    pub fn csv_header() -> String {
        CSV_COLUMNS.join(",")
    }

    pub fn csv_row(&self) -> String {
        let g = &self.graph;
        let c = &self.counters;
        let t = &self.timing;
        let fields: Vec<String> = vec![
            self.config.model.name().into(),
            self.config.abstraction.name().into(),
            self.config.reduce_op.name().into(),
            csv_escape(&self.config.source.to_string()),
            self.config.symmetrize.to_string(),
            g.num_vertices.to_string(),
            g.num_edges.to_string(),
            format_float(g.density),
            g.max_in_degree.to_string(),
            format_float(g.mean_in_degree),
            format_float(g.load_imbalance),
            g.powerlaw_exponent_mle.map_or(String::new(), format_float),
            format_float(g.global_clustering_coefficient),
            self.config.feature_len.to_string(),
            self.config.out_dim.to_string(),
            self.config
                .swept_property
                .clone()
                .unwrap_or_default(),
            self.config
                .swept_value
                .map_or(String::new(), format_float),
            self.config.repetitions.to_string(),
            self.config.warmup.to_string(),
            self.environment.threads.to_string(),
            self.config.seed.to_string(),
            c.messages_materialized.to_string(),
            c.feature_reads.to_string(),
            c.feature_writes.to_string(),
            c.partial_sum_elements.to_string(),
            c.edges_traversed.to_string(),
            c.peak_aux_bytes.to_string(),
            self.memory.output_bytes.to_string(),
            self.output_digest.clone(),
            format_float(t.mean_ns),
            format_float(t.median_ns),
            format_float(t.stddev_ns),
            t.min_ns.to_string(),
            t.max_ns.to_string(),
        ];
        debug_assert_eq!(fields.len(), CSV_COLUMNS.len());
        fields.join(",")
    }
}

const CSV_COLUMNS: [&str; 34] = [
    "model",
    "abstraction",
    "op",
    "source",
    "symmetrize",
    "num_vertices",
    "num_edges",
    "density",
    "max_in_degree",
    "mean_in_degree",
    "load_imbalance",
    "powerlaw_exponent_mle",
    "global_clustering",
    "feature_len",
    "out_dim",
    "swept_property",
    "swept_value",
    "repetitions",
    "warmup",
    "threads",
    "seed",
    "messages_materialized",
    "feature_reads",
    "feature_writes",
    "partial_sum_elements",
    "edges_traversed",
    "peak_aux_bytes",
    "output_bytes",
    "output_digest",
    "mean_ns",
    "median_ns",
    "stddev_ns",
    "min_ns",
    "max_ns",
];

fn format_float(v: f64) -> String {
    // Shortest roundtrip form, same as the JSON encoding.
    let mut s = serde_json::Number::from_f64(v)
        .map(|n| n.to_string())
        .unwrap_or_else(|| "NaN".into());
    if !s.contains('.') && !s.contains('e') && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// One CSV document: header plus one row per report, trailing newline.
pub fn reports_to_csv(reports: &[BenchReport]) -> String {
    let mut out = BenchReport::csv_header();
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summarize_matches_hand_computation() {
        let t = summarize(&[3, 1, 2]);
        assert_eq!(t.mean_ns, 2.0);
        assert_eq!(t.median_ns, 2.0);
        assert_eq!(t.stddev_ns, 1.0);
        assert_eq!(t.min_ns, 1);
        assert_eq!(t.max_ns, 3);
        assert_eq!(t.samples_ns, vec![1, 2, 3]);
    }

    #[test]
    fn summarize_even_count_median() {
        let t = summarize(&[4, 1, 3, 2]);
        assert_eq!(t.median_ns, 2.5);
        assert_eq!(t.mean_ns, 2.5);
    }

    #[test]
    fn summarize_single_sample() {
        let t = summarize(&[7]);
        assert_eq!(t.mean_ns, 7.0);
        assert_eq!(t.stddev_ns, 0.0);
        assert_eq!(t.median_ns, 7.0);
    }

    #[test]
    fn summarize_mean_is_exactly_recomputable() {
        let samples: Vec<u64> = (0..1000).map(|i| 1_000_000 + i * 13).collect();
        let t = summarize(&samples);
        let sum: u128 = t.samples_ns.iter().map(|&s| s as u128).sum();
        assert_eq!(t.mean_ns, sum as f64 / t.samples_ns.len() as f64);
    }

    #[test]
    fn csv_escape_quotes_fields_with_commas() {
        assert_eq!(csv_escape("plain"), "plain");
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
        assert_eq!(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn format_float_keeps_integral_values_typed() {
        assert_eq!(format_float(2.0), "2.0");
        assert_eq!(format_float(0.25), "0.25");
    }
}
