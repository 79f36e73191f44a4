//! Command line front end for the aggrbench characterization harness.
//!
//! Exit codes: 0 on success, 1 when a run fails at execution time (memory
//! budget exceeded, I/O failure, equivalence mismatch), 2 for usage and
//! validation errors (unknown flags, illegal parameter values, unsupported
//! model and abstraction combinations, malformed input files).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use aggrbench_core::bench::{
    compare_abstractions, reports_to_csv, run_benchmark, sweep, BenchConfig, GraphSource,
    SweepProperty, DEFAULT_EDGE_FEATURE_LEN, DEFAULT_FEATURE_LEN, DEFAULT_OUT_DIM,
    DEFAULT_REPETITIONS, DEFAULT_WARMUP,
};
use aggrbench_core::kernels::oracle::verify_views;
use aggrbench_core::kernels::{Abstraction, ReduceOp};
use aggrbench_core::layers::Model;
use aggrbench_core::synth::{SynthSpec, DEFAULT_MEAN_DEGREE, DEFAULT_NUM_VERTICES};
use aggrbench_core::topology::{
    compute_stats, read_edge_list, write_edge_list, CooGraph, GraphStats, GraphViews,
};
use aggrbench_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "aggrbench",
    version,
    about = "Characterize GNN aggregation abstractions on synthetic and file graphs",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph and write it as an edge list
    Gen(GenArgs),
    /// Compute structural statistics for a graph
    Stats(StatsArgs),
    /// Check that every abstraction computes the same aggregation
    Verify(VerifyArgs),
    /// Time one layer configuration, or compare legal abstractions
    Bench(BenchArgs),
    /// Benchmark across a swept graph or feature property
    Sweep(SweepArgs),
    /// Canonicalize an external edge list and summarize it
    Ingest(IngestArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    #[value(name = "erdos_renyi")]
    ErdosRenyi,
    #[value(name = "chung_lu_powerlaw")]
    ChungLuPowerlaw,
    #[value(name = "watts_strogatz")]
    WattsStrogatz,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

/// Where the graph comes from: an edge list file or a synthetic family.
/// Family parameters only apply to the family that defines them.
#[derive(Args)]
struct SourceArgs {
    /// Edge list file to load instead of generating a graph
    #[arg(long, value_name = "PATH", conflicts_with = "family")]
    input: Option<PathBuf>,

    /// Synthetic graph family
    #[arg(long, value_enum)]
    family: Option<Family>,

    /// Vertex count for synthetic graphs [default: 10000]
    #[arg(long, value_name = "N")]
    n: Option<usize>,

    /// Edge probability for erdos_renyi [default: 0.01]
    #[arg(long, value_name = "D")]
    density: Option<f64>,

    /// Degree-distribution exponent for chung_lu_powerlaw [default: 2.5]
    #[arg(long, value_name = "GAMMA")]
    exponent: Option<f64>,

    /// Target mean degree for chung_lu_powerlaw [default: 20]
    #[arg(long, value_name = "M")]
    mean_degree: Option<f64>,

    /// Even ring degree for watts_strogatz [default: 10]
    #[arg(long, value_name = "K")]
    k: Option<usize>,

    /// Rewire probability for watts_strogatz [default: 0.1]
    #[arg(long, value_name = "P")]
    p: Option<f64>,

    /// Seed for graph generation and derived workload material
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn check_absent(set: bool, name: &'static str, scope: &'static str) -> Result<()> {
    if set {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("does not apply to {scope}"),
        });
    }
    Ok(())
}

impl SourceArgs {
    /// Resolves flags into a graph source. The second value is the mean
    /// degree a Chung-Lu spec fell back to when none was given, echoed into
    /// reports so the workload stays reconstructible.
    fn resolve(&self, context: &'static str) -> Result<(GraphSource, Option<f64>)> {
        if let Some(path) = &self.input {
            check_absent(self.n.is_some(), "n", "file sources")?;
            check_absent(self.density.is_some(), "density", "file sources")?;
            check_absent(self.exponent.is_some(), "exponent", "file sources")?;
            check_absent(self.mean_degree.is_some(), "mean_degree", "file sources")?;
            check_absent(self.k.is_some(), "k", "file sources")?;
            check_absent(self.p.is_some(), "p", "file sources")?;
            return Ok((GraphSource::File { path: path.clone() }, None));
        }
        let Some(family) = self.family else {
            return Err(Error::InvalidParameter {
                name: "family",
                reason: format!("{context} needs either --input or --family"),
            });
        };
        let n = self.n.unwrap_or(DEFAULT_NUM_VERTICES);
        let (spec, assumed) = match family {
            Family::ErdosRenyi => {
                check_absent(self.exponent.is_some(), "exponent", "erdos_renyi")?;
                check_absent(self.mean_degree.is_some(), "mean_degree", "erdos_renyi")?;
                check_absent(self.k.is_some(), "k", "erdos_renyi")?;
                check_absent(self.p.is_some(), "p", "erdos_renyi")?;
                let spec = SynthSpec::ErdosRenyi {
                    num_vertices: n,
                    density: self.density.unwrap_or(0.01),
                    seed: self.seed,
                };
                (spec, None)
            }
            Family::ChungLuPowerlaw => {
                check_absent(self.density.is_some(), "density", "chung_lu_powerlaw")?;
                check_absent(self.k.is_some(), "k", "chung_lu_powerlaw")?;
                check_absent(self.p.is_some(), "p", "chung_lu_powerlaw")?;
                let assumed = self.mean_degree.is_none().then_some(DEFAULT_MEAN_DEGREE);
                let spec = SynthSpec::ChungLuPowerlaw {
                    num_vertices: n,
                    exponent: self.exponent.unwrap_or(2.5),
                    mean_degree: self.mean_degree.unwrap_or(DEFAULT_MEAN_DEGREE),
                    seed: self.seed,
                };
                (spec, assumed)
            }
            Family::WattsStrogatz => {
                check_absent(self.density.is_some(), "density", "watts_strogatz")?;
                check_absent(self.exponent.is_some(), "exponent", "watts_strogatz")?;
                check_absent(self.mean_degree.is_some(), "mean_degree", "watts_strogatz")?;
                let spec = SynthSpec::WattsStrogatz {
                    num_vertices: n,
                    ring_degree: self.k.unwrap_or(10),
                    rewire_probability: self.p.unwrap_or(0.1),
                    seed: self.seed,
                };
                (spec, None)
            }
        };
        Ok((GraphSource::Synthetic { spec }, assumed))
    }
}

/// Layer and run parameters shared by `bench` and `sweep`.
#[derive(Args)]
struct ModelArgs {
    /// GNN layer to characterize
    #[arg(long)]
    model: Model,

    /// Run a single abstraction; omit to compare all legal ones
    #[arg(long)]
    abstraction: Option<Abstraction>,

    /// Reduction operator
    #[arg(long, default_value = "add")]
    op: ReduceOp,

    /// Width of the seeded random input features [default: 32]
    #[arg(long, value_name = "F")]
    feature_len: Option<usize>,

    /// Vertex feature file (text or binary matrix), replaces random features
    #[arg(long, value_name = "PATH")]
    features: Option<PathBuf>,

    /// Parameter manifest file, replaces seeded random layer parameters
    #[arg(long, value_name = "PATH")]
    params: Option<PathBuf>,

    /// Output feature width
    #[arg(long, value_name = "F", default_value_t = DEFAULT_OUT_DIM)]
    out_dim: usize,

    /// Edge feature width for pdn when no manifest fixes it
    #[arg(long, value_name = "L", default_value_t = DEFAULT_EDGE_FEATURE_LEN)]
    edge_feature_len: usize,

    /// Timed repetitions
    #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
    reps: usize,

    /// Discarded warmup repetitions
    #[arg(long, default_value_t = DEFAULT_WARMUP)]
    warmup: usize,

    /// Worker threads; 0 uses the library default pool
    #[arg(long, env = "AGGRBENCH_THREADS", value_name = "T", default_value_t = 0)]
    threads: usize,

    /// Refuse to run if the estimated peak allocation exceeds this
    #[arg(long, value_name = "BYTES")]
    memory_limit_bytes: Option<u64>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    source: SourceArgs,

    /// Output edge list path
    #[arg(short = 'o', long = "out", value_name = "PATH")]
    out: PathBuf,

    /// Include full structural statistics in the summary
    #[arg(long)]
    stats: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    source: SourceArgs,

    /// Mirror every edge before measuring
    #[arg(long)]
    symmetrize: bool,

    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,

    /// Write the report here instead of stdout
    #[arg(short = 'o', long = "out", value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: SourceArgs,

    /// Mirror every edge before checking
    #[arg(long)]
    symmetrize: bool,

    /// Feature width of the randomized checks
    #[arg(long, value_name = "F", default_value_t = DEFAULT_FEATURE_LEN)]
    feature_len: usize,

    /// Relative tolerance for inexact reductions
    #[arg(long, default_value_t = 1e-4)]
    rtol: f64,

    /// Write the report here instead of stdout
    #[arg(short = 'o', long = "out", value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    source: SourceArgs,

    #[command(flatten)]
    model: ModelArgs,

    /// Mirror every edge before benchmarking
    #[arg(long)]
    symmetrize: bool,

    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,

    /// Write the report here instead of stdout
    #[arg(short = 'o', long = "out", value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: SourceArgs,

    #[command(flatten)]
    model: ModelArgs,

    /// Property to sweep: density, exponent, rewire_p, or feature_len
    #[arg(long)]
    property: SweepProperty,

    /// Comma separated values for the swept property
    #[arg(long, value_delimiter = ',', required = true, value_name = "V,V,..")]
    values: Vec<f64>,

    /// Mirror every edge before benchmarking
    #[arg(long)]
    symmetrize: bool,

    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,

    /// Write the report here instead of stdout
    #[arg(short = 'o', long = "out", value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IngestArgs {
    /// Edge list file to read
    #[arg(long, value_name = "PATH")]
    input: PathBuf,

    /// Vertex count override when the file lacks a directive
    #[arg(long, value_name = "N")]
    n: Option<usize>,

    /// Mirror every edge
    #[arg(long)]
    symmetrize: bool,

    /// Include full structural statistics in the summary
    #[arg(long)]
    stats: bool,

    /// Canonicalized output path; omit to only validate and summarize
    #[arg(short = 'o', long = "out", value_name = "PATH")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::AllocationLimit { .. } | Error::Io(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Gen(args) => cmd_gen(args),
        Command::Stats(args) => cmd_stats(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Ingest(args) => cmd_ingest(args),
    }
}

fn load_graph(source: &GraphSource, symmetrize: bool) -> Result<CooGraph> {
    let g = match source {
        GraphSource::File { path } => read_edge_list(path, None)?,
        GraphSource::Synthetic { spec } => spec.generate()?,
    };
    Ok(if symmetrize { g.symmetrized() } else { g })
}

fn pretty(value: &serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("json serialization");
    text.push('\n');
    text
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn stats_csv(s: &GraphStats) -> String {
    let mle = s
        .powerlaw_exponent_mle
        .map_or(String::new(), |v| v.to_string());
    format!(
        "num_vertices,num_edges,density,max_in_degree,mean_in_degree,load_imbalance,\
         powerlaw_exponent_mle,global_clustering\n{},{},{},{},{},{},{},{}\n",
        s.num_vertices,
        s.num_edges,
        s.density,
        s.max_in_degree,
        s.mean_in_degree,
        s.load_imbalance,
        mle,
        s.global_clustering_coefficient,
    )
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode> {
    if args.source.input.is_some() {
        return Err(Error::InvalidParameter {
            name: "input",
            reason: "gen writes synthetic graphs; pass --family instead".into(),
        });
    }
    let (source, _) = args.source.resolve("gen")?;
    let GraphSource::Synthetic { spec } = source else {
        unreachable!("gen rejects file sources above");
    };
    let g = spec.generate()?;
    write_edge_list(&g, &args.out)?;
    let mut summary = serde_json::json!({
        "family": spec.family_name(),
        "num_vertices": g.num_vertices(),
        "num_edges": g.num_edges(),
        "out": args.out.display().to_string(),
        "spec": spec,
    });
    if args.stats {
        summary["stats"] = serde_json::to_value(compute_stats(&g)).expect("stats serialization");
    }
    print!("{}", pretty(&summary));
    Ok(ExitCode::SUCCESS)
}

fn cmd_stats(args: StatsArgs) -> Result<ExitCode> {
    let (source, _) = args.source.resolve("stats")?;
    let g = load_graph(&source, args.symmetrize)?;
    let stats = compute_stats(&g);
    let text = match args.format {
        OutputFormat::Json => pretty(&serde_json::to_value(&stats).expect("stats serialization")),
        OutputFormat::Csv => stats_csv(&stats),
    };
    emit(&text, args.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    let (source, _) = args.source.resolve("verify")?;
    let g = load_graph(&source, args.symmetrize)?;
    let views = GraphViews::from_coo(g);
    let report = verify_views(&views, args.feature_len, args.source.seed, args.rtol)?;
    let text = pretty(&serde_json::to_value(&report).expect("report serialization"));
    emit(&text, args.out.as_ref())?;
    if report.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        let failed = report.checks.iter().filter(|c| !c.pass).count();
        eprintln!(
            "error: {failed} of {} equivalence checks failed",
            report.checks.len()
        );
        Ok(ExitCode::from(1))
    }
}

fn build_config(source: &SourceArgs, model: &ModelArgs, symmetrize: bool) -> Result<BenchConfig> {
    let (graph_source, assumed) = source.resolve("bench")?;
    let mut cfg = BenchConfig::new(model.model, graph_source);
    cfg.abstraction = model.abstraction;
    cfg.reduce_op = model.op;
    cfg.symmetrize = symmetrize;
    cfg.feature_len = model.feature_len;
    cfg.features_path = model.features.clone();
    cfg.out_dim = model.out_dim;
    cfg.edge_feature_len = model.edge_feature_len;
    cfg.params_path = model.params.clone();
    cfg.repetitions = model.reps;
    cfg.warmup = model.warmup;
    cfg.threads = model.threads;
    cfg.seed = source.seed;
    cfg.memory_limit_bytes = model.memory_limit_bytes;
    cfg.assumed_mean_degree = assumed;
    Ok(cfg)
}

fn cmd_bench(args: BenchArgs) -> Result<ExitCode> {
    let cfg = build_config(&args.source, &args.model, args.symmetrize)?;
    let text = match (cfg.abstraction, args.format) {
        (Some(_), OutputFormat::Json) => run_benchmark(&cfg)?.to_json(),
        (Some(_), OutputFormat::Csv) => reports_to_csv(&[run_benchmark(&cfg)?]),
        (None, OutputFormat::Json) => compare_abstractions(&cfg)?.to_json(),
        (None, OutputFormat::Csv) => reports_to_csv(&compare_abstractions(&cfg)?.reports),
    };
    emit(&text, args.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode> {
    let cfg = build_config(&args.source, &args.model, args.symmetrize)?;
    if cfg.abstraction.is_none() {
        return Err(Error::InvalidParameter {
            name: "abstraction",
            reason: "a sweep runs one abstraction; pass --abstraction".into(),
        });
    }
    let reports = sweep(&cfg, args.property, &args.values)?;
    let text = match args.format {
        OutputFormat::Csv => reports_to_csv(&reports),
        OutputFormat::Json => {
            pretty(&serde_json::to_value(&reports).expect("report serialization"))
        }
    };
    emit(&text, args.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_ingest(args: IngestArgs) -> Result<ExitCode> {
    let g = read_edge_list(&args.input, args.n)?;
    let g = if args.symmetrize { g.symmetrized() } else { g };
    if let Some(path) = &args.out {
        write_edge_list(&g, path)?;
    }
    let mut summary = serde_json::json!({
        "input": args.input.display().to_string(),
        "num_vertices": g.num_vertices(),
        "num_edges": g.num_edges(),
        "weighted": g.weights().is_some(),
    });
    if let Some(path) = &args.out {
        summary["out"] = serde_json::json!(path.display().to_string());
    }
    if args.stats {
        summary["stats"] = serde_json::to_value(compute_stats(&g)).expect("stats serialization");
    }
    print!("{}", pretty(&summary));
    Ok(ExitCode::SUCCESS)
}
