//! Criterion suite comparing the four abstractions and thread modes.
//!
//! Run with `cargo bench -p aggrbench-core`. For the sequential-fallback
//! build, add `--no-default-features`; the `threads/1` rows of the default
//! build pin a one-worker pool for an in-process comparison point.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use aggrbench_core::features::{DenseWeights, FeatureMatrix};
use aggrbench_core::kernels::{aggregate, Abstraction, ReduceOp};
use aggrbench_core::layers::{forward_layer, random_layer_params, LayerSpec, Model};
use aggrbench_core::synth::gen_erdos_renyi;
use aggrbench_core::topology::GraphViews;

const N: usize = 2000;
const DENSITY: f64 = 0.01;
const F: usize = 32;

fn workload() -> (GraphViews, FeatureMatrix) {
    let g = gen_erdos_renyi(N, DENSITY, 7).expect("generator parameters are valid");
    let x = FeatureMatrix::random(N, F, 1);
    (GraphViews::from_coo(g), x)
}

/// Runs `f` on one pinned worker when the parallel feature is on; otherwise
/// the build is already sequential.
fn run_single_threaded<R>(f: impl FnOnce() -> R + Send) -> R
where
    R: Send,
{
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("thread pool construction")
            .install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        f()
    }
}

fn bench_aggregation(c: &mut Criterion) {
    let (views, x) = workload();
    let mut group = c.benchmark_group("aggregate_add");
    for a in Abstraction::ALL {
        group.bench_function(BenchmarkId::new(a.name(), "threads/default"), |b| {
            b.iter(|| aggregate(&views, a, black_box(&x), ReduceOp::Add, false).unwrap())
        });
    }
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("thread pool construction");
        for a in Abstraction::ALL {
            group.bench_function(BenchmarkId::new(a.name(), "threads/1"), |b| {
                pool.install(|| {
                    b.iter(|| aggregate(&views, a, black_box(&x), ReduceOp::Add, false).unwrap())
                })
            });
        }
    }
    group.finish();
}

fn bench_gcn_forward(c: &mut Criterion) {
    let (views, x) = workload();
    let out_dim = 8;
    let loaded = random_layer_params(Model::Gcn, F, out_dim, 0, 3);
    let weights: DenseWeights = loaded.weights;
    let mut group = c.benchmark_group("gcn_forward");
    for a in Abstraction::ALL {
        let spec = LayerSpec {
            model: Model::Gcn,
            abstraction: a,
            reduce_op: ReduceOp::Add,
            in_dim: F,
            out_dim,
            params: loaded.params.clone(),
        };
        group.bench_function(BenchmarkId::new(a.name(), "threads/default"), |b| {
            b.iter(|| forward_layer(&spec, &views, black_box(&x), &weights, None).unwrap())
        });
        group.bench_function(BenchmarkId::new(a.name(), "threads/1"), |b| {
            run_single_threaded(|| {
                b.iter(|| forward_layer(&spec, &views, black_box(&x), &weights, None).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_aggregation, bench_gcn_forward);
criterion_main!(benches);
