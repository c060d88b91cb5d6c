use std::hint::black_box;

use bcsfl_core::aggregation::{kha, uniform_average};
use bcsfl_core::clustering::kmeans;
use bcsfl_core::flcore::{local_sgd, SyntheticBlobs};
use bcsfl_core::overhead::count_round;
use bcsfl_core::*;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn swarm(uavs: usize) -> Topology {
    deploy_swarm(&SwarmConfig {
        num_uavs: uavs,
        area_width: 1000.0,
        area_height: 1000.0,
        comm_range: 150.0,
        max_drift: 5.0,
        rng_seed: 42,
    })
    .unwrap()
}

fn clustering(c: &mut Criterion) {
    let mut group = c.benchmark_group("clustering");
    group.sample_size(10);
    for uavs in [200, 400] {
        let t = swarm(uavs);
        group.bench_with_input(BenchmarkId::new("kmeans_q70", uavs), &t, |b, t| {
            b.iter(|| kmeans(black_box(t.positions()), 70, 1, 100))
        });
        group.bench_with_input(BenchmarkId::new("cluster_swarm", uavs), &t, |b, t| {
            b.iter(|| cluster_swarm(black_box(t), &ClusteringConfig::new(42)).unwrap())
        });
    }
    group.finish();
}

fn training(c: &mut Criterion) {
    let data = SyntheticBlobs::new(3, 20, 100, 1).generate();
    let logistic = TaskSpec::logistic(20, 3);
    let mlp = TaskSpec::mlp(20, 64, 3);
    let mut group = c.benchmark_group("local_sgd_epoch_300");
    for (name, task) in [("logistic", logistic), ("mlp64", mlp)] {
        let model = task.init_model(3);
        group.bench_function(name, |b| {
            b.iter(|| local_sgd(&task, black_box(&model), &data, 0.05, 10, 9).unwrap())
        });
    }
    group.finish();
}

fn aggregation(c: &mut Criterion) {
    let t = swarm(200);
    let layout = cluster_swarm(&t, &ClusteringConfig::new(42)).unwrap();
    let dim = TaskSpec::mlp(784, 64, 10).num_params();
    let models: Vec<ModelVector> = (0..layout.num_clusters())
        .map(|q| ModelVector(vec![q as f64; dim]))
        .collect();
    let refs: Vec<&ModelVector> = models.iter().collect();
    c.bench_function("fca_average_mnist_mlp", |b| b.iter(|| uniform_average(black_box(&refs)).unwrap()));
    c.bench_function("kha1_mnist_mlp", |b| {
        b.iter(|| kha(&layout.ch_graph, black_box(&models), 1).unwrap())
    });
}

fn overhead(c: &mut Criterion) {
    let mut group = c.benchmark_group("count_round");
    for uavs in [200, 400] {
        let t = swarm(uavs);
        let layout = cluster_swarm(&t, &ClusteringConfig::new(42)).unwrap();
        for scheme in [Scheme::Conventional, Scheme::Fca, Scheme::Kha { k: 1 }] {
            group.bench_with_input(BenchmarkId::new(scheme.to_string(), uavs), &scheme, |b, &s| {
                b.iter(|| count_round(s, black_box(&t), &layout, 5).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, clustering, training, aggregation, overhead);
criterion_main!(benches);
