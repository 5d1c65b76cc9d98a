//! Benchmarks for the numerical kernels the sweeps spend their time in.

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use skrsim_core::bounds::{mi_bound, VarianceConvention};
use skrsim_core::channel::{spatial_spectrum, BeamField, ChannelSampler};
use skrsim_core::config::SystemConfig;
use skrsim_core::eve::{eve_covariance, holevo};
use skrsim_core::noise::{HybridNoiseParams, Protocol, ProtocolParams};
use skrsim_core::skr::skr_instant;
use skrsim_core::symplectic::symplectic_eigenvalues;
use std::hint::black_box;

fn params() -> (ProtocolParams, HybridNoiseParams) {
    (
        ProtocolParams::new(1000.0, 1.0, 1.0, 1.0).unwrap(),
        HybridNoiseParams::new(1.0, 0.0, 0.001).unwrap(),
    )
}

fn bench_spectrum(c: &mut Criterion) {
    let cfg = SystemConfig::default();
    let geom = cfg.geometry().unwrap();
    c.bench_function("spatial_spectrum", |b| {
        b.iter(|| spatial_spectrum(black_box(60.0), &geom).unwrap())
    });
}

fn bench_propagated(c: &mut Criterion) {
    let cfg = SystemConfig::default();
    let field = BeamField::new(&cfg.geometry().unwrap()).unwrap();
    c.bench_function("propagated_field", |b| {
        b.iter(|| field.propagated(black_box(0.05)).unwrap())
    });
}

fn bench_mi_bound(c: &mut Criterion) {
    let (p, hn) = params();
    c.bench_function("mi_bound_one_way", |b| {
        b.iter(|| {
            mi_bound(
                Protocol::OneWay,
                black_box(0.5),
                &p,
                &hn,
                1e-12,
                VarianceConvention::AsPrinted,
            )
            .unwrap()
        })
    });
}

fn bench_holevo(c: &mut Criterion) {
    let (p, hn) = params();
    c.bench_function("holevo_one_way", |b| {
        b.iter(|| holevo(Protocol::OneWay, black_box(0.5), &p, &hn).unwrap())
    });
    c.bench_function("holevo_two_way", |b| {
        b.iter(|| holevo(Protocol::TwoWay, black_box(0.5), &p, &hn).unwrap())
    });
}

fn bench_symplectic(c: &mut Criterion) {
    let (p, hn) = params();
    let cov = eve_covariance(Protocol::TwoWay, 0.5, &p, &hn).unwrap();
    c.bench_function("symplectic_eigenvalues_8x8", |b| {
        b.iter(|| symplectic_eigenvalues(black_box(&cov)).unwrap())
    });
}

fn bench_skr_instant(c: &mut Criterion) {
    let (p, hn) = params();
    c.bench_function("skr_instant_two_way", |b| {
        b.iter(|| {
            skr_instant(
                Protocol::TwoWay,
                black_box(0.4),
                &p,
                &hn,
                1e-12,
                VarianceConvention::AsPrinted,
            )
            .unwrap()
        })
    });
}

fn bench_realize(c: &mut Criterion) {
    let mut cfg = SystemConfig::default();
    cfg.tx_count = 4;
    cfg.rx_count = 4;
    let sampler = ChannelSampler::new(cfg.geometry().unwrap(), cfg.turbulence().unwrap()).unwrap();
    c.bench_function("channel_realize_4x4", |b| {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        b.iter(|| sampler.realize(&mut rng).unwrap())
    });
}

criterion_group!(
    benches,
    bench_spectrum,
    bench_propagated,
    bench_mi_bound,
    bench_holevo,
    bench_symplectic,
    bench_skr_instant,
    bench_realize
);
criterion_main!(benches);
