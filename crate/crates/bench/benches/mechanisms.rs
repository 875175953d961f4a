use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use fixprice_bench::{continuous_fixtures, discrete_fixture};
use fixprice_core::game::{simulate_game, GameConfig};
use fixprice_core::mechanisms::{gstar_expected_welfare, hybrid_asym_price, sample_price_expected_gft};
use fixprice_core::worstcase::{matched_four_point, minimax_scan};
use fixprice_core::{Dist, QuadratureConfig};

fn sample_price(c: &mut Criterion) {
    let cfg = QuadratureConfig::default();
    let mut group = c.benchmark_group("sample_price_gft");
    for (name, d) in continuous_fixtures() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &d, |b, d| {
            b.iter(|| sample_price_expected_gft(d, &cfg))
        });
    }
    let d = discrete_fixture(100);
    group.bench_function("discrete_100", |b| b.iter(|| sample_price_expected_gft(&d, &cfg)));
    group.finish();
}

fn asymmetric(c: &mut Criterion) {
    let cfg = QuadratureConfig::default();
    let s = Dist::from(discrete_fixture(20));
    let bu = Dist::uniform(0.2, 1.2).expect("valid");
    let mut group = c.benchmark_group("asymmetric");
    group.bench_function("gstar/discrete_uniform", |b| {
        b.iter(|| gstar_expected_welfare(&s, &bu, &cfg))
    });
    group.bench_function("hybrid/discrete_uniform", |b| {
        b.iter(|| hybrid_asym_price(&s, &bu, &cfg))
    });
    let d = Dist::from(discrete_fixture(20));
    group.bench_function("hybrid/discrete_discrete", |b| {
        b.iter(|| hybrid_asym_price(&s, &d, &cfg))
    });
    group.finish();
}

fn worst_case(c: &mut Criterion) {
    let mut group = c.benchmark_group("worst_case");
    group.sample_size(10);
    group.bench_function("minimax_scan/1000", |b| b.iter(|| minimax_scan(1000)));
    let d = discrete_fixture(50);
    group.bench_function("matched_four_point/50", |b| b.iter(|| matched_four_point(&d)));
    let cfg = QuadratureConfig::default();
    let game = GameConfig {
        x_grid: 100,
        mc_samples: 0,
        ..GameConfig::default()
    };
    group.bench_function("simulate_game/100", |b| b.iter(|| simulate_game(&game, &cfg)));
    group.finish();
}

criterion_group!(benches, sample_price, asymmetric, worst_case);
criterion_main!(benches);
