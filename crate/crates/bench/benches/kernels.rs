use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use satake_bench::random_elements;
use satake_core::lingrp::{iwasawa, langlands};
use satake_core::measures::{EmpiricalMeasure, SamplerOptions};
use satake_core::reduction::reduce;
use satake_core::scenario::{bundled_scenario, predict};
use satake_core::{Direction, ParabolicIndex, RootSet, RootSystem, SubgroupKind, SubgroupSpec};

fn decompositions(c: &mut Criterion) {
    let mut group = c.benchmark_group("decompose");
    for n in [2, 3, 4] {
        let gs = random_elements(n, 256, 2.0, 1);
        let rs = RootSystem::type_a(n).unwrap();
        group.bench_with_input(BenchmarkId::new("iwasawa", n), &gs, |b, gs| {
            b.iter(|| gs.iter().map(|g| iwasawa(g).unwrap().a[0]).sum::<f64>())
        });
        let p = ParabolicIndex::maximal(&rs, 0);
        group.bench_with_input(BenchmarkId::new("langlands", n), &gs, |b, gs| {
            b.iter(|| gs.iter().map(|g| langlands(g, &rs, &p).unwrap().a[0]).sum::<f64>())
        });
    }
    group.finish();
}

fn reduction(c: &mut Criterion) {
    let mut group = c.benchmark_group("reduce");
    for n in [2, 3, 4] {
        let gs = random_elements(n, 256, 4.0, 2);
        group.bench_with_input(BenchmarkId::from_parameter(n), &gs, |b, gs| {
            b.iter(|| gs.iter().map(|g| reduce(g).swaps).sum::<usize>())
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let rs = RootSystem::type_a(3).unwrap();
    let spec = SubgroupSpec::new(SubgroupKind::FullUnipotentRadical(RootSet::EMPTY));
    let g = satake_core::GroupElement::exp_diag(&[6.0, -5.0, -1.0], &[3]);
    c.bench_function("sample_reduce_sl3_10k", |b| {
        b.iter(|| EmpiricalMeasure::generate(&spec, &rs, &g, 10_000, 1, &SamplerOptions::default()).unwrap().points.len())
    });
}

fn classifiers(c: &mut Criterion) {
    let sc = bundled_scenario("sl3_case2_2_2_2_3_1").unwrap().unwrap();
    c.bench_function("sl3_classify", |b| b.iter(|| predict(&sc.rs, black_box(&sc.sequence), sc.classifier).unwrap()));
    let rs = RootSystem::type_a(4).unwrap();
    let v = Direction::parse(&["2", "2", "-1", "-3"]).unwrap();
    c.bench_function("unip_limit_i_sl4", |b| b.iter(|| satake_core::limits::unip_limit_i(&rs, black_box(&v)).unwrap()));
    c.bench_function("locate_chamber_sl4", |b| b.iter(|| rs.locate_chamber(black_box(&v))));
}

criterion_group!(benches, decompositions, reduction, sampling, classifiers);
criterion_main!(benches);
