//! Benchmarks for the three hot paths: point counting over F_p, reduced
//! form enumeration, and the modular parametrization q-series.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use qrank_core::classfield::reduced_forms;
use qrank_core::curve::{count_ap, CurveQ};
use qrank_core::heegner::{modular_param, HeegnerForm};
use qrank_core::ApTable;
use std::collections::BTreeMap;

fn curve_37a() -> CurveQ {
    CurveQ::from_i64(-16, 16, 37, "37a-short").unwrap()
}

fn bench_count_ap(c: &mut Criterion) {
    let curve = curve_37a();
    c.bench_function("count_ap p=9973", |b| {
        b.iter(|| count_ap(black_box(&curve), black_box(9973)).unwrap())
    });
}

fn bench_reduced_forms(c: &mut Criterion) {
    c.bench_function("reduced_forms disc=-40003", |b| {
        b.iter(|| reduced_forms(black_box(-40003)).unwrap())
    });
}

fn bench_modular_param(c: &mut Criterion) {
    let mut overrides = BTreeMap::new();
    overrides.insert(2u64, -2i64);
    overrides.insert(37u64, -1i64);
    let mut table = ApTable::new(curve_37a(), overrides).unwrap();
    let prec = 164;
    let tau = HeegnerForm {
        a: 37,
        b: 17,
        c: 2,
        disc: -7,
        level: 37,
    }
    .tau(prec);
    // warm the a_p cache so iterations measure the series evaluation
    modular_param(&mut table, &tau, 1e-30, prec).unwrap();
    c.bench_function("modular_param 30 digits", |b| {
        b.iter(|| modular_param(black_box(&mut table), black_box(&tau), 1e-30, prec).unwrap())
    });
}

criterion_group!(
    benches,
    bench_count_ap,
    bench_reduced_forms,
    bench_modular_param
);
criterion_main!(benches);
