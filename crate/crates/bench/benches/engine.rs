use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use dualmetric::algebraic::{reparam_residual_general, ScalarContraction};
use dualmetric::elliptic::{eisenstein, verify_p_ode, weierstrass_p_q, Lattice};
use dualmetric::equiv::{equiv_zero, SamplePlan};
use dualmetric::geometry::{christoffel_second, ricci, ContravariantField};
use dualmetric::Convention;
use dualmetric_bench::{polar_plane, vacuum_4d};
use num_complex::Complex64;

fn bench_connections(c: &mut Criterion) {
    let polar = polar_plane();
    let vac = vacuum_4d();
    c.bench_function("christoffel polar", |b| {
        b.iter(|| christoffel_second(black_box(&polar)).unwrap())
    });
    c.bench_function("ricci vacuum-4d", |b| {
        b.iter(|| ricci(&christoffel_second(black_box(&vac)).unwrap()))
    });
}

fn bench_residuals(c: &mut Criterion) {
    let vac = vacuum_4d();
    let gt = ContravariantField::inverse_of(&vac);
    c.bench_function("general residual assembly vacuum-4d", |b| {
        b.iter(|| {
            reparam_residual_general(
                black_box(&vac),
                black_box(&gt),
                Convention::Paper,
                ScalarContraction::WithContravariant,
            )
            .unwrap()
        })
    });
    let residual = reparam_residual_general(
        &vac,
        &gt,
        Convention::Paper,
        ScalarContraction::WithContravariant,
    )
    .unwrap();
    let plan = SamplePlan::default();
    c.bench_function("general residual sampling 200", |b| {
        b.iter(|| equiv_zero(black_box(&residual), vac.chart(), &plan))
    });
}

fn bench_elliptic(c: &mut Criterion) {
    let lat = Lattice::square();
    c.bench_function("eisenstein window N=40", |b| {
        b.iter(|| eisenstein(black_box(&lat), 40).unwrap())
    });
    let z = Complex64::new(0.31, 0.27);
    c.bench_function("weierstrass fourier", |b| {
        b.iter(|| weierstrass_p_q(black_box(z), &lat, 64).unwrap())
    });
    c.bench_function("cubic ode gauge 100 samples", |b| {
        b.iter(|| verify_p_ode(&lat, 100, 40).unwrap())
    });
}

criterion_group!(benches, bench_connections, bench_residuals, bench_elliptic);
criterion_main!(benches);
