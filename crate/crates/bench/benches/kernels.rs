use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;
use simlab_core::brownian::{simulate_disk_exit, step_unit, Target, WalkParams};
use simlab_core::kleinian::DEFAULT_WORD_CAP;
use simlab_core::measure::stopping_target;
use simlab_core::transport::{time_change_profile, TestMap};
use simlab_core::{RiemannSpherePoint, RngStream, SchottkyGroup};
use std::hint::black_box;

fn sphere_step(c: &mut Criterion) {
    let mut rng = RngStream::new(1, 0);
    let mut p = [0.0, 0.0, 1.0];
    c.bench_function("step_unit", |b| {
        b.iter(|| {
            p = step_unit(black_box(&p), 1e-4, &mut rng).0;
            p
        })
    });
}

fn nearest_query(c: &mut Criterion) {
    let (target, _): (Target, usize) = stopping_target(&SchottkyGroup::example(), 1e-2).unwrap();
    let q = RiemannSpherePoint::new(0.3, 0.7).to_unit_vector();
    c.bench_function("target_nearest", |b| b.iter(|| target.nearest(black_box(&q))));
}

fn mobius_apply(c: &mut Criterion) {
    let g = SchottkyGroup::example();
    let m = g.generators()[0];
    let z = RiemannSpherePoint::new(0.1, -0.4);
    c.bench_function("mobius_apply", |b| b.iter(|| m.apply(black_box(&z))));
}

fn limit_set(c: &mut Criterion) {
    let g = SchottkyGroup::example();
    c.bench_function("sample_limit_set_depth6", |b| b.iter(|| g.sample_limit_set(black_box(6), 1, DEFAULT_WORD_CAP)));
}

fn disk_exit(c: &mut Criterion) {
    let mut i = 0;
    c.bench_function("disk_exit_dt1e-3", |b| {
        b.iter(|| {
            i += 1;
            simulate_disk_exit(Complex64::new(0.5, 0.0), 1e-3, &mut RngStream::new(2, i)).unwrap()
        })
    });
}

fn walk_and_clock(c: &mut Criterion) {
    let (target, _) = stopping_target(&SchottkyGroup::example(), 1e-2).unwrap();
    let params = WalkParams { epsilon: 1e-2, dt: 1e-4, horizon: 0.1, thinning: 1 };
    let path = simlab_core::brownian::simulate_until_hit(
        &RiemannSpherePoint::new(0.0, 0.0),
        &target,
        &params,
        RngStream::new(3, 0),
    )
    .unwrap();
    c.bench_function("time_change_profile", |b| {
        b.iter(|| time_change_profile(black_box(&path), |p| TestMap::Square.dilation(p.finite().unwrap())))
    });
}

criterion_group!(kernels, sphere_step, nearest_query, mobius_apply, limit_set, disk_exit, walk_and_clock);
criterion_main!(kernels);
