use std::f64::consts::PI;

use num_complex::Complex64;
use simlab_core::brownian::{
    simulate_batch, simulate_disk_exit, step_unit, BatchSummary, StopReason, Target, WalkParams,
};
use simlab_core::measure::stopping_target;
use simlab_core::stats::ks_uniform;
use simlab_core::{RiemannSpherePoint, RngStream, SchottkyGroup};

fn example_target() -> Target {
    stopping_target(&SchottkyGroup::example(), 1e-2).unwrap().0
}

fn hit_fraction_by(paths: &[simlab_core::brownian::PathRecord], horizon: f64) -> f64 {
    let n = paths.iter().filter(|p| p.hit.as_ref().is_some_and(|h| h.time <= horizon)).count();
    n as f64 / paths.len() as f64
}

#[test]
fn example_group_is_hit_from_infinity() {
    let target = example_target();
    let params = WalkParams { epsilon: 1e-2, dt: 1e-4, horizon: 500.0, thinning: u64::MAX };
    let paths = simulate_batch(&RiemannSpherePoint::Infinity, &target, &params, 2024, 2000).unwrap();
    let by: Vec<f64> = [1.0, 10.0, 100.0, 500.0].iter().map(|&h| hit_fraction_by(&paths, h)).collect();
    assert!(by.windows(2).all(|w| w[1] >= w[0]));
    assert!(by[3] >= 0.95, "{by:?}");
    for p in &paths {
        if let Some(h) = &p.hit {
            assert_eq!(p.stopped_reason, StopReason::Hit);
            assert!(target.distance(&h.point) <= 1e-2);
        }
    }
    let summary = BatchSummary::from_paths(&paths, &params, 2024);
    let json = serde_json::to_value(&summary).unwrap();
    for key in ["n_paths", "hit_fraction", "mean_hit_time", "horizon", "epsilon", "dt", "seed"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn thicker_target_is_hit_no_later() {
    let g = SchottkyGroup::example();
    let fine = stopping_target(&g, 1e-2).unwrap().0;
    let coarse = stopping_target(&g, 3e-2).unwrap().0;
    let params = |epsilon| WalkParams { epsilon, dt: 1e-4, horizon: 2.0, thinning: u64::MAX };
    let start = RiemannSpherePoint::Infinity;
    let a = simulate_batch(&start, &fine, &params(1e-2), 5, 500).unwrap();
    let b = simulate_batch(&start, &coarse, &params(3e-2), 5, 500).unwrap();
    // same streams: every path reaches the coarse set no later than the fine one
    for (x, y) in a.iter().zip(&b) {
        if let Some(hx) = &x.hit {
            assert!(y.hit.as_ref().is_some_and(|hy| hy.time <= hx.time));
        }
    }
}

#[test]
fn step_size_robustness() {
    let target = example_target();
    let n = 2000;
    let run = |dt| {
        let params = WalkParams { epsilon: 1e-2, dt, horizon: 0.5, thinning: u64::MAX };
        let paths = simulate_batch(&RiemannSpherePoint::Infinity, &target, &params, 21, n).unwrap();
        hit_fraction_by(&paths, 0.5)
    };
    let (p1, p4) = (run(1e-4), run(2.5e-5));
    let se = ((p1 * (1.0 - p1) + p4 * (1.0 - p4)) / n as f64).sqrt();
    assert!((p1 - p4).abs() < 2.0 * se, "{p1} vs {p4}, se {se}");
}

#[test]
fn occupation_measure_is_uniform_over_octants() {
    // octant indicators decorrelate on a unit time scale, so 5% per cell
    // needs a path several hundred times longer than 200
    let dt = 1e-2;
    let n = 5_000_000;
    let mut rng = RngStream::new(8, 0);
    let mut p = [0.0, 0.0, 1.0];
    let mut cells = [0u64; 8];
    for _ in 0..n {
        p = step_unit(&p, dt, &mut rng).0;
        let k = usize::from(p[0] > 0.0) + 2 * usize::from(p[1] > 0.0) + 4 * usize::from(p[2] > 0.0);
        cells[k] += 1;
    }
    for c in cells {
        let share = c as f64 / n as f64;
        assert!((share * 8.0 - 1.0).abs() < 0.05, "{cells:?}");
    }
}

#[test]
fn results_do_not_depend_on_pool_size() {
    let target = example_target();
    let params = WalkParams { epsilon: 1e-2, dt: 1e-4, horizon: 5.0, thinning: 50 };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_batch(&RiemannSpherePoint::new(0.0, 0.0), &target, &params, 77, 64).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn disk_exit_from_center_is_uniform() {
    let n = 20_000;
    let angles: Vec<f64> = (0..n)
        .map(|i| simulate_disk_exit(Complex64::new(0.0, 0.0), 1e-3, &mut RngStream::new(3, i)).unwrap().angle)
        .collect();
    // 99.9% point of the one-sample KS statistic is about 1.95 / sqrt(n)
    assert!(ks_uniform(&angles, -PI, PI) < 1.95 / (n as f64).sqrt());
}

#[test]
fn disk_exit_matches_poisson_kernel() {
    // closed form of the Poisson integral over |theta| < pi/2
    let r: f64 = 0.5;
    let exact = 2.0 / PI * ((1.0 + r) / (1.0 - r)).atan();
    let n = 20_000;
    let hits = (0..n)
        .filter(|&i| {
            let e = simulate_disk_exit(Complex64::new(r, 0.0), 1e-3, &mut RngStream::new(4, i)).unwrap();
            e.angle.abs() < PI / 2.0
        })
        .count();
    let p = hits as f64 / n as f64;
    let se = (exact * (1.0 - exact) / n as f64).sqrt();
    assert!((p - exact).abs() < 4.0 * se, "{p} vs {exact}");
}
