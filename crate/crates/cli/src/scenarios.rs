//! One function per scenario; each returns the `result` block of the output
//! document and, where a table is natural, a CSV rendering of it.

use rayon::prelude::*;
use serde_json::{json, Value};
use simlab_core::brownian::{simulate_planar, simulate_until_hit, PathRecord, WalkParams};
use simlab_core::kleinian::DEFAULT_WORD_CAP;
use simlab_core::measure::{
    accumulation_curve, compare_measures, covering_radius, estimate_exit_measure, revisit_times, stopping_target,
    support_coverage, ExitMeasure, MeasureComparison,
};
use simlab_core::stats::{median, quantile};
use simlab_core::torus::{classify_slope, sample_leaf_closure, AlgebraicDirection};
use simlab_core::transport::{
    bm_stat_test, reparametrize, sigma_at_hit_statistics, time_change_profile, DilationMode, Lookup, SigmaRun, TestMap,
};
use simlab_core::{Error, Result, RngStream};

use crate::config::{Scenario, ScenarioConfig};

pub struct ScenarioOutput {
    pub result: Value,
    pub csv: Option<String>,
}

impl ScenarioOutput {
    fn json(result: Value) -> Self {
        ScenarioOutput { result, csv: None }
    }
}

pub fn run(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    match cfg.scenario {
        Scenario::LevyCheck => levy_check(cfg),
        Scenario::ExitMeasure => exit_measure(cfg),
        Scenario::MeasureCompare => measure_compare(cfg),
        Scenario::Accumulation => accumulation(cfg),
        Scenario::SigmaAtHit => sigma_at_hit(cfg),
        Scenario::TorusClassify => torus_classify(cfg),
        Scenario::Recurrence => recurrence(cfg),
    }
}

fn walk_params(cfg: &ScenarioConfig) -> WalkParams {
    WalkParams { epsilon: cfg.f64("epsilon"), dt: cfg.f64("dt"), horizon: cfg.f64("horizon"), thinning: u64::MAX }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

/// Planar Brownian motion in an annulus, mapped by a holomorphic test map.
/// The image on its own clock must pass the Brownian test; the raw image of
/// a map with nonconstant dilation must not.
fn levy_check(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let map: TestMap = cfg.str("map").parse()?;
    let start = cfg.point("start").finite().expect("validated finite start");
    let (inner, outer) = (cfg.f64("inner_radius"), cfg.f64("outer_radius"));
    let (steps, dt, seed) = (cfg.u64("steps"), cfg.f64("dt"), cfg.seed());
    let runs: Vec<Value> = (0..cfg.u64("seeds"))
        .into_par_iter()
        .map(|k| -> Result<Value> {
            let path =
                simulate_planar(start, dt, steps, |z| z.norm() > inner && z.norm() < outer, RngStream::new(seed, k))?;
            let image = map.map_path(&path)?;
            let profile = time_change_profile(&path, |p| p.finite().map_or(f64::NAN, |z| map.dilation(z)))?;
            // one grid cell per source step on average
            let grid = profile.final_sigma() / path.steps.max(1) as f64;
            let changed = reparametrize(&image, &profile, grid, Lookup::Nearest)?;
            let reparametrized = bm_stat_test(&changed, 2.0)?;
            let raw = bm_stat_test(&image, 2.0)?;
            Ok(json!({
                "path_index": k,
                "steps": path.steps,
                "stopped_reason": to_value(&path.stopped_reason),
                "final_sigma": profile.final_sigma(),
                "reparametrized": to_value(&reparametrized),
                "raw": to_value(&raw),
            }))
        })
        .collect::<Result<_>>()?;
    let passed = runs.iter().filter(|r| r["reparametrized"]["pass"] == true).count();
    let raw_failed = runs.iter().filter(|r| r["raw"]["pass"] == false).count();
    Ok(ScenarioOutput::json(json!({
        "map": map.to_string(),
        "expected_slope": 2.0,
        "n_runs": runs.len(),
        "reparametrized_pass": passed,
        "raw_fail": raw_failed,
        "runs": runs,
    })))
}

fn histogram_json(m: &ExitMeasure, depth: usize) -> Result<Value> {
    let h = m.histogram(depth)?;
    Ok(Value::Object(h.into_iter().map(|(w, c)| (w.to_string(), Value::from(c))).collect()))
}

fn exit_measure(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let group = cfg.group()?;
    let params = walk_params(cfg);
    let m = estimate_exit_measure(&group, &cfg.point("start"), cfg.u64("n_paths"), &params, cfg.seed())?;
    let depth = cfg.usize("depth");
    let n = m.n_attempted() as f64;
    let by_horizon: Vec<Value> = cfg
        .f64_list("horizons")
        .into_iter()
        .map(|h| {
            let p = m.hit_fraction_by(h);
            json!({"horizon": h, "hit_fraction": p, "standard_error": (p * (1.0 - p) / n).sqrt()})
        })
        .collect();
    let times: Vec<f64> = m.samples.iter().map(|s| s.time).collect();
    let measure: Value = serde_json::from_str(&m.to_json()?)?;
    Ok(ScenarioOutput::json(json!({
        "summary": {
            "n_paths": m.n_attempted(),
            "hit_fraction": m.hit_fraction(),
            "mean_hit_time": if times.is_empty() { Value::Null } else { Value::from(times.iter().sum::<f64>() / times.len() as f64) },
            "median_hit_time": median(&times),
            "horizon": params.horizon,
            "epsilon": params.epsilon,
            "dt": params.dt,
            "seed": cfg.seed(),
        },
        "hit_fraction_by_horizon": by_horizon,
        "histogram": histogram_json(&m, depth)?,
        "support_coverage": support_coverage(&m, depth)?,
        "measure": measure,
    })))
}

/// True when the ratio range shrank, or both ends moved by at most 20%.
pub fn range_is_stable(before: &MeasureComparison, after: &MeasureComparison) -> bool {
    let shrank = after.ratio_min >= before.ratio_min && after.ratio_max <= before.ratio_max;
    let near = |a: f64, b: f64| (a / b - 1.0).abs() <= 0.2;
    shrank || (near(after.ratio_min, before.ratio_min) && near(after.ratio_max, before.ratio_max))
}

/// Exit measures from two starts at `n_paths` and `2 n_paths` paths. The
/// smaller runs are the first half of the larger ones.
fn measure_compare(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let group = cfg.group()?;
    let params = walk_params(cfg);
    let n = cfg.u64("n_paths");
    let (depth, min_bin) = (cfg.usize("depth"), cfg.u64("min_bin"));
    let seed = cfg.seed();
    let full1 = estimate_exit_measure(&group, &cfg.point("start"), 2 * n, &params, seed)?;
    let full2 = estimate_exit_measure(&group, &cfg.point("start2"), 2 * n, &params, seed.wrapping_add(1))?;
    let (half1, half2) = (full1.first_paths(n), full2.first_paths(n));
    let base = compare_measures(&half1, &half2, depth, min_bin)?;
    let doubled = compare_measures(&full1, &full2, depth, min_bin)?;
    Ok(ScenarioOutput::json(json!({
        "depth": depth,
        "min_bin": min_bin,
        "n_paths": n,
        "hits": [half1.n_hit(), half2.n_hit()],
        "hits_doubled": [full1.n_hit(), full2.n_hit()],
        "histograms": [histogram_json(&half1, depth)?, histogram_json(&half2, depth)?],
        "histograms_doubled": [histogram_json(&full1, depth)?, histogram_json(&full2, depth)?],
        "comparison": to_value(&base),
        "comparison_doubled": to_value(&doubled),
        "stable_under_doubling": range_is_stable(&base, &doubled),
    })))
}

fn accumulation(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let group = cfg.group()?;
    let params = walk_params(cfg);
    let (delta, max_len) = (cfg.f64("delta"), cfg.usize("max_word_length"));
    let y = cfg.point("y");

    // geometry first: is the longest orbit delta-dense in the stopping sample?
    let (_, depth) = stopping_target(&group, params.epsilon)?;
    let sample = group.sample_limit_set(depth, 1, DEFAULT_WORD_CAP)?;
    let cloud = group.orbit_cloud(&y, max_len, DEFAULT_WORD_CAP)?;
    let radius = covering_radius(&cloud, &sample.points);

    let m = estimate_exit_measure(&group, &cfg.point("start"), cfg.u64("n_paths"), &params, cfg.seed())?;
    let curve = accumulation_curve(&group, &y, &m, delta, max_len)?;
    let reached = curve.iter().find(|(_, mass)| *mass >= 0.99).map(|(n, _)| *n);
    let mut csv = String::from("n,mass\n");
    for (n, mass) in &curve {
        csv.push_str(&format!("{n},{mass}\n"));
    }
    Ok(ScenarioOutput {
        result: json!({
            "precheck": {"covering_radius": radius, "delta": delta, "sample_depth": depth, "dense": radius <= delta},
            "n_paths": m.n_attempted(),
            "n_hit": m.n_hit(),
            "curve": curve.iter().map(|(n, mass)| json!({"n": n, "mass": mass})).collect::<Vec<_>>(),
            "first_length_reaching_0.99": reached,
        }),
        csv: Some(csv),
    })
}

fn sigma_at_hit(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let group = cfg.group()?;
    let factor: DilationMode = cfg.str("factor").parse()?;
    let run =
        SigmaRun { n_paths: cfg.u64("n_paths"), dt: cfg.f64("dt"), horizon: cfg.f64("horizon"), seed: cfg.seed() };
    let table = sigma_at_hit_statistics(&group, &cfg.point("start"), &cfg.f64_list("epsilons"), factor, &run)?;
    let mut csv = String::from("epsilon,median,lower_quartile,upper_quartile\n");
    for r in &table.rows {
        csv.push_str(&format!("{},{},{},{}\n", r.epsilon, r.median, r.lower_quartile, r.upper_quartile));
    }
    Ok(ScenarioOutput { result: to_value(&table), csv: Some(csv) })
}

fn torus_classify(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let (t_max, grid) = (cfg.f64("t_max"), cfg.usize("grid"));
    let rows: Vec<Value> = cfg
        .str_list("directions")
        .par_iter()
        .map(|s| -> Result<Value> {
            let v: AlgebraicDirection = s.parse()?;
            let rank = v.rational_rank();
            let occupancy = sample_leaf_closure(&v, t_max, grid)?;
            let g = grid as f64;
            let plateau = match rank {
                1 => 1.0 / (g * g),
                2 => 1.0 / g,
                _ => 1.0,
            };
            Ok(json!({
                "direction": v.to_string(),
                "type": classify_slope(&v).to_string(),
                "rank": rank,
                "occupancy": occupancy,
                "plateau": plateau,
                "relative_error": (occupancy - plateau).abs() / plateau,
            }))
        })
        .collect::<Result<_>>()?;
    Ok(ScenarioOutput::json(json!({ "t_max": t_max, "grid": grid, "rows": rows })))
}

/// Returns to the orbit neighbourhood of `y` before the path reaches the
/// limit set, counted up to each diffusion-time horizon. A path with a
/// shorter horizon is a prefix of the longer one, so counts are nested.
fn recurrence(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let group = cfg.group()?;
    let factor: DilationMode = cfg.str("factor").parse()?;
    let horizons = cfg.f64_list("horizons");
    let (y, radius, word_ball) = (cfg.point("y"), cfg.f64("radius"), cfg.usize("word_ball"));
    if !group.in_fundamental_domain(&y) {
        return Err(Error::Precondition("y must lie in the fundamental domain".into()));
    }
    let (target, _) = stopping_target(&group, cfg.f64("epsilon"))?;
    let params = WalkParams {
        epsilon: cfg.f64("epsilon"),
        dt: cfg.f64("dt"),
        horizon: *horizons.last().expect("validated nonempty"),
        thinning: 1,
    };
    let start = cfg.point("start");
    let seed = cfg.seed();
    let per_path: Vec<(Vec<f64>, bool)> = (0..cfg.u64("n_paths"))
        .into_par_iter()
        .map(|i| -> Result<(Vec<f64>, bool)> {
            let path = simulate_until_hit(&start, &target, &params, RngStream::new(seed, i))?;
            let mut counts = Vec::with_capacity(horizons.len());
            for &h in &horizons {
                let prefix = truncate(&path, h);
                let profile = time_change_profile(&prefix, |p| {
                    factor.lambda(p, prefix.geometry, Some(&target)).unwrap_or(f64::NAN)
                })?;
                let visits = revisit_times(&prefix, &profile, &group, &y, radius, word_ball)?;
                // being inside the neighbourhood at the start is not a return
                counts.push(visits.iter().filter(|v| v.start > 0.0).count() as f64);
            }
            Ok((counts, path.hit.is_some()))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<Value> = horizons
        .iter()
        .enumerate()
        .map(|(k, &h)| {
            let col: Vec<f64> = per_path.iter().map(|(c, _)| c[k]).collect();
            json!({
                "horizon": h,
                "median_revisits": median(&col),
                "lower_quartile": quantile(&col, 0.25),
                "upper_quartile": quantile(&col, 0.75),
                "mean_revisits": if col.is_empty() { None } else { Some(col.iter().sum::<f64>() / col.len() as f64) },
            })
        })
        .collect();
    Ok(ScenarioOutput::json(json!({
        "n_paths": per_path.len(),
        "n_hit": per_path.iter().filter(|(_, hit)| *hit).count(),
        "radius": radius,
        "word_ball": word_ball,
        "clock": factor.to_string(),
        "rows": rows,
    })))
}

fn truncate(path: &PathRecord, horizon: f64) -> PathRecord {
    let n = path.times.partition_point(|&t| t <= horizon);
    let mut out = path.clone();
    out.times.truncate(n);
    out.points.truncate(n);
    out
}
