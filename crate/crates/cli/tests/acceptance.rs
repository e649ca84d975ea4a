//! End-to-end acceptance run. Each check prints one PASS/FAIL line; the
//! process exits nonzero if any check fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use serde_json::Value;
use simlab_cli::{execute, Overrides, Scenario};
use simlab_core::brownian::simulate_disk_exit;
use simlab_core::stats::ks_uniform;
use simlab_core::RngStream;

fn run(scenario: Scenario, config: &str, workers: Option<usize>) -> Result<String, String> {
    let overrides = Overrides { workers, ..Overrides::default() };
    execute(scenario, config, &overrides).map(|r| r.text).map_err(|e| e.to_string())
}

fn result(scenario: Scenario, config: &str) -> Result<Value, String> {
    let text = run(scenario, config, None)?;
    let doc: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    Ok(doc["result"].clone())
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

type Check = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Check);

fn levy() -> Check {
    let mut ok = true;
    let mut notes = Vec::new();
    for map in ["translate:1", "scale:2", "square"] {
        let r = result(Scenario::LevyCheck, &format!("map = \"{map}\"\n"))?;
        let passed = r["reparametrized_pass"].as_u64().unwrap_or(0);
        let n = r["n_runs"].as_u64().unwrap_or(0);
        ok &= n == 20 && passed >= 19;
        notes.push(format!("{map} {passed}/{n} pass"));
        if map == "square" {
            let failed = r["raw_fail"].as_u64().unwrap_or(0);
            ok &= failed >= 19;
            notes.push(format!("raw square {failed}/{n} fail"));
        }
    }
    Ok((ok, notes.join(", ")))
}

/// Independent oracle: probability that planar Brownian motion from `r`
/// leaves the unit disk through the arc |theta| < pi/2, by composite Simpson
/// quadrature of the Poisson kernel.
fn poisson_arc_probability(r: f64) -> f64 {
    let n = 20_000;
    let h = PI / n as f64;
    let kernel = |t: f64| (1.0 - r * r) / (1.0 - 2.0 * r * t.cos() + r * r);
    let mut s = kernel(-PI / 2.0) + kernel(PI / 2.0);
    for k in 1..n {
        let t = -PI / 2.0 + k as f64 * h;
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * kernel(t);
    }
    s * h / 3.0 / (2.0 * PI)
}

fn harmonic_measure_oracle() -> Check {
    let n = 100_000;
    let exits = |start: Complex64, seed: u64| -> Result<Vec<f64>, String> {
        (0..n)
            .map(|i| {
                let mut rng = RngStream::new(seed, i);
                simulate_disk_exit(start, 1e-4, &mut rng).map(|e| e.angle).map_err(|e| e.to_string())
            })
            .collect()
    };
    let from_center = exits(Complex64::new(0.0, 0.0), 11)?;
    let ks = ks_uniform(&from_center, -PI, PI);
    let from_half = exits(Complex64::new(0.5, 0.0), 12)?;
    let p = from_half.iter().filter(|t| t.abs() < PI / 2.0).count() as f64 / n as f64;
    let oracle = poisson_arc_probability(0.5);
    let ok = ks < 0.01 && (p - oracle).abs() < 0.01;
    Ok((ok, format!("KS {ks:.4}, arc probability {p:.4} vs {oracle:.4}")))
}

fn hitting() -> Check {
    let fine = result(Scenario::ExitMeasure, "n_paths = 10000\nepsilon = 1e-2\n")?;
    let coarse = result(Scenario::ExitMeasure, "n_paths = 10000\nepsilon = 3e-2\nhorizons = [500.0]\n")?;
    let rows = fine["hit_fraction_by_horizon"].as_array().cloned().unwrap_or_default();
    let fractions: Vec<f64> = rows.iter().map(|r| f(&r["hit_fraction"])).collect();
    let errors: Vec<f64> = rows.iter().map(|r| f(&r["standard_error"])).collect();
    let at_500 = *fractions.last().unwrap_or(&f64::NAN);
    let in_horizon = fractions.windows(2).zip(errors.windows(2)).all(|(p, e)| p[1] >= p[0] - 2.0 * e[0].max(e[1]));
    let coarse_500 = f(&coarse["hit_fraction_by_horizon"][0]["hit_fraction"]);
    let coarse_se = f(&coarse["hit_fraction_by_horizon"][0]["standard_error"]);
    let se = errors.last().copied().unwrap_or(0.0).max(coarse_se);
    let in_epsilon = coarse_500 >= at_500 - 2.0 * se;
    let ok = rows.len() == 3 && at_500 >= 0.95 && in_horizon && in_epsilon;
    Ok((ok, format!("hit fraction by horizon 100/250/500: {fractions:?}; at eps 3e-2: {coarse_500}")))
}

fn equivalence() -> Check {
    let r = result(Scenario::MeasureCompare, "n_paths = 10000\n")?;
    let (c, d) = (&r["comparison"], &r["comparison_doubled"]);
    let inside =
        |c: &Value| f(&c["ratio_min"]) >= 0.1 && f(&c["ratio_max"]) <= 10.0 && c["shared_bins"].as_u64() == Some(4);
    let hits_ok = r["hits"].as_array().is_some_and(|h| h.iter().all(|x| x.as_u64().unwrap_or(0) >= 9_500));
    let stable = r["stable_under_doubling"] == true;
    let ok = inside(c) && inside(d) && stable && hits_ok;
    Ok((
        ok,
        format!(
            "ratios [{:.3}, {:.3}] -> doubled [{:.3}, {:.3}], hits {}",
            f(&c["ratio_min"]),
            f(&c["ratio_max"]),
            f(&d["ratio_min"]),
            f(&d["ratio_max"]),
            r["hits"]
        ),
    ))
}

fn accumulation() -> Check {
    let r = result(Scenario::Accumulation, "n_paths = 10000\n")?;
    let dense = r["precheck"]["dense"] == true;
    let masses: Vec<f64> = r["curve"].as_array().cloned().unwrap_or_default().iter().map(|p| f(&p["mass"])).collect();
    let monotone = masses.windows(2).all(|w| w[1] >= w[0]);
    let reached = r["first_length_reaching_0.99"].as_u64().is_some_and(|n| n <= 8);
    let ok = dense && monotone && reached && masses.len() == 9;
    Ok((ok, format!("covering radius {:.2e}, curve {masses:?}", f(&r["precheck"]["covering_radius"]))))
}

fn sigma_divergence() -> Check {
    let r = result(Scenario::SigmaAtHit, "factor = \"recip-dist\"\nepsilons = [1e-1, 3e-2, 1e-2]\n")?;
    let medians: Vec<f64> = r["rows"].as_array().cloned().unwrap_or_default().iter().map(|x| f(&x["median"])).collect();
    let ok = medians.len() == 3 && medians.windows(2).all(|w| w[1] >= w[0]);
    Ok((ok, format!("median sigma at eps 1e-1/3e-2/1e-2: {medians:?}")))
}

fn recurrence() -> Check {
    let r = result(Scenario::Recurrence, "radius = 0.1\nword_ball = 2\nhorizons = [50.0, 150.0, 500.0]\n")?;
    let medians: Vec<f64> =
        r["rows"].as_array().cloned().unwrap_or_default().iter().map(|x| f(&x["median_revisits"])).collect();
    let ok = medians.len() == 3 && medians.windows(2).all(|w| w[1] >= w[0]) && medians[2] >= 3.0;
    Ok((ok, format!("median revisits at horizons 50/150/500: {medians:?}")))
}

fn torus() -> Check {
    let r =
        result(Scenario::TorusClassify, "directions = [\"(1,0,0)\", \"(1,sqrt(2),0)\", \"(1,sqrt(2),sqrt(3))\"]\n")?;
    let rows = r["rows"].as_array().cloned().unwrap_or_default();
    let expected = ["wandering", "semi_wandering", "dense"];
    let types_ok = rows.len() == 3 && rows.iter().zip(expected).all(|(row, t)| row["type"] == t);
    let plateaus_ok = rows.iter().all(|row| f(&row["relative_error"]) <= 0.05);
    let summary: Vec<String> =
        rows.iter().map(|row| format!("{} occupancy {:.4}", row["type"], f(&row["occupancy"]))).collect();
    Ok((types_ok && plateaus_ok, summary.join(", ")))
}

fn determinism() -> Check {
    let configs = [
        (Scenario::LevyCheck, "seeds = 3\nsteps = 20000\n"),
        (Scenario::ExitMeasure, "n_paths = 300\n"),
        (Scenario::MeasureCompare, "n_paths = 200\nmin_bin = 5\n"),
        (Scenario::Accumulation, "n_paths = 200\nmax_word_length = 4\n"),
        (Scenario::SigmaAtHit, "n_paths = 60\n"),
        (Scenario::TorusClassify, "t_max = 2000.0\n"),
        (Scenario::Recurrence, "n_paths = 40\n"),
    ];
    let mut mismatches = Vec::new();
    for (scenario, config) in configs {
        let one = run(scenario, config, Some(1))?;
        let eight = run(scenario, config, Some(8))?;
        let again = run(scenario, config, Some(1))?;
        // the embedded reproducibility block must regenerate the output
        let doc: Value = serde_json::from_str(&one).map_err(|e| e.to_string())?;
        let replay_config = serde_json::to_string(&doc["reproducibility"]["config"]).map_err(|e| e.to_string())?;
        let replay = run(scenario, &replay_config, Some(8))?;
        if one != eight || one != again || one != replay {
            mismatches.push(scenario.name());
        }
    }
    Ok((mismatches.is_empty(), format!("7 scenarios at 1 and 8 workers; mismatches: {mismatches:?}")))
}

fn main() -> ExitCode {
    let checks: [Criterion; 9] = [
        ("Levy conformal invariance", levy),
        ("disk harmonic measure oracle", harmonic_measure_oracle),
        ("hitting the limit set", hitting),
        ("harmonic measure equivalence", equivalence),
        ("orbit accumulation", accumulation),
        ("time change divergence", sigma_divergence),
        ("recurrence before hitting", recurrence),
        ("torus trichotomy", torus),
        ("determinism across workers", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = match check() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!(
            "acceptance {}: {} {name} ({:.1}s) {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
