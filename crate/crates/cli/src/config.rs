//! Scenario configuration: a flat key-value document (TOML or JSON).
//!
//! Validation reports every offending key at once and materializes all
//! defaults, so the returned config fully describes the run.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde_json::{json, Map, Value};
use simlab_core::kleinian::{Circle, GroupDocument};
use simlab_core::torus::AlgebraicDirection;
use simlab_core::transport::{DilationMode, TestMap};
use simlab_core::{RiemannSpherePoint, SchottkyGroup};

use crate::RunError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    LevyCheck,
    ExitMeasure,
    MeasureCompare,
    Accumulation,
    SigmaAtHit,
    TorusClassify,
    Recurrence,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::LevyCheck,
        Scenario::ExitMeasure,
        Scenario::MeasureCompare,
        Scenario::Accumulation,
        Scenario::SigmaAtHit,
        Scenario::TorusClassify,
        Scenario::Recurrence,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::LevyCheck => "levy_check",
            Scenario::ExitMeasure => "exit_measure",
            Scenario::MeasureCompare => "measure_compare",
            Scenario::Accumulation => "accumulation",
            Scenario::SigmaAtHit => "sigma_at_hit",
            Scenario::TorusClassify => "torus_classify",
            Scenario::Recurrence => "recurrence",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Scenario::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| format!("unknown scenario {s:?}"))
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    PosFloat,
    /// positive and at most the bound
    PosFloatMax(f64),
    Count,
    /// integer at least the bound
    IntMin(u64),
    /// integer in the closed range
    IntRange(u64, u64),
    Seed,
    Point,
    /// strictly decreasing positive reals
    Decreasing,
    /// strictly increasing positive reals
    Increasing,
    Directions,
    Map,
    Factor,
    Path,
    Pairs,
}

struct Key {
    name: &'static str,
    kind: Kind,
    scenarios: &'static [Scenario],
}

use Scenario::*;

const SPHERE: &[Scenario] = &[ExitMeasure, MeasureCompare, Accumulation, SigmaAtHit, Recurrence];
const GROUP: &[Scenario] = SPHERE;

const KEYS: &[Key] = &[
    Key { name: "scenario", kind: Kind::Path, scenarios: &Scenario::ALL },
    Key { name: "seed", kind: Kind::Seed, scenarios: &Scenario::ALL },
    Key { name: "output", kind: Kind::Path, scenarios: &Scenario::ALL },
    Key { name: "group_file", kind: Kind::Path, scenarios: GROUP },
    Key { name: "pairs", kind: Kind::Pairs, scenarios: GROUP },
    Key {
        name: "start",
        kind: Kind::Point,
        scenarios: &[LevyCheck, ExitMeasure, MeasureCompare, Accumulation, SigmaAtHit, Recurrence],
    },
    Key { name: "start2", kind: Kind::Point, scenarios: &[MeasureCompare] },
    Key { name: "y", kind: Kind::Point, scenarios: &[Accumulation, Recurrence] },
    Key { name: "n_paths", kind: Kind::Count, scenarios: SPHERE },
    Key {
        name: "dt",
        kind: Kind::PosFloat,
        scenarios: &[LevyCheck, ExitMeasure, MeasureCompare, Accumulation, SigmaAtHit, Recurrence],
    },
    Key {
        name: "epsilon",
        kind: Kind::PosFloatMax(2.0),
        scenarios: &[ExitMeasure, MeasureCompare, Accumulation, Recurrence],
    },
    Key { name: "epsilons", kind: Kind::Decreasing, scenarios: &[SigmaAtHit] },
    Key { name: "horizon", kind: Kind::PosFloat, scenarios: &[ExitMeasure, MeasureCompare, Accumulation, SigmaAtHit] },
    Key { name: "horizons", kind: Kind::Increasing, scenarios: &[ExitMeasure, Recurrence] },
    Key { name: "depth", kind: Kind::IntRange(0, 8), scenarios: &[ExitMeasure, MeasureCompare] },
    Key { name: "min_bin", kind: Kind::IntMin(1), scenarios: &[MeasureCompare] },
    Key { name: "delta", kind: Kind::PosFloatMax(2.0), scenarios: &[Accumulation] },
    Key { name: "max_word_length", kind: Kind::IntRange(0, 12), scenarios: &[Accumulation] },
    Key { name: "map", kind: Kind::Map, scenarios: &[LevyCheck] },
    Key { name: "steps", kind: Kind::IntMin(10_000), scenarios: &[LevyCheck] },
    Key { name: "seeds", kind: Kind::IntMin(1), scenarios: &[LevyCheck] },
    Key { name: "inner_radius", kind: Kind::PosFloat, scenarios: &[LevyCheck] },
    Key { name: "outer_radius", kind: Kind::PosFloat, scenarios: &[LevyCheck] },
    Key { name: "factor", kind: Kind::Factor, scenarios: &[SigmaAtHit, Recurrence] },
    Key { name: "directions", kind: Kind::Directions, scenarios: &[TorusClassify] },
    Key { name: "t_max", kind: Kind::PosFloat, scenarios: &[TorusClassify] },
    Key { name: "grid", kind: Kind::IntRange(8, 256), scenarios: &[TorusClassify] },
    Key { name: "radius", kind: Kind::PosFloatMax(2.0), scenarios: &[Recurrence] },
    Key { name: "word_ball", kind: Kind::IntRange(0, 8), scenarios: &[Recurrence] },
];

fn defaults(s: Scenario) -> Value {
    match s {
        LevyCheck => json!({
            "seed": 0, "start": "1", "map": "square", "steps": 100_000, "dt": 1e-7, "seeds": 20,
            "inner_radius": 0.5, "outer_radius": 2.0,
        }),
        ExitMeasure => json!({
            "seed": 0, "start": "inf", "n_paths": 10_000, "dt": 1e-4, "epsilon": 1e-2, "horizon": 500.0,
            "depth": 1, "horizons": [100.0, 250.0, 500.0],
        }),
        MeasureCompare => json!({
            "seed": 0, "start": "inf", "start2": "0", "n_paths": 10_000, "dt": 1e-4, "epsilon": 1e-2,
            "horizon": 500.0, "depth": 1, "min_bin": 30,
        }),
        Accumulation => json!({
            "seed": 0, "start": "inf", "y": "inf", "n_paths": 10_000, "dt": 1e-4, "epsilon": 1e-2,
            "horizon": 500.0, "delta": 0.05, "max_word_length": 8,
        }),
        SigmaAtHit => json!({
            "seed": 0, "start": "inf", "n_paths": 1000, "dt": 1e-4, "horizon": 500.0,
            "epsilons": [1e-1, 3e-2, 1e-2], "factor": "recip-dist",
        }),
        TorusClassify => json!({
            "seed": 0, "directions": ["(1,0,0)", "(1,sqrt(2),0)", "(1,sqrt(2),sqrt(3))"], "t_max": 1e5, "grid": 16,
        }),
        Recurrence => json!({
            "seed": 0, "start": "0", "y": "0", "n_paths": 200, "dt": 1e-4, "epsilon": 1e-2,
            "horizons": [50.0, 150.0, 500.0], "radius": 0.1, "word_ball": 2, "factor": "recip-dist",
        }),
    }
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    values: Map<String, Value>,
}

/// Parses a config document. JSON is recognized by a leading `{`, anything
/// else is read as TOML.
pub fn parse_document(text: &str) -> Result<Map<String, Value>, RunError> {
    let invalid = |e: String| RunError::ConfigInvalid(vec![e]);
    if text.trim_start().starts_with('{') {
        match serde_json::from_str::<Value>(text) {
            Ok(Value::Object(map)) => Ok(map),
            Ok(_) => Err(invalid("config must be a key-value document".into())),
            Err(e) => Err(invalid(format!("malformed JSON: {e}"))),
        }
    } else {
        let table: toml::Table = text.parse().map_err(|e| invalid(format!("malformed TOML: {e}")))?;
        match serde_json::to_value(table) {
            Ok(Value::Object(map)) => Ok(map),
            _ => Err(invalid("config must be a key-value document".into())),
        }
    }
}

/// Validates a config document and applies the documented defaults.
pub fn validate_config(text: &str) -> Result<ScenarioConfig, RunError> {
    validate_map(parse_document(text)?)
}

pub fn validate_map(doc: Map<String, Value>) -> Result<ScenarioConfig, RunError> {
    let mut problems = Vec::new();
    let scenario = match doc.get("scenario") {
        None => {
            problems.push("scenario: missing".to_string());
            None
        }
        Some(Value::String(s)) => match s.parse::<Scenario>() {
            Ok(k) => Some(k),
            Err(e) => {
                problems.push(format!("scenario: {e}"));
                None
            }
        },
        Some(_) => {
            problems.push("scenario: must be a string".to_string());
            None
        }
    };

    for (name, value) in &doc {
        let Some(key) = KEYS.iter().find(|k| k.name == name) else {
            problems.push(format!("{name}: unknown key"));
            continue;
        };
        if let Some(s) = scenario {
            if !key.scenarios.contains(&s) {
                problems.push(format!("{name}: not used by scenario {s}"));
                continue;
            }
        }
        if name != "scenario" {
            if let Err(e) = check(key.kind, value) {
                problems.push(format!("{name}: {e}"));
            }
        }
    }
    if doc.contains_key("group_file") && doc.contains_key("pairs") {
        problems.push("group_file: give either group_file or pairs, not both".into());
    }
    if let (Some(inner), Some(outer)) =
        (doc.get("inner_radius").and_then(Value::as_f64), doc.get("outer_radius").and_then(Value::as_f64))
    {
        if inner >= outer {
            problems.push("inner_radius: must be smaller than outer_radius".into());
        }
    }
    if let Some(dt) = doc.get("dt").and_then(Value::as_f64) {
        if scenario.is_some_and(|s| SPHERE.contains(&s)) && dt > simlab_core::brownian::MAX_SPHERE_DT {
            problems.push(format!("dt: must not exceed {} on the sphere", simlab_core::brownian::MAX_SPHERE_DT));
        }
    }

    let Some(scenario) = scenario.filter(|_| problems.is_empty()) else {
        return Err(RunError::ConfigInvalid(problems));
    };
    let mut values = Map::new();
    values.insert("scenario".into(), Value::String(scenario.name().into()));
    if let Value::Object(d) = defaults(scenario) {
        values.extend(d);
    }
    for (k, v) in doc {
        values.insert(k, v);
    }
    let config = ScenarioConfig { scenario, values };
    if let Some(s) = config.values.get("start") {
        let outer = config.values.get("outer_radius").and_then(Value::as_f64);
        let inner = config.values.get("inner_radius").and_then(Value::as_f64);
        if let (Some(inner), Some(outer)) = (inner, outer) {
            let z = config.point("start");
            if !z.finite().is_some_and(|z| z.norm() > inner && z.norm() < outer) {
                return Err(RunError::ConfigInvalid(vec![format!("start: {s} lies outside the annulus")]));
            }
        }
    }
    Ok(config)
}

fn check(kind: Kind, v: &Value) -> Result<(), String> {
    let number = || v.as_f64().ok_or_else(|| "must be a number".to_string());
    let integer = || v.as_u64().ok_or_else(|| "must be a nonnegative integer".to_string());
    let reals = || -> Result<Vec<f64>, String> {
        let arr = v.as_array().ok_or("must be a list of numbers")?;
        let xs: Option<Vec<f64>> = arr.iter().map(Value::as_f64).collect();
        let xs = xs.ok_or("must be a list of numbers")?;
        if xs.is_empty() {
            return Err("must not be empty".into());
        }
        if xs.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err("entries must be positive".into());
        }
        Ok(xs)
    };
    let string = || v.as_str().ok_or_else(|| "must be a string".to_string());
    match kind {
        Kind::PosFloat => {
            let x = number()?;
            if !(x > 0.0 && x.is_finite()) {
                return Err("must be positive".into());
            }
        }
        Kind::PosFloatMax(max) => {
            let x = number()?;
            if !(x > 0.0 && x <= max) {
                return Err(format!("must be positive and at most {max}"));
            }
        }
        Kind::Count | Kind::Seed => {
            integer()?;
        }
        Kind::IntMin(lo) => {
            if integer()? < lo {
                return Err(format!("must be at least {lo}"));
            }
        }
        Kind::IntRange(lo, hi) => {
            let n = integer()?;
            if n < lo || n > hi {
                return Err(format!("must lie in {lo}..={hi}"));
            }
        }
        Kind::Point => {
            parse_point(string()?)?;
        }
        Kind::Decreasing => {
            if reals()?.windows(2).any(|w| !(w[1] < w[0])) {
                return Err("must be strictly decreasing".into());
            }
        }
        Kind::Increasing => {
            if reals()?.windows(2).any(|w| !(w[1] > w[0])) {
                return Err("must be strictly increasing".into());
            }
        }
        Kind::Directions => {
            let arr = v.as_array().ok_or("must be a list of strings")?;
            if arr.is_empty() {
                return Err("must not be empty".into());
            }
            for d in arr {
                let s = d.as_str().ok_or("must be a list of strings")?;
                s.parse::<AlgebraicDirection>().map_err(|e| e.to_string())?;
            }
        }
        Kind::Map => {
            string()?.parse::<TestMap>().map_err(|e| e.to_string())?;
        }
        Kind::Factor => {
            string()?.parse::<DilationMode>().map_err(|e| e.to_string())?;
        }
        Kind::Path => {
            string()?;
        }
        Kind::Pairs => {
            pairs_group(v)?;
        }
    }
    Ok(())
}

/// `"inf"` or a complex literal such as `"0"`, `"1.5"`, `"2-1i"`.
pub fn parse_point(s: &str) -> Result<RiemannSpherePoint, String> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("inf") || t == "∞" {
        return Ok(RiemannSpherePoint::Infinity);
    }
    match t.parse::<Complex64>() {
        Ok(z) if z.is_finite() => Ok(RiemannSpherePoint::Finite(z)),
        _ => Err(format!("cannot parse point {s:?} (use \"inf\" or a complex number like \"1-2i\")")),
    }
}

/// Inline circle pairs: `[[[cx, cy, r], [cx, cy, r]], ...]`.
fn pairs_group(v: &Value) -> Result<SchottkyGroup, String> {
    let shape = "must be a list of circle pairs [[cx, cy, r], [cx, cy, r]]";
    let arr = v.as_array().ok_or(shape)?;
    let mut pairs = Vec::with_capacity(arr.len());
    for pair in arr {
        let circles = pair.as_array().filter(|p| p.len() == 2).ok_or(shape)?;
        let mut cs = Vec::with_capacity(2);
        for c in circles {
            let xs: Option<Vec<f64>> =
                c.as_array().filter(|a| a.len() == 3).and_then(|a| a.iter().map(Value::as_f64).collect());
            let xs = xs.ok_or(shape)?;
            cs.push(Circle::new(Complex64::new(xs[0], xs[1]), xs[2]).map_err(|e| e.to_string())?);
        }
        pairs.push((cs[0], cs[1]));
    }
    SchottkyGroup::from_circle_pairs(pairs).map_err(|e| e.to_string())
}

impl ScenarioConfig {
    /// The materialized key-value document.
    pub fn values(&self) -> &Map<String, Value> {
        &self.values
    }

    /// Config without the output destination, as echoed into results.
    pub fn echo(&self) -> Map<String, Value> {
        let mut m = self.values.clone();
        m.remove("output");
        m
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.values.insert("seed".into(), Value::from(seed));
    }

    pub fn set_output(&mut self, path: &str) {
        self.values.insert("output".into(), Value::from(path));
    }

    pub fn seed(&self) -> u64 {
        self.u64("seed")
    }

    pub fn output(&self) -> Option<&str> {
        self.values.get("output").and_then(Value::as_str)
    }

    fn get(&self, key: &str) -> &Value {
        self.values.get(key).unwrap_or_else(|| panic!("validated config lacks {key}"))
    }

    pub fn f64(&self, key: &str) -> f64 {
        self.get(key).as_f64().expect("validated number")
    }

    pub fn u64(&self, key: &str) -> u64 {
        self.get(key).as_u64().expect("validated integer")
    }

    pub fn usize(&self, key: &str) -> usize {
        self.u64(key) as usize
    }

    pub fn str(&self, key: &str) -> &str {
        self.get(key).as_str().expect("validated string")
    }

    pub fn f64_list(&self, key: &str) -> Vec<f64> {
        self.get(key).as_array().expect("validated list").iter().filter_map(Value::as_f64).collect()
    }

    pub fn str_list(&self, key: &str) -> Vec<&str> {
        self.get(key).as_array().expect("validated list").iter().filter_map(Value::as_str).collect()
    }

    pub fn point(&self, key: &str) -> RiemannSpherePoint {
        parse_point(self.str(key)).expect("validated point")
    }

    /// The group from `pairs`, `group_file`, or the built-in example group.
    pub fn group(&self) -> Result<SchottkyGroup, simlab_core::Error> {
        if let Some(v) = self.values.get("pairs") {
            return pairs_group(v).map_err(simlab_core::Error::Precondition);
        }
        if let Some(path) = self.values.get("group_file").and_then(Value::as_str) {
            let text = std::fs::read_to_string(path)?;
            let doc: GroupDocument = serde_json::from_str(&text)?;
            return SchottkyGroup::from_document(doc);
        }
        Ok(SchottkyGroup::example())
    }
}
