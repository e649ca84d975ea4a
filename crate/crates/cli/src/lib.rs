//! Scenario runner behind the `simlab` binary.

// `!(x > y)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod scenarios;

use serde_json::{json, Map, Value};
use thiserror::Error;

pub use config::{validate_config, Scenario, ScenarioConfig};

pub const VERSION: &str = concat!("simlab ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    ConfigInvalid(Vec<String>),
    #[error("scenario {scenario} failed: {source}")]
    Scenario {
        scenario: Scenario,
        #[source]
        source: simlab_core::Error,
    },
    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// 2 for configuration problems, 3 for everything that fails while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::ConfigInvalid(_) => 2,
            _ => 3,
        }
    }
}

/// Reproducibility block embedded in every output.
pub fn reproducibility(cfg: &ScenarioConfig) -> Value {
    json!({ "config": Value::Object(cfg.echo()), "seed": cfg.seed(), "version": VERSION })
}

/// Runs a scenario and returns the complete output document.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Value, RunError> {
    let out = scenarios::run(cfg).map_err(|source| RunError::Scenario { scenario: cfg.scenario, source })?;
    Ok(document(cfg, out.result))
}

fn document(cfg: &ScenarioConfig, result: Value) -> Value {
    let mut doc = Map::new();
    doc.insert("scenario".into(), Value::from(cfg.scenario.name()));
    doc.insert("result".into(), result);
    doc.insert("reproducibility".into(), reproducibility(cfg));
    Value::Object(doc)
}

/// Output text: CSV when the output path ends in `.csv` (and the scenario
/// has a table), pretty JSON otherwise.
pub fn render(cfg: &ScenarioConfig) -> Result<String, RunError> {
    let out = scenarios::run(cfg).map_err(|source| RunError::Scenario { scenario: cfg.scenario, source })?;
    let wants_csv = cfg.output().is_some_and(|p| p.ends_with(".csv"));
    if wants_csv {
        let Some(csv) = out.csv else {
            return Err(RunError::ConfigInvalid(vec![format!("output: scenario {} has no CSV form", cfg.scenario)]));
        };
        let block = serde_json::to_string(&reproducibility(cfg)).expect("serializable");
        return Ok(format!("# reproducibility: {block}\n{csv}"));
    }
    let mut text = serde_json::to_string_pretty(&document(cfg, out.result)).expect("serializable");
    text.push('\n');
    Ok(text)
}

/// Command-line overrides applied on top of the config document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<String>,
    pub workers: Option<usize>,
}

/// A rendered output and the file it was written to, if any.
#[derive(Debug, Clone)]
pub struct Rendered {
    pub text: String,
    pub path: Option<String>,
}

/// Validates `text` for `scenario`, applies overrides, runs on a pool of the
/// requested size and writes the output when the config names a path.
pub fn execute(scenario: Scenario, text: &str, overrides: &Overrides) -> Result<Rendered, RunError> {
    let mut doc = config::parse_document(text)?;
    match doc.get("scenario") {
        None => {
            doc.insert("scenario".into(), Value::from(scenario.name()));
        }
        Some(v) if v.as_str() == Some(scenario.name()) => {}
        Some(v) => {
            return Err(RunError::ConfigInvalid(vec![format!(
                "scenario: config says {v}, command line says {scenario}"
            )]))
        }
    }
    let mut cfg = config::validate_map(doc)?;
    if let Some(seed) = overrides.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = &overrides.output {
        cfg.set_output(out);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(overrides.workers.unwrap_or(0))
        .build()
        .map_err(|e| RunError::ConfigInvalid(vec![format!("workers: {e}")]))?;
    let text = pool.install(|| render(&cfg))?;
    let path = cfg.output().map(str::to_string);
    if let Some(path) = &path {
        std::fs::write(path, &text).map_err(|source| RunError::Output { path: path.clone(), source })?;
    }
    Ok(Rendered { text, path })
}
