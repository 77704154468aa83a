//! Experiment configuration: JSON file merged with command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use spectra_core::bounds::BoundId;
use spectra_core::{DomainSpec, PreconditionerKind, Preset, SolverOptions};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Resolution {
    One(usize),
    Many(Vec<usize>),
}

impl Resolution {
    pub fn levels(&self) -> Vec<usize> {
        match self {
            Resolution::One(r) => vec![*r],
            Resolution::Many(v) => v.clone(),
        }
    }

    /// Finest level.
    pub fn finest(&self) -> usize {
        self.levels().into_iter().max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Checks {
    Keyword(String),
    List(Vec<String>),
}

impl Default for Checks {
    fn default() -> Self {
        Checks::Keyword("all".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub coefficients: Preset,
    pub resolution: Resolution,
    /// Number of eigenpairs to compute.
    pub k: usize,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub preconditioner: Option<PreconditionerKind>,
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_tol() -> f64 {
    1e-8
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Config keys a flag may override.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub domain: Option<String>,
    pub coefficients: Option<String>,
    pub resolution: Option<Vec<usize>>,
    pub k: Option<usize>,
    pub checks: Option<String>,
    pub tol: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut root = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str::<Value>(&text)
                    .map_err(|e| CliError::Config(format!("{} is not valid JSON: {e}", p.display())))?
            }
            None => Value::Object(Map::new()),
        };
        let obj = root.as_object_mut().ok_or_else(|| CliError::Config("config must be a JSON object".into()))?;
        apply_overrides(obj, overrides)?;
        for key in ["domain", "coefficients"] {
            if let Some(v) = obj.get_mut(key) {
                evaluate_expressions(v, key)?;
            }
        }
        if let Some(c) = obj.get("coefficients") {
            check_preset_name(c)?;
        }
        let cfg: ExperimentConfig =
            serde_json::from_value(root).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.domain.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if self.k == 0 {
            return Err(CliError::Config("k must be at least 1".into()));
        }
        if self.tol <= 0.0 || self.tol.is_nan() {
            return Err(CliError::Config(format!("tol must be positive, got {}", self.tol)));
        }
        let levels = self.resolution.levels();
        if levels.is_empty() || levels.iter().any(|&r| r < 2) {
            return Err(CliError::Config("every resolution must be at least 2".into()));
        }
        if levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Config("resolutions must be strictly increasing".into()));
        }
        self.check_ids()?;
        Ok(())
    }

    /// Requested inequality ids; `None` means all.
    pub fn check_ids(&self) -> Result<Option<Vec<BoundId>>, CliError> {
        let names: Vec<String> = match &self.checks {
            Checks::Keyword(s) if s == "all" => return Ok(None),
            Checks::Keyword(s) => s.split(',').map(|x| x.trim().to_string()).collect(),
            Checks::List(v) => v.clone(),
        };
        names
            .iter()
            .map(|n| {
                BoundId::parse(n).ok_or_else(|| {
                    let valid: Vec<&str> = BoundId::ALL.iter().map(|id| id.as_str()).collect();
                    CliError::Config(format!("unknown check '{n}'; valid checks: all, {}", valid.join(", ")))
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn solver_options(&self) -> SolverOptions {
        let mut o = SolverOptions::with_tol(self.tol);
        if let Some(p) = self.preconditioner {
            o.preconditioner = p;
        }
        if let Some(m) = self.max_iter {
            o.max_iter = m;
        }
        if let Some(s) = self.seed {
            o.seed = s;
        }
        o
    }
}

fn parse_json_flag(flag: &str, text: &str) -> Result<Value, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Usage(format!("--{flag} expects a JSON object: {e}")))
}

fn apply_overrides(obj: &mut Map<String, Value>, o: &Overrides) -> Result<(), CliError> {
    if let Some(d) = &o.domain {
        obj.insert("domain".into(), parse_json_flag("domain", d)?);
    }
    if let Some(c) = &o.coefficients {
        // a bare preset name is accepted for parameterless presets
        let v = if c.trim_start().starts_with('{') {
            parse_json_flag("coefficients", c)?
        } else {
            serde_json::json!({ "preset": c })
        };
        obj.insert("coefficients".into(), v);
    }
    if let Some(r) = &o.resolution {
        let v = if r.len() == 1 { Value::from(r[0]) } else { Value::from(r.clone()) };
        obj.insert("resolution".into(), v);
    }
    if let Some(k) = o.k {
        obj.insert("k".into(), Value::from(k));
    }
    if let Some(c) = &o.checks {
        obj.insert("checks".into(), Value::from(c.clone()));
    }
    if let Some(t) = o.tol {
        obj.insert("tol".into(), Value::from(t));
    }
    if let Some(d) = &o.output_dir {
        obj.insert("output_dir".into(), Value::from(d.to_string_lossy().into_owned()));
    }
    Ok(())
}

/// Replaces numeric expression strings such as "pi", "2*pi" or "sqrt(8)" by
/// their values. Tag fields (`kind`, `preset`) are left alone.
pub fn evaluate_expressions(v: &mut Value, path: &str) -> Result<(), CliError> {
    match v {
        Value::String(s) => {
            let x = eval_number(s).map_err(|e| CliError::Config(format!("{path}: cannot evaluate '{s}': {e}")))?;
            *v = serde_json::Number::from_f64(x)
                .map(Value::Number)
                .ok_or_else(|| CliError::Config(format!("{path}: '{s}' is not finite")))?;
        }
        Value::Array(items) => {
            for (i, item) in items.iter_mut().enumerate() {
                evaluate_expressions(item, &format!("{path}[{i}]"))?;
            }
        }
        Value::Object(map) => {
            for (key, item) in map.iter_mut() {
                if key != "kind" && key != "preset" {
                    evaluate_expressions(item, &format!("{path}.{key}"))?;
                }
            }
        }
        _ => {}
    }
    Ok(())
}

/// Evaluates an arithmetic expression. Besides the evaluator's builtins,
/// `pi`, `e`, `sqrt(x)` and `exp(x)` are defined.
fn eval_number(expr: &str) -> Result<f64, fasteval::Error> {
    let mut names = |name: &str, args: Vec<f64>| match (name, args.as_slice()) {
        ("pi", []) => Some(std::f64::consts::PI),
        ("e", []) => Some(std::f64::consts::E),
        ("sqrt", [x]) => Some(x.sqrt()),
        ("exp", [x]) => Some(x.exp()),
        _ => None,
    };
    fasteval::ez_eval(expr, &mut names)
}

fn check_preset_name(c: &Value) -> Result<(), CliError> {
    let valid = Preset::NAMES.join(", ");
    match c.get("preset").and_then(Value::as_str) {
        Some(name) if Preset::NAMES.contains(&name) => Ok(()),
        Some(name) => Err(CliError::Config(format!("unknown preset '{name}'; valid presets: {valid}"))),
        None => Err(CliError::Config(format!("coefficients need a \"preset\" field; valid presets: {valid}"))),
    }
}
