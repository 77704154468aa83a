//! Static preset catalog.

use serde::Serialize;
use spectra_core::Preset;

use crate::{CliError, EXIT_OK};

#[derive(Debug, Serialize)]
struct Param {
    name: &'static str,
    #[serde(rename = "type")]
    kind: &'static str,
    default: Option<f64>,
    description: &'static str,
}

#[derive(Debug, Serialize)]
struct Entry {
    preset: &'static str,
    description: &'static str,
    dimensions: &'static [usize],
    parameters: Vec<Param>,
    example: serde_json::Value,
}

fn param(name: &'static str, kind: &'static str, default: Option<f64>, description: &'static str) -> Param {
    Param { name, kind, default, description }
}

fn catalog() -> Vec<Entry> {
    let entries = vec![
        Entry {
            preset: "laplacian",
            description: "eta = 0, T = I",
            dimensions: &[1, 2],
            parameters: vec![],
            example: serde_json::json!({ "preset": "laplacian" }),
        },
        Entry {
            preset: "drifted_linear",
            description: "eta = c*x1, T = I",
            dimensions: &[1, 2],
            parameters: vec![param("c", "number", None, "drift slope")],
            example: serde_json::json!({ "preset": "drifted_linear", "c": 1.0 }),
        },
        Entry {
            preset: "gaussian_soliton",
            description: "eta = |x|^2/4, T = I",
            dimensions: &[1, 2],
            parameters: vec![],
            example: serde_json::json!({ "preset": "gaussian_soliton" }),
        },
        Entry {
            preset: "scalar_T",
            description: "eta = 0, T = t(x1)*I with t = constant + linear*x1 + quadratic*x1^2 > 0",
            dimensions: &[1, 2],
            parameters: vec![
                param("constant", "number", Some(0.0), "constant term of t"),
                param("linear", "number", Some(0.0), "linear term of t"),
                param("quadratic", "number", Some(0.0), "quadratic term of t"),
            ],
            example: serde_json::json!({ "preset": "scalar_T", "constant": 1.0, "quadratic": 1.0 }),
        },
        Entry {
            preset: "const_T",
            description: "eta = 0, T a constant symmetric positive-definite matrix",
            dimensions: &[1, 2],
            parameters: vec![param("matrix", "number[][]", None, "row-major n x n matrix")],
            example: serde_json::json!({ "preset": "const_T", "matrix": [[2.0, 0.5], [0.5, 1.0]] }),
        },
    ];
    debug_assert!(entries.iter().map(|e| e.preset).eq(Preset::NAMES));
    entries
}

pub fn print(json: bool) -> Result<u8, CliError> {
    let entries = catalog();
    if json {
        println!("{}", serde_json::to_string_pretty(&entries)?);
        return Ok(EXIT_OK);
    }
    for e in &entries {
        println!("{:<18} {}", e.preset, e.description);
        for p in &e.parameters {
            let default = p.default.map_or_else(|| "required".to_string(), |d| format!("default {d}"));
            println!("{:<18}   {}: {} ({default}) {}", "", p.name, p.kind, p.description);
        }
    }
    Ok(EXIT_OK)
}
