//! Subcommand pipelines and output files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use spectra_core::bounds::{run_selected, write_reports_csv};
use spectra_core::convergence::{analyze, solve_level, ConvergenceStudy, Level, MIN_TOL_REL};
use spectra_core::{
    assemble, build_mesh, compute_constants, immersion_data, solve_smallest_with, BoundInput, BoundReport,
    CoefficientField, DiscreteProblem, Error, GeometricConstants, ImmersionData, Mesh, SolverOptions, Spectrum, Status,
};

use crate::config::ExperimentConfig;
use crate::{CheckArgs, CliError, RunArgs, EXIT_CHECK_FAILED, EXIT_NOT_CONVERGED, EXIT_OK};

/// Relative gap below which eigenvalues are reported as one cluster.
const CLUSTER_GAP: f64 = 1e-6;

struct Experiment {
    cfg: ExperimentConfig,
    coeffs: CoefficientField,
    imm: ImmersionData,
    opts: SolverOptions,
    warnings: Vec<String>,
}

impl Experiment {
    fn load(args: &RunArgs) -> Result<Self, CliError> {
        let cfg = ExperimentConfig::load(args.config.as_deref(), &args.overrides())?;
        let coeffs =
            CoefficientField::preset(&cfg.coefficients, &cfg.domain).map_err(|e| CliError::Config(e.to_string()))?;
        let imm = immersion_data(&cfg.domain, &coeffs);
        let opts = cfg.solver_options();
        std::fs::create_dir_all(&cfg.output_dir)
            .map_err(|e| CliError::io(format!("cannot create {}", cfg.output_dir.display()), e))?;
        Ok(Experiment { cfg, coeffs, imm, opts, warnings: Vec::new() })
    }

    fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    fn path(&self, name: &str) -> std::path::PathBuf {
        self.cfg.output_dir.join(name)
    }
}

/// Finest level: mesh, matrices, spectrum (possibly partial) and constants.
struct Finest {
    mesh: Mesh,
    dp: DiscreteProblem,
    spectrum: Spectrum,
    converged: bool,
    constants: GeometricConstants,
}

impl Finest {
    fn level(&self, resolution: usize) -> Level {
        Level { resolution, h: self.mesh.max_edge_length(), eigenvalues: self.spectrum.eigenvalues.clone() }
    }
}

fn solve_finest(exp: &Experiment, resolution: usize) -> Result<Finest, CliError> {
    let spec = &exp.cfg.domain;
    let mesh = build_mesh(spec, resolution)?;
    let dp = assemble(&mesh, &exp.coeffs)?;
    let constants = compute_constants(spec, &mesh, &exp.coeffs, &exp.imm)?;
    let (spectrum, converged) = match solve_smallest_with(&dp, exp.cfg.k, &exp.opts) {
        Ok(s) => (s, true),
        Err(Error::NotConverged { partial, .. }) => (*partial, false),
        Err(e) => return Err(e.into()),
    };
    Ok(Finest { mesh, dp, spectrum, converged, constants })
}

fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let ctx = || format!("cannot write {}", path.display());
    let file = File::create(path).map_err(|e| CliError::io(ctx(), e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(ctx(), e))
}

fn write_exports(exp: &Experiment, fin: &Finest, args: &RunArgs) -> Result<(), CliError> {
    if args.export_matrices {
        write_file(&exp.path("stiffness.mtx"), |w| fin.dp.stiffness.write_matrix_market(w))?;
        write_file(&exp.path("mass.mtx"), |w| fin.dp.mass.write_matrix_market(w))?;
    }
    if args.export_mesh {
        write_file(&exp.path("mesh.txt"), |w| fin.mesh.write_text(w))?;
    }
    Ok(())
}

fn spectrum_json(s: &Spectrum) -> Value {
    let clusters: Vec<Vec<usize>> =
        s.clusters(CLUSTER_GAP).into_iter().map(|g| g.into_iter().map(|i| i + 1).collect()).collect();
    json!({
        "k": s.k,
        "eigenvalues": s.eigenvalues,
        "residuals": s.residuals,
        "converged": s.converged,
        "all_converged": s.all_converged(),
        "iterations": s.iterations,
        "accuracy": s.accuracy,
        "clusters": clusters,
        "cluster_rel_gap": CLUSTER_GAP,
    })
}

#[derive(Debug, Clone, Serialize)]
struct Injection {
    index: usize,
    original: f64,
    value: f64,
}

/// Parses `i=VALUE` or `i=*FACTOR` (1-based) and applies it in place. The
/// sequence is not re-sorted.
fn inject(eigs: &mut [f64], spec: &str) -> Result<Injection, CliError> {
    let bad = |why: &str| CliError::Usage(format!("--inject-lambda '{spec}': {why}"));
    let (i, v) = spec.split_once('=').ok_or_else(|| bad("expected i=VALUE or i=*FACTOR"))?;
    let index: usize = i.trim().parse().map_err(|_| bad("index is not a positive integer"))?;
    if index == 0 || index > eigs.len() {
        return Err(bad(&format!("index must lie in 1..={}", eigs.len())));
    }
    let original = eigs[index - 1];
    let v = v.trim();
    let value = match v.strip_prefix('*') {
        Some(f) => original * f.trim().parse::<f64>().map_err(|_| bad("factor is not a number"))?,
        None => v.parse::<f64>().map_err(|_| bad("value is not a number"))?,
    };
    if !value.is_finite() {
        return Err(bad("value is not finite"));
    }
    eigs[index - 1] = value;
    Ok(Injection { index, original, value })
}

struct Report<'a> {
    command: &'static str,
    exp: &'a Experiment,
    fin: &'a Finest,
    study: Option<&'a ConvergenceStudy>,
    tol_rel: Option<f64>,
    reports: Option<&'a [BoundReport]>,
    injected: &'a [Injection],
}

impl Report<'_> {
    fn write(&self) -> Result<(), CliError> {
        let mut root = json!({
            "command": self.command,
            "config": self.exp.cfg,
            "constants": self.fin.constants,
            "dimension": self.fin.dp.dim(),
            "spectrum": spectrum_json(&self.fin.spectrum),
            "warnings": self.exp.warnings,
        });
        let obj = root.as_object_mut().expect("report root is an object");
        if let Some(study) = self.study {
            obj.insert("convergence".into(), serde_json::to_value(study)?);
            obj.insert("bounds_tolerance".into(), json!(study.bounds_tolerance()));
        }
        if let Some(t) = self.tol_rel {
            obj.insert("tol_rel".into(), json!(t));
        }
        if let Some(reports) = self.reports {
            obj.insert("reports".into(), serde_json::to_value(reports)?);
            obj.insert("summary".into(), summary(reports));
            obj.insert("injected".into(), serde_json::to_value(self.injected)?);
        }
        let text = serde_json::to_string_pretty(&root)?;
        write_file(&self.exp.path("report.json"), |w| writeln!(w, "{text}"))
    }
}

fn summary(reports: &[BoundReport]) -> Value {
    let count = |s: Status| reports.iter().filter(|r| r.status == s).count();
    json!({
        "total": reports.len(),
        "pass": count(Status::Pass),
        "fail": count(Status::Fail),
        "not_applicable": count(Status::NotApplicable),
        "error": count(Status::Error),
        "diagnostic": count(Status::Diagnostic),
    })
}

fn print_spectrum(s: &Spectrum) {
    for (i, lam) in s.eigenvalues.iter().enumerate() {
        let mark = if s.converged[i] { "" } else { "  (not converged)" };
        println!("lambda_{:<3} = {lam:.12e}{mark}", i + 1);
    }
}

fn not_converged(fin: &Finest) -> u8 {
    let done = fin.spectrum.converged.iter().filter(|c| **c).count();
    eprintln!(
        "error: eigensolver stopped after {} iterations with {done} of {} pairs converged",
        fin.spectrum.iterations, fin.spectrum.k
    );
    EXIT_NOT_CONVERGED
}

fn finest_resolution(exp: &mut Experiment) -> usize {
    let levels = exp.cfg.resolution.levels();
    if levels.len() > 1 {
        exp.warn(format!("solve uses only the finest resolution {}", exp.cfg.resolution.finest()));
    }
    exp.cfg.resolution.finest()
}

pub fn solve(args: &RunArgs) -> Result<u8, CliError> {
    let mut exp = Experiment::load(args)?;
    let r = finest_resolution(&mut exp);
    let fin = solve_finest(&exp, r)?;
    write_file(&exp.path("eigenvalues.csv"), |w| fin.spectrum.write_csv(w))?;
    write_exports(&exp, &fin, args)?;
    Report { command: "solve", exp: &exp, fin: &fin, study: None, tol_rel: None, reports: None, injected: &[] }
        .write()?;
    print_spectrum(&fin.spectrum);
    Ok(if fin.converged { EXIT_OK } else { not_converged(&fin) })
}

/// Solves every level, coarsest first; the finest is kept whole.
fn solve_levels(exp: &Experiment, resolutions: &[usize]) -> Result<(Vec<Level>, Finest), CliError> {
    let (&finest, coarse) = resolutions.split_last().ok_or_else(|| CliError::Config("no resolutions".into()))?;
    let mut levels = Vec::with_capacity(resolutions.len());
    for &r in coarse {
        let (level, _) = solve_level(&exp.cfg.domain, &exp.coeffs, r, exp.cfg.k, &exp.opts)?;
        levels.push(level);
    }
    let fin = solve_finest(exp, finest)?;
    levels.push(fin.level(finest));
    Ok((levels, fin))
}

pub fn check(args: &CheckArgs) -> Result<u8, CliError> {
    let mut exp = Experiment::load(&args.run)?;
    let k = exp.cfg.k;
    if k < 2 {
        return Err(CliError::Config(format!("checks need k >= 2 eigenvalues, got k = {k}")));
    }
    let ids = exp.cfg.check_ids()?;
    let mut resolutions = exp.cfg.resolution.levels();
    if resolutions.len() == 1 {
        let r = resolutions[0];
        if r / 2 >= 2 {
            resolutions.insert(0, r / 2);
        } else {
            exp.warn(format!("resolution {r} is too coarse for an accuracy estimate; using tol_rel = {MIN_TOL_REL:e}"));
        }
    }
    let (levels, mut fin) = solve_levels(&exp, &resolutions)?;
    write_exports(&exp, &fin, &args.run)?;
    if !fin.converged {
        write_file(&exp.path("eigenvalues.csv"), |w| fin.spectrum.write_csv(w))?;
        Report { command: "check", exp: &exp, fin: &fin, study: None, tol_rel: None, reports: None, injected: &[] }
            .write()?;
        return Ok(not_converged(&fin));
    }
    let study = if levels.len() >= 2 { Some(analyze(levels, k)?) } else { None };
    let tol_rel = study.as_ref().map_or(MIN_TOL_REL, |s| s.bounds_tolerance());
    if let Some(s) = &study {
        fin.spectrum.accuracy = Some(s.accuracy.clone());
        for w in s.warnings.clone() {
            exp.warn(w);
        }
    }

    let mut eigs = fin.spectrum.eigenvalues.clone();
    let injected = args.inject_lambda.iter().map(|spec| inject(&mut eigs, spec)).collect::<Result<Vec<_>, _>>()?;
    for inj in &injected {
        eprintln!("test hook: lambda_{} {} -> {}", inj.index, inj.original, inj.value);
    }
    let input = BoundInput::new(&eigs, fin.constants, &exp.cfg.domain, &exp.imm, &exp.coeffs, tol_rel);
    let reports = run_selected(&input, k - 1, ids.as_deref())?;

    write_file(&exp.path("eigenvalues.csv"), |w| fin.spectrum.write_csv(w))?;
    write_file(&exp.path("bounds.csv"), |w| write_reports_csv(&reports, w))?;
    if let Some(s) = &study {
        write_file(&exp.path("convergence.csv"), |w| s.write_csv(w))?;
    }
    Report {
        command: "check",
        exp: &exp,
        fin: &fin,
        study: study.as_ref(),
        tol_rel: Some(tol_rel),
        reports: Some(&reports),
        injected: &injected,
    }
    .write()?;

    let bad: Vec<&BoundReport> = reports.iter().filter(|r| matches!(r.status, Status::Fail | Status::Error)).collect();
    let counts = summary(&reports);
    println!(
        "{} checks: {} pass, {} fail, {} not applicable, {} error, {} diagnostic (tol_rel = {tol_rel:e})",
        counts["total"],
        counts["pass"],
        counts["fail"],
        counts["not_applicable"],
        counts["error"],
        counts["diagnostic"]
    );
    if bad.is_empty() {
        return Ok(EXIT_OK);
    }
    let mut rows = Vec::new();
    write_reports_csv(&bad.into_iter().cloned().collect::<Vec<_>>(), &mut rows)
        .map_err(|e| CliError::io("cannot format failing rows", e))?;
    eprint!("failing checks:\n{}", String::from_utf8_lossy(&rows));
    Ok(EXIT_CHECK_FAILED)
}

pub fn converge(args: &RunArgs) -> Result<u8, CliError> {
    let mut exp = Experiment::load(args)?;
    let resolutions = exp.cfg.resolution.levels();
    if resolutions.len() < 3 {
        return Err(CliError::Config(format!("converge needs at least three resolutions, got {}", resolutions.len())));
    }
    let (levels, mut fin) = solve_levels(&exp, &resolutions)?;
    write_exports(&exp, &fin, args)?;
    if !fin.converged {
        write_file(&exp.path("eigenvalues.csv"), |w| fin.spectrum.write_csv(w))?;
        Report { command: "converge", exp: &exp, fin: &fin, study: None, tol_rel: None, reports: None, injected: &[] }
            .write()?;
        return Ok(not_converged(&fin));
    }
    let study = analyze(levels, exp.cfg.k)?;
    fin.spectrum.accuracy = Some(study.accuracy.clone());
    for w in study.warnings.clone() {
        exp.warn(w);
    }
    write_file(&exp.path("eigenvalues.csv"), |w| fin.spectrum.write_csv(w))?;
    write_file(&exp.path("convergence.csv"), |w| study.write_csv(w))?;
    Report {
        command: "converge",
        exp: &exp,
        fin: &fin,
        study: Some(&study),
        tol_rel: None,
        reports: None,
        injected: &[],
    }
    .write()?;
    for i in 0..study.extrapolated.len() {
        let order = study.observed_order[i].map_or_else(|| "undefined".to_string(), |p| format!("{p:.4}"));
        let flag = if study.reliable[i] { "" } else { "  (unreliable)" };
        println!("lambda_{:<3} extrapolated {:.12e}  order {order}{flag}", i + 1, study.extrapolated[i]);
    }
    println!("bounds tolerance {:e}", study.bounds_tolerance());
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injection_forms() {
        let mut e = vec![1.0, 4.0, 9.0];
        let a = inject(&mut e, "2=*10").unwrap();
        assert_eq!((a.index, a.original, a.value), (2, 4.0, 40.0));
        inject(&mut e, "3 = 0.5").unwrap();
        assert_eq!(e, vec![1.0, 40.0, 0.5]);
        for bad in ["0=1", "4=1", "x=1", "1", "1=*two", "1=inf"] {
            assert!(inject(&mut e, bad).is_err(), "{bad}");
        }
    }
}
