//! Mesh convergence studies: Richardson extrapolation and observed order.

use std::io::Write;

use serde::Serialize;

use crate::assemble::assemble;
use crate::coeffs::CoefficientField;
use crate::domain::{build_mesh, DomainSpec};
use crate::eigen::{solve_smallest_with, SolverOptions, Spectrum};
use crate::error::{Error, Result};

/// Convergence order of P1 eigenvalues.
pub const P1_ORDER: f64 = 2.0;

/// Floor for bound-check tolerances derived from accuracy estimates.
pub const MIN_TOL_REL: f64 = 1e-9;

/// Eigenvalues of one mesh level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub resolution: usize,
    /// Longest mesh edge.
    pub h: f64,
    pub eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub levels: Vec<Level>,
    /// Richardson extrapolation with order 2 from the two finest levels.
    pub extrapolated: Vec<f64>,
    /// Order observed on the three finest levels, when defined.
    pub observed_order: Vec<Option<f64>>,
    /// False when the sequence is not monotone or the order is undefined.
    pub reliable: Vec<bool>,
    /// |λ_finest − λ_extrapolated| / |λ_extrapolated|.
    pub accuracy: Vec<f64>,
    pub warnings: Vec<String>,
}

/// λ_fine + (λ_fine − λ_coarse)/(ratio^p − 1), with h_coarse = ratio·h_fine.
pub fn richardson(coarse: f64, fine: f64, ratio: f64, order: f64) -> f64 {
    fine + (fine - coarse) / (ratio.powf(order) - 1.0)
}

/// Order p with (λ₁ − λ₂)/(λ₂ − λ₃) = (h₁ᵖ − h₂ᵖ)/(h₂ᵖ − h₃ᵖ) for mesh
/// sizes h₁ > h₂ > h₃. Closed form for a constant refinement ratio,
/// bisection on p ∈ [0.05, 20] otherwise.
pub fn observed_order(values: [f64; 3], h: [f64; 3]) -> Option<f64> {
    let (d1, d2) = (values[0] - values[1], values[1] - values[2]);
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() {
        return None;
    }
    let q = d1 / d2;
    let (r1, r2) = (h[0] / h[1], h[1] / h[2]);
    if (r1 - r2).abs() <= 1e-12 * r1 {
        let p = q.ln() / r1.ln();
        return p.is_finite().then_some(p);
    }
    let f = |p: f64| (h[0].powf(p) - h[1].powf(p)) / (h[1].powf(p) - h[2].powf(p)) - q;
    let (mut lo, mut hi) = (0.05, 20.0);
    if f(lo).signum() == f(hi).signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid).signum() == f(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Analyses levels ordered from coarsest to finest. Resolutions must be
/// strictly increasing and every level must carry at least `count` values.
pub fn analyze(levels: Vec<Level>, count: usize) -> Result<ConvergenceStudy> {
    if levels.len() < 2 {
        return Err(Error::InvalidArgument("a convergence study needs at least two levels".into()));
    }
    if levels.windows(2).any(|w| w[1].resolution <= w[0].resolution) {
        return Err(Error::InvalidArgument("resolutions must be strictly increasing".into()));
    }
    if let Some(l) = levels.iter().find(|l| l.eigenvalues.len() < count) {
        return Err(Error::InsufficientEigenvalues(format!(
            "level {} has {} eigenvalues, {count} needed",
            l.resolution,
            l.eigenvalues.len()
        )));
    }
    let last = levels.len() - 1;
    let (coarse, fine) = (&levels[last - 1], &levels[last]);
    let ratio = fine.resolution as f64 / coarse.resolution as f64;
    let mut study = ConvergenceStudy {
        extrapolated: Vec::with_capacity(count),
        observed_order: Vec::with_capacity(count),
        reliable: Vec::with_capacity(count),
        accuracy: Vec::with_capacity(count),
        warnings: Vec::new(),
        levels: Vec::new(),
    };
    for i in 0..count {
        let seq: Vec<f64> = levels.iter().map(|l| l.eigenvalues[i]).collect();
        let ext = richardson(coarse.eigenvalues[i], fine.eigenvalues[i], ratio, P1_ORDER);
        let monotone = seq.windows(2).all(|w| w[1] <= w[0]);
        if !monotone {
            study.warnings.push(format!("eigenvalue {} is not monotonically decreasing under refinement", i + 1));
        }
        let order = (levels.len() >= 3).then(|| {
            let t = &levels[last - 2..];
            // nominal mesh sizes are proportional to 1/resolution
            let h = [1.0 / t[0].resolution as f64, 1.0 / t[1].resolution as f64, 1.0 / t[2].resolution as f64];
            observed_order([t[0].eigenvalues[i], t[1].eigenvalues[i], t[2].eigenvalues[i]], h)
        });
        let order = order.flatten();
        study.extrapolated.push(ext);
        study.reliable.push(monotone && order.is_some());
        study.observed_order.push(order);
        study.accuracy.push(((fine.eigenvalues[i] - ext) / ext).abs());
    }
    study.levels = levels;
    Ok(study)
}

impl ConvergenceStudy {
    /// max(1e-9, 3·max accuracy estimate).
    pub fn bounds_tolerance(&self) -> f64 {
        let worst = self.accuracy.iter().cloned().fold(0.0, f64::max);
        MIN_TOL_REL.max(3.0 * worst)
    }

    /// Long-format CSV: `index,resolution,h,lambda,extrapolated,observed_order,reliable`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,resolution,h,lambda,extrapolated,observed_order,reliable")?;
        for i in 0..self.extrapolated.len() {
            for l in &self.levels {
                writeln!(
                    out,
                    "{},{},{:.16e},{:.16e},{:.16e},{},{}",
                    i + 1,
                    l.resolution,
                    l.h,
                    l.eigenvalues[i],
                    self.extrapolated[i],
                    self.observed_order[i].map_or_else(String::new, |p| format!("{p:.16e}")),
                    self.reliable[i]
                )?;
            }
        }
        Ok(())
    }
}

/// Solves the first `k` eigenpairs at one resolution.
pub fn solve_level(
    spec: &DomainSpec,
    coeffs: &CoefficientField,
    resolution: usize,
    k: usize,
    opts: &SolverOptions,
) -> Result<(Level, Spectrum)> {
    let mesh = build_mesh(spec, resolution)?;
    let dp = assemble(&mesh, coeffs)?;
    let spectrum = solve_smallest_with(&dp, k, opts)?;
    let level = Level { resolution, h: mesh.max_edge_length(), eigenvalues: spectrum.eigenvalues.clone() };
    Ok((level, spectrum))
}

/// Solves every resolution and analyses the first `k` eigenvalues. The
/// finest spectrum is returned with its accuracy estimates attached.
pub fn study(
    spec: &DomainSpec,
    coeffs: &CoefficientField,
    resolutions: &[usize],
    k: usize,
    opts: &SolverOptions,
) -> Result<(ConvergenceStudy, Spectrum)> {
    let mut levels = Vec::with_capacity(resolutions.len());
    let mut finest = None;
    for &r in resolutions {
        let (level, spectrum) = solve_level(spec, coeffs, r, k, opts)?;
        levels.push(level);
        finest = Some(spectrum);
    }
    let study = analyze(levels, k)?;
    let mut spectrum = finest.ok_or_else(|| Error::InvalidArgument("no resolutions given".into()))?;
    spectrum.accuracy = Some(study.accuracy.clone());
    Ok((study, spectrum))
}

/// Solves at `resolution` and at half of it and attaches Richardson
/// accuracy estimates to the fine spectrum.
pub fn solve_with_accuracy(
    spec: &DomainSpec,
    coeffs: &CoefficientField,
    resolution: usize,
    k: usize,
    opts: &SolverOptions,
) -> Result<(ConvergenceStudy, Spectrum)> {
    let half = resolution / 2;
    if half < 2 {
        return Err(Error::InvalidArgument(format!("resolution {resolution} is too coarse for an accuracy estimate")));
    }
    study(spec, coeffs, &[half, resolution], k, opts)
}
