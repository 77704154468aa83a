//! Universal eigenvalue inequalities evaluated on a computed spectrum.
//!
//! Every check returns a [`BoundReport`] oriented as `lhs ≤ rhs`, so that
//! `slack = rhs − lhs` is nonnegative when the inequality holds. Lower-bound
//! inequalities are stored with the bound on the left.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::coeffs::{CoefficientField, GeometricConstants};
use crate::domain::{DomainSpec, ImmersionData};
use crate::error::{Error, Result};

/// Relative tolerance for exact or analytic spectra.
pub const ANALYTIC_TOL: f64 = 1e-9;

/// Weyl diagnostics with fewer eigenvalues are flagged as low confidence.
pub const WEYL_MIN_K: usize = 5;

/// T₀ at or below this multiple of δ counts as a divergence-free tensor.
const DIV_FREE_TOL: f64 = 1e-12;

/// Inequality identifiers, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundId {
    /// Σ(λ_{k+1}−λᵢ)² against the general quadratic right-hand side.
    Quadratic,
    /// Σ_{i≤n}(λ_{i+1}−λ₁) against the first eigenvalue.
    LowerOrderSum,
    /// Quadratic inequality in the shifted values ς for divergence-free T.
    QuadraticDivFree,
    /// ς_{k+1} ≤ (1 + 4δ/nε) k^{2δ/nε} ς₁.
    PowerGrowth,
    /// ς_{k+1} ≤ (1 + 4δ/nε) · mean(ς₁..ς_k).
    AverageGrowth,
    /// Upper root of the shifted quadratic inequality.
    YangUpper,
    /// ς_{k+1} − ς_k ≤ 2√discriminant.
    YangGap,
    /// The upper root never exceeds the average-growth bound.
    YangVsAverage,
    /// Lower bound on mean(ς₁..ς_k) of Weyl order, for T = I on flat domains.
    PolyaAverage,
    /// (ς₂+…+ς_{n+1})/ς₁ ≤ 4δ/ε + n.
    LowerOrderRatio,
    /// Quadratic inequality on the Gaussian soliton with inf|x|².
    GaussianQuadratic,
    /// Lower-order sum on the Gaussian soliton with inf|x|².
    GaussianLowerOrderSum,
    /// Gaussian quadratic inequality when inf|x|² = 4n.
    GaussianQuadraticC0Free,
    /// Gaussian lower-order sum when inf|x|² = 4n.
    GaussianLowerOrderSumC0Free,
    /// Quadratic inequality with drift terms in place of C₀.
    DriftQuadratic,
    /// Drift quadratic inequality for divergence-free T.
    DriftQuadraticDivFree,
    /// F_k / k^{4/n} is nonincreasing.
    RecursionMonotonicity,
    /// mean(ς₁..ς_k) / k^{2/n} against its Weyl limit; diagnostic only.
    WeylRatio,
}

impl BoundId {
    pub const ALL: [BoundId; 18] = [
        BoundId::Quadratic,
        BoundId::LowerOrderSum,
        BoundId::QuadraticDivFree,
        BoundId::PowerGrowth,
        BoundId::AverageGrowth,
        BoundId::YangUpper,
        BoundId::YangGap,
        BoundId::YangVsAverage,
        BoundId::PolyaAverage,
        BoundId::LowerOrderRatio,
        BoundId::GaussianQuadratic,
        BoundId::GaussianLowerOrderSum,
        BoundId::GaussianQuadraticC0Free,
        BoundId::GaussianLowerOrderSumC0Free,
        BoundId::DriftQuadratic,
        BoundId::DriftQuadraticDivFree,
        BoundId::RecursionMonotonicity,
        BoundId::WeylRatio,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            BoundId::Quadratic => "quadratic",
            BoundId::LowerOrderSum => "lower_order_sum",
            BoundId::QuadraticDivFree => "quadratic_div_free",
            BoundId::PowerGrowth => "power_growth",
            BoundId::AverageGrowth => "average_growth",
            BoundId::YangUpper => "yang_upper",
            BoundId::YangGap => "yang_gap",
            BoundId::YangVsAverage => "yang_vs_average",
            BoundId::PolyaAverage => "polya_average",
            BoundId::LowerOrderRatio => "lower_order_ratio",
            BoundId::GaussianQuadratic => "gaussian_quadratic",
            BoundId::GaussianLowerOrderSum => "gaussian_lower_order_sum",
            BoundId::GaussianQuadraticC0Free => "gaussian_quadratic_c0_free",
            BoundId::GaussianLowerOrderSumC0Free => "gaussian_lower_order_sum_c0_free",
            BoundId::DriftQuadratic => "drift_quadratic",
            BoundId::DriftQuadraticDivFree => "drift_quadratic_div_free",
            BoundId::RecursionMonotonicity => "recursion_monotonicity",
            BoundId::WeylRatio => "weyl_ratio",
        }
    }

    pub fn parse(name: &str) -> Option<BoundId> {
        BoundId::ALL.into_iter().find(|id| id.as_str() == name)
    }

    /// Checks indexed by k (as opposed to evaluated once).
    fn per_k(&self) -> bool {
        !matches!(
            self,
            BoundId::LowerOrderSum
                | BoundId::LowerOrderRatio
                | BoundId::GaussianLowerOrderSum
                | BoundId::GaussianLowerOrderSumC0Free
                | BoundId::WeylRatio
        )
    }
}

impl std::fmt::Display for BoundId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Hypotheses of the inequality do not hold for these coefficients.
    NotApplicable,
    /// The inputs are inconsistent with the inequality's premises.
    Error,
    /// Reported without a pass/fail verdict.
    Diagnostic,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::NotApplicable => "not_applicable",
            Status::Error => "error",
            Status::Diagnostic => "diagnostic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub id: BoundId,
    pub k: usize,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub slack: Option<f64>,
    pub tightness: Option<f64>,
    pub pass: Option<bool>,
    pub status: Status,
    pub tol_rel: f64,
    pub constants_used: GeometricConstants,
    pub detail: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl BoundReport {
    fn blank(id: BoundId, k: usize, input: &BoundInput, status: Status) -> Self {
        BoundReport {
            id,
            k,
            lhs: None,
            rhs: None,
            slack: None,
            tightness: None,
            pass: None,
            status,
            tol_rel: input.tol_rel,
            constants_used: input.constants,
            detail: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    fn not_applicable(id: BoundId, k: usize, input: &BoundInput, why: &str) -> Self {
        let mut r = Self::blank(id, k, input, Status::NotApplicable);
        r.notes.push(why.to_string());
        r
    }

    fn error(id: BoundId, k: usize, input: &BoundInput, why: String) -> Self {
        let mut r = Self::blank(id, k, input, Status::Error);
        r.notes.push(why);
        r
    }

    /// `lhs ≤ rhs` judged with `slack ≥ −tol_rel·|rhs|`.
    fn judged(id: BoundId, k: usize, input: &BoundInput, lhs: f64, rhs: f64) -> Self {
        let slack = rhs - lhs;
        let pass = slack >= -input.tol_rel * rhs.abs();
        let mut r = Self::blank(id, k, input, if pass { Status::Pass } else { Status::Fail });
        r.lhs = Some(lhs);
        r.rhs = Some(rhs);
        r.slack = Some(slack);
        r.tightness = (rhs > 0.0).then(|| lhs / rhs);
        r.pass = Some(pass);
        r
    }

    fn with(mut self, key: &str, value: f64) -> Self {
        self.detail.insert(key.to_string(), value);
        self
    }

    fn note(mut self, text: &str) -> Self {
        self.notes.push(text.to_string());
        self
    }

    /// A judged report that did not pass.
    pub fn failed(&self) -> bool {
        self.pass == Some(false)
    }
}

/// Everything the checks need besides the evaluation index.
#[derive(Debug, Clone)]
pub struct BoundInput<'a> {
    /// Converged eigenvalues, ascending, with multiplicity.
    pub eigenvalues: &'a [f64],
    pub constants: GeometricConstants,
    /// Intrinsic dimension.
    pub n: usize,
    /// Unweighted |Ω|.
    pub volume: f64,
    pub omega_n: f64,
    pub tol_rel: f64,
    /// T = I everywhere (drifted Laplacian).
    pub identity_tensor: bool,
    /// Flat Euclidean domain.
    pub flat: bool,
    /// inf |x|² over the domain when the coefficients are the Gaussian soliton.
    pub gaussian_inf_norm_sq: Option<f64>,
}

impl<'a> BoundInput<'a> {
    pub fn new(
        eigenvalues: &'a [f64],
        constants: GeometricConstants,
        spec: &DomainSpec,
        imm: &ImmersionData,
        coeffs: &CoefficientField,
        tol_rel: f64,
    ) -> Self {
        BoundInput {
            eigenvalues,
            constants,
            n: imm.intrinsic_dim,
            volume: imm.volume,
            omega_n: imm.unit_ball_volume,
            tol_rel,
            identity_tensor: coeffs.is_identity_tensor(),
            flat: imm.is_flat(),
            gaussian_inf_norm_sq: if coeffs.is_gaussian_soliton() { spec.inf_norm_sq() } else { None },
        }
    }

    /// Laplacian-type input on a flat domain with the analytic tolerance.
    pub fn analytic(
        eigenvalues: &'a [f64],
        constants: GeometricConstants,
        n: usize,
        volume: f64,
        omega_n: f64,
    ) -> Self {
        BoundInput {
            eigenvalues,
            constants,
            n,
            volume,
            omega_n,
            tol_rel: ANALYTIC_TOL,
            identity_tensor: true,
            flat: true,
            gaussian_inf_norm_sq: None,
        }
    }

    fn nf(&self) -> f64 {
        self.n as f64
    }

    fn div_free(&self) -> bool {
        self.constants.t0 <= DIV_FREE_TOL * self.constants.delta
    }

    /// 4δ/(nε).
    fn quad_factor(&self) -> f64 {
        4.0 * self.constants.delta / (self.nf() * self.constants.epsilon)
    }

    fn available(&self, needed: usize) -> bool {
        self.eigenvalues.len() >= needed
    }
}

/// Pairwise (tree) summation in index order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        len => {
            let mid = len / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    pairwise_sum(values) / values.len() as f64
}

/// Additive shift (n²H₀² + 4C₀)/(4δ) taking λ to ς.
pub fn sigma_shift(constants: &GeometricConstants, n: usize) -> f64 {
    let nf = n as f64;
    (nf * nf * constants.h0 * constants.h0 + 4.0 * constants.c0) / (4.0 * constants.delta)
}

/// ςᵢ = λᵢ + (n²H₀² + 4C₀)/(4δ); fails when ς₁ ≤ 0.
pub fn sigma_transform(eigenvalues: &[f64], constants: &GeometricConstants, n: usize) -> Result<Vec<f64>> {
    let shift = sigma_shift(constants, n);
    let sigma: Vec<f64> = eigenvalues.iter().map(|l| l + shift).collect();
    match sigma.first() {
        Some(&s1) if s1 <= 0.0 || s1.is_nan() => Err(Error::NonPositiveSigma { sigma1: s1, c0: constants.c0 }),
        _ => Ok(sigma),
    }
}

fn missing(id: BoundId, k: usize, input: &BoundInput, needed: usize) -> BoundReport {
    BoundReport::error(id, k, input, format!("needs {needed} eigenvalues, {} available", input.eigenvalues.len()))
}

/// LHS Σᵢ(λ_{k+1}−λᵢ)² and RHS factor·Σᵢ(λ_{k+1}−λᵢ)·bracket(i).
fn quadratic_sides(lam: &[f64], k: usize, factor: f64, bracket: impl Fn(usize) -> f64) -> (f64, f64) {
    let top = lam[k];
    let gaps: Vec<f64> = lam[..k].iter().map(|l| top - l).collect();
    let sq: Vec<f64> = gaps.iter().map(|g| g * g).collect();
    let weighted: Vec<f64> = gaps.iter().enumerate().map(|(i, g)| g * bracket(i)).collect();
    (pairwise_sum(&sq), factor * pairwise_sum(&weighted))
}

/// Bracket (√λ + T₀/(2√δ))² + (n²H₀² + 4C₀ + 2δT₀η₀)/(4δ).
fn general_bracket(input: &BoundInput, lambda: f64) -> f64 {
    let c = &input.constants;
    let nf = input.nf();
    // (√λ + a)² expanded so that a = 0 leaves λ untouched
    let sd = c.delta.sqrt();
    let square = lambda + c.t0 / sd * lambda.max(0.0).sqrt() + c.t0 * c.t0 / (4.0 * c.delta);
    square + (nf * nf * c.h0 * c.h0 + 4.0 * c.c0 + 2.0 * c.delta * c.t0 * c.eta0) / (4.0 * c.delta)
}

pub fn quadratic(input: &BoundInput, k: usize) -> BoundReport {
    let id = BoundId::Quadratic;
    if !input.available(k + 1) {
        return missing(id, k, input, k + 1);
    }
    let lam = input.eigenvalues;
    let (lhs, rhs) = quadratic_sides(lam, k, input.quad_factor(), |i| general_bracket(input, lam[i]));
    BoundReport::judged(id, k, input, lhs, rhs)
}

pub fn lower_order_sum(input: &BoundInput) -> BoundReport {
    let id = BoundId::LowerOrderSum;
    let n = input.n;
    if !input.available(n + 1) {
        return missing(id, n, input, n + 1);
    }
    let lam = input.eigenvalues;
    let gaps: Vec<f64> = (1..=n).map(|i| lam[i] - lam[0]).collect();
    let c = &input.constants;
    let rhs = 4.0 * c.delta / c.epsilon * general_bracket(input, lam[0]);
    BoundReport::judged(id, n, input, pairwise_sum(&gaps), rhs)
}

/// Shifted values, or an error report for `id`.
fn shifted(input: &BoundInput, id: BoundId, k: usize) -> std::result::Result<Vec<f64>, Box<BoundReport>> {
    sigma_transform(input.eigenvalues, &input.constants, input.n)
        .map_err(|e| Box::new(BoundReport::error(id, k, input, e.to_string())))
}

fn div_free_gate(input: &BoundInput, id: BoundId, k: usize, needed: usize) -> Option<BoundReport> {
    if !input.div_free() {
        return Some(BoundReport::not_applicable(id, k, input, "requires a divergence-free tensor (T0 = 0)"));
    }
    if !input.available(needed) {
        return Some(missing(id, k, input, needed));
    }
    None
}

pub fn quadratic_div_free(input: &BoundInput, k: usize) -> BoundReport {
    let id = BoundId::QuadraticDivFree;
    if let Some(r) = div_free_gate(input, id, k, k + 1) {
        return r;
    }
    let sigma = match shifted(input, id, k) {
        Ok(s) => s,
        Err(r) => return *r,
    };
    // gaps are shift invariant; taking them from λ keeps the LHS identical
    let (lhs, rhs) = quadratic_sides(input.eigenvalues, k, input.quad_factor(), |i| sigma[i]);
    BoundReport::judged(id, k, input, lhs, rhs)
}

pub fn power_growth(input: &BoundInput, k: usize) -> BoundReport {
    let id = BoundId::PowerGrowth;
    if let Some(r) = div_free_gate(input, id, k, k + 1) {
        return r;
    }
    let sigma = match shifted(input, id, k) {
        Ok(s) => s,
        Err(r) => return *r,
    };
    let q = input.quad_factor();
    let rhs = (1.0 + q) * (k as f64).powf(q / 2.0) * sigma[0];
    BoundReport::judged(id, k, input, sigma[k], rhs)
}

pub fn average_growth(input: &BoundInput, k: usize) -> BoundReport {
    let id = BoundId::AverageGrowth;
    if let Some(r) = div_free_gate(input, id, k, k + 1) {
        return r;
    }
    let sigma = match shifted(input, id, k) {
        Ok(s) => s,
        Err(r) => return *r,
    };
    let avg = mean(&sigma[..k]);
    BoundReport::judged(id, k, input, sigma[k], (1.0 + input.quad_factor()) * avg).with("mean", avg)
}

/// Mean, discriminant and whether it was clamped from a roundoff-negative value.
struct YangTerms {
    avg: f64,
    c: f64,
    disc: f64,
    clamped: bool,
}

fn yang_terms(sigma: &[f64], k: usize, input: &BoundInput) -> std::result::Result<YangTerms, f64> {
    let c = input.quad_factor() / 2.0;
    let head = &sigma[..k];
    let avg = mean(head);
    let dev: Vec<f64> = head.iter().map(|s| (s - avg) * (s - avg)).collect();
    let var = mean(&dev);
    let lead = c * avg;
    let disc = lead * lead - (1.0 + 2.0 * c) * var;
    let tol_disc = 1e-9 * lead * lead;
    if disc >= 0.0 {
        Ok(YangTerms { avg, c, disc, clamped: false })
    } else if disc >= -tol_disc {
        Ok(YangTerms { avg, c, disc: 0.0, clamped: true })
    } else {
        Err(disc)
    }
}

fn yang_check(input: &BoundInput, k: usize, id: BoundId) -> BoundReport {
    if let Some(r) = div_free_gate(input, id, k, k + 1) {
        return r;
    }
    let sigma = match shifted(input, id, k) {
        Ok(s) => s,
        Err(r) => return *r,
    };
    let t = match yang_terms(&sigma, k, input) {
        Ok(t) => t,
        Err(d) => {
            return BoundReport::error(id, k, input, format!("discriminant {d:e} is negative beyond roundoff"))
                .with("discriminant", d)
        }
    };
    let root = t.disc.sqrt();
    let upper = (1.0 + t.c) * t.avg + root;
    let report = match id {
        BoundId::YangUpper => BoundReport::judged(id, k, input, sigma[k], upper),
        BoundId::YangGap => {
            let gap = input.eigenvalues[k] - input.eigenvalues[k - 1];
            BoundReport::judged(id, k, input, gap, 2.0 * root)
        }
        _ => BoundReport::judged(id, k, input, upper, (1.0 + 2.0 * t.c) * t.avg),
    };
    let report = report.with("discriminant", t.disc).with("mean", t.avg);
    if t.clamped {
        report.note("discriminant_clamped")
    } else {
        report
    }
}

pub fn yang_upper(input: &BoundInput, k: usize) -> BoundReport {
    yang_check(input, k, BoundId::YangUpper)
}

pub fn yang_gap(input: &BoundInput, k: usize) -> BoundReport {
    yang_check(input, k, BoundId::YangGap)
}

pub fn yang_vs_average(input: &BoundInput, k: usize) -> BoundReport {
    yang_check(input, k, BoundId::YangVsAverage)
}

/// 4π² / (ω_n |Ω|)^{2/n}.
fn weyl_scale(input: &BoundInput) -> f64 {
    4.0 * PI * PI / (input.omega_n * input.volume).powf(2.0 / input.nf())
}

fn drifted_laplacian_gate(
    input: &BoundInput,
    id: BoundId,
    k: usize,
    needed: usize,
    need_flat: bool,
) -> Option<BoundReport> {
    if !input.identity_tensor {
        return Some(BoundReport::not_applicable(id, k, input, "requires T = I"));
    }
    if need_flat && !input.flat {
        return Some(BoundReport::not_applicable(id, k, input, "requires a flat domain"));
    }
    if !input.available(needed) {
        return Some(missing(id, k, input, needed));
    }
    None
}

pub fn polya_average(input: &BoundInput, k: usize) -> BoundReport {
    let id = BoundId::PolyaAverage;
    if let Some(r) = drifted_laplacian_gate(input, id, k, k, true) {
        return r;
    }
    let sigma = match shifted(input, id, k) {
        Ok(s) => s,
        Err(r) => return *r,
    };
    let nf = input.nf();
    let bound = nf / ((nf + 2.0) * (nf + 4.0)).sqrt() * weyl_scale(input) * (k as f64).powf(2.0 / nf);
    BoundReport::judged(id, k, input, bound, mean(&sigma[..k]))
}

pub fn lower_order_ratio(input: &BoundInput) -> BoundReport {
    let id = BoundId::LowerOrderRatio;
    let n = input.n;
    if let Some(r) = div_free_gate(input, id, n, n + 1) {
        return r;
    }
    let sigma = match shifted(input, id, n) {
        Ok(s) => s,
        Err(r) => return *r,
    };
    let c = &input.constants;
    let ratio = pairwise_sum(&sigma[1..=n]) / sigma[0];
    BoundReport::judged(id, n, input, ratio, 4.0 * c.delta / c.epsilon + input.nf())
}

/// Whether inf|x|² equals 4n to within relative roundoff.
fn c0_free_annulus(inf_norm_sq: f64, n: usize) -> bool {
    let target = 4.0 * n as f64;
    (inf_norm_sq - target).abs() <= 1e-12 * target
}

fn gaussian_gate(
    input: &BoundInput,
    id: BoundId,
    k: usize,
    needed: usize,
    c0_free: bool,
) -> std::result::Result<f64, Box<BoundReport>> {
    let Some(inf) = input.gaussian_inf_norm_sq else {
        return Err(Box::new(BoundReport::not_applicable(
            id,
            k,
            input,
            "requires Gaussian soliton coefficients on a flat domain",
        )));
    };
    if c0_free && !c0_free_annulus(inf, input.n) {
        return Err(Box::new(BoundReport::not_applicable(id, k, input, "requires inf |x|^2 = 4n")));
    }
    if !input.available(needed) {
        return Err(Box::new(missing(id, k, input, needed)));
    }
    Ok(if c0_free { 0.0 } else { input.nf() / 4.0 - inf / 16.0 })
}

fn gaussian_quadratic_check(input: &BoundInput, k: usize, id: BoundId) -> BoundReport {
    let c0_free = id == BoundId::GaussianQuadraticC0Free;
    let shift = match gaussian_gate(input, id, k, k + 1, c0_free) {
        Ok(s) => s,
        Err(r) => return *r,
    };
    let lam = input.eigenvalues;
    let (lhs, rhs) = quadratic_sides(lam, k, 4.0 / input.nf(), |i| lam[i] + shift);
    BoundReport::judged(id, k, input, lhs, rhs).with("additive_constant", shift)
}

fn gaussian_lower_order_check(input: &BoundInput, id: BoundId) -> BoundReport {
    let n = input.n;
    let c0_free = id == BoundId::GaussianLowerOrderSumC0Free;
    let shift = match gaussian_gate(input, id, n, n + 1, c0_free) {
        Ok(s) => s,
        Err(r) => return *r,
    };
    let lam = input.eigenvalues;
    let gaps: Vec<f64> = (1..=n).map(|i| lam[i] - lam[0]).collect();
    BoundReport::judged(id, n, input, pairwise_sum(&gaps), 4.0 * (lam[0] + shift)).with("additive_constant", shift)
}

pub fn gaussian_quadratic(input: &BoundInput, k: usize) -> BoundReport {
    gaussian_quadratic_check(input, k, BoundId::GaussianQuadratic)
}

pub fn gaussian_quadratic_c0_free(input: &BoundInput, k: usize) -> BoundReport {
    gaussian_quadratic_check(input, k, BoundId::GaussianQuadraticC0Free)
}

pub fn gaussian_lower_order_sum(input: &BoundInput) -> BoundReport {
    gaussian_lower_order_check(input, BoundId::GaussianLowerOrderSum)
}

pub fn gaussian_lower_order_sum_c0_free(input: &BoundInput) -> BoundReport {
    gaussian_lower_order_check(input, BoundId::GaussianLowerOrderSumC0Free)
}

/// Bracket λ + (T₀/√δ + η₀√δ)√λ + (n²H₀² + (T₀ + δη₀)²)/(4δ).
fn drift_bracket(input: &BoundInput, lambda: f64, t0: f64) -> f64 {
    let c = &input.constants;
    let nf = input.nf();
    let sd = c.delta.sqrt();
    let lin = t0 / sd + c.eta0 * sd;
    let tail = t0 + c.delta * c.eta0;
    lambda + lin * lambda.max(0.0).sqrt() + (nf * nf * c.h0 * c.h0 + tail * tail) / (4.0 * c.delta)
}

pub fn drift_quadratic(input: &BoundInput, k: usize) -> BoundReport {
    let id = BoundId::DriftQuadratic;
    if !input.available(k + 1) {
        return missing(id, k, input, k + 1);
    }
    let lam = input.eigenvalues;
    let t0 = input.constants.t0;
    let (lhs, rhs) = quadratic_sides(lam, k, input.quad_factor(), |i| drift_bracket(input, lam[i], t0));
    BoundReport::judged(id, k, input, lhs, rhs)
}

pub fn drift_quadratic_div_free(input: &BoundInput, k: usize) -> BoundReport {
    let id = BoundId::DriftQuadraticDivFree;
    if let Some(r) = div_free_gate(input, id, k, k + 1) {
        return r;
    }
    let lam = input.eigenvalues;
    let (lhs, rhs) = quadratic_sides(lam, k, input.quad_factor(), |i| drift_bracket(input, lam[i], 0.0));
    BoundReport::judged(id, k, input, lhs, rhs)
}

/// F_k = (1 + 2/n)·mean(ς₁..ς_k)² − mean(ς₁²..ς_k²) for k = 1..len.
pub fn recursion_values(sigma: &[f64], n: usize) -> Vec<f64> {
    let nf = n as f64;
    (1..=sigma.len())
        .map(|k| {
            let head = &sigma[..k];
            let avg = mean(head);
            let sq: Vec<f64> = head.iter().map(|s| s * s).collect();
            (1.0 + 2.0 / nf) * avg * avg - mean(&sq)
        })
        .collect()
}

/// Compares G_k = F_k/k^{4/n} with the smallest G_j over earlier j with
/// F_j > 0. Indices with F_k ≤ 0 are skipped and listed.
pub fn recursion_monotonicity(input: &BoundInput, k: usize) -> BoundReport {
    let id = BoundId::RecursionMonotonicity;
    if let Some(r) = drifted_laplacian_gate(input, id, k, k, false) {
        return r;
    }
    if k < 2 {
        return BoundReport::error(id, k, input, "needs k >= 2".into());
    }
    let sigma = match shifted(input, id, k) {
        Ok(s) => s,
        Err(r) => return *r,
    };
    let f = recursion_values(&sigma[..k], input.n);
    let g: Vec<f64> = f.iter().enumerate().map(|(j, fj)| fj / ((j + 1) as f64).powf(4.0 / input.nf())).collect();
    let skipped: Vec<usize> = (1..=k).filter(|&j| f[j - 1] <= 0.0 || f[j - 1].is_nan()).collect();
    let earlier = (0..k - 1).filter(|&j| f[j] > 0.0).map(|j| g[j]).fold(f64::INFINITY, f64::min);
    let mut report = if f[k - 1] <= 0.0 || f[k - 1].is_nan() {
        BoundReport::not_applicable(id, k, input, "F_k <= 0 at this k; skipped")
    } else if earlier.is_infinite() {
        BoundReport::not_applicable(id, k, input, "no earlier index with F_j > 0")
    } else {
        BoundReport::judged(id, k, input, g[k - 1], earlier)
    };
    report = report.with("F_k", f[k - 1]).with("G_k", g[k - 1]);
    if !skipped.is_empty() {
        let list: Vec<String> = skipped.iter().map(|j| j.to_string()).collect();
        report.notes.push(format!("skipped k with F_k <= 0: {}", list.join(" ")));
    }
    report
}

/// mean(ς₁..ς_k)/k^{2/n} against n/(n+2)·4π²/(ω_n|Ω|)^{2/n} at the largest
/// available k. Diagnostic only.
pub fn weyl_ratio(input: &BoundInput) -> BoundReport {
    let id = BoundId::WeylRatio;
    let k = input.eigenvalues.len();
    if let Some(r) = drifted_laplacian_gate(input, id, k, 1, false) {
        return r;
    }
    let sigma = match shifted(input, id, k) {
        Ok(s) => s,
        Err(r) => return *r,
    };
    let nf = input.nf();
    let ratio = mean(&sigma) / (k as f64).powf(2.0 / nf);
    let limit = nf / (nf + 2.0) * weyl_scale(input);
    let mut r = BoundReport::blank(id, k, input, Status::Diagnostic);
    r.lhs = Some(ratio);
    r.rhs = Some(limit);
    r.slack = Some(limit - ratio);
    r.tightness = Some(ratio / limit);
    r = r.with("relative_deviation", (ratio - limit) / limit);
    if k < WEYL_MIN_K {
        r = r.note("low_confidence");
    }
    r
}

/// Evaluates one check at index k. One-shot checks ignore `k`.
pub fn evaluate(id: BoundId, input: &BoundInput, k: usize) -> BoundReport {
    match id {
        BoundId::Quadratic => quadratic(input, k),
        BoundId::LowerOrderSum => lower_order_sum(input),
        BoundId::QuadraticDivFree => quadratic_div_free(input, k),
        BoundId::PowerGrowth => power_growth(input, k),
        BoundId::AverageGrowth => average_growth(input, k),
        BoundId::YangUpper => yang_upper(input, k),
        BoundId::YangGap => yang_gap(input, k),
        BoundId::YangVsAverage => yang_vs_average(input, k),
        BoundId::PolyaAverage => polya_average(input, k),
        BoundId::LowerOrderRatio => lower_order_ratio(input),
        BoundId::GaussianQuadratic => gaussian_quadratic(input, k),
        BoundId::GaussianLowerOrderSum => gaussian_lower_order_sum(input),
        BoundId::GaussianQuadraticC0Free => gaussian_quadratic_c0_free(input, k),
        BoundId::GaussianLowerOrderSumC0Free => gaussian_lower_order_sum_c0_free(input),
        BoundId::DriftQuadratic => drift_quadratic(input, k),
        BoundId::DriftQuadraticDivFree => drift_quadratic_div_free(input, k),
        BoundId::RecursionMonotonicity => recursion_monotonicity(input, k),
        BoundId::WeylRatio => weyl_ratio(input),
    }
}

/// Runs `ids` (all checks when `None`) for k = 1..=k_max; one-shot checks run
/// once. Reports are ordered by (id, k).
pub fn run_selected(input: &BoundInput, k_max: usize, ids: Option<&[BoundId]>) -> Result<Vec<BoundReport>> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    if input.eigenvalues.len() < k_max + 1 {
        return Err(Error::InsufficientEigenvalues(format!(
            "checks up to k = {k_max} need {} converged eigenvalues, {} available",
            k_max + 1,
            input.eigenvalues.len()
        )));
    }
    let mut chosen: Vec<BoundId> = ids.map_or_else(|| BoundId::ALL.to_vec(), |s| s.to_vec());
    chosen.sort();
    chosen.dedup();
    let mut out = Vec::new();
    for id in chosen {
        if !id.per_k() {
            out.push(evaluate(id, input, k_max));
            continue;
        }
        let first = if id == BoundId::RecursionMonotonicity { 2 } else { 1 };
        for k in first..=k_max {
            out.push(evaluate(id, input, k));
        }
    }
    Ok(out)
}

pub fn run_all(input: &BoundInput, k_max: usize) -> Result<Vec<BoundReport>> {
    run_selected(input, k_max, None)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.16e}"))
}

/// CSV with columns `id,k,lhs,rhs,slack,tightness,pass,status`.
pub fn write_reports_csv<W: Write>(reports: &[BoundReport], mut out: W) -> std::io::Result<()> {
    writeln!(out, "id,k,lhs,rhs,slack,tightness,pass,status")?;
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.id,
            r.k,
            opt(r.lhs),
            opt(r.rhs),
            opt(r.slack),
            opt(r.tightness),
            r.pass.map_or_else(String::new, |p| p.to_string()),
            r.status.as_str()
        )?;
    }
    Ok(())
}
