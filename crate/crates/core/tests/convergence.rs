use std::f64::consts::PI;

use spectra_core::convergence::study;
use spectra_core::*;

fn run(spec: DomainSpec, preset: Preset, res: &[usize], k: usize) -> ConvergenceStudy {
    let c = CoefficientField::preset(&preset, &spec).unwrap();
    study(&spec, &c, res, k, &SolverOptions::with_tol(1e-11)).unwrap().0
}

#[test]
fn interval_first_eigenvalue_is_second_order() {
    let s = run(DomainSpec::Interval { a: 0.0, b: PI }, Preset::Laplacian, &[64, 128, 256], 3);
    let p = s.observed_order[0].unwrap();
    assert!((1.8..=2.2).contains(&p), "order {p}");
    assert!(s.reliable.iter().all(|r| *r));
    assert!((s.extrapolated[0] - 1.0).abs() < 1e-8);
}

#[test]
fn drifted_interval_extrapolates_to_closed_form() {
    let s = run(DomainSpec::Interval { a: 0.0, b: PI }, Preset::DriftedLinear { c: 1.0 }, &[64, 128, 256], 2);
    let p = s.observed_order[0].unwrap();
    assert!((1.8..=2.2).contains(&p), "order {p}");
    assert!((s.extrapolated[0] - 1.25).abs() < 1e-6, "{}", s.extrapolated[0]);
}

#[test]
fn square_first_eigenvalue_is_second_order() {
    let s = run(DomainSpec::Rectangle { ax: 0.0, bx: PI, ay: 0.0, by: PI }, Preset::Laplacian, &[16, 32, 64], 1);
    let p = s.observed_order[0].unwrap();
    assert!((1.8..=2.2).contains(&p), "order {p}");
    assert!(s.bounds_tolerance() < 1e-2, "{}", s.bounds_tolerance());
}

#[test]
fn csv_has_one_row_per_level_and_index() {
    let s = run(DomainSpec::Interval { a: 0.0, b: PI }, Preset::Laplacian, &[8, 16, 32], 2);
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,resolution,h,lambda,extrapolated,observed_order,reliable");
    assert_eq!(lines.len(), 1 + 2 * 3);
    assert!(lines[1].starts_with("1,8,"));
    assert!(lines[6].starts_with("2,32,"));
}
