use std::f64::consts::PI;

use proptest::prelude::*;
use spectra_core::bounds::*;
use spectra_core::GeometricConstants;

fn sorted_spectrum() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..50.0, 3..14).prop_map(|steps| {
        let mut acc = 0.5;
        steps
            .into_iter()
            .map(|s| {
                acc += s;
                acc
            })
            .collect()
    })
}

fn constants() -> impl Strategy<Value = GeometricConstants> {
    (0.5f64..2.0, 1.0f64..3.0, 0.0f64..2.0, 0.0f64..2.0, 0.0f64..1.5, -0.3f64..1.0).prop_map(
        |(eps, ratio, t0, eta0, h0, c0)| GeometricConstants {
            epsilon: eps,
            delta: eps * ratio,
            t0,
            eta0,
            h0,
            c0,
            ..GeometricConstants::laplacian()
        },
    )
}

fn input<'a>(lam: &'a [f64], c: GeometricConstants, n: usize) -> BoundInput<'a> {
    let mut i = BoundInput::analytic(lam, c, n, 1.0, PI);
    i.identity_tensor = false;
    i
}

proptest! {
    #[test]
    fn quadratic_rhs_nondecreasing_in_constants(lam in sorted_spectrum(), c in constants(), n in 1usize..3) {
        let k = lam.len() - 1;
        let base_q = quadratic(&input(&lam, c, n), k).rhs.unwrap();
        let base_d = drift_quadratic(&input(&lam, c, n), k).rhs.unwrap();
        let bumps: [fn(&mut GeometricConstants); 4] = [
            |c| c.c0 += 0.1,
            |c| c.t0 += 0.1,
            |c| c.eta0 += 0.1,
            |c| c.h0 += 0.1,
        ];
        for bump in bumps {
            let mut p = c;
            bump(&mut p);
            prop_assert!(quadratic(&input(&lam, p, n), k).rhs.unwrap() >= base_q);
            prop_assert!(drift_quadratic(&input(&lam, p, n), k).rhs.unwrap() >= base_d);
        }
    }

    #[test]
    fn quadratic_sides_scale_quadratically(lam in sorted_spectrum(), c in constants(), n in 1usize..3) {
        let k = lam.len() - 1;
        for s in [0.5f64, 2.0] {
            let scaled_lam: Vec<f64> = lam.iter().map(|l| s * l).collect();
            let r = s.sqrt();
            let sc = GeometricConstants { c0: s * c.c0, h0: r * c.h0, t0: r * c.t0, eta0: r * c.eta0, ..c };
            for check in [quadratic as fn(&BoundInput, usize) -> BoundReport, drift_quadratic] {
                let a = check(&input(&lam, c, n), k);
                let b = check(&input(&scaled_lam, sc, n), k);
                let (la, ra) = (a.lhs.unwrap(), a.rhs.unwrap());
                let (lb, rb) = (b.lhs.unwrap(), b.rhs.unwrap());
                prop_assert!((lb - s * s * la).abs() <= 1e-12 * lb.abs());
                prop_assert!((rb - s * s * ra).abs() <= 1e-12 * rb.abs());
                if a.slack.unwrap().abs() > 1e-8 * ra.abs() {
                    prop_assert_eq!(a.pass, b.pass);
                }
            }
        }
    }

    #[test]
    fn yang_upper_never_exceeds_average_growth(lam in sorted_spectrum(), eps in 0.5f64..2.0, ratio in 1.0f64..3.0, n in 1usize..3) {
        let c = GeometricConstants { epsilon: eps, delta: eps * ratio, ..GeometricConstants::laplacian() };
        let inp = input(&lam, c, n);
        for k in 1..lam.len() {
            let r = yang_vs_average(&inp, k);
            if r.status != Status::Error {
                prop_assert!(r.pass.unwrap(), "k = {}: {:?}", k, r);
                let upper = yang_upper(&inp, k);
                let avg = average_growth(&inp, k);
                prop_assert!(upper.rhs.unwrap() <= avg.rhs.unwrap() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn shifted_quadratic_lhs_equals_unshifted(lam in sorted_spectrum(), c0 in -0.2f64..2.0, h0 in 0.0f64..1.0) {
        let c = GeometricConstants { c0, h0, ..GeometricConstants::laplacian() };
        let k = lam.len() - 1;
        let inp = input(&lam, c, 1);
        prop_assert_eq!(quadratic_div_free(&inp, k).lhs, quadratic(&inp, k).lhs);
    }

    #[test]
    fn checks_are_pure(lam in sorted_spectrum(), c in constants()) {
        let inp = input(&lam, c, 2);
        let k = lam.len() - 1;
        prop_assert_eq!(run_all(&inp, k).unwrap(), run_all(&inp, k).unwrap());
    }
}

#[test]
fn shifted_values_satisfy_divergence_free_checks() {
    // exact spectra of the Laplacian on (0, π) satisfy every applicable check
    let lam: Vec<f64> = (1..=12).map(|i| (i * i) as f64).collect();
    let inp = BoundInput::analytic(&lam, GeometricConstants::laplacian(), 1, PI, 2.0);
    let reports = run_all(&inp, 11).unwrap();
    for r in &reports {
        assert!(!r.failed(), "{r:?}");
        assert_ne!(r.status, Status::Error, "{r:?}");
    }
}

#[test]
fn square_spectrum_recursion_is_nonincreasing() {
    let lam = [2.0, 5.0, 5.0, 8.0, 10.0, 10.0, 13.0, 13.0, 17.0];
    let inp = BoundInput::analytic(&lam, GeometricConstants::laplacian(), 2, PI * PI, PI);
    for k in 2..=8 {
        let r = recursion_monotonicity(&inp, k);
        assert_eq!(r.status, Status::Pass, "{r:?}");
    }
}
