use std::f64::consts::PI;

use fracorder::oracle::{fd_derivative, gamma_reference, log_slope, ml_reference, OracleConfig};
use fracorder::specfun::calibration::{geomspace, linspace};
use fracorder::specfun::{
    calibrated, dp_drho, gamma_fn, ln_gamma, ml_eval, ml_neg, ml_p, ml_partials, ml_q_contour, ml_series, q_partials,
    HankelContour, MLArgument,
};
use proptest::prelude::*;

const PI2: f64 = PI * PI;

fn arg(rho: f64, sigma: f64, lambda: f64, t: f64) -> MLArgument {
    MLArgument::new(rho, sigma, lambda, t).unwrap()
}

#[test]
fn e1_limit() {
    for i in 0..=20 {
        let z = -0.5 * i as f64;
        let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|eps| (ml_neg(1.0 - eps, -z).unwrap().value - z.exp()).abs())
            .collect();
        assert!(errs[2] <= errs[1] && errs[1] <= errs[0], "z = {z}: {errs:?}");
        assert!(errs[2] < 1e-3);
    }
}

#[test]
fn decay_bound_on_grid() {
    let c = calibrated().decay;
    for rho in linspace(0.1, 0.99, 10) {
        for mu in geomspace(1e-2, 1e3, 10) {
            for t in geomspace(1e-3, 1e4, 10) {
                let x = mu * t.powf(rho);
                let v = ml_neg(rho, x).unwrap().value;
                assert!(v * (1.0 + x) <= c * (1.0 + 1e-12), "rho {rho} x {x}");
            }
        }
    }
}

#[test]
fn monotone_in_rho() {
    for t in [10.0, 1e2, 1e3, 1e4] {
        let rhos = linspace(0.1, 0.95, 50);
        let vals: Vec<f64> = rhos
            .iter()
            .map(|&r| ml_eval(&arg(r, 1.0, PI2, t)).unwrap().value)
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]), "t = {t}");
        for &r in &rhos {
            assert!(ml_partials(&arg(r, 1.0, PI2, t)).unwrap().drho < 0.0, "rho {r} t {t}");
        }
    }
}

fn slopes(rho: f64) -> (f64, f64, f64) {
    let ts = [1e2, 1e3, 1e4];
    let parts: Vec<_> = ts
        .iter()
        .map(|&t| q_partials(&arg(rho, 1.0, PI2, t)).unwrap())
        .collect();
    let q: Vec<f64> = parts.iter().map(|p| p.q).collect();
    let dr: Vec<f64> = parts.iter().map(|p| p.dq_drho).collect();
    let ds: Vec<f64> = parts.iter().map(|p| p.dq_dsigma).collect();
    (log_slope(&ts, &q), log_slope(&ts, &dr), log_slope(&ts, &ds))
}

#[test]
fn q_and_dsigma_q_decay_like_x_squared() {
    for rho in [0.3, 0.7, 0.9] {
        let (sq, _, ss) = slopes(rho);
        assert!((sq + 2.0 * rho).abs() < 0.1, "rho {rho}: q slope {sq}");
        assert!((ss + 2.0 * rho).abs() < 0.1, "rho {rho}: dq/dsigma slope {ss}");
    }
}

#[test]
fn half_order_q_decays_like_x_cubed() {
    let (sq, _, ss) = slopes(0.5);
    assert!((sq + 1.5).abs() < 0.1, "{sq}");
    assert!((ss + 1.5).abs() < 0.1, "{ss}");
}

#[test]
fn drho_q_decays_near_x_squared() {
    // the extra ln t factor flattens the fit slightly
    for rho in [0.3, 0.7, 0.9] {
        let (_, sr, _) = slopes(rho);
        assert!(sr < -2.0 * rho + 0.3 && sr > -2.0 * rho - 0.1, "rho {rho}: {sr}");
    }
}

#[test]
fn q_bounded_by_calibrated_constant() {
    let c = calibrated();
    for rho in linspace(0.1, 0.95, 9) {
        for x in geomspace(2.0, 1e4, 15) {
            let q = q_partials(&MLArgument::new(rho, 0.0, 1.0, x.powf(1.0 / rho)).unwrap()).unwrap();
            assert!(q.q.abs() * x * x <= c.q_decay, "rho {rho} x {x}");
        }
    }
}

#[test]
fn dsigma_vanishes_at_unit_lambda() {
    for (rho, t) in [(0.3, 0.5), (0.7, 20.0), (0.5, 1e3)] {
        assert_eq!(ml_partials(&arg(rho, 1.4, 1.0, t)).unwrap().dsigma, 0.0);
    }
}

fn peak_term(rho: f64, x: f64) -> f64 {
    (0..400)
        .map(|k| (k as f64 * x.ln() - ln_gamma(rho * k as f64 + 1.0).unwrap()).exp())
        .fold(0.0, f64::max)
}

#[test]
fn series_and_decomposition_agree_in_overlap() {
    let mut checked = 0;
    for rho in linspace(0.3, 0.99, 12) {
        for x in linspace(2.0, 8.0, 13) {
            if peak_term(rho, x) > 1e6 {
                continue;
            }
            checked += 1;
            let a = MLArgument::new(rho, 0.0, 1.0, x.powf(1.0 / rho)).unwrap();
            let pq = ml_p(&a) + ml_q_contour(&a, &HankelContour::for_rho(rho)).unwrap().q;
            let s = ml_series(rho, -x, 400).unwrap();
            assert!((s - pq).abs() <= 1e-8, "rho {rho} x {x}: {s} vs {pq}");
        }
    }
    assert!(checked > 40, "{checked}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn decomposition_matches_reference(rho in 0.1f64..0.95, x in 2.0f64..50.0) {
        let a = MLArgument::new(rho, 0.0, 1.0, x.powf(1.0 / rho)).unwrap();
        let pq = ml_p(&a) + ml_q_contour(&a, &HankelContour::for_rho(rho)).unwrap().q;
        let r = ml_reference(rho, -x, &OracleConfig::default()).unwrap();
        prop_assert!((r - pq).abs() <= 1e-8, "{} vs {}", r, pq);
    }

    #[test]
    fn production_matches_reference(rho in 0.1f64..0.95, x in 0.0f64..50.0) {
        let v = ml_neg(rho, x).unwrap().value;
        let r = ml_reference(rho, -x, &OracleConfig::default()).unwrap();
        prop_assert!((v - r).abs() <= 1e-10, "{} vs {}", v, r);
    }

    #[test]
    fn dp_drho_bound(rho in 0.1f64..0.99, sigma in 0.2f64..2.5, lambda in 0.5f64..1e3, t in 2.0f64..1e4) {
        let a = arg(rho, sigma, lambda, t);
        prop_assert!(-dp_drho(&a).unwrap() >= 1.0 / a.x());
    }

    #[test]
    fn derivatives_match_central_differences(
        rho in 0.15f64..0.9,
        sigma in 0.3f64..2.0,
        lambda in 0.5f64..20.0,
        t in 0.05f64..50.0,
    ) {
        let e = |r: f64, s: f64| ml_eval(&arg(r, s, lambda, t)).unwrap().value;
        let p = ml_partials(&arg(rho, sigma, lambda, t)).unwrap();
        let h = OracleConfig::default().fd_step;
        let fr = fd_derivative(|r| e(r, sigma), rho, h);
        let fs = fd_derivative(|s| e(rho, s), sigma, h);
        prop_assert!((p.drho - fr).abs() <= 1e-5 * fr.abs().max(1e-8), "drho {} vs {}", p.drho, fr);
        prop_assert!((p.dsigma - fs).abs() <= 1e-5 * fs.abs().max(1e-8), "dsigma {} vs {}", p.dsigma, fs);
    }

    #[test]
    fn gamma_matches_reference(x in -20.0f64..40.0) {
        prop_assume!((x - x.round()).abs() > 1e-3 || x > 0.5);
        let g = gamma_fn(x).unwrap();
        let r = gamma_reference(x, 40);
        prop_assert!((g - r).abs() <= 1e-13 * r.abs(), "{} vs {}", g, r);
    }
}
