//! Oracle-versus-production checks behind `fracorder selftest`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use fracorder::oracle::{
    digamma_reference, erfcx, fd_derivative, gamma_reference, log_slope, ml_reference, OracleConfig,
};
use fracorder::specfun::gamma::{LanczosTable, LANCZOS};
use fracorder::specfun::{calibrated, digamma_fn, dp_drho, ml_neg, ml_partials, ml_series, q_partials, MLArgument};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    None,
    GammaTable,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, limit: f64) -> Check {
    Check {
        name,
        pass: worst <= limit,
        detail: format!("worst {worst:.3e} (limit {limit:.0e})"),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn gamma_check(table: &LanczosTable) -> Check {
    let xs = [0.1, 0.5, 0.75, 1.3, 2.5, 5.5, 10.7, 20.2, 33.3, -0.5, -1.5, -2.25];
    let worst = xs
        .iter()
        .map(|&x| match table.gamma(x) {
            Ok(g) => rel(g, gamma_reference(x, 40)),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    check("gamma", worst, 1e-13)
}

fn digamma_check() -> Check {
    let xs = [0.05, 0.3, 0.5, 1.0, 1.7, 4.2, 9.9, 15.0, 120.0];
    let worst = xs
        .iter()
        .map(|&x| match digamma_fn(x) {
            Ok(d) => (d - digamma_reference(x, 40)).abs() / digamma_reference(x, 40).abs().max(1.0),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max);
    check("digamma", worst, 1e-12)
}

fn ml_oracle_check(n: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let args: Vec<(f64, f64)> = (0..n)
        .map(|_| (rng.gen_range(0.1..0.95), rng.gen_range(0.0..50.0)))
        .collect();
    let cfg = OracleConfig::default();
    let worst = args
        .par_iter()
        .map(|&(rho, x)| match (ml_neg(rho, x), ml_reference(rho, -x, &cfg)) {
            (Ok(v), Ok(r)) => (v.value - r).abs(),
            _ => f64::INFINITY,
        })
        .reduce(|| 0.0, f64::max);
    check("mittag_leffler_vs_oracle", worst, 1e-10)
}

fn identity_checks() -> Vec<Check> {
    let e1 = (0..=100)
        .map(|i| {
            let z = -0.1 * i as f64;
            let direct = ml_neg(1.0, -z).map(|v| (v.value - z.exp()).abs());
            let series = if z >= -8.0 {
                ml_series(1.0, z, 200).map(|v| (v - z.exp()).abs())
            } else {
                Ok(0.0)
            };
            match (direct, series) {
                (Ok(a), Ok(b)) => a.max(b),
                _ => f64::INFINITY,
            }
        })
        .fold(0.0, f64::max);
    let half = (0..=50)
        .map(|i| {
            let x = 0.1 * i as f64;
            ml_neg(0.5, x)
                .map(|v| (v.value - erfcx(x)).abs())
                .unwrap_or(f64::INFINITY)
        })
        .fold(0.0, f64::max);
    vec![check("e1_is_exp", e1, 1e-12), check("e_half_is_erfcx", half, 1e-10)]
}

fn derivative_check(n: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64, f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.gen_range(0.15..0.9),
                rng.gen_range(0.3..2.0),
                rng.gen_range(0.5..20.0),
                rng.gen_range(0.05..50.0),
            )
        })
        .collect();
    let h = OracleConfig::default().fd_step;
    let worst = pts
        .par_iter()
        .map(|&(rho, sigma, lambda, t)| {
            let e = |r: f64, s: f64| {
                ml_neg(r, lambda.powf(s) * t.powf(r))
                    .map(|v| v.value)
                    .unwrap_or(f64::NAN)
            };
            let Ok(p) = MLArgument::new(rho, sigma, lambda, t).and_then(|a| ml_partials(&a)) else {
                return f64::INFINITY;
            };
            let fr = fd_derivative(|r| e(r, sigma), rho, h);
            let fs = fd_derivative(|s| e(rho, s), sigma, h);
            let scale = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-8);
            scale(p.drho, fr).max(scale(p.dsigma, fs))
        })
        .reduce(|| 0.0, f64::max);
    check("derivatives_vs_central_differences", worst, 1e-5)
}

/// Log-slopes in t of q, dq/drho and dq/dsigma at lambda = pi^2, sigma = 1,
/// and the bound -dp/drho X >= 1.
pub fn slope_table(out: &mut String) -> Vec<Check> {
    let ts = [1e2, 1e3, 1e4];
    let lambda = PI * PI;
    let _ = writeln!(
        out,
        "{:>5} {:>9} {:>9} {:>11} {:>11} {:>13}",
        "rho", "slope_q", "expect", "slope_drho", "slope_dsig", "min -dp*X"
    );
    let mut worst_q: f64 = 0.0;
    let mut worst_s: f64 = 0.0;
    let mut p_bound = f64::INFINITY;
    for rho in [0.3, 0.5, 0.7, 0.9] {
        let parts: Vec<_> = ts
            .iter()
            .map(|&t| q_partials(&MLArgument::new(rho, 1.0, lambda, t).expect("valid argument")).expect("contour"))
            .collect();
        let q: Vec<f64> = parts.iter().map(|p| p.q).collect();
        let dr: Vec<f64> = parts.iter().map(|p| p.dq_drho).collect();
        let ds: Vec<f64> = parts.iter().map(|p| p.dq_dsigma).collect();
        let (sq, sr, ss) = (log_slope(&ts, &q), log_slope(&ts, &dr), log_slope(&ts, &ds));
        let expect_q = if rho == 0.5 { -3.0 * rho } else { -2.0 * rho };
        worst_q = worst_q.max((sq - expect_q).abs());
        worst_s = worst_s.max((ss - expect_q).abs());
        let mut m = f64::INFINITY;
        for t in [2.0, 10.0, 1e2, 1e3, 1e4] {
            let arg = MLArgument::new(rho, 1.0, lambda, t).expect("valid argument");
            m = m.min(-dp_drho(&arg).unwrap_or(f64::NAN) * arg.x());
        }
        p_bound = p_bound.min(m);
        let _ = writeln!(
            out,
            "{rho:>5.2} {sq:>9.4} {expect_q:>9.4} {sr:>11.4} {ss:>11.4} {m:>13.4}"
        );
    }
    let c = calibrated();
    let _ = writeln!(
        out,
        "calibrated: decay {:.4} q_decay {:.4} drho_q {:.4} dsigma_q {:.4} spacing {:.4}",
        c.decay, c.q_decay, c.drho_q, c.dsigma_q, c.spacing
    );
    vec![
        check("q_slope", worst_q, 0.1),
        check("dsigma_q_slope", worst_s, 0.1),
        Check {
            name: "dp_drho_bound",
            pass: p_bound >= 1.0,
            detail: format!("min -dp/drho X = {p_bound:.4}"),
        },
    ]
}

pub fn run(level: Level, fault: Fault, seed: u64) -> (Vec<Check>, String) {
    let mut table = LANCZOS.clone();
    if fault == Fault::GammaTable {
        table.coefficients[1] *= 1.0 + 1e-6;
    }
    let (n_ml, n_d) = match level {
        Level::Quick => (40, 10),
        Level::Full => (500, 100),
    };
    let mut checks = vec![gamma_check(&table), digamma_check(), ml_oracle_check(n_ml, seed)];
    checks.extend(identity_checks());
    checks.push(derivative_check(n_d, seed ^ 0x5eed));
    let mut extra = String::new();
    if level == Level::Full {
        checks.extend(slope_table(&mut extra));
    }
    (checks, extra)
}

pub fn render(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        let _ = writeln!(
            s,
            "{:<36} {:<4} {}",
            c.name,
            if c.pass { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    s
}
