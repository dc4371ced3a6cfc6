//! The Mittag-Leffler function E_rho(-X), X = lambda^sigma t^rho >= 0,
//! and its partial derivatives in rho and sigma.
//!
//! Two production routes:
//!
//! * Taylor series sum_k (-X)^k / Gamma(rho k + 1), compensated, used while
//!   the largest term stays below [`SERIES_MAX_TERM`] (cancellation budget)
//!   and X <= [`SERIES_RADIUS`];
//! * the split E = p + q with p = 1 / (Gamma(1 - rho) X) and q a Hankel-path
//!   integral (see [`super::contour`]), used for X > 1 otherwise.
//!
//! rho = 1 is served by exp(-X). Otherwise rho is clamped to at most
//! [`RHO_CLAMP`].

use serde::Serialize;

use super::contour::{path_integrals, ContourQ, HankelContour};
use super::gamma::{digamma_fn, gamma_fn, ln_gamma, rgamma};
use super::quadrature::KahanSum;
use crate::error::{Error, Result};

/// |z| beyond which the series route is never used.
pub const SERIES_RADIUS: f64 = 8.0;

/// Largest series term magnitude accepted before switching to the contour.
pub const SERIES_MAX_TERM: f64 = 1e3;

/// Maximum number of series terms.
pub const SERIES_MAX_TERMS: usize = 400;

/// Upper clamp for rho < 1.
pub const RHO_CLAMP: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Series,
    Contour,
    Asymptotic,
    Exponential,
}

/// Arguments of E_rho(-lambda^sigma t^rho).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLArgument {
    rho: f64,
    sigma: f64,
    lambda: f64,
    t: f64,
}

impl MLArgument {
    /// rho in (0, 1] (rho = 1 is the exponential case), sigma >= 0,
    /// lambda > 0, t > 0.
    pub fn new(rho: f64, sigma: f64, lambda: f64, t: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "rho",
                value: rho,
                reason: "must be in (0, 1]",
            });
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: sigma,
                reason: "must be finite and non-negative",
            });
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
                reason: "must be positive",
            });
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "t",
                value: t,
                reason: "must be positive",
            });
        }
        let arg = Self { rho, sigma, lambda, t };
        if !arg.x().is_finite() {
            return Err(Error::InvalidParameter {
                name: "lambda^sigma t^rho",
                value: arg.x(),
                reason: "must be finite",
            });
        }
        Ok(arg)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn t(&self) -> f64 {
        self.t
    }

    /// X = lambda^sigma t^rho, so that z = -X.
    pub fn x(&self) -> f64 {
        self.lambda.powf(self.sigma) * self.t.powf(self.rho)
    }

    /// rho after the upper clamp.
    pub fn effective_rho(&self) -> f64 {
        self.rho.min(RHO_CLAMP)
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        Self::new(rho, self.sigma, self.lambda, self.t)
    }
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.rho, sigma, self.lambda, self.t)
    }
    pub fn with_t(&self, t: f64) -> Result<Self> {
        Self::new(self.rho, self.sigma, self.lambda, t)
    }
}

/// A Mittag-Leffler evaluation with its decomposition and trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MLValue {
    pub value: f64,
    pub p_term: f64,
    pub q_term: f64,
    pub abs_err_est: f64,
    pub route: Route,
    /// Series terms summed, or total contour nodes.
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy)]
struct SeriesSum {
    value: f64,
    max_term: f64,
    terms: usize,
    last_term: f64,
}

fn series_term(rho: f64, x: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let kf = k as f64;
    let arg = rho * kf + 1.0;
    let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let direct = x.powi(k as i32) / gamma_fn(arg).unwrap_or(f64::INFINITY);
    if direct.is_finite() && direct != 0.0 && arg < 170.0 {
        sign * direct
    } else {
        // arg > 0 so ln_gamma cannot fail
        sign * (kf * x.ln() - ln_gamma(arg).unwrap_or(f64::INFINITY)).exp()
    }
}

/// Sum sum_k (-x)^k / Gamma(rho k + 1), stopping once terms are past their
/// peak and below 1e-17 of the partial sum, or once `max_terms` is reached.
fn series_sum(rho: f64, x: f64, max_terms: usize, abort_above: f64) -> SeriesSum {
    let mut acc = KahanSum::default();
    let mut max_term: f64 = 0.0;
    let mut last = 0.0;
    let mut terms = 0;
    for k in 0..max_terms {
        let term = series_term(rho, x, k);
        acc.add(term);
        terms = k + 1;
        let a = term.abs();
        max_term = max_term.max(a);
        last = term;
        if max_term > abort_above {
            break;
        }
        if k > 2 && a < max_term && a <= 1e-17 * acc.value().abs().max(1e-300) {
            break;
        }
        if x == 0.0 {
            break;
        }
    }
    SeriesSum {
        value: acc.value(),
        max_term,
        terms,
        last_term: last,
    }
}

/// Taylor series of E_rho at z <= 0.
pub fn ml_series(rho: f64, z: f64, n_terms: usize) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "rho",
            value: rho,
            reason: "must be in (0, 1]",
        });
    }
    if z > 0.0 || !z.is_finite() {
        return Err(Error::Domain {
            function: "ml_series",
            value: z,
            reason: "requires finite z <= 0",
        });
    }
    if -z > SERIES_RADIUS {
        return Err(Error::SeriesRadius {
            z_abs: -z,
            radius: SERIES_RADIUS,
        });
    }
    Ok(series_sum(rho, -z, n_terms.clamp(1, SERIES_MAX_TERMS), f64::INFINITY).value)
}

/// p = 1 / (Gamma(1 - rho) lambda^sigma t^rho).
pub fn ml_p(arg: &MLArgument) -> f64 {
    p_term(arg.effective_rho(), arg.x())
}

fn p_term(rho: f64, x: f64) -> f64 {
    rgamma(1.0 - rho) / x
}

/// q via the Hankel path. Requires lambda^sigma t^rho > 1.
pub fn ml_q_contour(arg: &MLArgument, contour: &HankelContour) -> Result<ContourQ> {
    let rho = arg.effective_rho();
    let x = arg.x();
    Ok(path_integrals(rho, x, contour)?.q(rho, x))
}

/// Three-term asymptotic expansion sum_{n=1..3} (-1)^(n+1) X^-n / Gamma(1 - rho n).
pub fn ml_asymptotic(rho: f64, x: f64) -> MLValue {
    let mut value = 0.0;
    let mut last = 0.0;
    for n in 1..=3 {
        let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
        let term = sign * x.powi(-n) * rgamma(1.0 - rho * n as f64);
        value += term;
        last = term;
    }
    let p = p_term(rho, x);
    MLValue {
        value,
        p_term: p,
        q_term: value - p,
        abs_err_est: last.abs() / x + x.powi(-4),
        route: Route::Asymptotic,
        nodes: 3,
    }
}

fn try_series(rho: f64, x: f64) -> Option<SeriesSum> {
    if x > SERIES_RADIUS {
        return None;
    }
    let s = series_sum(rho, x, SERIES_MAX_TERMS, SERIES_MAX_TERM);
    let converged = s.last_term.abs() <= 1e-15 * s.value.abs().max(1e-300) || x <= 1.0;
    if s.max_term <= SERIES_MAX_TERM && converged {
        Some(s)
    } else {
        None
    }
}

/// E_rho(-x) for x >= 0. rho in (0, 1].
pub fn ml_neg(rho: f64, x: f64) -> Result<MLValue> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "rho",
            value: rho,
            reason: "must be in (0, 1]",
        });
    }
    if !(x >= 0.0 && x.is_finite()) {
        return Err(Error::Domain {
            function: "ml_eval",
            value: -x,
            reason: "requires finite z <= 0",
        });
    }
    if rho == 1.0 {
        let value = (-x).exp();
        return Ok(MLValue {
            value,
            p_term: 0.0,
            q_term: value,
            abs_err_est: f64::EPSILON * value,
            route: Route::Exponential,
            nodes: 0,
        });
    }
    let rho = rho.min(RHO_CLAMP);
    if x == 0.0 {
        return Ok(MLValue {
            value: 1.0,
            p_term: 0.0,
            q_term: 1.0,
            abs_err_est: 0.0,
            route: Route::Series,
            nodes: 1,
        });
    }
    if let Some(s) = try_series(rho, x) {
        let p = p_term(rho, x);
        return Ok(MLValue {
            value: s.value,
            p_term: p,
            q_term: s.value - p,
            abs_err_est: s.max_term * s.terms as f64 * f64::EPSILON + s.last_term.abs(),
            route: Route::Series,
            nodes: s.terms,
        });
    }
    let contour = HankelContour::for_rho(rho);
    let q = path_integrals(rho, x, &contour)?.q(rho, x);
    let p = p_term(rho, x);
    Ok(MLValue {
        value: p + q.q,
        p_term: p,
        q_term: q.q,
        abs_err_est: q.abs_err_est + f64::EPSILON * p,
        route: Route::Contour,
        nodes: q.arc_nodes + 2 * q.ray_nodes,
    })
}

/// E_rho(-lambda^sigma t^rho), dispatched by argument magnitude.
pub fn ml_eval(arg: &MLArgument) -> Result<MLValue> {
    ml_neg(arg.rho(), arg.x())
}

/// Value and both partial derivatives at one argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MLPartials {
    pub value: f64,
    pub drho: f64,
    pub dsigma: f64,
    pub route: Route,
}

/// dp/drho = p (Psi(1 - rho) - ln t).
pub fn dp_drho(arg: &MLArgument) -> Result<f64> {
    let rho = arg.effective_rho();
    Ok(p_term(rho, arg.x()) * (digamma_fn(1.0 - rho)? - arg.t().ln()))
}

/// dp/dsigma = -p ln lambda.
pub fn dp_dsigma(arg: &MLArgument) -> f64 {
    -p_term(arg.effective_rho(), arg.x()) * arg.lambda().ln()
}

/// q together with dq/drho and dq/dsigma on the contour route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QPartials {
    pub q: f64,
    pub dq_drho: f64,
    pub dq_dsigma: f64,
}

pub fn q_partials(arg: &MLArgument) -> Result<QPartials> {
    let rho = arg.effective_rho();
    let x = arg.x();
    let path = path_integrals(rho, x, &HankelContour::for_rho(rho))?;
    Ok(QPartials {
        q: path.q(rho, x).q,
        dq_drho: path.dq_drho(rho, x, arg.t().ln()),
        dq_dsigma: path.dq_dsigma(rho, x, arg.lambda().ln()),
    })
}

fn series_partials(rho: f64, x: f64, ln_t: f64, ln_lambda: f64, terms: usize) -> Result<(f64, f64)> {
    let mut drho = KahanSum::default();
    let mut dk = KahanSum::default();
    for k in 1..terms {
        let term = series_term(rho, x, k);
        let kf = k as f64;
        drho.add(term * kf * (ln_t - digamma_fn(rho * kf + 1.0)?));
        dk.add(term * kf);
    }
    Ok((drho.value(), dk.value() * ln_lambda))
}

/// Value and partial derivatives in rho and sigma.
pub fn ml_partials(arg: &MLArgument) -> Result<MLPartials> {
    let rho = arg.effective_rho();
    let x = arg.x();
    let ln_t = arg.t().ln();
    let ln_lambda = arg.lambda().ln();
    let value = ml_eval(arg)?;
    if x == 0.0 {
        return Ok(MLPartials {
            value: value.value,
            drho: 0.0,
            dsigma: 0.0,
            route: value.route,
        });
    }
    match try_series(rho, x) {
        Some(s) => {
            // a few extra terms so the derivative series has converged too
            let terms = (s.terms + 8).min(SERIES_MAX_TERMS);
            let (drho, dsigma) = series_partials(rho, x, ln_t, ln_lambda, terms)?;
            Ok(MLPartials {
                value: value.value,
                drho,
                dsigma,
                route: Route::Series,
            })
        }
        None => {
            let path = path_integrals(rho, x, &HankelContour::for_rho(rho))?;
            let p = p_term(rho, x);
            let dp_rho = p * (digamma_fn(1.0 - rho)? - ln_t);
            let dp_sigma = -p * ln_lambda;
            Ok(MLPartials {
                value: value.value,
                drho: dp_rho + path.dq_drho(rho, x, ln_t),
                dsigma: dp_sigma + path.dq_dsigma(rho, x, ln_lambda),
                route: Route::Contour,
            })
        }
    }
}

/// dE/drho.
pub fn ml_drho(arg: &MLArgument) -> Result<f64> {
    Ok(ml_partials(arg)?.drho)
}

/// dE/dsigma = E'(z) (-lambda^sigma t^rho ln lambda).
pub fn ml_dsigma(arg: &MLArgument) -> Result<f64> {
    Ok(ml_partials(arg)?.dsigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const PI2: f64 = PI * PI;

    #[test]
    fn argument_validation() {
        assert!(MLArgument::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(MLArgument::new(1.2, 1.0, 1.0, 1.0).is_err());
        assert!(MLArgument::new(0.5, 1.0, -1.0, 1.0).is_err());
        assert!(MLArgument::new(0.5, 1.0, 1.0, 0.0).is_err());
        assert!(MLArgument::new(1.0, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn series_examples() {
        assert_eq!(ml_series(0.7, 0.0, 50).unwrap(), 1.0);
        let e = ml_series(1.0, -2.0, 400).unwrap();
        assert!((e - 0.135_335_283_236_612_7).abs() < 1e-15);
        let h = ml_series(0.5, -1.0, 400).unwrap();
        assert!((h - 0.427_583_576_155_807).abs() < 1e-14);
        assert!(matches!(ml_series(0.5, -9.0, 400), Err(Error::SeriesRadius { .. })));
    }

    #[test]
    fn p_examples() {
        let a = MLArgument::new(0.5, 1.0, 1.0, 1.0).unwrap();
        assert!((ml_p(&a) - 0.564_189_583_547_756_3).abs() < 1e-15);
        let b = MLArgument::new(0.5, 2.0, 2.0, 4.0).unwrap();
        assert!((ml_p(&b) - 0.070_523_697_943_469_53).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for t in [1.0, 10.0, 100.0, 1e4] {
            let v = ml_p(&a.with_t(t).unwrap());
            assert!(v < prev && v > 0.0);
            prev = v;
        }
    }

    #[test]
    fn eval_examples() {
        let tiny = MLArgument::new(0.9, 1.0, 1.0, 1e-300).unwrap();
        assert!((ml_eval(&tiny).unwrap().value - 1.0).abs() < 1e-15);
        let heat = MLArgument::new(1.0, 1.0, PI2, 0.1).unwrap();
        assert!((ml_eval(&heat).unwrap().value - (-PI2 * 0.1).exp()).abs() < 1e-15);
    }

    #[test]
    fn contour_decomposition_is_exact_sum() {
        let arg = MLArgument::new(0.5, 1.0, PI2, 20.0).unwrap();
        let v = ml_eval(&arg).unwrap();
        assert_eq!(v.route, Route::Contour);
        assert_eq!(v.value, v.p_term + v.q_term);
    }

    #[test]
    fn half_order_matches_erfc_identity_on_contour() {
        // E_{1/2}(-x) = exp(x^2) erfc(x); at x = 20, x e^{x^2} erfc(x) = (1/sqrt pi)(1 - 1/(2x^2) + 3/(4x^4) - ...)
        let x: f64 = 20.0;
        let v = ml_neg(0.5, x).unwrap().value;
        let mut asym = 0.0;
        let mut term = 1.0;
        for n in 0..12 {
            asym += term;
            term *= -((2 * n + 1) as f64) / (2.0 * x * x);
        }
        let expected = asym / (x * PI.sqrt());
        assert!((v - expected).abs() < 1e-15, "{v} vs {expected}");
    }

    #[test]
    fn dsigma_vanishes_for_unit_lambda() {
        for (rho, t) in [(0.5, 0.5), (0.3, 100.0), (0.9, 7.0)] {
            let arg = MLArgument::new(rho, 1.3, 1.0, t).unwrap();
            assert_eq!(ml_dsigma(&arg).unwrap(), 0.0);
        }
    }

    #[test]
    fn drho_negative_in_monotone_regime() {
        let arg = MLArgument::new(0.5, 1.0, PI2, 100.0).unwrap();
        assert!(ml_drho(&arg).unwrap() < 0.0);
    }

    #[test]
    fn dsigma_negative_for_lambda_above_one() {
        let arg = MLArgument::new(0.5, 1.0, PI2, 50.0).unwrap();
        let d = ml_dsigma(&arg).unwrap();
        let h = 1e-6;
        let fd = (ml_eval(&arg.with_sigma(1.0 + h).unwrap()).unwrap().value
            - ml_eval(&arg.with_sigma(1.0 - h).unwrap()).unwrap().value)
            / (2.0 * h);
        assert!(d < 0.0);
        assert!(((d - fd) / fd).abs() < 1e-5, "{d} vs {fd}");
    }

    #[test]
    fn derivatives_vanish_as_argument_shrinks() {
        let mut prev = f64::INFINITY;
        for t in [1e-2, 1e-4, 1e-8, 1e-16] {
            let arg = MLArgument::new(0.5, 1.0, PI2, t).unwrap();
            let d = ml_drho(&arg).unwrap().abs();
            assert!(d < prev);
            prev = d;
        }
        assert!(prev < 1e-4);
    }
}
