//! Recovery of rho (sigma known) from one observation, and of (rho, sigma)
//! from observations at two times.
//!
//! The observations are d_i = |phi_1| E_rho(-lambda^sigma t_i^rho); only the
//! ratios r_i = d_i / |phi_1| enter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::range_scan;
use crate::specfun::{calibrated, ml_neg, ml_partials, MLArgument, MLPartials, RHO_CLAMP};

/// Relative residual accepted by the solvers.
pub const DEFAULT_TOL: f64 = 1e-10;
pub const MAX_BISECTION: usize = 200;
pub const MAX_NEWTON: usize = 20;
/// Grid size of the monotonicity scans.
pub const SCAN_POINTS: usize = 64;
/// The determinant is sampled on a DET_GRID x DET_GRID grid of the search box.
pub const DET_GRID: usize = 8;
/// Smallest normalized determinant |D| / (|a d| + |b c|) accepted by the spacing gate.
pub const MIN_CONDITIONING: f64 = 1e-2;
/// Largest t tried by [`empirical_t0`].
pub const T0_CAP: f64 = 1_048_576.0;

pub const DEFAULT_RHO_BOX: RhoBox = RhoBox { lo: 0.1, hi: 0.95 };
pub const DEFAULT_SIGMA_BOX: SigmaBox = SigmaBox { lo: 0.25, hi: 2.5 };

/// Observations of the first mode at t0 and optionally at t1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationSet {
    pub t0: f64,
    pub d0: f64,
    #[serde(default)]
    pub t1: Option<f64>,
    #[serde(default)]
    pub d1: Option<f64>,
    pub phi1_abs: f64,
    pub lambda_obs: f64,
}

impl ObservationSet {
    pub fn single(t0: f64, d0: f64, phi1_abs: f64, lambda_obs: f64) -> Self {
        Self {
            t0,
            d0,
            t1: None,
            d1: None,
            phi1_abs,
            lambda_obs,
        }
    }

    pub fn pair(t0: f64, d0: f64, t1: f64, d1: f64, phi1_abs: f64, lambda_obs: f64) -> Self {
        Self {
            t0,
            d0,
            t1: Some(t1),
            d1: Some(d1),
            phi1_abs,
            lambda_obs,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value: v,
                    reason: "must be positive",
                })
            }
        };
        pos("t0", self.t0)?;
        pos("phi1_abs", self.phi1_abs)?;
        pos("lambda_obs", self.lambda_obs)?;
        if !(self.d0 >= 0.0 && self.d0.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "d0",
                value: self.d0,
                reason: "must be non-negative",
            });
        }
        match (self.t1, self.d1) {
            (None, None) => {}
            (Some(t1), Some(d1)) => {
                pos("t1", t1)?;
                if !(d1 >= 0.0 && d1.is_finite()) {
                    return Err(Error::InvalidParameter {
                        name: "d1",
                        value: d1,
                        reason: "must be non-negative",
                    });
                }
                if self.lambda_obs == 1.0 {
                    return Err(Error::InvalidParameter {
                        name: "lambda_obs",
                        value: 1.0,
                        reason: "must differ from 1 when two times are observed",
                    });
                }
            }
            _ => {
                return Err(Error::InvalidParameter {
                    name: "t1, d1",
                    value: f64::NAN,
                    reason: "must be given together",
                })
            }
        }
        Ok(())
    }

    pub fn ratio0(&self) -> f64 {
        self.d0 / self.phi1_abs
    }

    pub fn ratio1(&self) -> Option<f64> {
        self.d1.map(|d| d / self.phi1_abs)
    }

    fn second(&self) -> Result<(f64, f64)> {
        match (self.t1, self.ratio1()) {
            (Some(t1), Some(r1)) => Ok((t1, r1)),
            _ => Err(Error::InvalidParameter {
                name: "t1",
                value: f64::NAN,
                reason: "second observation required",
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RhoBox {
    pub lo: f64,
    pub hi: f64,
}

impl RhoBox {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo < hi && hi < 1.0) {
            return Err(Error::InvalidParameter {
                name: "rho_box",
                value: lo,
                reason: "need 0 < lo < hi < 1",
            });
        }
        Ok(Self { lo, hi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaBox {
    pub lo: f64,
    pub hi: f64,
}

impl SigmaBox {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma_box",
                value: lo,
                reason: "need 0 < lo < hi",
            });
        }
        Ok(Self { lo, hi })
    }
}

/// What is unknown besides rho.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSpec {
    Known(f64),
    Box(SigmaBox),
}

/// Verdicts on an observation set. Every field is computed, none assumed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub ratio0: f64,
    pub lower0: f64,
    pub upper0: f64,
    pub ok0: bool,
    pub ratio1: Option<f64>,
    pub lower1: Option<f64>,
    pub upper1: Option<f64>,
    pub ok1: Option<bool>,
    /// e^{-mu t} <= r < E_rho0(-t^rho0) at each observed time, the upper bound taken without mu.
    pub literal_condition_ok: bool,
    /// Observation maps strictly decreasing in rho with dE/drho < 0 on the scan grid.
    pub monotone_ok: bool,
    pub sign_changes: usize,
    /// Operative spacing gate: t0 > t1, constant sign of D and normalized
    /// determinant at least MIN_CONDITIONING on the sampled box.
    pub spacing_ok: Option<bool>,
    /// t0 > t1 exp(C / (1 - rho1)^2) with the calibrated C (2 when lambda < 1).
    pub strict_spacing_ok: Option<bool>,
    pub conditioning: Option<f64>,
    /// Sign of D over the sampled box; 0 if it vanishes or changes sign.
    pub determinant_sign: Option<i8>,
}

impl AdmissibilityReport {
    /// All operative verdicts hold.
    pub fn admissible(&self) -> bool {
        self.ok0 && self.ok1.unwrap_or(true) && self.monotone_ok && self.spacing_ok.unwrap_or(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Bisection,
    Nested,
    Newton,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryResult {
    pub rho: f64,
    pub sigma: Option<f64>,
    /// (model - observed) / observed at t0.
    pub residual0: f64,
    pub residual1: Option<f64>,
    pub iterations: usize,
    pub det_trace: Vec<f64>,
    pub method: Method,
    pub report: Option<AdmissibilityReport>,
}

/// E_rho(-mu t^rho) with mu = lambda^sigma.
fn e_mu(rho: f64, mu: f64, t: f64) -> Result<f64> {
    Ok(ml_neg(rho, mu * t.powf(rho))?.value)
}

fn partials(rho: f64, sigma: f64, lambda: f64, t: f64) -> Result<MLPartials> {
    ml_partials(&MLArgument::new(rho, sigma, lambda, t)?)
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

/// Scan rho -> E_rho(-mu t^rho) and dE/drho on [lo, hi].
fn monotone_scan(mu: f64, t: f64, lo: f64, hi: f64) -> Result<(bool, usize)> {
    let scan = range_scan(|rho| e_mu(rho, mu, t).unwrap_or(f64::NAN), lo, hi, SCAN_POINTS);
    let sigma = mu.ln();
    // evaluate the derivative as d/drho E_rho(-e^sigma t^rho) or with lambda = e^-1 when mu < 1
    let (lambda, s) = if sigma >= 0.0 {
        (std::f64::consts::E, sigma)
    } else {
        (1.0 / std::f64::consts::E, -sigma)
    };
    let derivs = grid(lo, hi, SCAN_POINTS)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&rho| Ok(partials(rho, s, lambda, t)?.drho))
        .collect::<Result<Vec<f64>>>()?;
    let mut sign_changes = 0;
    for w in derivs.windows(2) {
        if (w[0] < 0.0) != (w[1] < 0.0) {
            sign_changes += 1;
        }
    }
    let ok = scan.monotone && scan.decreasing && derivs.iter().all(|d| *d < 0.0);
    Ok((ok, sign_changes))
}

/// D = dE(t0)/drho dE(t1)/dsigma - dE(t0)/dsigma dE(t1)/drho.
pub fn determinant_d(rho: f64, sigma: f64, obs: &ObservationSet) -> Result<f64> {
    Ok(jacobian(rho, sigma, obs)?.det())
}

#[derive(Debug, Clone, Copy)]
struct Jacobian {
    e0: f64,
    e1: f64,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl Jacobian {
    fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }
    fn conditioning(&self) -> f64 {
        let scale = (self.a * self.d).abs() + (self.b * self.c).abs();
        if scale == 0.0 {
            0.0
        } else {
            self.det().abs() / scale
        }
    }
}

fn jacobian(rho: f64, sigma: f64, obs: &ObservationSet) -> Result<Jacobian> {
    if obs.lambda_obs == 1.0 {
        return Err(Error::InvalidParameter {
            name: "lambda_obs",
            value: 1.0,
            reason: "the determinant vanishes identically for lambda = 1",
        });
    }
    let (t1, _) = obs.second()?;
    let p0 = partials(rho, sigma, obs.lambda_obs, obs.t0)?;
    let p1 = partials(rho, sigma, obs.lambda_obs, t1)?;
    Ok(Jacobian {
        e0: p0.value,
        e1: p1.value,
        a: p0.drho,
        b: p0.dsigma,
        c: p1.drho,
        d: p1.dsigma,
    })
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Range endpoints, monotonicity and (for two times) the spacing gate.
pub fn admissibility_check(obs: &ObservationSet, rho_box: RhoBox, sigma: SigmaSpec) -> Result<AdmissibilityReport> {
    obs.validate()?;
    let lambda = obs.lambda_obs;
    match sigma {
        SigmaSpec::Known(s) => {
            let mu = lambda.powf(s);
            let r0 = obs.ratio0();
            let upper0 = e_mu(rho_box.lo, mu, obs.t0)?;
            let lower0 = (-mu * obs.t0).exp();
            let literal_upper = e_mu(rho_box.lo, 1.0, obs.t0)?;
            let (monotone_ok, sign_changes) = monotone_scan(mu, obs.t0, rho_box.lo, RHO_CLAMP)?;
            Ok(AdmissibilityReport {
                ratio0: r0,
                lower0,
                upper0,
                ok0: lower0 <= r0 && r0 <= upper0,
                ratio1: None,
                lower1: None,
                upper1: None,
                ok1: None,
                literal_condition_ok: lower0 <= r0 && r0 < literal_upper,
                monotone_ok,
                sign_changes,
                spacing_ok: None,
                strict_spacing_ok: None,
                conditioning: None,
                determinant_sign: None,
            })
        }
        SigmaSpec::Box(sb) => {
            let (t1, r1) = obs.second()?;
            let r0 = obs.ratio0();
            let mus = [lambda.powf(sb.lo), lambda.powf(sb.hi)];
            let (mu_min, mu_max) = (mus[0].min(mus[1]), mus[0].max(mus[1]));
            let range =
                |t: f64| -> Result<(f64, f64)> { Ok((e_mu(rho_box.hi, mu_max, t)?, e_mu(rho_box.lo, mu_min, t)?)) };
            let (lower0, upper0) = range(obs.t0)?;
            let (lower1, upper1) = range(t1)?;
            let literal =
                |t: f64, r: f64| -> Result<bool> { Ok((-mu_max * t).exp() <= r && r < e_mu(rho_box.lo, 1.0, t)?) };
            let literal_condition_ok = literal(obs.t0, r0)? && literal(t1, r1)?;
            let mut monotone_ok = true;
            let mut sign_changes = 0;
            for t in [obs.t0, t1] {
                for mu in [mu_min, mu_max] {
                    let (ok, sc) = monotone_scan(mu, t, rho_box.lo, rho_box.hi)?;
                    monotone_ok &= ok;
                    sign_changes += sc;
                }
            }
            let (determinant_sign, conditioning) = if obs.t0 > t1 {
                let points: Vec<(f64, f64)> = grid(rho_box.lo, rho_box.hi, DET_GRID)
                    .flat_map(|r| grid(sb.lo, sb.hi, DET_GRID).map(move |s| (r, s)))
                    .collect();
                let jacs = points
                    .par_iter()
                    .map(|&(r, s)| jacobian(r, s, obs))
                    .collect::<Result<Vec<Jacobian>>>()?;
                let first = sign(jacs[0].det());
                let constant = jacs.iter().all(|j| sign(j.det()) == first);
                let kappa = jacs.iter().map(Jacobian::conditioning).fold(f64::INFINITY, f64::min);
                (if constant { first } else { 0 }, kappa)
            } else {
                (0, 0.0)
            };
            let c = if lambda > 1.0 { calibrated().spacing } else { 2.0 };
            let strict_spacing_ok = obs.t0 > t1 * (c / (1.0 - rho_box.hi).powi(2)).exp();
            Ok(AdmissibilityReport {
                ratio0: r0,
                lower0,
                upper0,
                ok0: lower0 <= r0 && r0 <= upper0,
                ratio1: Some(r1),
                lower1: Some(lower1),
                upper1: Some(upper1),
                ok1: Some(lower1 <= r1 && r1 <= upper1),
                literal_condition_ok,
                monotone_ok,
                sign_changes,
                spacing_ok: Some(obs.t0 > t1 && determinant_sign != 0 && conditioning >= MIN_CONDITIONING),
                strict_spacing_ok: Some(strict_spacing_ok),
                conditioning: Some(conditioning),
                determinant_sign: Some(determinant_sign),
            })
        }
    }
}

/// Bisection for a root of a function that is positive at `lo` and
/// negative at `hi`. Returns (root, steps).
fn bisect(mut f: impl FnMut(f64) -> Result<f64>, mut lo: f64, mut hi: f64, width: f64) -> Result<(f64, usize)> {
    let mut steps = 0;
    while steps < MAX_BISECTION && hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        steps += 1;
        if v == 0.0 {
            return Ok((mid, steps));
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi), steps))
}

/// Recover rho from d0 with sigma known (first inverse problem).
pub fn invert_rho(obs: &ObservationSet, rho_box: RhoBox, sigma: f64, tol: f64) -> Result<RecoveryResult> {
    let report = admissibility_check(obs, rho_box, SigmaSpec::Known(sigma))?;
    if !report.ok0 {
        return Err(Error::Inadmissible(Box::new(report)));
    }
    if !report.monotone_ok {
        return Err(Error::NonMonotone {
            sign_changes: report.sign_changes,
        });
    }
    let mu = obs.lambda_obs.powf(sigma);
    let r0 = obs.ratio0();
    let t0 = obs.t0;
    let clamped_lower = e_mu(RHO_CLAMP, mu, t0)?;
    if r0 < clamped_lower {
        if r0 == report.lower0 {
            return Ok(RecoveryResult {
                rho: 1.0,
                sigma: None,
                residual0: 0.0,
                residual1: None,
                iterations: 0,
                det_trace: Vec::new(),
                method: Method::Bisection,
                report: Some(report),
            });
        }
        return Err(Error::RootBeyondClamp {
            ratio: r0,
            clamped_lower,
        });
    }
    let f = |rho: f64| Ok(e_mu(rho, mu, t0)? - r0);
    let (mut rho, mut iterations) = if f(rho_box.lo)? <= 0.0 {
        (rho_box.lo, 1)
    } else {
        bisect(f, rho_box.lo, RHO_CLAMP, 1e-15)?
    };
    // Newton polish with dE/drho
    let arg = |rho: f64| MLArgument::new(rho, sigma, obs.lambda_obs, t0);
    let mut res = f(rho)?;
    for _ in 0..MAX_NEWTON {
        if res.abs() <= 0.01 * tol * r0 {
            break;
        }
        let p = ml_partials(&arg(rho)?)?;
        if p.drho == 0.0 {
            break;
        }
        let mut step = -res / p.drho;
        let mut improved = false;
        for _ in 0..10 {
            let cand = (rho + step).clamp(rho_box.lo, RHO_CLAMP);
            let r = f(cand)?;
            iterations += 1;
            if r.abs() < res.abs() {
                rho = cand;
                res = r;
                improved = true;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let residual0 = res / r0;
    if residual0.abs() > tol {
        return Err(Error::NoConvergence {
            iterations,
            residual: residual0,
        });
    }
    Ok(RecoveryResult {
        rho,
        sigma: None,
        residual0,
        residual1: None,
        iterations,
        det_trace: Vec::new(),
        method: Method::Bisection,
        report: Some(report),
    })
}

/// X > 0 with E_rho(-X) = r, for 0 < r < 1.
fn solve_argument(rho: f64, r: f64) -> Result<(f64, usize)> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::InvalidParameter {
            name: "ratio",
            value: r,
            reason: "must lie in (0, 1)",
        });
    }
    let g = |x: f64| -> Result<f64> { Ok(ml_neg(rho, x)?.value - r) };
    let (mut lo, mut hi) = (1.0, 1.0);
    let mut steps = 0;
    if g(1.0)? > 0.0 {
        while g(hi)? > 0.0 {
            lo = hi;
            hi *= 2.0;
            steps += 1;
            if hi > 1e300 {
                return Err(Error::NoConvergence {
                    iterations: steps,
                    residual: r,
                });
            }
        }
    } else {
        while g(lo)? <= 0.0 {
            hi = lo;
            lo *= 0.5;
            steps += 1;
            if lo < 1e-300 {
                return Err(Error::NoConvergence {
                    iterations: steps,
                    residual: r,
                });
            }
        }
    }
    // bisect ln X
    let (ln_x, n) = bisect(|s| g(s.exp()), lo.ln(), hi.ln(), 1e-15)?;
    Ok((ln_x.exp(), steps + n))
}

/// For fixed rho: mu from the t1 equation, then the t0 residual.
struct Inner {
    mu: f64,
    outer: f64,
    steps: usize,
}

fn inner_solve(rho: f64, t0: f64, t1: f64, r0: f64, r1: f64) -> Result<Inner> {
    let (x1, steps) = solve_argument(rho, r1)?;
    let mu = x1 / t1.powf(rho);
    let e0 = ml_neg(rho, mu * t0.powf(rho))?.value;
    Ok(Inner {
        mu,
        outer: e0 - r0,
        steps,
    })
}

/// Recover (rho, sigma) from two observations by nested bisection with a
/// Newton polish.
pub fn invert_rho_sigma(
    obs: &ObservationSet,
    rho_box: RhoBox,
    sigma_box: SigmaBox,
    tol: f64,
) -> Result<RecoveryResult> {
    obs.validate()?;
    let (t1, r1) = obs.second()?;
    let report = admissibility_check(obs, rho_box, SigmaSpec::Box(sigma_box))?;
    if report.spacing_ok != Some(true) {
        return Err(Error::SpacingViolation {
            t0: obs.t0,
            t1,
            report: Box::new(report),
        });
    }
    if !(report.ok0 && report.ok1 == Some(true)) {
        return Err(Error::Inadmissible(Box::new(report)));
    }
    let lambda = obs.lambda_obs;
    let ln_lambda = lambda.ln();
    let (t0, r0) = (obs.t0, obs.ratio0());
    let expected_sign = report.determinant_sign.unwrap_or(0);

    let mut det_trace = Vec::new();
    let mut iterations = 0;
    let record = |rho: f64, mu: f64, trace: &mut Vec<f64>| -> Result<()> {
        let s = mu.ln() / ln_lambda;
        if s >= 0.0 {
            let d = determinant_d(rho, s, obs)?;
            trace.push(d);
            if sign(d) != expected_sign {
                return Err(Error::DeterminantSignChange(trace.len()));
            }
        }
        Ok(())
    };

    let lo = inner_solve(rho_box.lo, t0, t1, r0, r1)?;
    let hi = inner_solve(rho_box.hi, t0, t1, r0, r1)?;
    iterations += lo.steps + hi.steps;
    // outer residual changes sign across the box when the root is inside
    let orientation = if lo.outer > 0.0 && hi.outer < 0.0 {
        1.0
    } else if lo.outer < 0.0 && hi.outer > 0.0 {
        -1.0
    } else if lo.outer == 0.0 || hi.outer == 0.0 {
        0.0
    } else {
        return Err(Error::Inadmissible(Box::new(report)));
    };
    let rho = if orientation == 0.0 {
        if lo.outer == 0.0 {
            rho_box.lo
        } else {
            rho_box.hi
        }
    } else {
        let mut err = None;
        let (rho, steps) = bisect(
            |rho| match inner_solve(rho, t0, t1, r0, r1) {
                Ok(inner) => {
                    iterations += inner.steps;
                    if let Err(e) = record(rho, inner.mu, &mut det_trace) {
                        err = Some(e);
                        return Ok(0.0);
                    }
                    Ok(orientation * inner.outer)
                }
                Err(e) => Err(e),
            },
            rho_box.lo,
            rho_box.hi,
            1e-14,
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        iterations += steps;
        rho
    };
    let inner = inner_solve(rho, t0, t1, r0, r1)?;
    let sigma = inner.mu.ln() / ln_lambda;
    let slack = 1e-9 * (1.0 + sigma_box.hi);
    if !(sigma >= sigma_box.lo - slack && sigma <= sigma_box.hi + slack) {
        return Err(Error::InnerBracket { sigma });
    }
    let (rho, sigma, res, n) = newton_polish(
        obs,
        rho,
        sigma,
        (r0, r1),
        rho_box,
        sigma_box,
        tol,
        &mut det_trace,
        expected_sign,
    )?;
    iterations += n;
    finish(
        rho,
        sigma,
        res,
        iterations,
        det_trace,
        Method::Nested,
        Some(report),
        tol,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    rho: f64,
    sigma: f64,
    res: (f64, f64),
    iterations: usize,
    det_trace: Vec<f64>,
    method: Method,
    report: Option<AdmissibilityReport>,
    tol: f64,
) -> Result<RecoveryResult> {
    if res.0.abs() > tol || res.1.abs() > tol {
        return Err(Error::NoConvergence {
            iterations,
            residual: res.0.abs().max(res.1.abs()),
        });
    }
    Ok(RecoveryResult {
        rho,
        sigma: Some(sigma),
        residual0: res.0,
        residual1: Some(res.1),
        iterations,
        det_trace,
        method,
        report,
    })
}

/// Relative residuals (E(t_i) - r_i) / r_i.
fn residuals(j: &Jacobian, r: (f64, f64)) -> (f64, f64) {
    ((j.e0 - r.0) / r.0, (j.e1 - r.1) / r.1)
}

/// Damped Newton on ln E(t_i) = ln r_i, kept inside the boxes.
#[allow(clippy::too_many_arguments)]
fn newton_polish(
    obs: &ObservationSet,
    mut rho: f64,
    mut sigma: f64,
    r: (f64, f64),
    rho_box: RhoBox,
    sigma_box: SigmaBox,
    tol: f64,
    trace: &mut Vec<f64>,
    expected_sign: i8,
) -> Result<(f64, f64, (f64, f64), usize)> {
    let mut j = jacobian(rho, sigma, obs)?;
    let mut res = residuals(&j, r);
    let mut steps = 0;
    let norm = |x: (f64, f64)| x.0.abs().max(x.1.abs());
    for _ in 0..MAX_NEWTON {
        let det = j.det();
        trace.push(det);
        if expected_sign != 0 && sign(det) != expected_sign {
            return Err(Error::DeterminantSignChange(trace.len()));
        }
        if norm(res) <= 0.01 * tol {
            break;
        }
        // rows scaled by 1 / E so the system is d ln E = -ln(E / r)
        let f0 = (j.e0 / r.0).ln();
        let f1 = (j.e1 / r.1).ln();
        let (a, b, c, d) = (j.a / j.e0, j.b / j.e0, j.c / j.e1, j.d / j.e1);
        let dl = a * d - b * c;
        if dl == 0.0 || !dl.is_finite() {
            break;
        }
        let mut dr = -(d * f0 - b * f1) / dl;
        let mut ds = -(a * f1 - c * f0) / dl;
        let mut accepted = false;
        for _ in 0..30 {
            let cr = (rho + dr).clamp(rho_box.lo, rho_box.hi);
            let cs = (sigma + ds).clamp(sigma_box.lo, sigma_box.hi);
            steps += 1;
            let cj = jacobian(cr, cs, obs)?;
            let cres = residuals(&cj, r);
            if norm(cres) < norm(res) {
                rho = cr;
                sigma = cs;
                j = cj;
                res = cres;
                accepted = true;
                break;
            }
            dr *= 0.5;
            ds *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((rho, sigma, res, steps))
}

/// Damped Newton from an arbitrary start in the box.
pub fn newton_solve(
    obs: &ObservationSet,
    start: (f64, f64),
    rho_box: RhoBox,
    sigma_box: SigmaBox,
    tol: f64,
) -> Result<RecoveryResult> {
    obs.validate()?;
    let (_, r1) = obs.second()?;
    let r = (obs.ratio0(), r1);
    let mut trace = Vec::new();
    let j = jacobian(start.0, start.1, obs)?;
    let expected = sign(j.det());
    let (rho, sigma, res, n) = newton_polish(obs, start.0, start.1, r, rho_box, sigma_box, tol, &mut trace, expected)?;
    finish(rho, sigma, res, n, trace, Method::Newton, None, tol)
}

/// Newton from `starts` random interior points drawn with `seed`.
pub fn multi_start(
    obs: &ObservationSet,
    rho_box: RhoBox,
    sigma_box: SigmaBox,
    tol: f64,
    starts: usize,
    seed: u64,
) -> Vec<Result<RecoveryResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<(f64, f64)> = (0..starts)
        .map(|_| {
            (
                rng.gen_range(rho_box.lo..rho_box.hi),
                rng.gen_range(sigma_box.lo..sigma_box.hi),
            )
        })
        .collect();
    points
        .par_iter()
        .map(|&p| newton_solve(obs, p, rho_box, sigma_box, tol))
        .collect()
}

/// Smallest t in {2, 4, 8, ...} such that dE/drho < 0 on a 64-point grid of
/// [rho0, 1 - 1e-6] at t, 2t and 4t.
pub fn empirical_t0(lambda: f64, sigma: f64, rho0: f64) -> Result<f64> {
    let rho0 = rho0.min(RHO_CLAMP);
    let negative = |t: f64| -> Result<bool> {
        let rhos: Vec<f64> = grid(rho0, RHO_CLAMP, SCAN_POINTS).collect();
        let d = rhos
            .par_iter()
            .map(|&rho| Ok(partials(rho, sigma, lambda, t)?.drho))
            .collect::<Result<Vec<f64>>>()?;
        Ok(d.iter().all(|v| *v < 0.0))
    };
    let mut t = 2.0;
    while t <= T0_CAP {
        if negative(t)? && negative(2.0 * t)? && negative(4.0 * t)? {
            return Ok(t);
        }
        t *= 2.0;
    }
    Err(Error::T0NotFound { cap: T0_CAP })
}
