//! Independent reference implementations used to check the production
//! numerics: an MPFR Mittag-Leffler series, a spectral-density integral for
//! the arguments where the series is hopeless even in extended precision,
//! central differences, the L1 Caputo quadrature and grid range scans.
//!
//! Nothing here calls into [`crate::specfun`]; the oracle must stay an
//! independent route. It is slow on purpose.

use std::f64::consts::PI;

use rug::float::Round;
use rug::Float;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Significant decimal digits carried past the cancellation loss.
    pub precision_digits: u32,
    pub fd_step: f64,
    pub grid_points: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            precision_digits: 30,
            fd_step: 1e-6,
            grid_points: 64,
        }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.precision_digits < 30 {
            return Err(Error::InvalidParameter {
                name: "precision_digits",
                value: self.precision_digits as f64,
                reason: "extended precision needs at least 30 digits",
            });
        }
        Ok(())
    }
}

/// Largest |z| accepted by [`ml_reference`].
pub const REFERENCE_MAX_ABS_Z: f64 = 60.0;

/// Cancellation budget (decimal digits lost to the largest series term) up to
/// which the extended-precision series is used.
pub const SERIES_DIGIT_BUDGET: f64 = 80.0;

/// Which reference route produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceRoute {
    Exponential,
    ExtendedSeries,
    SpectralIntegral,
}

fn digits_to_bits(digits: f64) -> u32 {
    (digits * std::f64::consts::LOG2_10).ceil() as u32 + 16
}

/// log10 of the largest term x^k / Gamma(rho k + 1) and the number of terms
/// needed before they drop below 10^-(digits + peak).
fn series_profile(rho: f64, x: f64, digits: f64) -> (f64, usize) {
    let ln10 = std::f64::consts::LN_10;
    let ln_x = x.ln();
    let mut peak = 0.0_f64;
    let mut k = 0usize;
    loop {
        k += 1;
        let lg = Float::with_val(64, rho * k as f64 + 1.0).ln_gamma().to_f64();
        let log_term = (k as f64 * ln_x - lg) / ln10;
        peak = peak.max(log_term);
        if log_term < peak && log_term < -(digits + 5.0) {
            return (peak, k + 1);
        }
        if peak > SERIES_DIGIT_BUDGET || k > 20_000 {
            return (f64::INFINITY, k);
        }
    }
}

/// E_rho(z) for z <= 0, |z| <= 60, rho in (0, 1].
pub fn ml_reference(rho: f64, z: f64, cfg: &OracleConfig) -> Result<f64> {
    Ok(ml_reference_traced(rho, z, cfg)?.0)
}

/// Same as [`ml_reference`], also reporting the route taken.
pub fn ml_reference_traced(rho: f64, z: f64, cfg: &OracleConfig) -> Result<(f64, ReferenceRoute)> {
    cfg.validate()?;
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "rho",
            value: rho,
            reason: "must be in (0, 1]",
        });
    }
    if z > 0.0 || !z.is_finite() {
        return Err(Error::Domain {
            function: "ml_reference",
            value: z,
            reason: "requires z <= 0",
        });
    }
    let x = -z;
    if x > REFERENCE_MAX_ABS_Z {
        return Err(Error::OracleRange(x));
    }
    if x == 0.0 {
        return Ok((1.0, ReferenceRoute::ExtendedSeries));
    }
    let digits = cfg.precision_digits as f64;
    if rho == 1.0 {
        let v = Float::with_val(digits_to_bits(digits), z).exp();
        return Ok((v.to_f64(), ReferenceRoute::Exponential));
    }
    let (peak, terms) = series_profile(rho, x, digits);
    if peak <= SERIES_DIGIT_BUDGET && terms <= 20_000 {
        Ok((
            extended_series(rho, x, digits + peak.max(0.0), terms),
            ReferenceRoute::ExtendedSeries,
        ))
    } else {
        Ok((spectral_integral(rho, x), ReferenceRoute::SpectralIntegral))
    }
}

fn extended_series(rho: f64, x: f64, digits: f64, terms: usize) -> f64 {
    let prec = digits_to_bits(digits);
    let rho_mp = Float::with_val(prec, rho);
    let neg_x = Float::with_val(prec, -x);
    let mut sum = Float::with_val(prec, 0);
    let mut power = Float::with_val(prec, 1);
    for k in 0..terms {
        let arg = Float::with_val(prec, &rho_mp * k as u32) + 1u32;
        let g = arg.gamma();
        sum += Float::with_val(prec, &power / &g);
        power *= &neg_x;
    }
    sum.to_f64_round(Round::Nearest)
}

/// E_rho(-x) = sin(pi rho) / (pi rho) * int_0^inf exp(-(s x)^(1/rho)) / (s^2 + 2 s cos(pi rho) + 1) ds.
///
/// The integrand is positive, so there is no cancellation; adaptive
/// Gauss-Kronrod on a geometric partition gets close to full f64 accuracy.
pub fn spectral_integral(rho: f64, x: f64) -> f64 {
    let c = (PI * rho).cos();
    let inv_rho = 1.0 / rho;
    let f = |s: f64| {
        let e = (-(s * x).powf(inv_rho)).exp();
        e / (s * s + 2.0 * s * c + 1.0)
    };
    // beyond s_cut the exponential underflows
    let s_cut = 745.0_f64.powf(rho) / x;
    let mut breaks = vec![0.0];
    let mut s = 1.0 / 1024.0;
    while s < s_cut {
        breaks.push(s);
        s *= 2.0;
    }
    breaks.push(s_cut);
    let mut total = 0.0;
    let mut comp = 0.0;
    for w in breaks.windows(2) {
        let v = adaptive_gk(&f, w[0], w[1], 1e-19, 40);
        let y = v - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;
    }
    (PI * rho).sin() / (PI * rho) * total
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1]
const GK_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const GK_WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut kron = fc * GK_WK[7];
    let mut gauss = fc * GK_WG[3];
    for i in 0..7 {
        let dx = half * GK_X[i];
        let s = f(mid - dx) + f(mid + dx);
        kron += GK_WK[i] * s;
        if i % 2 == 1 {
            gauss += GK_WG[i / 2] * s;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

fn adaptive_gk(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (v, err) = gk15(f, a, b);
    if err <= tol.max(1e-15 * v.abs()) || depth == 0 {
        return v;
    }
    let m = 0.5 * (a + b);
    adaptive_gk(f, a, m, tol, depth - 1) + adaptive_gk(f, m, b, tol, depth - 1)
}

/// Gamma(x) in extended precision, rounded to f64.
pub fn gamma_reference(x: f64, digits: u32) -> f64 {
    Float::with_val(digits_to_bits(digits as f64), x).gamma().to_f64()
}

/// Digamma in extended precision, rounded to f64.
pub fn digamma_reference(x: f64, digits: u32) -> f64 {
    Float::with_val(digits_to_bits(digits as f64), x).digamma().to_f64()
}

/// exp(x^2) erfc(x) for x >= 0, in extended precision.
pub fn erfcx(x: f64) -> f64 {
    assert!(x >= 0.0);
    let xf = Float::with_val(256, x);
    let sq = Float::with_val(256, &xf * &xf);
    (sq.exp() * xf.erfc()).to_f64()
}

/// Central difference (f(x + h) - f(x - h)) / 2h.
pub fn fd_derivative(f: impl Fn(f64) -> f64, x: f64, step: f64) -> f64 {
    (f(x + step) - f(x - step)) / (2.0 * step)
}

/// Least-squares slope of ln|y| against ln x.
pub fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// L1 Caputo derivative of uniformly sampled data.
#[derive(Debug, Clone)]
pub struct L1Derivative {
    /// Derivative at t_1, ..., t_N (the node t_0 = 0 carries no value).
    pub values: Vec<f64>,
    /// Fewer than 16 nodes.
    pub coarse_warning: bool,
}

/// L1 scheme: D h(t_n) = tau^-rho / Gamma(2 - rho) sum_{j<n} b_j (h_{n-j} - h_{n-j-1}),
/// b_j = (j + 1)^(1 - rho) - j^(1 - rho). `samples[0]` is h(0).
pub fn l1_caputo(samples: &[f64], tau: f64, rho: f64) -> L1Derivative {
    let n = samples.len().saturating_sub(1);
    let a = 1.0 - rho;
    let b: Vec<f64> = (0..n).map(|j| ((j + 1) as f64).powf(a) - (j as f64).powf(a)).collect();
    let scale = tau.powf(-rho) / gamma_reference(2.0 - rho, 30);
    let diffs: Vec<f64> = samples.windows(2).map(|w| w[1] - w[0]).collect();
    let values = (1..=n)
        .map(|m| {
            let mut s = 0.0;
            for j in 0..m {
                s += b[j] * diffs[m - 1 - j];
            }
            scale * s
        })
        .collect();
    L1Derivative {
        values,
        coarse_warning: samples.len() < 16,
    }
}

/// Extrema and monotonicity of a scalar map on a uniform grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeScan {
    pub min: f64,
    pub max: f64,
    /// Strictly monotone (in either direction) across the grid.
    pub monotone: bool,
    pub decreasing: bool,
    /// Sign changes of successive differences.
    pub sign_changes: usize,
}

pub fn range_scan(map: impl Fn(f64) -> f64, lo: f64, hi: f64, grid_points: usize) -> RangeScan {
    assert!(lo < hi && grid_points >= 2);
    let step = (hi - lo) / (grid_points - 1) as f64;
    let values: Vec<f64> = (0..grid_points).map(|i| map(lo + step * i as f64)).collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let signs: Vec<i8> = values
        .windows(2)
        .map(|w| match w[1].partial_cmp(&w[0]) {
            Some(std::cmp::Ordering::Greater) => 1,
            Some(std::cmp::Ordering::Less) => -1,
            _ => 0,
        })
        .collect();
    let nonzero: Vec<i8> = signs.iter().copied().filter(|&s| s != 0).collect();
    let sign_changes = nonzero.windows(2).filter(|w| w[0] != w[1]).count();
    let all_down = signs.iter().all(|&s| s == -1);
    let all_up = signs.iter().all(|&s| s == 1);
    RangeScan {
        min,
        max,
        monotone: all_down || all_up,
        decreasing: all_down,
        sign_changes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_examples() {
        let cfg = OracleConfig::default();
        assert!((ml_reference(1.0, -5.0, &cfg).unwrap() - (-5.0_f64).exp()).abs() < 1e-16);
        let v = ml_reference(0.5, -2.0, &cfg).unwrap();
        assert!((v - erfcx(2.0)).abs() < 1e-15);
        assert!((v - 0.255_395_676_310_505_7).abs() < 1e-15);
        assert_eq!(ml_reference(0.3, 0.0, &cfg).unwrap(), 1.0);
        assert!(matches!(ml_reference(0.5, -61.0, &cfg), Err(Error::OracleRange(_))));
    }

    #[test]
    fn precision_floor_is_enforced() {
        let cfg = OracleConfig {
            precision_digits: 20,
            ..OracleConfig::default()
        };
        assert!(ml_reference(0.5, -1.0, &cfg).is_err());
    }

    #[test]
    fn two_reference_routes_agree() {
        let cfg = OracleConfig::default();
        for (rho, x) in [(0.3, 1.5), (0.5, 3.0), (0.7, 6.0), (0.9, 20.0), (0.95, 40.0)] {
            let (series, route) = ml_reference_traced(rho, -x, &cfg).unwrap();
            assert_eq!(route, ReferenceRoute::ExtendedSeries);
            let integral = spectral_integral(rho, x);
            assert!(
                (series - integral).abs() < 1e-14,
                "rho {rho} x {x}: {series} vs {integral}"
            );
        }
    }

    #[test]
    fn small_rho_large_argument_uses_integral() {
        let cfg = OracleConfig::default();
        let (v, route) = ml_reference_traced(0.1, -50.0, &cfg).unwrap();
        assert_eq!(route, ReferenceRoute::SpectralIntegral);
        // leading asymptotic term 1 / (Gamma(0.9) x)
        let lead = 1.0 / (gamma_reference(0.9, 30) * 50.0);
        assert!((v - lead).abs() < 0.05 * lead);
    }

    #[test]
    fn erfcx_values() {
        assert_eq!(erfcx(0.0), 1.0);
        assert!((erfcx(1.0) - 0.427_583_576_155_807).abs() < 1e-15);
        // asymptotically 1 / (x sqrt(pi))
        let x = 1e4;
        assert!((erfcx(x) * x * PI.sqrt() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fd_examples() {
        assert!((fd_derivative(|x| x * x, 3.0, 1e-6) - 6.0).abs() < 1e-8);
        assert_eq!(fd_derivative(|_| 2.5, 1.0, 1e-6), 0.0);
    }

    #[test]
    fn l1_kills_constants() {
        let d = l1_caputo(&[3.0; 65], 1.0 / 64.0, 0.4);
        assert!(d.values.iter().all(|&v| v == 0.0));
        assert!(!d.coarse_warning);
        assert!(l1_caputo(&[1.0; 8], 0.1, 0.4).coarse_warning);
    }

    #[test]
    fn l1_monomial_order() {
        // D^rho t = t^(1 - rho) / Gamma(2 - rho); L1 is exact for linear data
        let rho = 0.5;
        let n = 64;
        let tau = 1.0 / n as f64;
        let samples: Vec<f64> = (0..=n).map(|j| j as f64 * tau).collect();
        let d = l1_caputo(&samples, tau, rho);
        let g = gamma_reference(2.0 - rho, 30);
        for (i, v) in d.values.iter().enumerate() {
            let t = (i + 1) as f64 * tau;
            assert!((v - t.powf(1.0 - rho) / g).abs() < 1e-12);
        }
    }

    #[test]
    fn range_scan_examples() {
        let c = range_scan(|_| 1.0, 0.0, 1.0, 64);
        assert!(!c.monotone);
        assert_eq!(c.sign_changes, 0);
        let d = range_scan(|x| (-x).exp(), 0.0, 1.0, 64);
        assert!(d.monotone && d.decreasing);
        assert!((d.max - 1.0).abs() < 1e-15);
        let w = range_scan(|x| (x - 0.5).powi(2), 0.0, 1.0, 64);
        assert_eq!(w.sign_changes, 1);
    }
}
