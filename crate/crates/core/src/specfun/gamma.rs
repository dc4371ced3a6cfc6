//! Gamma, log-gamma and digamma on the real line.
//!
//! Gamma uses a Lanczos sum (g = 7, nine coefficients) with the reflection
//! formula below 1/2. Digamma shifts the argument above 10 with the
//! recurrence and finishes with the Bernoulli asymptotic expansion.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Coefficient table of a Lanczos approximation.
#[derive(Debug, Clone, PartialEq)]
pub struct LanczosTable {
    pub g: f64,
    pub coefficients: [f64; 9],
}

pub const LANCZOS: LanczosTable = LanczosTable {
    g: 7.0,
    coefficients: [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ],
};

impl LanczosTable {
    fn series(&self, x: f64) -> f64 {
        // x is the shifted argument (Gamma(x + 1) form)
        let c = &self.coefficients;
        let mut sum = c[0];
        for (i, &ci) in c.iter().enumerate().skip(1) {
            sum += ci / (x + i as f64);
        }
        sum
    }

    /// Gamma(x) for x >= 1/2.
    fn gamma_positive(&self, x: f64) -> f64 {
        let xm1 = x - 1.0;
        let t = xm1 + self.g + 0.5;
        // split the power so that t^(x-1/2) does not overflow before exp(-t) is applied
        let half = t.powf(0.5 * (xm1 + 0.5));
        (2.0 * PI).sqrt() * half * ((-t).exp() * half) * self.series(xm1)
    }

    fn ln_gamma_positive(&self, x: f64) -> f64 {
        let xm1 = x - 1.0;
        let t = xm1 + self.g + 0.5;
        LN_SQRT_2PI + (xm1 + 0.5) * t.ln() - t + self.series(xm1).ln()
    }

    /// Gamma function using this table.
    pub fn gamma(&self, x: f64) -> Result<f64> {
        if x.is_nan() {
            return Ok(f64::NAN);
        }
        if x <= 0.0 && x == x.floor() {
            return Err(Error::Pole(x));
        }
        if (1.0..=23.0).contains(&x) && x == x.floor() {
            return Ok(factorial(x as usize - 1));
        }
        if x >= 0.5 {
            if x > 171.7 {
                return Ok(f64::INFINITY);
            }
            Ok(self.gamma_positive(x))
        } else {
            let s = sin_pi(x);
            Ok(PI / (s * self.gamma_positive(1.0 - x)))
        }
    }
}

/// n! for n <= 22, exact in f64.
fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// sin(pi x) with exact zeros at the integers.
pub(crate) fn sin_pi(x: f64) -> f64 {
    let n = x.round();
    let r = x - n;
    let s = (PI * r).sin();
    if (n as i64) % 2 == 0 {
        s
    } else {
        -s
    }
}

/// Euler's gamma function. Fails at the poles 0, -1, -2, ...
pub fn gamma_fn(x: f64) -> Result<f64> {
    LANCZOS.gamma(x)
}

/// Reciprocal gamma, entire: returns 0 at the poles instead of failing.
pub fn rgamma(x: f64) -> f64 {
    match gamma_fn(x) {
        Ok(g) => 1.0 / g,
        Err(_) => 0.0,
    }
}

/// ln Gamma(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain {
            function: "ln_gamma",
            value: x,
            reason: "requires x > 0",
        });
    }
    if x < 0.5 {
        // Gamma(x) = Gamma(x + 1) / x
        return Ok(LANCZOS.ln_gamma_positive(x + 1.0) - x.ln());
    }
    if x < 20.0 {
        return Ok(LANCZOS.gamma_positive(x).ln());
    }
    Ok(LANCZOS.ln_gamma_positive(x))
}

// B_{2k} / (2k) for k = 1..8
const DIGAMMA_ASYMPTOTIC: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32_760.0,
    1.0 / 12.0,
    -3_617.0 / 8_160.0,
];

/// Digamma Psi(x) = d/dx ln Gamma(x), for x > 0.
pub fn digamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain {
            function: "digamma",
            value: x,
            reason: "requires x > 0",
        });
    }
    let mut shift = 0.0;
    let mut x = x;
    while x < 10.0 {
        shift += 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    let mut poly = 0.0;
    for &c in DIGAMMA_ASYMPTOTIC.iter().rev() {
        poly = poly * inv2 + c;
    }
    Ok(x.ln() - 0.5 / x - poly * inv2 - shift)
}
