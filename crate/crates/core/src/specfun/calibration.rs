//! Empirical constants for the decay estimates of E_rho(-X), X = lambda^sigma t^rho.
//!
//! Each constant is the maximum of the relevant ratio over a fixed grid,
//! times [`MARGIN`]. They are computed once on first use.

use std::sync::OnceLock;

use serde::Serialize;

use super::contour::{path_integrals, HankelContour};
use super::mittag_leffler::ml_neg;

pub const MARGIN: f64 = 1.1;

/// Grid used for calibration.
pub const RHO_GRID: (f64, f64, usize) = (0.1, 0.95, 10);
pub const X_GRID: (f64, f64, usize) = (2.0, 1e4, 12);
pub const T_GRID: (f64, f64, usize) = (2.0, 1e4, 8);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalibratedConstants {
    /// sup E_rho(-X) (1 + X), X >= 0.
    pub decay: f64,
    /// sup |q| X^2, X >= 2.
    pub q_decay: f64,
    /// sup |dq/drho| X^2 / (1/rho + ln t), t >= 2, X >= 2.
    pub drho_q: f64,
    /// sup |dq/dsigma| lambda^(2 sigma) t^rho / |ln lambda|, t >= 1, X >= 2.
    pub dsigma_q: f64,
    /// 2 (1 + dsigma_q), the constant of the two-time spacing condition.
    pub spacing: f64,
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

fn compute() -> CalibratedConstants {
    let rhos = linspace(RHO_GRID.0, RHO_GRID.1, RHO_GRID.2);
    let xs = geomspace(X_GRID.0, X_GRID.1, X_GRID.2);
    let ts = geomspace(T_GRID.0, T_GRID.1, T_GRID.2);

    let mut decay: f64 = 1.0;
    for &rho in &rhos {
        for x in geomspace(1e-3, 1e4, 25) {
            if let Ok(v) = ml_neg(rho, x) {
                decay = decay.max(v.value * (1.0 + x));
            }
        }
    }

    let mut q_decay: f64 = 0.0;
    let mut drho_q: f64 = 0.0;
    let mut dsigma_q: f64 = 0.0;
    for &rho in &rhos {
        let contour = HankelContour::for_rho(rho);
        for &x in &xs {
            let Ok(path) = path_integrals(rho, x, &contour) else {
                continue;
            };
            let x2 = x * x;
            q_decay = q_decay.max(path.q(rho, x).q.abs() * x2);
            // dq/dsigma / ln lambda = X dq/dX, independent of how X splits
            dsigma_q = dsigma_q.max(path.dq_dsigma(rho, x, 1.0).abs() * x2);
            for &t in &ts {
                let ln_t = t.ln();
                let r = path.dq_drho(rho, x, ln_t).abs() * x2 / (1.0 / rho + ln_t);
                drho_q = drho_q.max(r);
            }
        }
    }
    let dsigma_q = MARGIN * dsigma_q;
    CalibratedConstants {
        decay,
        q_decay: MARGIN * q_decay,
        drho_q: MARGIN * drho_q,
        dsigma_q,
        spacing: 2.0 * (1.0 + dsigma_q),
    }
}

/// The calibrated constants, computed on first call.
pub fn calibrated() -> &'static CalibratedConstants {
    static CONSTANTS: OnceLock<CalibratedConstants> = OnceLock::new();
    CONSTANTS.get_or_init(compute)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_are_finite_and_ordered() {
        let c = calibrated();
        assert_eq!(c.decay, 1.0);
        for v in [c.q_decay, c.drho_q, c.dsigma_q] {
            assert!(v.is_finite() && v > 0.0);
        }
        assert!(c.spacing > 2.0);
    }

    #[test]
    fn grids() {
        assert_eq!(linspace(0.0, 1.0, 3), vec![0.0, 0.5, 1.0]);
        let g = geomspace(1.0, 100.0, 3);
        assert!((g[1] - 10.0).abs() < 1e-12);
    }
}
