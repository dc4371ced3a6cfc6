//! Hankel-path quadrature for the correction term q of the
//! decomposition E_rho(-X) = p + q with X = lambda^sigma t^rho.
//!
//! The path runs in along arg xi = -beta from infinity to |xi| = 1, around
//! the unit arc, and out along arg xi = +beta, with beta = 3 pi rho / 4.
//! Rays are parametrized by r = |xi|^(1/rho), so that
//! exp(xi^(1/rho)) = exp(r e^{3 i pi / 4}) decays like exp(-r / sqrt 2)
//! independently of rho.
//!
//! Three integrals share one set of nodes:
//!
//! ```text
//! J0 = int G dxi,  J1 = int G (-xi^(1/rho) ln xi / rho^2) dxi,  J2 = int G (-X / (xi + X)) dxi
//! G  = exp(xi^(1/rho)) xi / (xi + X)
//! ```
//!
//! and q, dq/drho, dq/dsigma are linear combinations of them.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::quadrature::{for_each_node, PANEL_ORDER};
use crate::error::{Error, Result};

/// Upper limit of the ray parameter r; exp(-r/sqrt 2) r^2 < 1e-18 beyond it.
pub const RAY_R_MAX: f64 = 72.0;

/// Relative change between successive node doublings that counts as converged.
pub const DOUBLING_TOL: f64 = 1e-12;

/// Hard cap on the total number of quadrature nodes.
pub const MAX_NODES: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HankelContour {
    /// Half-opening angle of the rays.
    pub beta: f64,
    /// Ray cutoff |xi| = s_max.
    pub ray_cutoff: f64,
    /// Initial arc node count (multiple of the panel order).
    pub arc_nodes: usize,
    /// Initial node count on each ray.
    pub ray_nodes: usize,
}

impl HankelContour {
    pub fn for_rho(rho: f64) -> Self {
        Self {
            beta: 0.75 * PI * rho,
            ray_cutoff: RAY_R_MAX.powf(rho),
            arc_nodes: 2 * PANEL_ORDER,
            ray_nodes: 4 * PANEL_ORDER,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta < 0.75 * PI + 1e-12) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: self.beta,
                reason: "must lie in (0, 3 pi / 4)",
            });
        }
        if !(self.ray_cutoff > 1.0) {
            return Err(Error::InvalidParameter {
                name: "ray_cutoff",
                value: self.ray_cutoff,
                reason: "must exceed 1",
            });
        }
        if self.arc_nodes < 16 || self.ray_nodes < 32 {
            return Err(Error::InvalidParameter {
                name: "nodes",
                value: self.arc_nodes.min(self.ray_nodes) as f64,
                reason: "need at least 16 arc and 32 ray nodes",
            });
        }
        Ok(())
    }
}

/// One integral split over the three pieces of the path.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Pieces {
    pub ray_plus: Complex64,
    pub ray_minus: Complex64,
    pub arc: Complex64,
}

impl Pieces {
    pub fn total(&self) -> Complex64 {
        self.ray_plus + self.ray_minus + self.arc
    }
}

/// Raw path integrals for fixed (rho, X).
#[derive(Debug, Clone, Copy)]
pub struct PathIntegrals {
    pub j0: Pieces,
    pub j1: Pieces,
    pub j2: Pieces,
    /// Largest change between the last two doublings, relative to the L1 scale.
    pub rel_change: f64,
    /// L1 norm estimate of the J0 integrand, used to turn rel_change into an absolute error.
    pub l1_scale: f64,
    pub arc_nodes: usize,
    pub ray_nodes: usize,
}

#[derive(Default, Clone, Copy)]
struct Acc {
    j0: Pieces,
    j1: Pieces,
    j2: Pieces,
    l1: f64,
}

fn integrand(xi: Complex64, ln_xi: Complex64, dxi: Complex64, rho: f64, x: f64) -> [Complex64; 3] {
    let pow = (ln_xi / rho).exp(); // xi^(1/rho)
    let denom = xi + x;
    let g = pow.exp() * xi / denom * dxi;
    let b1 = -pow * ln_xi / (rho * rho);
    let b2 = -x / denom;
    [g, g * b1, g * b2]
}

fn accumulate(rho: f64, x: f64, contour: &HankelContour, arc_panels: usize, ray_panels: usize) -> Acc {
    let beta = contour.beta;
    let r_max = contour.ray_cutoff.powf(1.0 / rho);
    let mut acc = Acc::default();
    let e_plus = Complex64::from_polar(1.0, beta);
    let e_minus = e_plus.conj();

    for_each_node(1.0, r_max, ray_panels, |r, w| {
        let modulus = r.powf(rho);
        let dr = rho * r.powf(rho - 1.0) * w;
        let ln_mod = rho * r.ln();
        // outgoing ray, arg = +beta
        let xi = e_plus * modulus;
        let ln_xi = Complex64::new(ln_mod, beta);
        let v = integrand(xi, ln_xi, e_plus * dr, rho, x);
        acc.j0.ray_plus += v[0];
        acc.j1.ray_plus += v[1];
        acc.j2.ray_plus += v[2];
        acc.l1 += v[0].norm();
        // incoming ray, arg = -beta, traversed from infinity to 1
        let xi = e_minus * modulus;
        let ln_xi = Complex64::new(ln_mod, -beta);
        let v = integrand(xi, ln_xi, -e_minus * dr, rho, x);
        acc.j0.ray_minus += v[0];
        acc.j1.ray_minus += v[1];
        acc.j2.ray_minus += v[2];
        acc.l1 += v[0].norm();
    });

    for_each_node(-beta, beta, arc_panels, |phi, w| {
        let xi = Complex64::from_polar(1.0, phi);
        let ln_xi = Complex64::new(0.0, phi);
        let v = integrand(xi, ln_xi, Complex64::i() * xi * w, rho, x);
        acc.j0.arc += v[0];
        acc.j1.arc += v[1];
        acc.j2.arc += v[2];
        acc.l1 += v[0].norm();
    });
    acc
}

fn max_change(a: &Acc, b: &Acc) -> f64 {
    let d0 = (a.j0.total() - b.j0.total()).norm();
    let d1 = (a.j1.total() - b.j1.total()).norm();
    let d2 = (a.j2.total() - b.j2.total()).norm();
    d0.max(d1).max(d2)
}

/// Evaluate J0, J1, J2 along the Hankel path, doubling nodes until the
/// integrals stabilize. Requires X > 1 so that the pole -X lies outside
/// the closed unit arc.
pub fn path_integrals(rho: f64, x: f64, contour: &HankelContour) -> Result<PathIntegrals> {
    contour.validate()?;
    if !(x > 1.0) {
        return Err(Error::Domain {
            function: "ml_q_contour",
            value: x,
            reason: "contour route needs lambda^sigma t^rho > 1",
        });
    }
    let mut arc_panels = contour.arc_nodes.div_ceil(PANEL_ORDER);
    let mut ray_panels = contour.ray_nodes.div_ceil(PANEL_ORDER);
    let mut prev = accumulate(rho, x, contour, arc_panels, ray_panels);
    loop {
        arc_panels *= 2;
        ray_panels *= 2;
        let nodes = (arc_panels + 2 * ray_panels) * PANEL_ORDER;
        let cur = accumulate(rho, x, contour, arc_panels, ray_panels);
        let scale = cur.l1.max(f64::MIN_POSITIVE);
        let rel_change = max_change(&cur, &prev) / scale;
        if rel_change < DOUBLING_TOL {
            return Ok(PathIntegrals {
                j0: cur.j0,
                j1: cur.j1,
                j2: cur.j2,
                rel_change,
                l1_scale: cur.l1,
                arc_nodes: arc_panels * PANEL_ORDER,
                ray_nodes: ray_panels * PANEL_ORDER,
            });
        }
        if nodes * 2 > MAX_NODES {
            return Err(Error::NonConvergence {
                last_change: rel_change,
                nodes,
            });
        }
        prev = cur;
    }
}

/// q and its decomposition into the scaled pieces f_+, f_-, g.
#[derive(Debug, Clone, Copy)]
pub struct ContourQ {
    pub q: f64,
    pub f_plus: Complex64,
    pub f_minus: Complex64,
    pub g: Complex64,
    /// |Im(f_+ + f_- + g)|, zero up to rounding.
    pub imag_residue: f64,
    pub abs_err_est: f64,
    pub arc_nodes: usize,
    pub ray_nodes: usize,
}

/// Prefactor 1 / (2 pi i rho X).
fn prefactor(rho: f64, x: f64) -> Complex64 {
    Complex64::new(0.0, -1.0 / (2.0 * PI * rho * x))
}

impl PathIntegrals {
    pub fn q(&self, rho: f64, x: f64) -> ContourQ {
        let c = prefactor(rho, x);
        let f_plus = c * self.j0.ray_plus;
        let f_minus = c * self.j0.ray_minus;
        let g = c * self.j0.arc;
        let total = f_plus + f_minus + g;
        ContourQ {
            q: -total.re,
            f_plus,
            f_minus,
            g,
            imag_residue: total.im.abs(),
            abs_err_est: c.norm() * self.l1_scale * (self.rel_change + 4.0 * f64::EPSILON),
            arc_nodes: self.arc_nodes,
            ray_nodes: self.ray_nodes,
        }
    }

    /// dq/drho given ln t.
    pub fn dq_drho(&self, rho: f64, x: f64, ln_t: f64) -> f64 {
        let c = prefactor(rho, x);
        let j0 = self.j0.total();
        let combo = j0 * (-1.0 / rho - ln_t) + self.j1.total() + self.j2.total() * ln_t;
        -(c * combo).re
    }

    /// dq/dsigma given ln lambda.
    pub fn dq_dsigma(&self, rho: f64, x: f64, ln_lambda: f64) -> f64 {
        let c = prefactor(rho, x);
        let combo = (self.j2.total() - self.j0.total()) * ln_lambda;
        -(c * combo).re
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_1_SQRT_2;

    use super::*;

    #[test]
    fn default_contour_is_valid() {
        for rho in [0.05, 0.3, 0.7, 0.999_999] {
            let c = HankelContour::for_rho(rho);
            c.validate().unwrap();
            assert!(c.beta < 0.75 * PI);
            // tail bound at the cutoff
            let r = c.ray_cutoff.powf(1.0 / rho);
            assert!((-r * FRAC_1_SQRT_2).exp() < 1e-18);
        }
    }

    #[test]
    fn rejects_small_argument() {
        let c = HankelContour::for_rho(0.5);
        assert!(path_integrals(0.5, 0.9, &c).is_err());
    }

    #[test]
    fn conjugate_pieces_cancel() {
        for (rho, x) in [(0.3, 2.0), (0.5, 97.0), (0.9, 15.0)] {
            let c = HankelContour::for_rho(rho);
            let q = path_integrals(rho, x, &c).unwrap().q(rho, x);
            let scale = q.f_plus.norm() + q.f_minus.norm() + q.g.norm();
            assert!((q.f_plus.im + q.f_minus.im).abs() <= 1e-12 * scale);
            assert!(q.g.im.abs() <= 1e-12 * scale);
            assert!(q.imag_residue <= 1e-12 * scale);
        }
    }

    #[test]
    fn doubling_converges_within_cap() {
        let c = HankelContour::for_rho(0.6);
        let p = path_integrals(0.6, 50.0, &c).unwrap();
        assert!(p.rel_change < DOUBLING_TOL);
        assert!(p.arc_nodes + 2 * p.ray_nodes <= MAX_NODES);
    }
}
