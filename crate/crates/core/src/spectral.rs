//! Dirichlet spectra of standard domains and fractional operator powers.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Magnitude below which phi_1 counts as zero.
pub const PHI1_ZERO: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Interval { length: f64 },
    Rectangle { lx: f64, ly: f64 },
    Custom,
}

/// Ordered Dirichlet eigenvalues with (for interval and rectangle) the
/// lattice indices needed to evaluate eigenfunctions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralModel {
    pub domain: Domain,
    pub eigenvalues: Vec<f64>,
    /// (m, n) of each rectangle mode; (k, 0) on the interval; empty for custom.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modes: Vec<(usize, usize)>,
}

impl SpectralModel {
    pub fn interval(length: f64, k: usize) -> Result<Self> {
        positive("length", length)?;
        if k == 0 {
            return Err(Error::InvalidSpectrum("need at least one mode".into()));
        }
        let eigenvalues = (1..=k).map(|j| (j as f64 * PI / length).powi(2)).collect();
        Ok(Self {
            domain: Domain::Interval { length },
            eigenvalues,
            modes: (1..=k).map(|j| (j, 0)).collect(),
        })
    }

    /// The first `k` eigenvalues (m pi / lx)^2 + (n pi / ly)^2, ties in (m, n)
    /// lexicographic order.
    pub fn rectangle(lx: f64, ly: f64, k: usize) -> Result<Self> {
        positive("lx", lx)?;
        positive("ly", ly)?;
        if k == 0 {
            return Err(Error::InvalidSpectrum("need at least one mode".into()));
        }
        let lam = |m: usize, n: usize| (m as f64 * PI / lx).powi(2) + (n as f64 * PI / ly).powi(2);
        // any mode among the first k has m, n <= k
        let mut all: Vec<(f64, usize, usize)> = Vec::with_capacity(k * k);
        for m in 1..=k {
            for n in 1..=k {
                all.push((lam(m, n), m, n));
            }
        }
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        all.truncate(k);
        Ok(Self {
            domain: Domain::Rectangle { lx, ly },
            eigenvalues: all.iter().map(|e| e.0).collect(),
            modes: all.iter().map(|e| (e.1, e.2)).collect(),
        })
    }

    /// A model given only by its eigenvalues; no eigenfunctions.
    pub fn custom(eigenvalues: Vec<f64>) -> Result<Self> {
        let model = Self {
            domain: Domain::Custom,
            eigenvalues,
            modes: Vec::new(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        let ev = &self.eigenvalues;
        if ev.is_empty() {
            return Err(Error::InvalidSpectrum("empty spectrum".into()));
        }
        if let Some(bad) = ev.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidSpectrum(format!("eigenvalue {bad} is not positive")));
        }
        if let Some(i) = ev.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidSpectrum(format!(
                "eigenvalues decrease at index {}: {} > {}",
                i + 2,
                ev[i],
                ev[i + 1]
            )));
        }
        if !matches!(self.domain, Domain::Custom) && self.modes.len() != ev.len() {
            return Err(Error::InvalidSpectrum("mode table does not match the spectrum".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// lambda_k, 1-based.
    pub fn eigenvalue(&self, k: usize) -> Result<f64> {
        self.check_index(k)?;
        Ok(self.eigenvalues[k - 1])
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.len() {
            return Err(Error::ModeIndex {
                index: k,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// lambda_1 == 1.
    pub fn unit_eigenvalue(&self) -> bool {
        self.eigenvalues[0] == 1.0
    }

    /// First index k* (1-based) with lambda_k* != 1.
    pub fn observation_index(&self) -> Option<usize> {
        self.eigenvalues.iter().position(|&l| l != 1.0).map(|i| i + 1)
    }

    pub fn has_eigenfunctions(&self) -> bool {
        !matches!(self.domain, Domain::Custom)
    }

    /// v_k(point), 1-based. The point has one coordinate on the interval and
    /// two on the rectangle.
    pub fn eigenfunction(&self, k: usize, point: &[f64]) -> Result<f64> {
        self.check_index(k)?;
        let (m, n) = self.modes.get(k - 1).copied().ok_or(Error::NoEigenfunctions)?;
        match self.domain {
            Domain::Interval { length } => {
                let x = coordinate(point, 0, 1)?;
                Ok((2.0 / length).sqrt() * sin_mode(m, x / length))
            }
            Domain::Rectangle { lx, ly } => {
                let x = coordinate(point, 0, 2)?;
                let y = coordinate(point, 1, 2)?;
                Ok(2.0 / (lx * ly).sqrt() * sin_mode(m, x / lx) * sin_mode(n, y / ly))
            }
            Domain::Custom => Err(Error::NoEigenfunctions),
        }
    }
}

// sin(m pi s), exactly zero at s = 0 and s = 1
fn sin_mode(m: usize, s: f64) -> f64 {
    if s == 0.0 || s == 1.0 {
        return 0.0;
    }
    (m as f64 * PI * s).sin()
}

fn coordinate(point: &[f64], i: usize, dim: usize) -> Result<f64> {
    if point.len() != dim {
        return Err(Error::InvalidParameter {
            name: "point",
            value: point.len() as f64,
            reason: "dimension does not match the domain",
        });
    }
    Ok(point[i])
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value: v,
            reason: "must be positive",
        })
    }
}

/// Fourier coefficients phi_k = (phi, v_k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub coefficients: Vec<f64>,
}

impl InitialData {
    pub fn new(coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "coefficients",
                value: f64::NAN,
                reason: "must be finite",
            });
        }
        Ok(Self { coefficients })
    }

    /// The k-th unit vector e_k of length `len`.
    pub fn unit(k: usize, len: usize) -> Result<Self> {
        if k == 0 || k > len {
            return Err(Error::ModeIndex { index: k, len });
        }
        let mut c = vec![0.0; len];
        c[k - 1] = 1.0;
        Ok(Self { coefficients: c })
    }

    /// phi_k = 1 / k.
    pub fn decay_1_over_k(len: usize) -> Self {
        Self {
            coefficients: (1..=len).map(|k| 1.0 / k as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// phi_k, 1-based; zero past the stored prefix.
    pub fn coefficient(&self, k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        self.coefficients.get(k - 1).copied().unwrap_or(0.0)
    }

    pub fn phi1(&self) -> f64 {
        self.coefficient(1)
    }

    /// |phi_1| < 1e-14.
    pub fn phi1_vanishes(&self) -> bool {
        self.phi1().abs() < PHI1_ZERO
    }

    pub fn norm(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// (sum_{k > j} phi_k^2)^(1/2) for j = 0..=len.
    pub fn tail_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len() + 1];
        let mut acc = 0.0;
        for j in (0..self.len()).rev() {
            acc += self.coefficients[j].powi(2);
            out[j] = acc.sqrt();
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracPower {
    sigma: f64,
}

impl FracPower {
    /// sigma >= 0 (sigma = 0 is the identity).
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: sigma,
                reason: "must be finite and non-negative",
            });
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

/// A^sigma g over the stored prefix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FracPowerResult {
    pub data: InitialData,
    /// sum lambda_k^(2 sigma) g_k^2, the squared norm of A^sigma g.
    pub domain_proxy: f64,
}

pub fn apply_frac_power(model: &SpectralModel, power: FracPower, g: &InitialData) -> Result<FracPowerResult> {
    if g.len() != model.len() {
        return Err(Error::InvalidParameter {
            name: "coefficients",
            value: g.len() as f64,
            reason: "length must equal the number of stored eigenvalues",
        });
    }
    let s = power.sigma();
    let coefficients: Vec<f64> = model
        .eigenvalues
        .iter()
        .zip(&g.coefficients)
        .map(|(l, c)| if s == 0.0 { *c } else { l.powf(s) * c })
        .collect();
    let domain_proxy = coefficients.iter().map(|c| c * c).sum();
    Ok(FracPowerResult {
        data: InitialData { coefficients },
        domain_proxy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI2: f64 = PI * PI;

    #[test]
    fn interval_spectrum() {
        let m = SpectralModel::interval(1.0, 3).unwrap();
        for (k, l) in m.eigenvalues.iter().enumerate() {
            let kk = (k + 1) as f64;
            assert!((l - kk * kk * PI2).abs() < 1e-12);
        }
        let half = SpectralModel::interval(2.0, 1).unwrap();
        assert!((half.eigenvalues[0] - 2.467_401_100_272_339_7).abs() < 1e-12);
        let v = SpectralModel::interval(1.0, 2)
            .unwrap()
            .eigenfunction(1, &[0.5])
            .unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rectangle_spectrum() {
        let sq = SpectralModel::rectangle(1.0, 1.0, 4).unwrap();
        assert!((sq.eigenvalues[0] - 2.0 * PI2).abs() < 1e-12);
        assert!((sq.eigenvalues[1] - 5.0 * PI2).abs() < 1e-12);
        assert!((sq.eigenvalues[2] - 5.0 * PI2).abs() < 1e-12);
        assert!((sq.eigenvalues[3] - 8.0 * PI2).abs() < 1e-12);
        assert_eq!(&sq.modes[1..3], &[(1, 2), (2, 1)]);
        let r = SpectralModel::rectangle(1.0, 2.0, 1).unwrap();
        assert!((r.eigenvalues[0] - 1.25 * PI2).abs() < 1e-12);
    }

    #[test]
    fn custom_spectrum() {
        let unit = SpectralModel::custom(vec![1.0]).unwrap();
        assert!(unit.unit_eigenvalue());
        assert_eq!(unit.observation_index(), None);
        let m = SpectralModel::custom(vec![1.0, 1.0, 3.0]).unwrap();
        assert_eq!(m.observation_index(), Some(3));
        assert!(!SpectralModel::custom(vec![2.0, 3.0, 5.0]).unwrap().unit_eigenvalue());
        assert!(SpectralModel::custom(vec![3.0, 2.0]).is_err());
        assert!(SpectralModel::custom(vec![0.0, 2.0]).is_err());
        assert!(matches!(unit.eigenfunction(1, &[0.1]), Err(Error::NoEigenfunctions)));
    }

    #[test]
    fn boundary_values_vanish() {
        let m = SpectralModel::interval(1.0, 5).unwrap();
        for k in 1..=5 {
            assert_eq!(m.eigenfunction(k, &[0.0]).unwrap(), 0.0);
            assert_eq!(m.eigenfunction(k, &[1.0]).unwrap(), 0.0);
        }
        let r = SpectralModel::rectangle(1.0, 2.0, 5).unwrap();
        assert_eq!(r.eigenfunction(3, &[0.3, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn frac_power_examples() {
        let m = SpectralModel::interval(1.0, 3).unwrap();
        let g = InitialData::new(vec![0.3, -1.0, 2.0]).unwrap();
        let id = apply_frac_power(&m, FracPower::new(0.0).unwrap(), &g).unwrap();
        assert_eq!(id.data, g);
        let e1 = InitialData::unit(1, 3).unwrap();
        let a = apply_frac_power(&m, FracPower::new(1.0).unwrap(), &e1).unwrap();
        assert!((a.data.coefficients[0] - PI2).abs() < 1e-12);
        let e2 = InitialData::unit(2, 3).unwrap();
        let h = apply_frac_power(&m, FracPower::new(0.5).unwrap(), &e2).unwrap();
        assert!((h.data.coefficients[1] - 2.0 * PI).abs() < 1e-12);
        assert!((h.domain_proxy - 4.0 * PI2).abs() < 1e-10);
    }

    #[test]
    fn phi1_flag_and_tails() {
        let g = InitialData::new(vec![1e-15, 3.0, 4.0]).unwrap();
        assert!(g.phi1_vanishes());
        assert!((g.norm() - 5.0).abs() < 1e-12);
        let t = g.tail_norms();
        assert!((t[1] - 5.0).abs() < 1e-12);
        assert!((t[2] - 4.0).abs() < 1e-12);
        assert_eq!(t[3], 0.0);
    }
}
