//! Forward solution u(t) = sum_k phi_k E_rho(-lambda_k^sigma t^rho) v_k.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::l1_caputo;
use crate::specfun::{calibrated, ml_eval, MLArgument};
use crate::spectral::{InitialData, SpectralModel};

/// The pair (rho, sigma). rho = 1 is accepted as the classical case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub rho: f64,
    pub sigma: f64,
}

impl FracParams {
    pub fn new(rho: f64, sigma: f64) -> Result<Self> {
        let p = Self { rho, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "rho",
                value: self.rho,
                reason: "must be in (0, 1]",
            });
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: self.sigma,
                reason: "must be positive",
            });
        }
        Ok(())
    }

    pub fn argument(&self, lambda: f64, t: f64) -> Result<MLArgument> {
        MLArgument::new(self.rho, self.sigma, lambda, t)
    }
}

/// E_rho(-lambda^sigma t^rho) with E = 1 at t = 0.
fn relaxation(params: &FracParams, lambda: f64, t: f64) -> Result<f64> {
    if t == 0.0 {
        return Ok(1.0);
    }
    Ok(ml_eval(&params.argument(lambda, t)?)?.value)
}

/// T_k(t) = phi_k E_rho(-lambda_k^sigma t^rho), k 1-based.
pub fn mode_coefficient(
    model: &SpectralModel,
    params: &FracParams,
    data: &InitialData,
    k: usize,
    t: f64,
) -> Result<f64> {
    let lambda = model.eigenvalue(k)?;
    let phi = data.coefficient(k);
    if phi == 0.0 {
        return Ok(0.0);
    }
    Ok(phi * relaxation(params, lambda, t)?)
}

/// |(u(t), v_k*)| together with the mode it was taken on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Observation {
    pub value: f64,
    /// 1-based mode index.
    pub index: usize,
    pub lambda: f64,
    pub phi_abs: f64,
    /// |phi| below 1e-14; the observation carries no information.
    pub phi_vanishes: bool,
}

/// The mode observed by the functional: 1, or k* when lambda_1 = 1.
pub fn observation_index(model: &SpectralModel) -> usize {
    if model.unit_eigenvalue() {
        model.observation_index().unwrap_or(1)
    } else {
        1
    }
}

/// |phi_1| E_rho(-lambda_1^sigma t^rho), taken on mode k* when lambda_1 = 1.
pub fn observe_mode1(model: &SpectralModel, params: &FracParams, data: &InitialData, t: f64) -> Result<Observation> {
    let index = observation_index(model);
    let lambda = model.eigenvalue(index)?;
    let phi_abs = data.coefficient(index).abs();
    let value = if phi_abs == 0.0 {
        0.0
    } else {
        phi_abs * relaxation(params, lambda, t)?
    };
    Ok(Observation {
        value,
        index,
        lambda,
        phi_abs,
        phi_vanishes: phi_abs < crate::spectral::PHI1_ZERO,
    })
}

/// Truncation level and its certified bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub k: usize,
    pub tail_bound: f64,
}

/// Bound on ||u(t) - S_K(t)|| from |E_rho(-X)| <= C / (1 + X).
///
/// Coefficients stored beyond the spectrum are charged with lambda_len,
/// which underestimates their eigenvalues.
pub fn tail_bound(model: &SpectralModel, params: &FracParams, data: &InitialData, k: usize, t: f64) -> f64 {
    let c = calibrated().decay;
    let n = model.len();
    let lambda_last = model.eigenvalues[n - 1];
    let mut acc = 0.0;
    for j in (k + 1)..=data.len() {
        let phi = data.coefficient(j);
        if phi == 0.0 {
            continue;
        }
        let lambda = if j <= n { model.eigenvalues[j - 1] } else { lambda_last };
        let x = lambda.powf(params.sigma) * t.powf(params.rho);
        acc += (phi * c / (1.0 + x)).powi(2);
    }
    acc.sqrt()
}

/// Smallest K with tail bound at t_min below tol.
pub fn truncation_k(
    model: &SpectralModel,
    params: &FracParams,
    data: &InitialData,
    t_min: f64,
    tol: f64,
) -> Result<Truncation> {
    if !(tol > 0.0) || !(t_min > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol, t_min",
            value: tol.min(t_min),
            reason: "must be positive",
        });
    }
    let kmax = model.len().min(data.len());
    for k in 0..=kmax {
        let b = tail_bound(model, params, data, k, t_min);
        if b < tol {
            return Ok(Truncation { k, tail_bound: b });
        }
    }
    Err(Error::InsufficientPrefix {
        stored: kmax,
        tol,
        bound: tail_bound(model, params, data, kmax, t_min),
    })
}

/// Pointwise value of u with its truncation record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldValue {
    pub u: f64,
    pub k_used: usize,
    pub tail_bound: f64,
}

/// u(x, t) truncated so that the norm tail bound at t is below tol.
pub fn evaluate_field(
    model: &SpectralModel,
    params: &FracParams,
    data: &InitialData,
    point: &[f64],
    t: f64,
    tol: f64,
) -> Result<FieldValue> {
    if !model.has_eigenfunctions() {
        return Err(Error::NoEigenfunctions);
    }
    let trunc = truncation_k(model, params, data, t, tol)?;
    let u = partial_sum(model, params, data, point, t, trunc.k)?;
    Ok(FieldValue {
        u,
        k_used: trunc.k,
        tail_bound: trunc.tail_bound,
    })
}

fn partial_sum(
    model: &SpectralModel,
    params: &FracParams,
    data: &InitialData,
    point: &[f64],
    t: f64,
    k: usize,
) -> Result<f64> {
    let terms = (1..=k)
        .into_par_iter()
        .map(|j| {
            let phi = data.coefficient(j);
            if phi == 0.0 {
                return Ok(0.0);
            }
            Ok(mode_coefficient(model, params, data, j, t)? * model.eigenfunction(j, point)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum())
}

/// max_j |D^rho T_k(t_j) + lambda_k^sigma T_k(t_j)| with the L1 scheme on
/// t_j = j T / n, j = 1..n.
pub fn caputo_residual(
    model: &SpectralModel,
    params: &FracParams,
    data: &InitialData,
    k: usize,
    t_end: f64,
    n: usize,
) -> Result<f64> {
    if n < 64 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "grid needs at least 64 nodes",
        });
    }
    let lambda = model.eigenvalue(k)?;
    if data.coefficient(k) == 0.0 {
        return Ok(0.0);
    }
    let tau = t_end / n as f64;
    let samples = (0..=n)
        .into_par_iter()
        .map(|j| mode_coefficient(model, params, data, k, j as f64 * tau))
        .collect::<Result<Vec<f64>>>()?;
    let mu = lambda.powf(params.sigma);
    let d = if params.rho == 1.0 {
        // backward differences
        samples.windows(2).map(|w| (w[1] - w[0]) / tau).collect()
    } else {
        l1_caputo(&samples, tau, params.rho).values
    };
    Ok(d.iter()
        .zip(&samples[1..])
        .map(|(dv, v)| (dv + mu * v).abs())
        .fold(0.0, f64::max))
}

/// A forward run: the data plus a truncation certified for t >= t_min.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForwardSolution {
    pub model: SpectralModel,
    pub params: FracParams,
    pub data: InitialData,
    pub t_min: f64,
    pub k_used: usize,
    pub tail_bound: f64,
}

/// One row of the time-series output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    pub observation: f64,
    pub tail_bound: f64,
}

/// One row of the field output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldRow {
    pub x: Vec<f64>,
    pub t: f64,
    pub u: f64,
}

impl ForwardSolution {
    pub fn new(model: SpectralModel, params: FracParams, data: InitialData, t_min: f64, tol: f64) -> Result<Self> {
        model.validate()?;
        params.validate()?;
        let trunc = truncation_k(&model, &params, &data, t_min, tol)?;
        Ok(Self {
            model,
            params,
            data,
            t_min,
            k_used: trunc.k,
            tail_bound: trunc.tail_bound,
        })
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t < self.t_min {
            return Err(Error::InvalidParameter {
                name: "t",
                value: t,
                reason: "below the certified t_min",
            });
        }
        Ok(())
    }

    pub fn observe(&self, t: f64) -> Result<Observation> {
        observe_mode1(&self.model, &self.params, &self.data, t)
    }

    pub fn field(&self, point: &[f64], t: f64) -> Result<f64> {
        self.check_time(t)?;
        if !self.model.has_eigenfunctions() {
            return Err(Error::NoEigenfunctions);
        }
        partial_sum(&self.model, &self.params, &self.data, point, t, self.k_used)
    }

    /// Rows (t, observation, tail bound of the truncated u(t)).
    pub fn time_series(&self, times: &[f64]) -> Result<Vec<SeriesRow>> {
        times
            .par_iter()
            .map(|&t| {
                self.check_time(t)?;
                Ok(SeriesRow {
                    t,
                    observation: self.observe(t)?.value,
                    tail_bound: tail_bound(&self.model, &self.params, &self.data, self.k_used, t),
                })
            })
            .collect()
    }

    pub fn field_rows(&self, points: &[Vec<f64>], times: &[f64]) -> Result<Vec<FieldRow>> {
        let pairs: Vec<(&Vec<f64>, f64)> = times.iter().flat_map(|&t| points.iter().map(move |p| (p, t))).collect();
        pairs
            .into_par_iter()
            .map(|(p, t)| {
                Ok(FieldRow {
                    x: p.clone(),
                    t,
                    u: self.field(p, t)?,
                })
            })
            .collect()
    }
}

/// Shortest decimal that round-trips to the same f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_series_csv(mut w: impl Write, rows: &[SeriesRow]) -> Result<()> {
    writeln!(w, "t,observation,tail_bound")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.observation),
            fmt_f64(r.tail_bound)
        )?;
    }
    Ok(())
}

/// Field CSV; a multi-dimensional point is written as space-separated coordinates.
pub fn write_field_csv(mut w: impl Write, rows: &[FieldRow]) -> Result<()> {
    writeln!(w, "x,t,u")?;
    for r in rows {
        let x: Vec<String> = r.x.iter().map(|c| fmt_f64(*c)).collect();
        writeln!(w, "{},{},{}", x.join(" "), fmt_f64(r.t), fmt_f64(r.u))?;
    }
    Ok(())
}
