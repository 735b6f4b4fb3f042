//! Varactor-diode load model and the reconfigurable parameter bank.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{DsaError, Result};

/// Equivalent-circuit constants of the varactor load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VaractorParams {
    pub r_v: f64,
    pub l1: f64,
    pub l2: f64,
    pub c_min: f64,
    pub c_max: f64,
}

impl Default for VaractorParams {
    fn default() -> Self {
        Self {
            r_v: 0.1,
            l1: 2.5e-9,
            l2: 0.7e-9,
            c_min: 0.47e-12,
            c_max: 2.35e-12,
        }
    }
}

impl VaractorParams {
    pub fn validate(&self) -> Result<()> {
        let all_pos = [self.l1, self.l2, self.c_min, self.c_max].iter().all(|&x| x > 0.0) && self.r_v >= 0.0;
        if !all_pos || self.c_max <= self.c_min {
            return Err(DsaError::InvalidParameter(format!("invalid varactor parameters {self:?}")));
        }
        Ok(())
    }
}

/// Unbounded parameter to capacitance: `C_min + (C_max - C_min) (atan(theta) + pi/2) / pi`.
pub fn capacitance_of(theta: f64, v: &VaractorParams) -> f64 {
    v.c_min + (v.c_max - v.c_min) * (theta.atan() + 0.5 * PI) / PI
}

/// Impedance of the varactor: `L1` in parallel with the series branch `L2 + C(theta) + R_v`.
pub fn varactor_impedance(f: f64, theta: f64, v: &VaractorParams) -> Result<Complex64> {
    if !(f > 0.0) {
        return Err(DsaError::NonPositiveFrequency(f));
    }
    Ok(varactor_impedance_unchecked(f, theta, v))
}

#[inline]
pub(crate) fn varactor_impedance_unchecked(f: f64, theta: f64, v: &VaractorParams) -> Complex64 {
    let jw = Complex64::new(0.0, 2.0 * PI * f);
    let cap = 1.0 / (jw * capacitance_of(theta, v));
    let series = jw * v.l2 + cap + v.r_v;
    jw * v.l1 * series / (jw * (v.l1 + v.l2) + cap + v.r_v)
}

/// Reconfigurable parameters `psi = {theta; phi}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadBank {
    /// One parameter per scatterer.
    pub theta: Vec<f64>,
    /// One parameter per active port (simplified matching); empty under perfect matching.
    pub phi: Vec<f64>,
    pub varactor: VaractorParams,
}

impl LoadBank {
    pub fn new(theta: Vec<f64>, phi: Vec<f64>, varactor: VaractorParams) -> Self {
        Self { theta, phi, varactor }
    }

    /// Flattened `psi`, theta first.
    pub fn psi(&self) -> Vec<f64> {
        self.theta.iter().chain(&self.phi).copied().collect()
    }

    pub fn from_psi(psi: &[f64], n_scatterers: usize, varactor: VaractorParams) -> Self {
        Self {
            theta: psi[..n_scatterers].to_vec(),
            phi: psi[n_scatterers..].to_vec(),
            varactor,
        }
    }
}

/// Diagonal load matrices `(Z_S, Z_L)` as their diagonals; `Z_L` is empty when `phi` is.
pub fn load_matrices(bank: &LoadBank, f: f64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if !(f > 0.0) {
        return Err(DsaError::NonPositiveFrequency(f));
    }
    let map = |t: &f64| varactor_impedance_unchecked(f, *t, &bank.varactor);
    Ok((bank.theta.iter().map(map).collect(), bank.phi.iter().map(map).collect()))
}
