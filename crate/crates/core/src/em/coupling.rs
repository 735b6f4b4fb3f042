//! Induced-EMF self and mutual impedances of parallel thin dipoles.
//!
//! Both dipoles carry sinusoidal currents referred to their feed points.
//! The coupling integral is evaluated by adaptive quadrature along the
//! observing dipole. The real part of the self term uses the filament
//! kernel (radius independent); the imaginary part is evaluated on the wire
//! surface, so the wire radius sets the reactance.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::geometry::{DipoleElement, DsaGeometry, Vec3};
use super::quadrature::integrate;
use super::{wavenumber, ETA0};
use crate::error::{DsaError, Result};
use crate::exec::Exec;
use crate::linalg::CMat;

/// Absolute quadrature tolerance on impedance entries (ohm).
pub const IMPEDANCE_TOL: f64 = 1e-9;

const PARALLEL_TOL: f64 = 1e-9;

/// sin(x)/x with the removable singularity filled in.
#[inline]
fn sin_over(k: f64, r: f64) -> f64 {
    if r < 1e-300 {
        k
    } else {
        (k * r).sin() / r
    }
}

/// Reaction between a source dipole (length `la`, centred at the origin) and an
/// observing dipole (length `lb`) whose axis is offset radially by `rho` and
/// axially by `h`. `rho_re`/`rho_im` are the radial distances used for the
/// resistive and reactive kernels respectively.
fn reaction(k: f64, la: f64, lb: f64, rho_re: f64, rho_im: f64, h: f64) -> Complex64 {
    let ha = 0.5 * la;
    let hb = 0.5 * lb;
    let cos_a = (k * ha).cos();
    let kernel = |z: f64| {
        let zz = z + h;
        let (d1, d2) = (zz - ha, zz + ha);
        let re = {
            let r1 = (rho_re * rho_re + d1 * d1).sqrt();
            let r2 = (rho_re * rho_re + d2 * d2).sqrt();
            let r0 = (rho_re * rho_re + zz * zz).sqrt();
            sin_over(k, r1) + sin_over(k, r2) - 2.0 * cos_a * sin_over(k, r0)
        };
        let im = {
            let r1 = (rho_im * rho_im + d1 * d1).sqrt();
            let r2 = (rho_im * rho_im + d2 * d2).sqrt();
            let r0 = (rho_im * rho_im + zz * zz).sqrt();
            (k * r1).cos() / r1 + (k * r2).cos() / r2 - 2.0 * cos_a * (k * r0).cos() / r0
        };
        let w = (k * (hb - z.abs())).sin();
        Complex64::new(re * w, im * w)
    };
    let scale = ETA0 / (4.0 * std::f64::consts::PI);
    let norm = (k * ha).sin() * (k * hb).sin();
    let tol = IMPEDANCE_TOL * norm.abs() / scale;
    let breaks = [0.0, -h - ha, -h + ha, -h];
    integrate(kernel, -hb, hb, &breaks, tol) * (scale / norm)
}

/// Input self-impedance of a thin dipole.
pub fn dipole_self_impedance(elem: &DipoleElement, f: f64) -> Complex64 {
    let ratio = elem.length * f / super::C0;
    if !(0.3..=0.7).contains(&ratio) {
        log::debug!("dipole length {ratio:.3} lambda is outside the validated half-wave regime");
    }
    reaction(wavenumber(f), elem.length, elem.length, 0.0, elem.wire_radius, 0.0)
}

fn check_parallel(a: &DipoleElement, b: &DipoleElement) -> Result<f64> {
    let cross = a.orientation.cross(&b.orientation).norm();
    if cross > PARALLEL_TOL {
        return Err(DsaError::UnsupportedGeometry(format!(
            "non-parallel dipoles (|sin angle| = {cross:.3e})"
        )));
    }
    Ok(a.orientation.dot(&b.orientation).signum())
}

/// Mutual impedance between two parallel dipoles (side-by-side or in echelon).
pub fn dipole_mutual_impedance(a: &DipoleElement, b: &DipoleElement, f: f64) -> Result<Complex64> {
    let sign = check_parallel(a, b)?;
    let delta: Vec3 = b.position - a.position;
    let h = delta.dot(&a.orientation);
    let rho = (delta - a.orientation * h).norm();
    let contact = a.wire_radius + b.wire_radius;
    if rho < contact && h.abs() < 0.5 * (a.length + b.length) {
        return Err(DsaError::UnsupportedGeometry(format!(
            "overlapping collinear dipoles (axial offset {h:.3e} m)"
        )));
    }
    let z = reaction(wavenumber(f), a.length, b.length, rho, rho.max(b.wire_radius), h);
    Ok(z * sign)
}

/// Impedance matrix `Z` of an element cloud with block views for the
/// active / scatterer partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedImpedance {
    pub z: CMat,
    pub n_active: usize,
    pub frequency: f64,
}

impl PartitionedImpedance {
    pub fn new(z: CMat, n_active: usize, frequency: f64) -> Result<Self> {
        if !z.is_square() || n_active == 0 || n_active > z.nrows() {
            return Err(DsaError::Dimension(format!(
                "impedance matrix {}x{} with {n_active} active ports",
                z.nrows(),
                z.ncols()
            )));
        }
        Ok(Self { z, n_active, frequency })
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn n_scatterers(&self) -> usize {
        self.n() - self.n_active
    }

    pub fn zaa(&self) -> CMat {
        self.z.view((0, 0), (self.n_active, self.n_active)).into_owned()
    }

    pub fn zas(&self) -> CMat {
        self.z.view((0, self.n_active), (self.n_active, self.n_scatterers())).into_owned()
    }

    pub fn zsa(&self) -> CMat {
        self.z.view((self.n_active, 0), (self.n_scatterers(), self.n_active)).into_owned()
    }

    pub fn zss(&self) -> CMat {
        let ns = self.n_scatterers();
        self.z.view((self.n_active, self.n_active), (ns, ns)).into_owned()
    }
}

/// Assembles `Z` with the default execution policy.
pub fn assemble_impedance_matrix(g: &DsaGeometry, f: f64) -> Result<PartitionedImpedance> {
    assemble_impedance_matrix_with(g, f, Exec::default())
}

/// Assembles `Z` over the upper triangle and mirrors it, so `Z == Z^T` exactly.
pub fn assemble_impedance_matrix_with(g: &DsaGeometry, f: f64, exec: Exec) -> Result<PartitionedImpedance> {
    if !(f > 0.0) {
        return Err(DsaError::NonPositiveFrequency(f));
    }
    let els = g.elements();
    let n = els.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let values = exec.map(pairs.len(), |p| {
        let (i, j) = pairs[p];
        if i == j {
            Ok(dipole_self_impedance(&els[i], f))
        } else {
            dipole_mutual_impedance(&els[i], &els[j], f)
        }
    });
    let mut z = DMatrix::zeros(n, n);
    for (&(i, j), v) in pairs.iter().zip(values) {
        let v = v?;
        z[(i, j)] = v;
        z[(j, i)] = v;
    }
    PartitionedImpedance::new(z, g.n_active(), f)
}
