//! Channel transimpedance builders: line-of-sight dipole links, receiver
//! arrays, and point-scatterer multipath.

use std::f64::consts::PI;

use log::warn;
use num_complex::Complex64;

use crate::em::geometry::{FlatTable, Vec3};
use crate::em::{wavelength, wavenumber, DipoleElement, DsaGeometry, ETA0};
use crate::error::{DsaError, Result};
use crate::exec::Exec;
use crate::linalg::CMat;

/// How the remote antenna weighs the incident field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReceiverKind {
    /// Constant effective length `lambda/pi`, polarization-matched.
    #[default]
    Isotropic,
    /// Half-wave dipole along the set's orientation.
    HalfWaveDipole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestPointSet {
    pub positions: Vec<Vec3>,
    /// Receive power gain applied on top of the receiver pattern.
    pub gain: f64,
    pub receiver: ReceiverKind,
    pub orientation: Vec3,
}

impl TestPointSet {
    pub fn new(positions: Vec<Vec3>, receiver: ReceiverKind) -> Result<Self> {
        if positions.is_empty() {
            return Err(DsaError::InvalidGeometry("test point set is empty".into()));
        }
        Ok(Self {
            positions,
            gain: 1.0,
            receiver,
            orientation: Vec3::z(),
        })
    }

    pub fn with_gain(mut self, gain: f64) -> Self {
        self.gain = gain;
        self
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Rejects points closer than `2 lambda` to the array's bounding sphere
    /// and warns inside the Fraunhofer distance.
    pub fn check_radiative(&self, g: &DsaGeometry, f: f64) -> Result<()> {
        let lambda = wavelength(f);
        let rb = g.bounding_radius();
        let fraunhofer = 2.0 * (2.0 * rb).powi(2) / lambda;
        for (t, p) in self.positions.iter().enumerate() {
            let d = p.norm();
            if d < rb + 2.0 * lambda {
                return Err(DsaError::InvalidGeometry(format!(
                    "test point {t} at {d:.3} m is inside the radiative-region margin ({:.3} m)",
                    rb + 2.0 * lambda
                )));
            }
            if d < fraunhofer {
                warn!("test point {t} at {d:.2} m lies inside the far-field distance {fraunhofer:.2} m");
            }
        }
        Ok(())
    }

    /// Flat table with columns `x, y, z` (meters).
    pub fn from_csv(text: &str, receiver: ReceiverKind) -> Result<Self> {
        let table = FlatTable::parse(text, &["x", "y", "z"])?;
        let mut pts = Vec::new();
        for row in &table.rows {
            pts.push(Vec3::new(
                row.num(table.required("x"))?,
                row.num(table.required("y"))?,
                row.num(table.required("z"))?,
            ));
        }
        Self::new(pts, receiver)
    }
}

/// Transimpedance `T x N` (open-circuit volts per ampere).
#[derive(Debug, Clone, PartialEq)]
pub struct Transimpedance {
    pub h: CMat,
    pub frequency: f64,
}

/// Point scatterers re-radiating isotropically with coefficient `rho`
/// (siemens: scatterer current per open-circuit volt).
#[derive(Debug, Clone, PartialEq)]
pub struct NlosSpec {
    pub positions: Vec<Vec3>,
    pub rho: Vec<Complex64>,
}

impl NlosSpec {
    pub fn unit(positions: Vec<Vec3>) -> Self {
        let rho = vec![Complex64::new(1.0, 0.0); positions.len()];
        Self { positions, rho }
    }

    /// Scatterers at `distance` on the horizontal plane at the given azimuths.
    pub fn on_circle(distance: f64, azimuths_deg: &[f64]) -> Self {
        Self::unit(azimuths_deg.iter().map(|&a| planar_direction(a) * distance).collect())
    }

    /// Flat table with columns `x, y, z` and optional `rho_re, rho_im`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let table = FlatTable::parse(text, &["x", "y", "z"])?;
        let (re, im) = (table.column("rho_re"), table.column("rho_im"));
        let mut spec = Self::unit(Vec::new());
        for row in &table.rows {
            spec.positions.push(Vec3::new(
                row.num(table.required("x"))?,
                row.num(table.required("y"))?,
                row.num(table.required("z"))?,
            ));
            let r = re.map(|c| row.num(c)).transpose()?.unwrap_or(1.0);
            let i = im.map(|c| row.num(c)).transpose()?.unwrap_or(0.0);
            spec.rho.push(Complex64::new(r, i));
        }
        Ok(spec)
    }
}

/// Unit vector on the horizontal plane at azimuth `deg` from +x.
pub fn planar_direction(deg: f64) -> Vec3 {
    let a = deg.to_radians();
    Vec3::new(a.cos(), a.sin(), 0.0)
}

fn transverse(u: &Vec3, dir: &Vec3) -> (Vec3, f64) {
    let p = u - dir * u.dot(dir);
    let s = p.norm();
    (p, s)
}

/// Vector effective length of a sinusoidal-current dipole seen from unit
/// direction `dir`: `(lambda/pi) F(theta)` along the transverse projection
/// of its axis, with
/// `F = [cos(kl/2 cos th) - cos(kl/2)] / (sin th sin(kl/2))`.
pub fn dipole_effective_length(elem: &DipoleElement, f: f64, dir: &Vec3) -> Vec3 {
    let k = wavenumber(f);
    let (p, s) = transverse(&elem.orientation, dir);
    if s < 1e-12 {
        return Vec3::zeros();
    }
    let cos_t = elem.orientation.dot(dir);
    let h = 0.5 * k * elem.length;
    let pattern = ((h * cos_t).cos() - h.cos()) / (s * h.sin());
    p * (wavelength(f) / PI * pattern / s)
}

/// Polarization-matched constant effective length `lambda/pi` along the
/// transverse projection of `u`.
pub fn isotropic_effective_length(u: &Vec3, f: f64, dir: &Vec3) -> Vec3 {
    let (p, s) = transverse(u, dir);
    if s < 1e-12 {
        return Vec3::zeros();
    }
    p * (wavelength(f) / PI / s)
}

fn receiver_length(pts: &TestPointSet, f: f64, dir_in: &Vec3) -> Vec3 {
    match pts.receiver {
        ReceiverKind::Isotropic => isotropic_effective_length(&pts.orientation, f, dir_in),
        ReceiverKind::HalfWaveDipole => {
            let rx = DipoleElement::new(
                Vec3::zeros(),
                0.5 * wavelength(f),
                wavelength(f) / 1000.0,
                pts.orientation,
                crate::em::ElementKind::Active,
            );
            dipole_effective_length(&rx, f, dir_in)
        }
    }
}

/// `j eta / (2 lambda r) e^{-jkr}` link kernel.
fn propagator(f: f64, r: f64) -> Complex64 {
    let lambda = wavelength(f);
    let k = wavenumber(f);
    Complex64::new(0.0, ETA0 / (2.0 * lambda * r)) * Complex64::from_polar(1.0, -k * r)
}

fn link(
    from: &Vec3,
    tx: impl Fn(&Vec3) -> Vec3,
    to: &Vec3,
    rx: impl Fn(&Vec3) -> Vec3,
    f: f64,
) -> Option<Complex64> {
    let d = to - from;
    let r = d.norm();
    if r == 0.0 {
        return None;
    }
    let u = d / r;
    let coupling = tx(&u).dot(&rx(&-u));
    Some(propagator(f, r) * coupling)
}

fn check_frequency(f: f64) -> Result<()> {
    if f > 0.0 {
        Ok(())
    } else {
        Err(DsaError::NonPositiveFrequency(f))
    }
}

/// Line-of-sight transimpedance from every element to every test point.
pub fn los_transimpedance(g: &DsaGeometry, pts: &TestPointSet, f: f64) -> Result<Transimpedance> {
    los_transimpedance_with(g, pts, f, Exec::default())
}

pub fn los_transimpedance_with(g: &DsaGeometry, pts: &TestPointSet, f: f64, exec: Exec) -> Result<Transimpedance> {
    check_frequency(f)?;
    let els = g.elements();
    let sg = pts.gain.sqrt();
    let rows = exec.map(pts.len(), |t| {
        let p = pts.positions[t];
        els.iter()
            .enumerate()
            .map(|(n, e)| {
                link(&e.position, |u| dipole_effective_length(e, f, u), &p, |u| receiver_length(pts, f, u), f)
                    .map(|h| h * sg)
                    .ok_or(DsaError::CoincidentPoint { element: n, point: t })
            })
            .collect::<Result<Vec<_>>>()
    });
    let mut h = CMat::zeros(pts.len(), els.len());
    for (t, row) in rows.into_iter().enumerate() {
        for (n, v) in row?.into_iter().enumerate() {
            h[(t, n)] = v;
        }
    }
    Ok(Transimpedance { h, frequency: f })
}

/// Two-hop multipath: element -> scatterer (isotropic receiver) and
/// scatterer (isotropic radiator) -> test point, weighted by `rho_s`.
pub fn nlos_transimpedance(g: &DsaGeometry, pts: &TestPointSet, spec: &NlosSpec, f: f64) -> Result<Transimpedance> {
    check_frequency(f)?;
    if spec.positions.is_empty() {
        return Err(DsaError::InvalidGeometry("NLOS scenario has no scatterers".into()));
    }
    if spec.rho.len() != spec.positions.len() {
        return Err(DsaError::Dimension("one reflection coefficient per scatterer required".into()));
    }
    let els = g.elements();
    let up = Vec3::z();
    let ns = spec.positions.len();
    let mut first = CMat::zeros(ns, els.len());
    for (s, q) in spec.positions.iter().enumerate() {
        for (n, e) in els.iter().enumerate() {
            first[(s, n)] = link(&e.position, |u| dipole_effective_length(e, f, u), q, |u| isotropic_effective_length(&up, f, u), f)
                .ok_or_else(|| DsaError::InvalidGeometry(format!("scatterer {s} coincides with element {n}")))?;
        }
    }
    let sg = pts.gain.sqrt();
    let mut second = CMat::zeros(pts.len(), ns);
    for (t, p) in pts.positions.iter().enumerate() {
        for (s, q) in spec.positions.iter().enumerate() {
            second[(t, s)] = link(q, |u| isotropic_effective_length(&up, f, u), p, |u| receiver_length(pts, f, u), f)
                .ok_or_else(|| DsaError::InvalidGeometry(format!("scatterer {s} coincides with test point {t}")))?
                * spec.rho[s]
                * sg;
        }
    }
    Ok(Transimpedance { h: second * first, frequency: f })
}

/// `count` points along `axis`, `spacing` apart, centred on `center`.
pub fn ula_positions(center: Vec3, count: usize, spacing: f64, axis: Vec3, receiver: ReceiverKind) -> Result<TestPointSet> {
    let axis = axis.try_normalize(0.0).ok_or_else(|| DsaError::InvalidParameter("zero ULA axis".into()))?;
    let mid = 0.5 * (count as f64 - 1.0);
    TestPointSet::new(
        (0..count).map(|m| center + axis * ((m as f64 - mid) * spacing)).collect(),
        receiver,
    )
}

/// `count` points on the horizontal circle of radius `distance`, point `t`
/// at azimuth `360 t / count` degrees.
pub fn ring_test_points(count: usize, distance: f64, receiver: ReceiverKind) -> Result<TestPointSet> {
    TestPointSet::new(
        (0..count)
            .map(|t| planar_direction(360.0 * t as f64 / count as f64) * distance)
            .collect(),
        receiver,
    )
}

/// Points at the given azimuths on the horizontal circle of radius `distance`.
pub fn azimuth_points(azimuths_deg: &[f64], distance: f64, receiver: ReceiverKind) -> Result<TestPointSet> {
    TestPointSet::new(azimuths_deg.iter().map(|&a| planar_direction(a) * distance).collect(), receiver)
}

/// Index of the ring point nearest to azimuth `deg`.
pub fn ring_index(count: usize, deg: f64) -> usize {
    ((deg.rem_euclid(360.0) / 360.0 * count as f64).round() as usize) % count
}

/// Receiver noise power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma2: f64,
}

pub fn awgn_power(sigma2: f64) -> Result<NoiseModel> {
    if sigma2 >= 0.0 && sigma2.is_finite() {
        Ok(NoiseModel { sigma2 })
    } else {
        Err(DsaError::InvalidParameter(format!("noise power must be >= 0, got {sigma2}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::ElementKind;

    const F: f64 = 2.4e9;

    fn dipole_at(p: Vec3) -> DsaGeometry {
        let l = wavelength(F);
        DsaGeometry::new(vec![DipoleElement::vertical(p, 0.5 * l, l / 1000.0, ElementKind::Active)], None).unwrap()
    }

    #[test]
    fn half_wave_pattern_matches_textbook_form() {
        let l = wavelength(F);
        let e = DipoleElement::vertical(Vec3::zeros(), 0.5 * l, l / 1000.0, ElementKind::Active);
        for th in [0.3f64, 0.9, 1.4, 2.0] {
            let dir = Vec3::new(th.sin(), 0.0, th.cos());
            let want = l / PI * (0.5 * PI * th.cos()).cos() / th.sin();
            let got = dipole_effective_length(&e, F, &dir);
            assert!((got.norm() - want).abs() < 1e-12 * want);
        }
        assert_eq!(dipole_effective_length(&e, F, &Vec3::z()), Vec3::zeros());
    }

    #[test]
    fn doubling_distance_halves_magnitude() {
        let g = dipole_at(Vec3::zeros());
        let pts = TestPointSet::new(vec![Vec3::new(10.0, 0.0, 0.0), Vec3::new(20.0, 0.0, 0.0)], ReceiverKind::HalfWaveDipole).unwrap();
        let h = los_transimpedance(&g, &pts, F).unwrap().h;
        assert!((h[(0, 0)].norm() / h[(1, 0)].norm() - 2.0).abs() < 1e-12);
        let k = wavenumber(F);
        let dphase = (h[(0, 0)] / h[(1, 0)]).arg();
        let want = Complex64::from_polar(1.0, k * 10.0).arg();
        assert!((dphase - want).abs() < 1e-9);
    }

    #[test]
    fn exact_phase_on_axis() {
        let g = dipole_at(Vec3::zeros());
        let r = 7.3;
        let pts = TestPointSet::new(vec![Vec3::new(0.0, r, 0.0)], ReceiverKind::Isotropic).unwrap();
        let h = los_transimpedance(&g, &pts, F).unwrap().h[(0, 0)];
        let l = wavelength(F);
        let want = Complex64::new(0.0, ETA0 / (2.0 * l * r)) * (l / PI).powi(2) * Complex64::from_polar(1.0, -wavenumber(F) * r);
        assert!((h - want).norm() < 1e-12 * want.norm());
    }

    #[test]
    fn reciprocal_link() {
        let a = Vec3::new(0.1, -0.2, 0.05);
        let b = Vec3::new(9.0, 4.0, 1.0);
        let ga = dipole_at(a);
        let gb = dipole_at(b);
        let pa = TestPointSet::new(vec![b], ReceiverKind::HalfWaveDipole).unwrap();
        let pb = TestPointSet::new(vec![a], ReceiverKind::HalfWaveDipole).unwrap();
        let hab = los_transimpedance(&ga, &pa, F).unwrap().h[(0, 0)];
        let hba = los_transimpedance(&gb, &pb, F).unwrap().h[(0, 0)];
        assert!((hab - hba).norm() < 1e-14 * hab.norm());
    }

    #[test]
    fn coincident_point_is_an_error() {
        let g = dipole_at(Vec3::zeros());
        let pts = TestPointSet::new(vec![Vec3::zeros()], ReceiverKind::Isotropic).unwrap();
        assert!(matches!(los_transimpedance(&g, &pts, F), Err(DsaError::CoincidentPoint { .. })));
    }

    #[test]
    fn ula_layout() {
        let one = ula_positions(Vec3::new(1.0, 2.0, 3.0), 1, 0.1, Vec3::y(), ReceiverKind::Isotropic).unwrap();
        assert_eq!(one.positions, vec![Vec3::new(1.0, 2.0, 3.0)]);
        let l = wavelength(F);
        let u = ula_positions(Vec3::zeros(), 20, 0.5 * l, Vec3::y(), ReceiverKind::Isotropic).unwrap();
        assert!(((u.positions[19] - u.positions[0]).norm() - 9.5 * l).abs() < 1e-12);
    }

    #[test]
    fn ring_indexing() {
        assert_eq!(ring_index(120, 180.0), 60);
        assert_eq!(ring_index(120, 360.0), 0);
        assert_eq!(ring_index(120, -90.0), 90);
    }

    #[test]
    fn radiative_margin_is_enforced() {
        let g = dipole_at(Vec3::zeros());
        let near = TestPointSet::new(vec![Vec3::new(0.2, 0.0, 0.0)], ReceiverKind::Isotropic).unwrap();
        assert!(near.check_radiative(&g, F).is_err());
        let far = ring_test_points(8, 100.0, ReceiverKind::Isotropic).unwrap();
        assert!(far.check_radiative(&g, F).is_ok());
    }

    #[test]
    fn noise_power_validation() {
        assert_eq!(awgn_power(1e-12).unwrap().sigma2, 1e-12);
        assert!(awgn_power(-1.0).is_err());
    }

    #[test]
    fn csv_points_and_scatterers() {
        let p = TestPointSet::from_csv("x,y,z\n1,2,3\n", ReceiverKind::Isotropic).unwrap();
        assert_eq!(p.positions[0], Vec3::new(1.0, 2.0, 3.0));
        let s = NlosSpec::from_csv("x,y,z,rho_re\n5,0,0,0.5\n").unwrap();
        assert_eq!(s.rho[0], Complex64::new(0.5, 0.0));
    }
}
