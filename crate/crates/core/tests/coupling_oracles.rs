//! Independent oracles for the dipole coupling model: classical sine/cosine
//! integral closed forms and a brute-force Simpson evaluation of the
//! induced-EMF field integral.

use dsa_core::em::geometry::Vec3;
use dsa_core::em::{
    assemble_impedance_matrix, dipole_mutual_impedance, dipole_self_impedance, wavelength, DipoleElement,
    DsaGeometry, ElementKind, ETA0,
};
use num_complex::Complex64;
use std::f64::consts::PI;

const F0: f64 = 2.4e9;
const EULER: f64 = 0.577_215_664_901_532_9;

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

fn si(x: f64) -> f64 {
    simpson(|t| if t == 0.0 { 1.0 } else { t.sin() / t }, 0.0, x, 40_000)
}

fn ci(x: f64) -> f64 {
    EULER + x.ln() + simpson(|t| if t == 0.0 { 0.0 } else { (t.cos() - 1.0) / t }, 0.0, x, 40_000)
}

/// Classical side-by-side half-wave mutual impedance.
fn side_by_side_closed_form(d_over_lambda: f64) -> Complex64 {
    let k = 2.0 * PI;
    let l = 0.5;
    let d = d_over_lambda;
    let u0 = k * d;
    let u1 = k * ((d * d + l * l).sqrt() + l);
    let u2 = k * ((d * d + l * l).sqrt() - l);
    let c = ETA0 / (4.0 * PI);
    Complex64::new(
        c * (2.0 * ci(u0) - ci(u1) - ci(u2)),
        -c * (2.0 * si(u0) - si(u1) - si(u2)),
    )
}

fn dipole(x: f64, y: f64, z: f64, radius_frac: f64) -> DipoleElement {
    let lam = wavelength(F0);
    DipoleElement::vertical(Vec3::new(x * lam, y * lam, z * lam), 0.5 * lam, radius_frac * lam, ElementKind::Scatterer)
}

/// Brute-force field integral for parallel half-wave dipoles with axial offset h (in wavelengths).
fn echelon_simpson(d: f64, h: f64) -> Complex64 {
    let k = 2.0 * PI;
    let half = 0.25;
    let field = |z: f64, kernel: fn(f64) -> f64| {
        let zz = z + h;
        let r1 = (d * d + (zz - half).powi(2)).sqrt();
        let r2 = (d * d + (zz + half).powi(2)).sqrt();
        (kernel(k * r1) / r1 + kernel(k * r2) / r2) * (k * (half - z.abs())).sin()
    };
    let c = ETA0 / (4.0 * PI);
    let re = simpson(|z| field(z, f64::sin), -half, 0.0, 20_000) + simpson(|z| field(z, f64::sin), 0.0, half, 20_000);
    let im = simpson(|z| field(z, f64::cos), -half, 0.0, 20_000) + simpson(|z| field(z, f64::cos), 0.0, half, 20_000);
    Complex64::new(c * re, c * im)
}

#[test]
fn oracle_matches_textbook_values() {
    // cross-check of the oracle itself against tabulated values
    let z = side_by_side_closed_form(0.25);
    assert!((z.re - 40.8).abs() < 0.1 && (z.im + 28.3).abs() < 0.1, "{z}");
    let z = side_by_side_closed_form(0.5);
    assert!((z.re + 12.5).abs() < 0.1 && (z.im + 29.9).abs() < 0.1, "{z}");
    let self_r = ETA0 / (4.0 * PI) * (EULER + (2.0 * PI).ln() - ci(2.0 * PI));
    let self_x = ETA0 / (4.0 * PI) * si(2.0 * PI);
    assert!((self_r - 73.1).abs() < 0.1 && (self_x - 42.5).abs() < 0.1);
}

#[test]
fn side_by_side_matches_closed_form() {
    let a = dipole(0.0, 0.0, 0.0, 1e-3);
    for &d in &[0.1, 0.25, 0.4, 0.5, 0.75, 1.0, 2.0, 5.0, 10.0] {
        let b = dipole(d, 0.0, 0.0, 1e-3);
        let z = dipole_mutual_impedance(&a, &b, F0).unwrap();
        let want = side_by_side_closed_form(d);
        assert!((z - want).norm() < 1e-6, "d={d}: {z} vs {want}");
    }
}

#[test]
fn echelon_matches_brute_force() {
    let a = dipole(0.0, 0.0, 0.0, 1e-3);
    for &(d, h) in &[(0.25, 0.1), (0.3, 0.5), (0.5, 0.8), (1.0, 0.25), (0.2, -0.3)] {
        let b = dipole(d, 0.0, h, 1e-3);
        let z = dipole_mutual_impedance(&a, &b, F0).unwrap();
        let want = echelon_simpson(d, h);
        assert!((z - want).norm() < 1e-6, "d={d} h={h}: {z} vs {want}");
    }
}

#[test]
fn half_wave_self_impedance() {
    let z = dipole_self_impedance(&dipole(0.0, 0.0, 0.0, 1e-3), F0);
    let r = ETA0 / (4.0 * PI) * (EULER + (2.0 * PI).ln() - ci(2.0 * PI));
    assert!((z.re - r).abs() < 1e-6, "{z}");
    assert!((z.im - 42.5).abs() < 0.5, "{z}");
}

#[test]
fn thicker_wire_lowers_reactance_only() {
    let zs: Vec<Complex64> = [2e-4, 1e-3, 5e-3, 1e-2]
        .iter()
        .map(|&r| dipole_self_impedance(&dipole(0.0, 0.0, 0.0, r), F0))
        .collect();
    for w in zs.windows(2) {
        assert!(w[1].im < w[0].im, "{zs:?}");
        assert!((w[1].re - w[0].re).abs() < 1e-9);
    }
}

#[test]
fn mutual_impedance_decays() {
    let a = dipole(0.0, 0.0, 0.0, 1e-3);
    let near = dipole_mutual_impedance(&a, &dipole(0.25, 0.0, 0.0, 1e-3), F0).unwrap().norm();
    let mut prev = f64::INFINITY;
    for &d in &[5.0, 10.0, 20.0, 40.0] {
        let z = dipole_mutual_impedance(&a, &dipole(d, 0.0, 0.0, 1e-3), F0).unwrap().norm();
        assert!(z < 0.1 * near);
        if d >= 10.0 {
            assert!(z < 5.0);
        }
        // ~1/d envelope
        assert!(z * d < prev * 1.2 || prev.is_infinite());
        prev = z * d;
    }
}

#[test]
fn assembled_matrix_matches_pairwise_calls() {
    let mut els = vec![dipole(0.0, 0.0, 0.0, 1e-3), dipole(0.25, 0.0, 0.0, 1e-3), dipole(-0.1, 0.3, 0.0, 1e-3)];
    els[0].kind = ElementKind::Active;
    let g = DsaGeometry::new(els.clone(), None).unwrap();
    let z = assemble_impedance_matrix(&g, F0).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j {
                dipole_self_impedance(&els[i], F0)
            } else {
                dipole_mutual_impedance(&els[i.min(j)], &els[i.max(j)], F0).unwrap()
            };
            assert_eq!(z.z[(i, j)], want);
        }
    }
    assert_eq!(z.z, z.z.transpose());
}
