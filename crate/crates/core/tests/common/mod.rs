//! Independent network oracles: every matching network is written out as
//! plain Kirchhoff equations and solved as one dense linear system.
#![allow(dead_code)]

use dsa_core::linalg::{CMat, CVec};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Symmetric impedance matrix with positive definite real part and
/// dissipative scatterer loads.
pub fn random_network<R: Rng>(rng: &mut R, n: usize) -> CMat {
    let a = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let re = &a * a.transpose() * 30.0 + DMatrix::identity(n, n) * 5.0;
    let b = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-40.0..40.0));
    let im = (&b + b.transpose()) * 0.5;
    CMat::from_fn(n, n, |i, j| c(re[(i, j)], im[(i, j)]))
}

pub fn random_loads<R: Rng>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| c(rng.random_range(0.0..2.0), rng.random_range(-80.0..80.0)))
        .collect()
}

/// Principal square root and its inverse by the Denman-Beavers iteration.
pub fn denman_beavers(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let yi = y.clone().try_inverse().unwrap();
        let zi = z.clone().try_inverse().unwrap();
        let y2 = (&y + zi) * 0.5;
        let z2 = (&z + yi) * 0.5;
        let done = (&y2 - &y).norm() <= 1e-15 * y2.norm();
        y = y2;
        z = z2;
        if done {
            break;
        }
    }
    (y, z)
}

/// Unknown layout: i (N), v (N), i_t (Na), v_t (Na).
struct Kvl {
    n: usize,
    na: usize,
    a: CMat,
    b: CVec,
    row: usize,
}

impl Kvl {
    fn new(n: usize, na: usize) -> Self {
        let m = 2 * n + 2 * na;
        Self { n, na, a: CMat::zeros(m, m), b: CVec::zeros(m), row: 0 }
    }
    fn i(&self, k: usize) -> usize {
        k
    }
    fn v(&self, k: usize) -> usize {
        self.n + k
    }
    fn it(&self, k: usize) -> usize {
        2 * self.n + k
    }
    fn vt(&self, k: usize) -> usize {
        2 * self.n + self.na + k
    }
    fn eq(&mut self, terms: &[(usize, Complex64)], rhs: Complex64) {
        for &(col, val) in terms {
            self.a[(self.row, col)] += val;
        }
        self.b[self.row] = rhs;
        self.row += 1;
    }

    /// DSA port equations, scatterer loads and Thevenin RF chains.
    fn common(&mut self, z: &CMat, zs: &[Complex64], r: f64, vg: &CVec) {
        let (n, na) = (self.n, self.na);
        for p in 0..n {
            let mut t: Vec<(usize, Complex64)> = (0..n).map(|q| (self.i(q), z[(p, q)])).collect();
            t.push((self.v(p), c(-1.0, 0.0)));
            self.eq(&t, c(0.0, 0.0));
        }
        for s in 0..n - na {
            let (vi, ii) = (self.v(na + s), self.i(na + s));
            self.eq(&[(vi, c(1.0, 0.0)), (ii, zs[s])], c(0.0, 0.0));
        }
        for k in 0..na {
            let (vt, it) = (self.vt(k), self.it(k));
            self.eq(&[(vt, c(1.0, 0.0)), (it, c(r, 0.0))], vg[k]);
        }
    }

    fn solve(self) -> CVec {
        assert_eq!(self.row, self.a.nrows());
        let x = self.a.lu().solve(&self.b).expect("oracle system singular");
        x.rows(0, self.n).into_owned()
    }
}

/// Schur complement computed independently of the library.
pub fn oracle_input_impedance(z: &CMat, na: usize, zs: &[Complex64]) -> CMat {
    let n = z.nrows();
    let ns = n - na;
    let mut a = z.view((na, na), (ns, ns)).into_owned();
    for s in 0..ns {
        a[(s, s)] += zs[s];
    }
    let x = a.lu().solve(&z.view((na, 0), (ns, na)).into_owned()).unwrap();
    z.view((0, 0), (na, na)).into_owned() - z.view((0, na), (na, ns)) * x
}

/// All element currents with the lossless two-sided matching network.
pub fn kvl_perfect(z: &CMat, na: usize, zs: &[Complex64], r: f64, vg: &CVec) -> CVec {
    let za = oracle_input_impedance(z, na, zs);
    let re = DMatrix::<f64>::from_fn(na, na, |i, j| 0.5 * (za[(i, j)].re + za[(j, i)].re));
    let (s, _) = denman_beavers(&re);
    let j = c(0.0, 1.0);
    let sr = r.sqrt();
    let mut k = Kvl::new(z.nrows(), na);
    k.common(z, zs, r, vg);
    // v_t = -j sqrt(R) S (-i_a)
    for p in 0..na {
        let mut t = vec![(k.vt(p), c(-1.0, 0.0))];
        for q in 0..na {
            t.push((k.i(q), j * sr * s[(p, q)]));
        }
        k.eq(&t, c(0.0, 0.0));
    }
    // v_a = -j sqrt(R) S i_t - j Im{Z_A} (-i_a)
    for p in 0..na {
        let mut t = vec![(k.v(p), c(-1.0, 0.0))];
        for q in 0..na {
            t.push((k.it(q), -j * sr * s[(p, q)]));
            t.push((k.i(q), j * za[(p, q)].im));
        }
        k.eq(&t, c(0.0, 0.0));
    }
    k.solve()
}

/// All element currents with series loads between each chain and its port.
pub fn kvl_simplified(z: &CMat, na: usize, zs: &[Complex64], zl: &[Complex64], r: f64, vg: &CVec) -> CVec {
    let mut k = Kvl::new(z.nrows(), na);
    k.common(z, zs, r, vg);
    for p in 0..na {
        let (vt, va, it) = (k.vt(p), k.v(p), k.it(p));
        k.eq(&[(vt, c(1.0, 0.0)), (va, c(-1.0, 0.0)), (it, -zl[p])], c(0.0, 0.0));
        let ia = k.i(p);
        k.eq(&[(ia, c(1.0, 0.0)), (it, c(-1.0, 0.0))], c(0.0, 0.0));
    }
    k.solve()
}

/// Layered impedance: diagonal blocks with random self terms, random
/// forward coupling between consecutive layers, zeros elsewhere.
pub fn random_layered<R: Rng>(rng: &mut R, na: usize, sizes: &[usize], r: f64) -> CMat {
    let n = na + sizes.iter().sum::<usize>();
    let mut z = CMat::zeros(n, n);
    for a in 0..na {
        z[(a, a)] = c(r, 0.0);
    }
    let mut prev = (0, na);
    let mut off = na;
    for &sz in sizes {
        for i in 0..sz {
            z[(off + i, off + i)] = c(rng.random_range(60.0..80.0), rng.random_range(30.0..50.0));
            for j in 0..prev.1 {
                z[(off + i, prev.0 + j)] = c(rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0));
            }
        }
        prev = (off, sz);
        off += sz;
    }
    z
}

pub fn rel_err(a: &CMat, b: &CMat) -> f64 {
    (a - b).norm() / b.norm()
}
