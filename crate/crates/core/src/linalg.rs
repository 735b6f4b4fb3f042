//! Dense complex linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{DsaError, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;
pub type RMat = DMatrix<f64>;

/// Condition estimate above which a linear solve is refused.
pub const MAX_CONDITION: f64 = 1e12;

#[inline]
pub fn cplx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn frob2(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn real_part(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn imag_part(m: &CMat) -> RMat {
    m.map(|z| z.im)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| cplx(x, 0.0))
}

pub fn diag(values: &[Complex64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(values))
}

fn norm1(m: &CMat) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition number, computed from the explicit inverse.
pub fn condition_1(a: &CMat, inv: &CMat) -> f64 {
    norm1(a) * norm1(inv)
}

/// Pivoted LU factorization that refuses singular or badly conditioned input.
pub struct CheckedLu {
    lu: nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    pub condition: f64,
}

impl CheckedLu {
    pub fn new(a: &CMat, context: &str) -> Result<Self> {
        if !a.is_square() {
            return Err(DsaError::Dimension(format!(
                "{context}: expected square matrix, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if a.nrows() == 0 {
            return Ok(Self {
                lu: a.clone().lu(),
                condition: 1.0,
            });
        }
        let lu = a.clone().lu();
        let inv = lu.try_inverse().ok_or_else(|| DsaError::IllConditioned {
            context: context.to_string(),
            condition: f64::INFINITY,
        })?;
        let condition = condition_1(a, &inv);
        if !condition.is_finite() || condition > MAX_CONDITION {
            return Err(DsaError::IllConditioned {
                context: context.to_string(),
                condition,
            });
        }
        Ok(Self { lu, condition })
    }

    pub fn solve(&self, b: &CMat) -> CMat {
        if b.nrows() == 0 {
            return b.clone();
        }
        self.lu.solve(b).expect("factorization checked non-singular")
    }
}

/// Cheap singularity screen used in hot loops: pivoted LU plus a pivot-ratio test.
pub fn fast_lu(a: &CMat) -> Option<nalgebra::LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>> {
    let lu = a.clone().lu();
    let u = lu.u();
    let mut max = 0.0f64;
    let mut min = f64::INFINITY;
    for i in 0..u.nrows().min(u.ncols()) {
        let p = u[(i, i)].norm();
        max = max.max(p);
        min = min.min(p);
    }
    if u.nrows() > 0 && (!(min > 0.0) || !min.is_finite() || max / min > 1e14) {
        return None;
    }
    Some(lu)
}

/// Principal square root and inverse square root of a symmetric matrix.
pub struct SymmetricSqrt {
    pub sqrt: RMat,
    pub inv_sqrt: RMat,
    /// Number of eigenvalues raised to the floor.
    pub clamped: usize,
}

/// Relative eigenvalue floor for the principal square root.
pub const EIG_FLOOR: f64 = 1e-12;
/// Negative eigenvalues below `-NEG_TOL * max` are a passivity violation.
pub const NEG_TOL: f64 = 1e-6;

pub fn symmetric_sqrt(m: &RMat) -> Result<SymmetricSqrt> {
    let sym = (m + m.transpose()) * 0.5;
    let n = sym.nrows();
    if n == 0 {
        return Ok(SymmetricSqrt {
            sqrt: sym.clone(),
            inv_sqrt: sym,
            clamped: 0,
        });
    }
    let eig = SymmetricEigen::new(sym);
    let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(DsaError::PassivityViolation {
            eigenvalue: max,
            floor: 0.0,
        });
    }
    let floor = EIG_FLOOR * max;
    let mut clamped = 0;
    let mut s = DVector::zeros(n);
    let mut si = DVector::zeros(n);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l < -NEG_TOL * max {
            return Err(DsaError::PassivityViolation {
                eigenvalue: l,
                floor: -NEG_TOL * max,
            });
        }
        let l = if l < floor {
            clamped += 1;
            floor
        } else {
            l
        };
        s[i] = l.sqrt();
        si[i] = 1.0 / l.sqrt();
    }
    if clamped > 0 {
        log::warn!("symmetric_sqrt: {clamped} eigenvalue(s) clamped to floor {floor:.3e}");
    }
    let v = &eig.eigenvectors;
    let sqrt = v * RMat::from_diagonal(&s) * v.transpose();
    let inv_sqrt = v * RMat::from_diagonal(&si) * v.transpose();
    Ok(SymmetricSqrt {
        sqrt,
        inv_sqrt,
        clamped,
    })
}

/// Moore-Penrose pseudo-inverse via SVD.
pub fn pinv(m: &CMat) -> CMat {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return CMat::zeros(c, r);
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let tol = (r.max(c) as f64) * f64::EPSILON * smax;
    svd.pseudo_inverse(tol).unwrap_or_else(|_| CMat::zeros(c, r))
}

/// Thin SVD with singular values sorted in decreasing order.
pub struct SortedSvd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v: CMat,
}

pub fn sorted_svd(m: &CMat) -> SortedSvd {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let k = order.len();
    let mut uo = CMat::zeros(m.nrows(), k);
    let mut vo = CMat::zeros(m.ncols(), k);
    let mut s = Vec::with_capacity(k);
    for (j, &i) in order.iter().enumerate() {
        uo.set_column(j, &u.column(i));
        vo.set_column(j, &vt.row(i).adjoint());
        s.push(svd.singular_values[i]);
    }
    SortedSvd { u: uo, s, v: vo }
}

/// Numerical rank with relative threshold `rel` on the largest singular value.
pub fn numerical_rank(m: &CMat, rel: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let s = m.clone().singular_values();
    let smax = s.iter().cloned().fold(0.0, f64::max);
    s.iter().filter(|&&x| x > rel * smax).count()
}
