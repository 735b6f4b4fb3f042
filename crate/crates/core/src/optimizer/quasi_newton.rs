use nalgebra::{DMatrix, DVector};

use super::objective::{fd_gradient, objective_of, Problem};
use super::OptimizerConfig;
use crate::error::{DsaError, Result};
use crate::exec::Exec;
use crate::linalg::CMat;

#[derive(Debug, Clone, PartialEq)]
pub struct QnConfig {
    pub max_iter: usize,
    pub grad_tol: f64,
    pub armijo: f64,
    pub max_backtracks: usize,
}

impl Default for QnConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            grad_tol: 0.0,
            armijo: 1e-4,
            max_backtracks: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QnOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    /// Objective after each accepted step.
    pub trace: Vec<f64>,
    /// True when stopped by the gradient tolerance or a failed line search
    /// from the steepest-descent direction.
    pub converged: bool,
}

/// BFGS on the inverse Hessian with backtracking Armijo line search.
pub fn bfgs<F, G>(f: F, grad: G, x0: &[f64], cfg: &QnConfig) -> Result<QnOutcome>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64], f64) -> Vec<f64>,
{
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut fx = f(x.as_slice());
    if !fx.is_finite() {
        return Err(DsaError::NonFiniteObjective);
    }
    let mut g = DVector::from_vec(grad(x.as_slice(), fx));
    let mut hinv: Option<DMatrix<f64>> = None;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut it = 0;
    while it < cfg.max_iter {
        let gmax = g.amax();
        if gmax <= cfg.grad_tol || gmax == 0.0 {
            converged = true;
            break;
        }
        let fresh = hinv.is_none();
        let d = match &hinv {
            Some(h) => -(h * &g),
            None => -&g / g.norm(),
        };
        let slope = g.dot(&d);
        let accepted = if slope < 0.0 {
            let mut t = 1.0;
            let mut found = None;
            for _ in 0..=cfg.max_backtracks {
                let xt = &x + &d * t;
                let ft = f(xt.as_slice());
                if ft.is_finite() && ft <= fx + cfg.armijo * t * slope {
                    found = Some((xt, ft, t));
                    break;
                }
                t *= 0.5;
            }
            // minimizer of the quadratic through f(0), f'(0) and f(t)
            found.map(|(xt, ft, t)| {
                let curv = ft - fx - slope * t;
                if curv > 0.0 {
                    let tq = -slope * t * t / (2.0 * curv);
                    if (tq - t).abs() > 1e-3 * t && tq < 10.0 * t {
                        let xq = &x + &d * tq;
                        let fq = f(xq.as_slice());
                        if fq.is_finite() && fq < ft {
                            return (xq, fq);
                        }
                    }
                }
                (xt, ft)
            })
        } else {
            None
        };
        let Some((xn, fnew)) = accepted else {
            if fresh {
                converged = true;
                break;
            }
            hinv = None;
            continue;
        };
        let gn = DVector::from_vec(grad(xn.as_slice(), fnew));
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let h = hinv.take().unwrap_or_else(|| DMatrix::identity(n, n) * (sy / y.dot(&y)));
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            // (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            let cross = &hy * s.transpose();
            let h2 = h - (&cross + cross.transpose()) * rho + (&s * s.transpose()) * (rho * rho * yhy + rho);
            hinv = Some(h2);
        } else {
            // curvature condition failed: restart from a scaled identity
            hinv = None;
        }
        x = xn;
        fx = fnew;
        g = gn;
        trace.push(fx);
        it += 1;
    }
    Ok(QnOutcome {
        x: x.as_slice().to_vec(),
        f: fx,
        iterations: it,
        trace,
        converged,
    })
}

/// STEP 2: minimizes the objective over `psi` with `alphas` and `w_ds` fixed.
pub fn minimize_psi(
    psi0: &[f64],
    alphas: &[f64],
    w_ds: &[CMat],
    problem: &Problem,
    cfg: &OptimizerConfig,
    exec: Exec,
) -> Result<QnOutcome> {
    cfg.validate()?;
    problem.check_psi(psi0)?;
    let kind = problem.kind;
    let qn = QnConfig {
        max_iter: cfg.n_inner,
        grad_tol: cfg.grad_tol,
        ..QnConfig::default()
    };
    bfgs(
        |p| objective_of(p, alphas, w_ds, problem, kind),
        |p, f0| fd_gradient(p, f0, alphas, w_ds, problem, kind, cfg.fd_step, exec),
        psi0,
        &qn,
    )
}
