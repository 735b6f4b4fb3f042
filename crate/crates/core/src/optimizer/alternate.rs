use num_complex::Complex64;
use rand::Rng;

use super::objective::{objective_of, Network, Problem};
use super::quasi_newton::minimize_psi;
use super::{Init, OptimizerConfig};
use crate::em::PartitionedImpedance;
use crate::error::{DsaError, Result};
use crate::exec::Exec;
use crate::linalg::{frob2, pinv, CMat};
use crate::multiport::{
    em_weights_perfect, em_weights_simplified, power_report_streams, sim_em_weights, sim_power_report, MatchingKind, PowerReport,
};
use crate::seed::{purpose, substream};

/// Minimizer of `||alpha M W_D - H_opt||` over real `alpha` and `W_D` with
/// `||W_D||_F^2 = 4 R N_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct DigitalStep {
    pub alpha: f64,
    pub w_d: CMat,
    /// Set when `M^+ H_opt = 0`; `W_D` then falls back to a scaled identity.
    pub degenerate: bool,
}

/// `P = M^+ H_opt`, `alpha = ||P||_F / sqrt(4 R N_a)`, `W_D = P / alpha`.
pub fn closed_form_digital_step(m: &CMat, h_opt: &CMat, r: f64, n_active: usize) -> DigitalStep {
    let p = pinv(m) * h_opt;
    let norm = p.norm();
    let scale = (4.0 * r * n_active as f64).sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return DigitalStep {
            alpha: 0.0,
            w_d: CMat::identity(n_active, n_active) * Complex64::new((4.0 * r).sqrt(), 0.0),
            degenerate: true,
        };
    }
    let alpha = norm / scale;
    DigitalStep {
        alpha,
        w_d: p / Complex64::new(alpha, 0.0),
        degenerate: false,
    }
}

/// Best real scale for a fixed precoder: `Re<M W_D, H_opt> / ||M W_D||^2`.
pub fn alpha_step(m: &CMat, w_d: &CMat, h_opt: &CMat) -> f64 {
    let g = m * w_d;
    let e = frob2(&g);
    if !(e > 0.0) {
        return 0.0;
    }
    let num: f64 = g.iter().zip(h_opt.iter()).map(|(a, b)| (a.conj() * b).re).sum();
    num / e
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub alternation: usize,
    pub iteration: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationResult {
    pub psi: Vec<f64>,
    pub alphas: Vec<f64>,
    pub w_ds: Vec<CMat>,
    /// Objective after STEP 1 (iteration 0) and after every accepted STEP 2 step.
    pub trace: Vec<TraceRow>,
    /// Objective at the end of each alternation.
    pub outer: Vec<f64>,
    pub objective: f64,
    /// The last inner run met its tolerance, or alternations stopped improving.
    pub converged: bool,
    pub degenerate_steps: usize,
    pub power: Vec<PowerReport>,
}

impl OptimizationResult {
    /// `alternation,iteration,objective` rows.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("alternation,iteration,objective\n");
        for r in &self.trace {
            s.push_str(&format!("{},{},{:.12e}\n", r.alternation, r.iteration, r.objective));
        }
        s
    }
}

fn initial_psi(problem: &Problem, cfg: &OptimizerConfig) -> Result<Vec<f64>> {
    let n = problem.n_psi();
    let ns = problem.n_scatterers();
    match &cfg.init {
        Init::Zero => Ok(vec![0.0; n]),
        Init::Given(p) => {
            problem.check_psi(p)?;
            Ok(p.clone())
        }
        Init::Random => {
            let mut rng = substream(cfg.seed, purpose::INIT, 0);
            Ok((0..n)
                .map(|i| if i < ns { rng.random_range(-1.0..=1.0) * cfg.init_spread } else { 0.0 })
                .collect())
        }
    }
}

/// STEP 0 to STEP 3: alternate the closed-form digital step and the
/// quasi-Newton load step `n_alt` times, stopping early on a stall.
pub fn alternate_optimize(problem: &Problem, cfg: &OptimizerConfig, exec: Exec) -> Result<OptimizationResult> {
    cfg.validate()?;
    let kind = problem.kind;
    let kk = problem.subcarriers.len();
    let na = problem.n_active();
    let r = problem.r();
    let mut psi = initial_psi(problem, cfg)?;
    let mut w_ds = vec![CMat::identity(na, na) * Complex64::new((4.0 * r).sqrt(), 0.0); kk];
    let mut alphas = vec![0.0; kk];
    let mut trace = Vec::new();
    let mut outer = Vec::new();
    let mut degenerate_steps = 0;
    let mut converged = false;
    let mut prev = f64::INFINITY;
    let mut value = f64::INFINITY;
    let energy: f64 = problem.terms(kind).iter().map(|(_, t)| frob2(t)).sum();
    let n_alt = if problem.precoder || cfg.fixed_alpha.is_none() { cfg.n_alt } else { 1 };
    for alt in 0..n_alt {
        for k in 0..kk {
            let target = &problem.terms(kind)[k].1;
            match problem.effective_channel(&psi, k, kind) {
                Some(m) if problem.precoder => {
                    let step = closed_form_digital_step(&m, target, r, na);
                    degenerate_steps += step.degenerate as usize;
                    alphas[k] = step.alpha;
                    w_ds[k] = step.w_d;
                }
                Some(m) => alphas[k] = cfg.fixed_alpha.unwrap_or_else(|| alpha_step(&m, &w_ds[k], target)),
                None => {
                    degenerate_steps += 1;
                    alphas[k] = 0.0;
                }
            }
        }
        value = objective_of(&psi, &alphas, &w_ds, problem, kind);
        if !value.is_finite() {
            return Err(DsaError::NonFiniteObjective);
        }
        trace.push(TraceRow {
            alternation: alt,
            iteration: 0,
            objective: value,
        });
        if value <= f64::EPSILON * f64::EPSILON * energy {
            outer.push(value);
            converged = true;
            break;
        }
        let out = minimize_psi(&psi, &alphas, &w_ds, problem, cfg, exec)?;
        for (i, f) in out.trace.iter().enumerate() {
            trace.push(TraceRow {
                alternation: alt,
                iteration: i + 1,
                objective: *f,
            });
        }
        psi = out.x;
        value = out.f;
        outer.push(value);
        log::info!("alternation {alt}: objective {value:.6e} after {} iterations", out.iterations);
        converged = out.converged;
        if prev.is_finite() && (prev - value).abs() <= cfg.stall_tol * prev.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        prev = value;
    }
    let power = power_reports(problem, &psi, &w_ds)?;
    Ok(OptimizationResult {
        psi,
        alphas,
        w_ds,
        trace,
        outer,
        objective: value,
        converged,
        degenerate_steps,
        power,
    })
}

/// Power budget per subcarrier with the precoder columns as excitations.
pub fn power_reports(problem: &Problem, psi: &[f64], w_ds: &[CMat]) -> Result<Vec<PowerReport>> {
    (0..problem.subcarriers.len())
        .map(|k| power_report_at(problem, psi, k, &w_ds[k]))
        .collect()
}

/// Power budget of subcarrier `k` for generator voltages `vg` (one column per excitation).
pub fn power_report_at(problem: &Problem, psi: &[f64], k: usize, vg: &CMat) -> Result<PowerReport> {
    let (zs, zl) = problem.loads(psi, k);
    match &problem.subcarriers[k].network {
        Network::General(z) => general_power(z, &zs, &zl, problem, vg),
        Network::Sim(sim) => sim_power_report(sim, &zs, problem.r(), vg),
    }
}

fn general_power(
    z: &PartitionedImpedance,
    zs: &[Complex64],
    zl: &[Complex64],
    problem: &Problem,
    w_d: &CMat,
) -> Result<PowerReport> {
    let r = problem.r();
    let w = match problem.matching.kind {
        MatchingKind::Perfect => em_weights_perfect(z, zs, r)?,
        MatchingKind::Simplified => em_weights_simplified(z, zs, zl, r)?,
    };
    power_report_streams(z, zs, zl, &w, w_d)
}

/// Currents of the radiating elements (all elements, or the last SIM layer),
/// one column per input, for unit generator voltages scaled by `w_d`.
pub fn element_currents(problem: &Problem, psi: &[f64], k: usize, w_d: &CMat) -> Result<CMat> {
    let (zs, zl) = problem.loads(psi, k);
    let r = problem.r();
    let w = match &problem.subcarriers[k].network {
        Network::General(z) => match problem.matching.kind {
            MatchingKind::Perfect => em_weights_perfect(z, &zs, r)?.w,
            MatchingKind::Simplified => em_weights_simplified(z, &zs, &zl, r)?.w,
        },
        Network::Sim(sim) => sim_em_weights(sim, &zs, r)?,
    };
    Ok(w * w_d)
}
