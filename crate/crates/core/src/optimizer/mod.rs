//! Alternating design procedure: closed-form digital precoder and scale,
//! then quasi-Newton minimization over the load parameters.

mod alternate;
mod objective;
mod quasi_newton;

pub use alternate::{alpha_step, alternate_optimize, element_currents, power_report_at, power_reports, closed_form_digital_step, DigitalStep, OptimizationResult, TraceRow};
pub use objective::{fd_gradient, objective, objective_of, svd_objective, Network, ObjectiveKind, Problem, Subcarrier, PENALTY};
pub use quasi_newton::{bfgs, minimize_psi, QnConfig, QnOutcome};

/// Starting point of the load parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// `theta ~ U(-s, s)` with `s = init_spread`, `phi = 0`, from the configured seed.
    Random,
    Given(Vec<f64>),
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Alternations of STEP 1 and STEP 2.
    pub n_alt: usize,
    /// Quasi-Newton iterations per STEP 2.
    pub n_inner: usize,
    pub init: Init,
    pub init_spread: f64,
    pub seed: u64,
    /// Relative forward-difference step.
    pub fd_step: f64,
    /// Stop STEP 2 once the gradient infinity norm falls below this.
    pub grad_tol: f64,
    /// Relative objective change under which alternation stops.
    pub stall_tol: f64,
    /// Scale `alpha_k` used when the precoder is disabled. `None` refits it
    /// to the channel at the starting point.
    pub fixed_alpha: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            n_alt: 1,
            n_inner: 100,
            init: Init::Random,
            init_spread: 5.0,
            seed: 0,
            fd_step: 1e-6,
            grad_tol: 0.0,
            stall_tol: 1e-8,
            fixed_alpha: Some(1.0),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.n_alt == 0 || self.n_inner == 0 {
            return Err(crate::DsaError::InvalidParameter(
                "alternation and inner iteration counts must be at least 1".into(),
            ));
        }
        if !(self.fd_step > 0.0) {
            return Err(crate::DsaError::InvalidParameter("finite-difference step must be positive".into()));
        }
        if !(self.init_spread.is_finite() && self.init_spread >= 0.0) {
            return Err(crate::DsaError::InvalidParameter(format!(
                "initial spread must be finite and non-negative, got {}",
                self.init_spread
            )));
        }
        if let Some(a) = self.fixed_alpha {
            if !(a.is_finite() && a > 0.0) {
                return Err(crate::DsaError::InvalidParameter(format!("fixed alpha must be positive, got {a}")));
            }
        }
        Ok(())
    }
}
