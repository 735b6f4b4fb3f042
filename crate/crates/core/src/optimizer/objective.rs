use num_complex::Complex64;

use crate::em::{varactor_impedance, PartitionedImpedance, VaractorParams};
use crate::em::load::varactor_impedance_unchecked;
use crate::error::{DsaError, Result};
use crate::exec::Exec;
use crate::linalg::{fast_lu, frob2, real_part, symmetric_sqrt, to_complex, CMat};
use crate::multiport::{sim_em_weights, MatchingKind, MatchingMode, SimImpedance};
use crate::targets::SvdTarget;

/// Objective value substituted when a network is singular, times the target energy.
pub const PENALTY: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub enum Network {
    General(PartitionedImpedance),
    /// Layered special case; the channel then covers the last layer only.
    Sim(SimImpedance),
}

impl Network {
    pub fn frequency(&self) -> f64 {
        match self {
            Network::General(z) => z.frequency,
            Network::Sim(s) => s.z.frequency,
        }
    }

    pub fn n_active(&self) -> usize {
        match self {
            Network::General(z) => z.n_active,
            Network::Sim(s) => s.z.n_active,
        }
    }

    pub fn n_scatterers(&self) -> usize {
        match self {
            Network::General(z) => z.n_scatterers(),
            Network::Sim(s) => s.z.n_scatterers(),
        }
    }

    /// Columns the channel matrix must have.
    pub fn radiating(&self) -> usize {
        match self {
            Network::General(z) => z.n(),
            Network::Sim(s) => *s.layer_sizes.last().expect("layers"),
        }
    }
}

/// One frequency: network, channel `H_C`, target and optional SVD combiner.
#[derive(Debug, Clone, PartialEq)]
pub struct Subcarrier {
    pub network: Network,
    pub hc: CMat,
    pub h_opt: CMat,
    pub svd: Option<SvdTarget>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    /// `sum_k ||alpha_k H_C W_EM W_D,k - H_opt,k||_F^2`.
    Frobenius,
    /// `sum_k ||alpha_k U_k^H H_C W_EM W_D,k - Lambda_k||_F^2`.
    Svd,
}

/// Everything the optimizer needs, with per-frequency matrices precomputed.
#[derive(Debug, Clone)]
pub struct Problem {
    pub subcarriers: Vec<Subcarrier>,
    pub matching: MatchingMode,
    pub varactor: VaractorParams,
    /// When false, `W_D,k = sqrt(4R) I` and only the scale `alpha_k` is adapted.
    pub precoder: bool,
    pub kind: ObjectiveKind,
    n_active: usize,
    n_scatterers: usize,
    /// Left factor and target per subcarrier for each objective kind.
    plain: Vec<(CMat, CMat)>,
    projected: Vec<(CMat, CMat)>,
}

impl Problem {
    pub fn new(
        subcarriers: Vec<Subcarrier>,
        matching: MatchingMode,
        varactor: VaractorParams,
        precoder: bool,
        kind: ObjectiveKind,
    ) -> Result<Self> {
        matching.validate()?;
        varactor.validate()?;
        let first = subcarriers
            .first()
            .ok_or_else(|| DsaError::InvalidParameter("at least one subcarrier required".into()))?;
        let na = first.network.n_active();
        let ns = first.network.n_scatterers();
        let mut plain = Vec::new();
        let mut projected = Vec::new();
        for (k, s) in subcarriers.iter().enumerate() {
            if !(s.network.frequency() > 0.0) {
                return Err(DsaError::NonPositiveFrequency(s.network.frequency()));
            }
            if s.network.n_active() != na || s.network.n_scatterers() != ns {
                return Err(DsaError::Dimension(format!("subcarrier {k} has a different element count")));
            }
            if s.hc.ncols() != s.network.radiating() || s.h_opt.shape() != (s.hc.nrows(), na) {
                return Err(DsaError::Dimension(format!(
                    "subcarrier {k}: channel {}x{} and target {}x{} do not fit {} radiating elements and {na} inputs",
                    s.hc.nrows(),
                    s.hc.ncols(),
                    s.h_opt.nrows(),
                    s.h_opt.ncols(),
                    s.network.radiating()
                )));
            }
            plain.push((s.hc.clone(), s.h_opt.clone()));
            match &s.svd {
                Some(t) => {
                    if t.u.nrows() != s.hc.nrows() || t.lambda.len() != na {
                        return Err(DsaError::Dimension(format!(
                            "subcarrier {k}: SVD target rank must equal the input count"
                        )));
                    }
                    let lam = CMat::from_diagonal(&crate::linalg::CVec::from_iterator(
                        na,
                        t.lambda.iter().map(|&x| Complex64::new(x, 0.0)),
                    ));
                    projected.push((t.u.adjoint() * &s.hc, lam));
                }
                None if kind == ObjectiveKind::Svd => {
                    return Err(DsaError::InvalidParameter(format!("subcarrier {k} lacks an SVD target")));
                }
                None => projected.push((CMat::zeros(0, 0), CMat::zeros(0, 0))),
            }
        }
        Ok(Self {
            subcarriers,
            matching,
            varactor,
            precoder,
            kind,
            n_active: na,
            n_scatterers: ns,
            plain,
            projected,
        })
    }

    pub fn n_active(&self) -> usize {
        self.n_active
    }

    pub fn n_scatterers(&self) -> usize {
        self.n_scatterers
    }

    /// Series matching loads are tuned only for the general network with simplified matching.
    pub fn tunes_matching(&self) -> bool {
        self.matching.kind == MatchingKind::Simplified && matches!(self.subcarriers[0].network, Network::General(_))
    }

    /// Length of `psi = {theta; phi}`.
    pub fn n_psi(&self) -> usize {
        self.n_scatterers + if self.tunes_matching() { self.n_active } else { 0 }
    }

    pub fn r(&self) -> f64 {
        self.matching.r
    }

    pub(crate) fn terms(&self, kind: ObjectiveKind) -> &[(CMat, CMat)] {
        match kind {
            ObjectiveKind::Frobenius => &self.plain,
            ObjectiveKind::Svd => &self.projected,
        }
    }

    /// Scale of the singularity penalty.
    pub(crate) fn penalty(&self, kind: ObjectiveKind) -> f64 {
        let e: f64 = self.terms(kind).iter().map(|(_, t)| frob2(t)).sum();
        PENALTY * if e > 0.0 { e } else { 1.0 }
    }

    /// `(Z_S, Z_L)` diagonals at subcarrier `k`.
    pub fn loads(&self, psi: &[f64], k: usize) -> (Vec<Complex64>, Vec<Complex64>) {
        let f = self.subcarriers[k].network.frequency();
        let ns = self.n_scatterers;
        let map = |t: &f64| varactor_impedance_unchecked(f, *t, &self.varactor);
        let zs = psi[..ns].iter().map(map).collect();
        let zl = if self.tunes_matching() {
            psi[ns..].iter().map(map).collect()
        } else {
            vec![Complex64::new(0.0, 0.0); self.n_active]
        };
        (zs, zl)
    }

    /// `L_k W_EM` where `L_k` is the objective's left factor.
    pub fn effective_channel(&self, psi: &[f64], k: usize, kind: ObjectiveKind) -> Option<CMat> {
        let (zs, zl) = self.loads(psi, k);
        let left = &self.terms(kind)[k].0;
        match &self.subcarriers[k].network {
            Network::General(z) => general_state(z, left, &zs, false).and_then(|s| {
                let top = source(&s.za, &zl, self.matching)?;
                Some(&s.y * top)
            }),
            Network::Sim(sim) => sim_em_weights(sim, &zs, self.r()).ok().map(|w| left * w),
        }
    }

    pub(crate) fn check_psi(&self, psi: &[f64]) -> Result<()> {
        if psi.len() != self.n_psi() {
            return Err(DsaError::Dimension(format!("psi has {} entries, expected {}", psi.len(), self.n_psi())));
        }
        Ok(())
    }

    /// Varactor impedance with frequency validation (for callers outside hot loops).
    pub fn load_impedance(&self, k: usize, theta: f64) -> Result<Complex64> {
        varactor_impedance(self.subcarriers[k].network.frequency(), theta, &self.varactor)
    }
}

/// Port-side factor mapping source voltages to active currents.
pub(crate) fn source(za: &CMat, zl: &[Complex64], m: MatchingMode) -> Option<CMat> {
    let na = za.nrows();
    match m.kind {
        MatchingKind::Perfect => {
            let s = symmetric_sqrt(&real_part(za)).ok()?;
            Some(to_complex(&s.inv_sqrt) / Complex64::new(0.0, 2.0 * m.r.sqrt()))
        }
        MatchingKind::Simplified => {
            let mut q = za.clone();
            for a in 0..na {
                q[(a, a)] += zl[a] + m.r;
            }
            fast_lu(&q)?.try_inverse()
        }
    }
}

/// Scatterer response at the current loads: `Z_A`, `Y = L_a - L_s X`
/// and, for gradients, the inverse and its projections.
pub(crate) struct GeneralState {
    pub za: CMat,
    pub y: CMat,
    pub x: CMat,
    pub ainv: CMat,
    pub p: CMat,
    pub c: CMat,
}

pub(crate) fn general_state(z: &PartitionedImpedance, left: &CMat, zs: &[Complex64], full: bool) -> Option<GeneralState> {
    let na = z.n_active;
    let ns = z.n_scatterers();
    let la = left.columns(0, na);
    if ns == 0 {
        return Some(GeneralState {
            za: z.zaa(),
            y: la.into_owned(),
            x: CMat::zeros(0, na),
            ainv: CMat::zeros(0, 0),
            p: CMat::zeros(left.nrows(), 0),
            c: CMat::zeros(na, 0),
        });
    }
    let ls = left.columns(na, ns);
    let mut a = z.zss();
    for s in 0..ns {
        a[(s, s)] += zs[s];
    }
    let lu = fast_lu(&a)?;
    let zsa = z.zsa();
    let zas = z.z.view((0, na), (na, ns));
    let (x, ainv) = if full {
        let ainv = lu.try_inverse()?;
        (&ainv * &zsa, ainv)
    } else {
        (lu.solve(&zsa)?, CMat::zeros(0, 0))
    };
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return None;
    }
    let za = z.zaa() - zas * &x;
    let y = la - ls * &x;
    let (p, c) = if full { (ls * &ainv, zas * &ainv) } else { (CMat::zeros(0, 0), CMat::zeros(0, 0)) };
    Some(GeneralState { za, y, x, ainv, p, c })
}

fn residual(m: &CMat, b: &CMat, target: &CMat) -> f64 {
    frob2(&(m * b - target))
}

/// Objective of the requested kind; `alphas` and `w_ds` are per subcarrier.
pub fn objective_of(psi: &[f64], alphas: &[f64], w_ds: &[CMat], problem: &Problem, kind: ObjectiveKind) -> f64 {
    let mut total = 0.0;
    for k in 0..problem.subcarriers.len() {
        let target = &problem.terms(kind)[k].1;
        match problem.effective_channel(psi, k, kind) {
            Some(m) => total += residual(&m, &(&w_ds[k] * Complex64::new(alphas[k], 0.0)), target),
            None => return problem.penalty(kind),
        }
    }
    if total.is_finite() {
        total
    } else {
        problem.penalty(kind)
    }
}

/// `sum_k ||alpha_k H_C W_EM W_D,k - H_opt,k||_F^2`.
pub fn objective(psi: &[f64], alphas: &[f64], w_ds: &[CMat], problem: &Problem) -> f64 {
    objective_of(psi, alphas, w_ds, problem, ObjectiveKind::Frobenius)
}

/// `sum_k ||alpha_k U_k^H H_C W_EM W_D,k - Lambda_k||_F^2`.
pub fn svd_objective(psi: &[f64], alphas: &[f64], w_ds: &[CMat], problem: &Problem) -> f64 {
    objective_of(psi, alphas, w_ds, problem, ObjectiveKind::Svd)
}

/// Forward-difference gradient with step `h_n = fd_step (1 + |psi_n|)`.
///
/// For the general network each scatterer coordinate changes one diagonal
/// entry of `Z_ss + Z_S`, so the perturbed responses follow from a rank-1
/// update of the factorization at `psi` instead of a fresh solve.
pub fn fd_gradient(
    psi: &[f64],
    f0: f64,
    alphas: &[f64],
    w_ds: &[CMat],
    problem: &Problem,
    kind: ObjectiveKind,
    fd_step: f64,
    exec: Exec,
) -> Vec<f64> {
    let n = psi.len();
    let step = |i: usize| fd_step * (1.0 + psi[i].abs());
    let general = matches!(problem.subcarriers[0].network, Network::General(_));
    if !general {
        return exec.map(n, |i| {
            let mut p = psi.to_vec();
            let h = step(i);
            p[i] += h;
            (objective_of(&p, alphas, w_ds, problem, kind) - f0) / h
        });
    }
    let ns = problem.n_scatterers();
    let kk = problem.subcarriers.len();
    let mut states = Vec::with_capacity(kk);
    for k in 0..kk {
        let Network::General(z) = &problem.subcarriers[k].network else { unreachable!() };
        let (zs, zl) = problem.loads(psi, k);
        match general_state(z, &problem.terms(kind)[k].0, &zs, true) {
            Some(s) => states.push((s, zs, zl)),
            None => return vec![0.0; n],
        }
    }
    let b: Vec<CMat> = (0..kk).map(|k| &w_ds[k] * Complex64::new(alphas[k], 0.0)).collect();
    let penalty = problem.penalty(kind);
    exec.map(n, |i| {
        let h = step(i);
        let mut total = 0.0;
        for k in 0..kk {
            let (st, zs, zl) = &states[k];
            let target = &problem.terms(kind)[k].1;
            let f = problem.subcarriers[k].network.frequency();
            let z_new = varactor_impedance_unchecked(f, psi[i] + h, &problem.varactor);
            let term = if i < ns {
                let delta = z_new - zs[i];
                let den = Complex64::new(1.0, 0.0) + delta * st.ainv[(i, i)];
                let gamma = delta / den;
                let xn = st.x.row(i);
                let za = &st.za + st.c.column(i) * xn * gamma;
                source(&za, zl, problem.matching).map(|top| {
                    let tb = top * &b[k];
                    let m = &st.y * &tb + st.p.column(i) * (xn * &tb) * gamma;
                    frob2(&(m - target))
                })
            } else {
                let mut zl2 = zl.clone();
                zl2[i - ns] = z_new;
                source(&st.za, &zl2, problem.matching).map(|top| residual(&st.y, &(top * &b[k]), target))
            };
            match term {
                Some(t) if t.is_finite() => total += t,
                _ => return (penalty - f0) / h,
            }
        }
        (total - f0) / h
    })
}
