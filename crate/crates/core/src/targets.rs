//! Target end-to-end matrices and the metrics used to judge a design:
//! radiation patterns and directivity, sum spectral efficiency,
//! diagonalization tables and parameter-mismatch sensitivity.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand_distr::{Distribution, Normal};

use crate::channel::{dipole_effective_length, planar_direction, Transimpedance};
use crate::em::geometry::Vec3;
use crate::em::{wavenumber, DsaGeometry, ETA0};
use crate::error::{DsaError, Result};
use crate::exec::Exec;
use crate::linalg::{numerical_rank, pinv, sorted_svd, CMat, CVec, RMat};
use crate::seed::{purpose, substream};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Beam,
    ZeroForcing,
    SvdPrecoder,
    Custom,
}

/// Per-subcarrier desired end-to-end matrices (`T x N_a` each).
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub kind: TargetKind,
    pub h_opt: Vec<CMat>,
    /// Combiner `U_k` and retained singular values for the SVD precoder.
    pub svd: Option<Vec<SvdTarget>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdTarget {
    pub u: CMat,
    pub lambda: Vec<f64>,
    pub h_opt: CMat,
}

/// Squared open-circuit voltage at distance `d` on a receiver of effective
/// length `lambda / pi` when 1 W of available power leaves the array with
/// realized gain `gain` toward it.
pub fn beam_power_for_gain(gain: f64, f: f64, d: f64) -> f64 {
    let l = crate::em::wavelength(f);
    ETA0 * l * l * gain / (4.0 * PI.powi(3) * d * d)
}

/// One-hot beam targets: `steer[k][n]` is the test-point index for input
/// `n` at subcarrier `k`.
pub fn beam_target(t: usize, steer: &[Vec<usize>], p_rx: f64) -> Result<TargetSpec> {
    if !(p_rx >= 0.0) {
        return Err(DsaError::InvalidParameter(format!("received power must be >= 0, got {p_rx}")));
    }
    let amp = Complex64::new(p_rx.sqrt(), 0.0);
    let mut h_opt = Vec::with_capacity(steer.len());
    for row in steer {
        if row.is_empty() {
            return Err(DsaError::InvalidParameter("beam target needs at least one input".into()));
        }
        let mut h = CMat::zeros(t, row.len());
        for (n, &idx) in row.iter().enumerate() {
            if idx >= t {
                return Err(DsaError::IndexOutOfRange { index: idx, max: t });
            }
            h[(idx, n)] = amp;
        }
        h_opt.push(h);
    }
    Ok(TargetSpec {
        kind: TargetKind::Beam,
        h_opt,
        svd: None,
    })
}

/// `H_C H_C^+`, computed from the pseudo-inverse rather than assumed.
pub fn zf_target(hc: &Transimpedance) -> Result<CMat> {
    let t = hc.h.nrows();
    let rank = numerical_rank(&hc.h, 1e-10);
    if rank < t {
        return Err(DsaError::RankDeficient(format!(
            "channel has rank {rank} but {t} users need full row rank"
        )));
    }
    Ok(&hc.h * pinv(&hc.h))
}

/// Leading `r` left singular vectors `U`, values `Lambda` and `H_opt = U Lambda`.
pub fn svd_target(hc: &Transimpedance, r: usize) -> Result<SvdTarget> {
    let (t, n) = hc.h.shape();
    if r == 0 || r > t.min(n) {
        return Err(DsaError::InvalidParameter(format!("rank {r} outside 1..={}", t.min(n))));
    }
    let svd = sorted_svd(&hc.h);
    if svd.s[r - 1] < 1e-10 * svd.s[0] {
        return Err(DsaError::RankDeficient(format!(
            "requested rank {r} exceeds numerical rank (sigma_r/sigma_1 = {:e})",
            svd.s[r - 1] / svd.s[0]
        )));
    }
    let u = svd.u.columns(0, r).into_owned();
    let lambda = svd.s[..r].to_vec();
    let lam = CMat::from_diagonal(&CVec::from_iterator(r, lambda.iter().map(|&s| Complex64::new(s, 0.0))));
    Ok(SvdTarget {
        h_opt: &u * lam,
        u,
        lambda,
    })
}

pub fn svd_targets(hcs: &[Transimpedance], r: usize) -> Result<TargetSpec> {
    let svd = hcs.iter().map(|h| svd_target(h, r)).collect::<Result<Vec<_>>>()?;
    Ok(TargetSpec {
        kind: TargetKind::SvdPrecoder,
        h_opt: svd.iter().map(|s| s.h_opt.clone()).collect(),
        svd: Some(svd),
    })
}

/// Radiation intensity `U = eta k^2 / (16 pi^2) |sum_n i_n l_n e^{jk u.p_n}|^2`,
/// scaled so that its integral over the sphere equals `i^H Re{Z} i`.
pub fn radiation_intensity(i: &CVec, g: &DsaGeometry, f: f64, dir: &Vec3) -> f64 {
    let k = wavenumber(f);
    let mut field = [Complex64::new(0.0, 0.0); 3];
    for (n, e) in g.elements().iter().enumerate() {
        let l = dipole_effective_length(e, f, dir);
        let w = i[n] * Complex64::from_polar(1.0, k * dir.dot(&e.position));
        for c in 0..3 {
            field[c] += w * l[c];
        }
    }
    let p: f64 = field.iter().map(|c| c.norm_sqr()).sum();
    ETA0 * k * k / (16.0 * PI * PI) * p
}

/// Sampled sphere: polar angle `0..=180` and azimuth `0..360` in `step` degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    pub step_deg: f64,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl SphereGrid {
    pub fn new(step_deg: f64) -> Self {
        let nt = (180.0 / step_deg).round() as usize;
        let np = (360.0 / step_deg).round() as usize;
        Self {
            step_deg,
            theta: (0..=nt).map(|j| (j as f64 * step_deg).to_radians()).collect(),
            phi: (0..np).map(|m| (m as f64 * step_deg).to_radians()).collect(),
        }
    }

    pub fn one_degree() -> Self {
        Self::new(1.0)
    }

    fn dir(&self, j: usize, m: usize) -> Vec3 {
        let (st, ct) = self.theta[j].sin_cos();
        let (sp, cp) = self.phi[m].sin_cos();
        Vec3::new(st * cp, st * sp, ct)
    }

    fn weight(&self, j: usize) -> f64 {
        let d = self.step_deg.to_radians();
        self.theta[j].sin() * d * d
    }
}

/// Intensity and directivity on a sphere grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub grid: SphereGrid,
    /// `u[j * n_phi + m]`.
    pub u: Vec<f64>,
    /// Radiated power used for normalization.
    pub p_rad: f64,
}

impl Pattern {
    pub fn directivity(&self, j: usize, m: usize) -> f64 {
        4.0 * PI * self.u[j * self.grid.phi.len() + m] / self.p_rad
    }

    /// Largest sampled directivity (linear).
    pub fn max_directivity(&self) -> f64 {
        4.0 * PI * self.u.iter().cloned().fold(0.0, f64::max) / self.p_rad
    }

    pub fn max_directivity_db(&self) -> f64 {
        10.0 * self.max_directivity().log10()
    }

    /// Azimuth (degrees) of the strongest horizontal-plane sample.
    pub fn horizontal_peak_azimuth(&self) -> f64 {
        let j = self.grid.theta.len() / 2;
        let np = self.grid.phi.len();
        let m = (0..np)
            .max_by(|&a, &b| self.u[j * np + a].total_cmp(&self.u[j * np + b]))
            .unwrap_or(0);
        self.grid.phi[m].to_degrees()
    }

    /// `integral of U over the sphere`.
    pub fn integrated_power(&self) -> f64 {
        let np = self.grid.phi.len();
        (0..self.grid.theta.len())
            .map(|j| self.grid.weight(j) * self.u[j * np..(j + 1) * np].iter().sum::<f64>())
            .sum()
    }

    /// `(1/4pi) integral of D`; unity for a consistent normalization.
    pub fn mean_directivity(&self) -> f64 {
        self.integrated_power() / self.p_rad
    }

    /// Rows of `azimuth_deg, elevation_deg, D_dB`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("azimuth_deg,elevation_deg,directivity_db\n");
        for (j, th) in self.grid.theta.iter().enumerate() {
            for (m, ph) in self.grid.phi.iter().enumerate() {
                let d = self.directivity(j, m);
                let db = if d > 0.0 { 10.0 * d.log10() } else { -300.0 };
                let _ = writeln!(s, "{:.1},{:.1},{:.4}", ph.to_degrees(), 90.0 - th.to_degrees(), db.max(-300.0));
            }
        }
        s
    }

    /// Horizontal cut only.
    pub fn azimuth_cut_csv(&self) -> String {
        let mut s = String::from("azimuth_deg,elevation_deg,directivity_db\n");
        let j = self.grid.theta.len() / 2;
        for (m, ph) in self.grid.phi.iter().enumerate() {
            let d = self.directivity(j, m);
            let db = if d > 0.0 { 10.0 * d.log10() } else { -300.0 };
            let _ = writeln!(s, "{:.1},0.0,{:.4}", ph.to_degrees(), db.max(-300.0));
        }
        s
    }
}

/// Far-field pattern of currents `i`, normalized by `p_rad = i^H Re{Z} i`.
pub fn radiation_pattern(i: &CVec, g: &DsaGeometry, f: f64, grid: &SphereGrid, p_rad: f64, exec: Exec) -> Result<Pattern> {
    if i.len() != g.len() {
        return Err(DsaError::Dimension(format!("{} currents for {} elements", i.len(), g.len())));
    }
    if i.iter().all(|c| c.norm_sqr() == 0.0) {
        return Err(DsaError::DegenerateRadiator(0.0));
    }
    if !(p_rad > 0.0) {
        return Err(DsaError::DegenerateRadiator(p_rad));
    }
    let np = grid.phi.len();
    let rows = exec.map(grid.theta.len(), |j| {
        (0..np).map(|m| radiation_intensity(i, g, f, &grid.dir(j, m))).collect::<Vec<_>>()
    });
    Ok(Pattern {
        grid: grid.clone(),
        u: rows.concat(),
        p_rad,
    })
}

/// Directivity (linear) toward horizontal azimuth `deg`.
pub fn directivity_toward(i: &CVec, g: &DsaGeometry, f: f64, deg: f64, p_rad: f64) -> f64 {
    4.0 * PI * radiation_intensity(i, g, f, &planar_direction(deg)) / p_rad
}

pub fn db10(x: f64) -> f64 {
    10.0 * x.log10()
}

/// `sum_t log2(1 + SINR_t)` with equal power `P_tx / N_a` per stream.
pub fn sum_spectral_efficiency(h: &CMat, sigma2: f64, p_tx: f64) -> Result<f64> {
    let (t, na) = h.shape();
    if t != na {
        return Err(DsaError::Dimension(format!("spectral efficiency needs a square channel, got {t}x{na}")));
    }
    if sigma2 < 0.0 {
        return Err(DsaError::InvalidParameter("negative noise power".into()));
    }
    let p = p_tx / na as f64;
    let mut se = 0.0;
    for r in 0..t {
        let sig = h[(r, r)].norm_sqr() * p;
        let int: f64 = (0..na).filter(|&c| c != r).map(|c| h[(r, c)].norm_sqr() * p).sum();
        let den = int + sigma2;
        if den == 0.0 {
            if sig == 0.0 {
                continue;
            }
            return Err(DsaError::InvalidParameter(format!(
                "row {r} is interference-free and noiseless: spectral efficiency is unbounded"
            )));
        }
        se += (1.0 + sig / den).log2();
    }
    Ok(se)
}

/// `20 log10 |(U^H H)_{n,k}|`.
pub fn diagonalization_report(u: &CMat, h: &CMat) -> Result<RMat> {
    if u.nrows() != h.nrows() {
        return Err(DsaError::Dimension("combiner and channel row counts differ".into()));
    }
    let m = u.adjoint() * h;
    Ok(RMat::from_fn(m.nrows(), m.ncols(), |i, j| {
        20.0 * m[(i, j)].norm().max(1e-300).log10()
    }))
}

/// Smallest gap (dB) between a diagonal entry and the largest
/// off-diagonal entry in its row.
pub fn worst_row_dominance(table: &RMat) -> f64 {
    (0..table.nrows().min(table.ncols()))
        .map(|r| {
            let off = (0..table.ncols())
                .filter(|&c| c != r)
                .map(|c| table[(r, c)])
                .fold(f64::NEG_INFINITY, f64::max);
            table[(r, r)] - off
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn table_csv(table: &RMat) -> String {
    let mut s = String::new();
    for r in 0..table.nrows() {
        let row: Vec<String> = (0..table.ncols()).map(|c| format!("{:.3}", table[(r, c)])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Perturbs the first `n_theta` parameters by `N(0, (sigma_rel |theta_n|)^2)`;
/// trial `t` draws from its own substream of `seed`.
pub fn perturb(psi: &[f64], n_theta: usize, sigma_rel: f64, seed: u64, trial: u64) -> Vec<f64> {
    let mut out = psi.to_vec();
    if sigma_rel == 0.0 {
        return out;
    }
    let mut rng = substream(seed, purpose::SENSITIVITY, trial);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    for v in out.iter_mut().take(n_theta) {
        let d: f64 = unit.sample(&mut rng);
        *v += sigma_rel * v.abs() * d;
    }
    out
}

/// Metric values per trial plus summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport<M> {
    pub trials: Vec<M>,
}

/// Evaluates `metric` on `trials` perturbed copies of `psi`, in parallel
/// over trials; results are independent of scheduling.
pub fn sensitivity_analysis<M, F>(
    psi: &[f64],
    n_theta: usize,
    sigma_rel: f64,
    trials: usize,
    seed: u64,
    exec: Exec,
    metric: F,
) -> Result<SensitivityReport<M>>
where
    M: Send,
    F: Fn(&[f64]) -> Result<M> + Sync + Send,
{
    if trials == 0 {
        return Err(DsaError::InvalidParameter("at least one sensitivity trial required".into()));
    }
    if !(sigma_rel >= 0.0) {
        return Err(DsaError::InvalidParameter("relative error must be >= 0".into()));
    }
    let out = exec.map(trials, |t| metric(&perturb(psi, n_theta, sigma_rel, seed, t as u64)));
    Ok(SensitivityReport {
        trials: out.into_iter().collect::<Result<Vec<_>>>()?,
    })
}

/// Mean and (population) standard deviation.
pub fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}
