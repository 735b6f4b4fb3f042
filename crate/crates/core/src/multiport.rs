//! Network algebra of the loaded array: input impedance, the EM weight
//! matrix under perfect and simplified matching, power bookkeeping and the
//! stacked-metasurface (block lower bidiagonal) special case.

use num_complex::Complex64;

use crate::em::{dipole_mutual_impedance, dipole_self_impedance, DsaGeometry, PartitionedImpedance};
use crate::error::{DsaError, Result};
use crate::linalg::{diag, imag_part, real_part, symmetric_sqrt, to_complex, CMat, CVec, CheckedLu, RMat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchingKind {
    /// Lossless two-sided network realizing conjugate power matching.
    Perfect,
    /// One tunable series load per active port.
    Simplified,
}

/// Matching network type plus the RF-chain internal resistance `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingMode {
    pub kind: MatchingKind,
    pub r: f64,
}

impl MatchingMode {
    pub fn perfect(r: f64) -> Self {
        Self {
            kind: MatchingKind::Perfect,
            r,
        }
    }

    pub fn simplified(r: f64) -> Self {
        Self {
            kind: MatchingKind::Simplified,
            r,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) {
            return Err(DsaError::InvalidParameter(format!(
                "RF-chain resistance must be positive, got {}",
                self.r
            )));
        }
        Ok(())
    }
}

/// Currents on all `N` elements per unit open-circuit source voltage (`N x N_a`).
#[derive(Debug, Clone, PartialEq)]
pub struct EmWeights {
    pub w: CMat,
    pub mode: MatchingMode,
    pub frequency: f64,
}

/// Power budget for one excitation. Powers follow the `i^H Re{Z} i` convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerReport {
    pub p_tx: f64,
    pub p_a: f64,
    pub p_rad: f64,
    pub p_react: f64,
    pub p_d: f64,
    pub eta_m: f64,
    pub eta_d: f64,
    pub q: f64,
}

/// Scatterer response `X = (Z_ss + Z_S)^{-1} Z_sa` and input impedance `Z_A`.
pub(crate) struct ScatterResponse {
    pub x: CMat,
    pub za: CMat,
}

pub(crate) fn scatter_response(z: &PartitionedImpedance, zs: &[Complex64]) -> Result<ScatterResponse> {
    let ns = z.n_scatterers();
    if zs.len() != ns {
        return Err(DsaError::Dimension(format!(
            "{} scatterer loads for {ns} scatterers",
            zs.len()
        )));
    }
    let zaa = z.zaa();
    if ns == 0 {
        return Ok(ScatterResponse {
            x: CMat::zeros(0, z.n_active),
            za: zaa,
        });
    }
    let a = z.zss() + diag(zs);
    let lu = CheckedLu::new(&a, "Z_ss + Z_S")?;
    let x = lu.solve(&z.zsa());
    let za = zaa - z.zas() * &x;
    Ok(ScatterResponse { x, za })
}

/// `Z_A = Z_aa - Z_as (Z_ss + Z_S)^{-1} Z_sa`.
pub fn input_impedance(z: &PartitionedImpedance, zs: &[Complex64]) -> Result<CMat> {
    Ok(scatter_response(z, zs)?.za)
}

/// Stacks `[top; -X top]`.
pub(crate) fn stack_weights(x: &CMat, top: &CMat) -> CMat {
    let na = top.nrows();
    let ns = x.nrows();
    let mut w = CMat::zeros(na + ns, top.ncols());
    w.view_mut((0, 0), (na, top.ncols())).copy_from(top);
    if ns > 0 {
        w.view_mut((na, 0), (ns, top.ncols())).copy_from(&(-(x * top)));
    }
    w
}

/// Source-side factor under perfect matching: `Re{Z_A}^{-1/2} / (j 2 sqrt(R))`.
pub(crate) fn perfect_source(za: &CMat, r: f64) -> Result<CMat> {
    let s = symmetric_sqrt(&real_part(za))?;
    Ok(to_complex(&s.inv_sqrt) / Complex64::new(0.0, 2.0 * r.sqrt()))
}

/// Source-side factor under simplified matching: `(Z_A + Z_L + R I)^{-1}`.
pub(crate) fn simplified_source(za: &CMat, zl: &[Complex64], r: f64) -> Result<CMat> {
    let na = za.nrows();
    if zl.len() != na {
        return Err(DsaError::Dimension(format!("{} matching loads for {na} ports", zl.len())));
    }
    let q = za + diag(zl) + CMat::identity(na, na) * Complex64::new(r, 0.0);
    let lu = CheckedLu::new(&q, "Q = Z_A + Z_L + R I")?;
    Ok(lu.solve(&CMat::identity(na, na)))
}

/// EM weights with the perfect (lossless, adaptive) matching network.
pub fn em_weights_perfect(z: &PartitionedImpedance, zs: &[Complex64], r: f64) -> Result<EmWeights> {
    MatchingMode::perfect(r).validate()?;
    let sr = scatter_response(z, zs)?;
    let top = perfect_source(&sr.za, r)?;
    Ok(EmWeights {
        w: stack_weights(&sr.x, &top),
        mode: MatchingMode::perfect(r),
        frequency: z.frequency,
    })
}

/// EM weights with the simplified series-load matching network.
pub fn em_weights_simplified(
    z: &PartitionedImpedance,
    zs: &[Complex64],
    zl: &[Complex64],
    r: f64,
) -> Result<EmWeights> {
    MatchingMode::simplified(r).validate()?;
    let sr = scatter_response(z, zs)?;
    let top = simplified_source(&sr.za, zl, r)?;
    Ok(EmWeights {
        w: stack_weights(&sr.x, &top),
        mode: MatchingMode::simplified(r),
        frequency: z.frequency,
    })
}

fn quad(m: &crate::linalg::RMat, i: &CVec) -> f64 {
    let mi = to_complex(m) * i;
    i.dotc(&mi).re
}

/// Power report for a single deterministic excitation `v_g`.
pub fn power_report(
    z: &PartitionedImpedance,
    zs: &[Complex64],
    zl: &[Complex64],
    w: &EmWeights,
    vg: &CVec,
) -> Result<PowerReport> {
    power_report_streams(z, zs, zl, w, &CMat::from_columns(&[vg.clone()]))
}

/// Power report averaged over independent excitations: the expectations are
/// sums over the columns of `vg` (`N_a x m`).
pub fn power_report_streams(
    z: &PartitionedImpedance,
    zs: &[Complex64],
    zl: &[Complex64],
    w: &EmWeights,
    vg: &CMat,
) -> Result<PowerReport> {
    let n = z.n();
    let na = z.n_active;
    if w.w.shape() != (n, na) || vg.nrows() != na || zs.len() != n - na {
        return Err(DsaError::Dimension("power report operands are inconsistent".into()));
    }
    let simplified = w.mode.kind == MatchingKind::Simplified;
    if simplified && zl.len() != na {
        return Err(DsaError::Dimension("simplified matching needs one Z_L per port".into()));
    }
    let re_z = real_part(&z.z);
    let im_z = imag_part(&z.z);
    let (mut p_rad, mut p_react, mut p_d, mut p_tx) = (0.0, 0.0, 0.0, 0.0);
    for v in vg.column_iter() {
        let v = v.into_owned();
        let i = &w.w * &v;
        p_tx += v.norm_squared() / (4.0 * w.mode.r);
        p_rad += quad(&re_z, &i);
        p_react += quad(&im_z, &i);
        p_d += zs
            .iter()
            .enumerate()
            .map(|(s, zz)| zz.re * i[na + s].norm_sqr())
            .sum::<f64>();
        if simplified {
            p_d += zl.iter().enumerate().map(|(a, zz)| zz.re * i[a].norm_sqr()).sum::<f64>();
        }
    }
    if !(p_rad > 0.0) {
        return Err(DsaError::DegenerateRadiator(p_rad));
    }
    let p_a = p_rad + p_d;
    Ok(PowerReport {
        p_tx,
        p_a,
        p_rad,
        p_react,
        p_d,
        eta_m: p_a / p_tx,
        eta_d: 1.0 - p_d / p_a,
        q: p_react.abs() / p_rad,
    })
}

/// Block lower bidiagonal impedance of a layered structure.
#[derive(Debug, Clone, PartialEq)]
pub struct SimImpedance {
    pub z: PartitionedImpedance,
    /// Element count per scatterer layer `1..=L`.
    pub layer_sizes: Vec<usize>,
    /// Full radiation-resistance block of the last layer, used for `P_rad`.
    pub last_layer_resistance: RMat,
}

impl SimImpedance {
    /// The last-layer resistance defaults to the real part of its (diagonal) block.
    pub fn new(z: PartitionedImpedance, layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.is_empty()
            || layer_sizes.iter().sum::<usize>() != z.n_scatterers()
            || layer_sizes.contains(&0)
        {
            return Err(DsaError::Dimension(format!(
                "layer sizes {layer_sizes:?} do not partition {} scatterers",
                z.n_scatterers()
            )));
        }
        let last = *layer_sizes.last().expect("non-empty");
        let o = z.n() - last;
        let last_layer_resistance = real_part(&z.z.view((o, o), (last, last)).into_owned());
        Ok(Self {
            z,
            layer_sizes,
            last_layer_resistance,
        })
    }

    /// Offset of layer `l` (0 = active ports) in the full index space.
    pub fn offset(&self, l: usize) -> usize {
        if l == 0 {
            0
        } else {
            self.z.n_active + self.layer_sizes[..l - 1].iter().sum::<usize>()
        }
    }

    pub fn size(&self, l: usize) -> usize {
        if l == 0 {
            self.z.n_active
        } else {
            self.layer_sizes[l - 1]
        }
    }

    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len()
    }
}

/// Keeps only self-impedances on the diagonal and forward coupling from
/// layer `l-1` into layer `l`; every other entry is exactly zero.
pub fn build_sim_impedance(g: &DsaGeometry, f: f64) -> Result<SimImpedance> {
    if !(f > 0.0) {
        return Err(DsaError::NonPositiveFrequency(f));
    }
    let layers = g
        .layers()
        .ok_or_else(|| DsaError::InvalidGeometry("missing layer annotation".into()))?;
    let sizes = g.layer_sizes().unwrap_or_default();
    let els = g.elements();
    let n = els.len();
    let mut z = CMat::zeros(n, n);
    for i in 0..n {
        z[(i, i)] = dipole_self_impedance(&els[i], f);
        for j in 0..n {
            if layers[i] == layers[j] + 1 {
                z[(i, j)] = dipole_mutual_impedance(&els[j], &els[i], f)?;
            }
        }
    }
    let mut sim = SimImpedance::new(PartitionedImpedance::new(z, g.n_active(), f)?, sizes)?;
    let o = sim.offset(sim.n_layers());
    let m = sim.size(sim.n_layers());
    for i in 0..m {
        for j in 0..m {
            if i != j {
                sim.last_layer_resistance[(i, j)] = dipole_mutual_impedance(&els[o + j], &els[o + i], f)?.re;
            }
        }
    }
    Ok(sim)
}

/// Last-layer currents per unit source voltage via the layer chain
/// `(-1)^L Phi_L B_L ... Phi_1 B_1 Q^{-1}`, with `Q = 2 R I` and
/// `Phi_l = (A_l + Z_S,l)^{-1}` using the diagonal of `A_l`.
pub fn sim_em_weights(sim: &SimImpedance, zs: &[Complex64], r: f64) -> Result<CMat> {
    Ok(sim_layer_currents(sim, zs, r)?.pop().expect("at least one layer"))
}

/// Currents per unit source voltage on every layer `1..=L` (`N_l x N_a` each).
pub fn sim_layer_currents(sim: &SimImpedance, zs: &[Complex64], r: f64) -> Result<Vec<CMat>> {
    MatchingMode::simplified(r).validate()?;
    let na = sim.z.n_active;
    if zs.len() != sim.z.n_scatterers() {
        return Err(DsaError::Dimension("one load per scatterer required".into()));
    }
    let mut m = CMat::identity(na, na) / Complex64::new(2.0 * r, 0.0);
    let mut out = Vec::with_capacity(sim.n_layers());
    for l in 1..=sim.n_layers() {
        let (o, n) = (sim.offset(l), sim.size(l));
        let (po, pn) = (sim.offset(l - 1), sim.size(l - 1));
        let b = sim.z.z.view((o, po), (n, pn));
        let mut next = -(b * &m);
        for i in 0..n {
            let d = sim.z.z[(o + i, o + i)] + zs[o - na + i];
            if !(d.norm() > 1e-300) || !d.re.is_finite() {
                return Err(DsaError::SingularLayer { layer: l });
            }
            let inv = 1.0 / d;
            next.row_mut(i).iter_mut().for_each(|x| *x *= inv);
        }
        out.push(next.clone());
        m = next;
    }
    Ok(out)
}

/// Power budget of the layered structure: only the last layer radiates,
/// every layer dissipates in its loads, and the ports see `Q = 2R I`.
pub fn sim_power_report(sim: &SimImpedance, zs: &[Complex64], r: f64, vg: &CMat) -> Result<PowerReport> {
    let layers = sim_layer_currents(sim, zs, r)?;
    let na = sim.z.n_active;
    if vg.nrows() != na {
        return Err(DsaError::Dimension("one source voltage per port required".into()));
    }
    let last = layers.last().expect("at least one layer");
    let o = sim.offset(sim.n_layers());
    let im_last = imag_part(&sim.z.z.view((o, o), (last.nrows(), last.nrows())).into_owned());
    let (mut p_rad, mut p_react, mut p_d, mut p_tx) = (0.0, 0.0, 0.0, 0.0);
    for v in vg.column_iter() {
        let v = v.into_owned();
        p_tx += v.norm_squared() / (4.0 * r);
        let il = last * &v;
        p_rad += quad(&sim.last_layer_resistance, &il);
        p_react += quad(&im_last, &il);
        for (l, cur) in layers.iter().enumerate() {
            let i = cur * &v;
            let base = sim.offset(l + 1) - na;
            p_d += (0..i.len()).map(|s| zs[base + s].re * i[s].norm_sqr()).sum::<f64>();
        }
    }
    if !(p_rad > 0.0) {
        return Err(DsaError::DegenerateRadiator(p_rad));
    }
    let p_a = p_rad + p_d;
    Ok(PowerReport {
        p_tx,
        p_a,
        p_rad,
        p_react,
        p_d,
        eta_m: p_a / p_tx,
        eta_d: 1.0 - p_d / p_a,
        q: p_react.abs() / p_rad,
    })
}
