//! Scenario execution. Everything is computed in memory; writing is the caller's job.

use std::fmt::Write as _;
use std::time::Instant;

use num_complex::Complex64;

use dsa_core::channel::{
    azimuth_points, los_transimpedance_with, nlos_transimpedance, planar_direction, ring_index, ring_test_points,
    ula_positions, NlosSpec, ReceiverKind, TestPointSet, Transimpedance,
};
use dsa_core::em::geometry::Vec3;
use dsa_core::em::{assemble_impedance_matrix_with, DsaGeometry};
use dsa_core::linalg::{CMat, CVec, RMat};
use dsa_core::multiport::{build_sim_impedance, PowerReport};
use dsa_core::optimizer::{
    alternate_optimize, element_currents, power_report_at, Network, OptimizationResult, Problem, Subcarrier,
};
use dsa_core::targets::{
    beam_power_for_gain, beam_target, db10, diagonalization_report, directivity_toward, mean_std, radiation_pattern,
    sensitivity_analysis, sum_spectral_efficiency, svd_target, table_csv, worst_row_dominance, zf_target,
    SphereGrid,
};
use dsa_core::Exec;

use crate::config::{build_geometry, PatternExport, Resolved, ResolvedUseCase};
use crate::CliError;

/// Result of one scenario evaluation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outcome {
    /// Ordered `key=value` lines of the report.
    pub metrics: Vec<(String, String)>,
    /// Output files as `(name, contents)`.
    pub files: Vec<(String, String)>,
    /// Headline numbers for sweep tables.
    pub summary: Vec<(String, f64)>,
    pub timings: Vec<(String, f64)>,
}

impl Outcome {
    pub(crate) fn put(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metrics.push((key.into(), value.to_string()));
    }

    pub(crate) fn file(&mut self, name: impl Into<String>, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn metric(&self, key: &str) -> Option<&str> {
        self.metrics.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn metric_f64(&self, key: &str) -> Option<f64> {
        self.metric(key).and_then(|v| v.parse().ok())
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn file_contents(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }

    /// Prefixes every key and file name, for side-by-side reports.
    pub fn prefixed(mut self, p: &str) -> Self {
        for (k, _) in &mut self.metrics {
            *k = format!("{p}.{k}");
        }
        for (n, _) in &mut self.files {
            *n = format!("{p}_{n}");
        }
        for (k, _) in &mut self.summary {
            *k = format!("{p}_{k}");
        }
        for (k, _) in &mut self.timings {
            *k = format!("{p}.{k}");
        }
        self
    }
}

fn e3(x: f64) -> String {
    format!("{x:.3}")
}

fn e4(x: f64) -> String {
    format!("{x:.4}")
}

fn sci(x: f64) -> String {
    format!("{x:.6e}")
}

fn label(deg: f64) -> String {
    let s = format!("{deg}");
    s.replace('-', "m").replace('.', "p")
}

/// Network, channel geometry and problem pieces shared by all use cases.
pub struct Prepared<'a> {
    pub resolved: &'a Resolved,
    pub geometry: DsaGeometry,
    /// Elements whose currents radiate: the whole array, or the last SIM layer.
    pub radiating: DsaGeometry,
    pub networks: Vec<Network>,
    pub sim: bool,
}

impl<'a> Prepared<'a> {
    pub fn new(resolved: &'a Resolved, sim: bool, exec: Exec) -> Result<Self, CliError> {
        let geometry = build_geometry(&resolved.geometry, resolved)?;
        let radiating = if sim { geometry.radiating_layer()? } else { geometry.clone() };
        let networks = resolved
            .frequencies
            .iter()
            .map(|&f| -> Result<Network, CliError> {
                Ok(if sim {
                    if geometry.layer_sizes().is_none() {
                        return Err(CliError::Usage(
                            "the SIM path needs a layered geometry (disk, cylinder or sim-layers)".into(),
                        ));
                    }
                    Network::Sim(build_sim_impedance(&geometry, f)?)
                } else {
                    Network::General(assemble_impedance_matrix_with(&geometry, f, exec)?)
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            resolved,
            geometry,
            radiating,
            networks,
            sim,
        })
    }

    fn los(&self, pts: &TestPointSet, exec: Exec) -> Result<Vec<CMat>, CliError> {
        pts.check_radiative(&self.radiating, self.resolved.carrier)?;
        self.resolved
            .frequencies
            .iter()
            .map(|&f| Ok(los_transimpedance_with(&self.radiating, pts, f, exec)?.h))
            .collect()
    }

    fn problem(&self, hcs: &[CMat], targets: Vec<CMat>, svd: Vec<Option<dsa_core::targets::SvdTarget>>) -> Result<Problem, CliError> {
        let r = self.resolved;
        let subs = self
            .networks
            .iter()
            .zip(hcs)
            .zip(targets)
            .zip(svd)
            .map(|(((net, hc), h_opt), svd)| Subcarrier {
                network: net.clone(),
                hc: hc.clone(),
                h_opt,
                svd,
            })
            .collect();
        Ok(Problem::new(subs, r.matching, r.varactor, r.precoder, r.objective)?)
    }
}

fn trace_rows(out: &mut String, run: &str, res: &OptimizationResult) {
    for row in &res.trace {
        let _ = writeln!(out, "{run},{},{},{:.12e}", row.alternation, row.iteration, row.objective);
    }
}

fn power_metrics(o: &mut Outcome, prefix: &str, power: &[PowerReport]) {
    for (k, p) in power.iter().enumerate() {
        let key = |s: &str| format!("{prefix}power.k{k}.{s}");
        o.put(key("p_tx_w"), sci(p.p_tx));
        o.put(key("p_rad_w"), sci(p.p_rad));
        o.put(key("eta_m"), e4(p.eta_m));
        o.put(key("eta_d"), e4(p.eta_d));
        o.put(key("q"), e3(p.q));
    }
}

fn optimizer_metrics(o: &mut Outcome, prefix: &str, res: &OptimizationResult) {
    o.put(format!("{prefix}objective"), sci(res.objective));
    o.put(format!("{prefix}iterations"), res.trace.iter().filter(|t| t.iteration > 0).count());
    o.put(format!("{prefix}alternations"), res.outer.len());
    o.put(format!("{prefix}converged"), res.converged);
    o.put(format!("{prefix}degenerate_steps"), res.degenerate_steps);
    for (k, a) in res.alphas.iter().enumerate() {
        o.put(format!("{prefix}alpha.k{k}"), sci(*a));
    }
}

/// Pattern of input `n` at subcarrier `k`, with its power budget.
fn input_pattern(
    p: &Prepared,
    problem: &Problem,
    psi: &[f64],
    w_d: &CMat,
    k: usize,
    n: usize,
    exec: Exec,
) -> Result<(dsa_core::targets::Pattern, PowerReport), CliError> {
    let vg = w_d.columns(n, 1).into_owned();
    let i: CVec = element_currents(problem, psi, k, &vg)?.column(0).into_owned();
    let report = power_report_at(problem, psi, k, &vg)?;
    let f = p.resolved.frequencies[k];
    let pattern = radiation_pattern(&i, &p.radiating, f, &SphereGrid::one_degree(), report.p_rad, exec)?;
    Ok((pattern, report))
}

fn directivity_at(p: &Prepared, problem: &Problem, psi: &[f64], w_d: &CMat, k: usize, n: usize, deg: f64) -> dsa_core::Result<f64> {
    let vg = w_d.columns(n, 1).into_owned();
    let i: CVec = element_currents(problem, psi, k, &vg)?.column(0).into_owned();
    let report = power_report_at(problem, psi, k, &vg)?;
    Ok(directivity_toward(&i, &p.radiating, p.resolved.frequencies[k], deg, report.p_rad))
}

fn end_to_end(problem: &Problem, hc: &CMat, psi: &[f64], k: usize, w_d: &CMat) -> dsa_core::Result<CMat> {
    Ok(hc * element_currents(problem, psi, k, w_d)?)
}

pub fn execute(resolved: &Resolved, sim: bool, exec: Exec) -> Result<Outcome, CliError> {
    let t0 = Instant::now();
    let p = Prepared::new(resolved, sim, exec)?;
    let mut o = Outcome::default();
    o.timings.push(("setup_s".into(), t0.elapsed().as_secs_f64()));
    o.put("scenario", resolved_kind(&resolved.use_case));
    o.put("path", if sim { "sim" } else { "dsa" });
    o.put("seed", resolved.seed);
    o.put("n_active", p.geometry.n_active());
    o.put("n_scatterers", p.geometry.n_scatterers());
    o.put("n_radiating", p.radiating.len());
    for (k, f) in resolved.frequencies.iter().enumerate() {
        o.put(format!("frequency.k{k}_hz"), sci(*f));
    }
    o.summary.push(("n_s".into(), p.geometry.n_scatterers() as f64));
    let t1 = Instant::now();
    match &resolved.use_case {
        ResolvedUseCase::Beam { .. } => beam(&p, &mut o, exec)?,
        ResolvedUseCase::Miso { .. } => miso(&p, &mut o, exec)?,
        ResolvedUseCase::MimoPrecoder { .. } => mimo(&p, &mut o, exec)?,
    }
    o.timings.push(("solve_s".into(), t1.elapsed().as_secs_f64()));
    Ok(o)
}

fn resolved_kind(u: &ResolvedUseCase) -> &'static str {
    match u {
        ResolvedUseCase::Beam { .. } => "beam",
        ResolvedUseCase::Miso { .. } => "miso",
        ResolvedUseCase::MimoPrecoder { .. } => "mimo-precoder",
    }
}

struct BeamRun {
    label: String,
    /// `steer[k][n]` in degrees.
    steer: Vec<Vec<f64>>,
}

fn beam(p: &Prepared, o: &mut Outcome, exec: Exec) -> Result<(), CliError> {
    let r = p.resolved;
    let ResolvedUseCase::Beam {
        test_points,
        distance,
        angles,
        target_gain,
        receiver,
    } = &r.use_case
    else {
        unreachable!()
    };
    let kk = r.frequencies.len();
    let na = r.n_active;
    let pts = ring_test_points(*test_points, *distance, *receiver)?;
    let hcs = p.los(&pts, exec)?;
    let runs: Vec<BeamRun> = if na * kk == 1 {
        angles
            .iter()
            .map(|&a| BeamRun {
                label: label(a),
                steer: vec![vec![a]],
            })
            .collect()
    } else {
        vec![BeamRun {
            label: "joint".into(),
            steer: (0..kk).map(|k| (0..na).map(|n| angles[n * kk + k]).collect()).collect(),
        }]
    };
    o.put("runs", runs.len());
    let mut trace = String::from("run,alternation,iteration,objective\n");
    let mut sens_csv = String::from("run,input,subcarrier,sigma_rel,nominal_db,mean_db,std_db,loss_db\n");
    let (mut d_sum, mut em_sum, mut ed_sum, mut q_sum, mut count) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let mut loss_first: Option<f64> = None;
    for run in &runs {
        let targets = (0..kk)
            .map(|k| {
                let idx: Vec<usize> = run.steer[k].iter().map(|&a| ring_index(*test_points, a)).collect();
                let p_rx = beam_power_for_gain(*target_gain, r.frequencies[k], *distance);
                Ok(beam_target(*test_points, &[idx], p_rx)?.h_opt.remove(0))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let problem = p.problem(&hcs, targets, vec![None; kk])?;
        let t = Instant::now();
        let res = alternate_optimize(&problem, &r.optimizer, exec)?;
        o.timings.push((format!("run.{}.optimize_s", run.label), t.elapsed().as_secs_f64()));
        trace_rows(&mut trace, &run.label, &res);
        let pre = format!("run.{}.", run.label);
        optimizer_metrics(o, &pre, &res);
        for k in 0..kk {
            for n in 0..na {
                let deg = run.steer[k][n];
                let (pattern, report) = input_pattern(p, &problem, &res.psi, &res.w_ds[k], k, n, exec)?;
                let tag = if runs.len() == 1 && na * kk > 1 {
                    format!("in{n}_sc{k}_{}", label(deg))
                } else {
                    run.label.clone()
                };
                let key = |s: &str| format!("{pre}in{n}.sc{k}.{s}");
                let d_db = pattern.max_directivity_db();
                let toward = db10(directivity_at(p, &problem, &res.psi, &res.w_ds[k], k, n, deg)?);
                o.put(key("steer_deg"), deg);
                o.put(key("directivity_db"), e3(d_db));
                o.put(key("directivity_toward_steer_db"), e3(toward));
                o.put(key("peak_azimuth_deg"), format!("{:.1}", pattern.horizontal_peak_azimuth()));
                o.put(key("integrated_over_p_rad"), e4(pattern.integrated_power() / pattern.p_rad));
                o.put(key("eta_m"), e4(report.eta_m));
                o.put(key("eta_d"), e4(report.eta_d));
                o.put(key("q"), e3(report.q));
                d_sum += d_db;
                em_sum += report.eta_m;
                ed_sum += report.eta_d;
                q_sum += report.q;
                count += 1.0;
                let csv = match r.pattern {
                    PatternExport::Cut => pattern.azimuth_cut_csv(),
                    PatternExport::Sphere => pattern.to_csv(),
                };
                o.file(format!("pattern_{tag}.csv"), csv);

                if let Some((sigmas, trials)) = &r.sensitivity {
                    let ns = problem.n_scatterers();
                    for &s in sigmas {
                        let rep = sensitivity_analysis(&res.psi, ns, s, *trials, r.seed, exec, |psi| {
                            directivity_at(p, &problem, psi, &res.w_ds[k], k, n, deg).map(db10)
                        })?;
                        let (mean, std) = mean_std(&rep.trials);
                        let drops: Vec<f64> = rep.trials.iter().map(|d| toward - d).collect();
                        let loss = mean_std(&drops).0;
                        let _ = writeln!(sens_csv, "{},{n},{k},{s},{toward:.6},{mean:.6},{std:.6},{loss:.6}", run.label);
                        o.put(key(&format!("sensitivity.sigma_{s}.loss_db")), e3(loss));
                        loss_first.get_or_insert(loss);
                    }
                }
            }
        }
    }
    o.file("trace.csv", trace);
    if r.sensitivity.is_some() {
        o.file("sensitivity.csv", sens_csv);
    }
    o.summary.push(("directivity_db".into(), d_sum / count));
    o.summary.push(("eta_m".into(), em_sum / count));
    o.summary.push(("eta_d".into(), ed_sum / count));
    o.summary.push(("q".into(), q_sum / count));
    if let Some(l) = loss_first {
        o.summary.push(("sensitivity_loss_db".into(), l));
    }
    o.put("mean_directivity_db", e3(d_sum / count));
    Ok(())
}

/// `20 log10` dominance of the diagonal over each row's strongest off-diagonal entry.
fn dominance(table: &RMat) -> f64 {
    worst_row_dominance(table)
}

fn se_rows(h_eff: &[CMat], noise: &[f64], p_tx: f64) -> Result<Vec<f64>, CliError> {
    noise
        .iter()
        .map(|&s2| {
            let mut total = 0.0;
            for h in h_eff {
                total += sum_spectral_efficiency(h, s2, p_tx)?;
            }
            Ok(total / h_eff.len() as f64)
        })
        .collect()
}

fn dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

fn miso(p: &Prepared, o: &mut Outcome, exec: Exec) -> Result<(), CliError> {
    let r = p.resolved;
    let ResolvedUseCase::Miso {
        users,
        distance,
        p_tx,
        noise,
        receiver,
    } = &r.use_case
    else {
        unreachable!()
    };
    let pts = azimuth_points(users, *distance, *receiver)?;
    let hcs = p.los(&pts, exec)?;
    let targets = hcs
        .iter()
        .zip(&r.frequencies)
        .map(|(h, &f)| Ok(zf_target(&Transimpedance { h: h.clone(), frequency: f })?))
        .collect::<Result<Vec<_>, CliError>>()?;
    let kk = hcs.len();
    let problem = p.problem(&hcs, targets, vec![None; kk])?;
    let t = Instant::now();
    let res = alternate_optimize(&problem, &r.optimizer, exec)?;
    o.timings.push(("optimize_s".into(), t.elapsed().as_secs_f64()));
    optimizer_metrics(o, "", &res);
    power_metrics(o, "", &res.power);
    let mut trace = String::from("run,alternation,iteration,objective\n");
    trace_rows(&mut trace, "miso", &res);
    o.file("trace.csv", trace);

    let scale = Complex64::new(1.0 / (4.0 * r.matching.r).sqrt(), 0.0);
    let mut h_eff = Vec::new();
    let mut worst = f64::INFINITY;
    for k in 0..kk {
        let h = end_to_end(&problem, &hcs[k], &res.psi, k, &res.w_ds[k])?;
        let table = diagonalization_report(&CMat::identity(h.nrows(), h.nrows()), &h)?;
        let d = dominance(&table);
        worst = worst.min(d);
        o.put(format!("zf.k{k}.worst_row_dominance_db"), e3(d));
        o.file(format!("h_db_k{k}.csv"), table_csv(&table));
        h_eff.push(h * scale);
    }
    o.put("zf.worst_row_dominance_db", e3(worst));
    let se = se_rows(&h_eff, noise, *p_tx)?;
    let mut csv = String::from("noise_dbm,sum_se\n");
    for (s2, v) in noise.iter().zip(&se) {
        let _ = writeln!(csv, "{:.3},{v:.6}", dbm(*s2));
        o.put(format!("se.noise_{:.1}_dbm", dbm(*s2)), format!("{v:.6}"));
    }
    o.file("se.csv", csv);
    o.summary.push(("worst_row_dominance_db".into(), worst));
    o.summary.push(("sum_se_first".into(), se[0]));
    for (k, power) in res.power.iter().enumerate() {
        if k == 0 {
            o.summary.push(("eta_m".into(), power.eta_m));
            o.summary.push(("eta_d".into(), power.eta_d));
            o.summary.push(("q".into(), power.q));
        }
    }

    if let Some((sigmas, trials)) = &r.sensitivity {
        let mut csv = String::from("sigma_rel,mean_worst_dominance_db,std_db\n");
        let ns = problem.n_scatterers();
        for &s in sigmas {
            let rep = sensitivity_analysis(&res.psi, ns, s, *trials, r.seed, exec, |psi| {
                let h = end_to_end(&problem, &hcs[0], psi, 0, &res.w_ds[0])?;
                Ok(dominance(&diagonalization_report(&CMat::identity(h.nrows(), h.nrows()), &h)?))
            })?;
            let (mean, std) = mean_std(&rep.trials);
            let _ = writeln!(csv, "{s},{mean:.6},{std:.6}");
            o.put(format!("sensitivity.sigma_{s}.worst_row_dominance_db"), e3(mean));
        }
        o.file("sensitivity.csv", csv);
    }
    Ok(())
}

fn mimo(p: &Prepared, o: &mut Outcome, exec: Exec) -> Result<(), CliError> {
    let r = p.resolved;
    let ResolvedUseCase::MimoPrecoder {
        receivers,
        receiver_distance,
        receiver_spacing,
        scatterer_angles,
        scatterer_distance,
        rank,
        p_tx,
        noise,
    } = &r.use_case
    else {
        unreachable!()
    };
    let centre: Vec3 = planar_direction(0.0) * *receiver_distance;
    let pts = ula_positions(centre, *receivers, *receiver_spacing, Vec3::y(), ReceiverKind::HalfWaveDipole)?;
    let spec = NlosSpec::on_circle(*scatterer_distance, scatterer_angles);
    let hcs: Vec<Transimpedance> = r
        .frequencies
        .iter()
        .map(|&f| nlos_transimpedance(&p.radiating, &pts, &spec, f))
        .collect::<dsa_core::Result<_>>()?;
    let svds = hcs.iter().map(|h| svd_target(h, *rank)).collect::<dsa_core::Result<Vec<_>>>()?;
    let mut lam_csv = String::from("subcarrier,index,singular_value_db\n");
    for (k, s) in svds.iter().enumerate() {
        for (i, v) in s.lambda.iter().enumerate() {
            let _ = writeln!(lam_csv, "{k},{i},{:.6}", 20.0 * v.log10());
            o.put(format!("channel.k{k}.sigma{i}_db"), e3(20.0 * v.log10()));
        }
    }
    o.file("lambda.csv", lam_csv);
    let h_mats: Vec<CMat> = hcs.iter().map(|h| h.h.clone()).collect();
    let problem = p.problem(
        &h_mats,
        svds.iter().map(|s| s.h_opt.clone()).collect(),
        svds.iter().cloned().map(Some).collect(),
    )?;
    let t = Instant::now();
    let res = alternate_optimize(&problem, &r.optimizer, exec)?;
    o.timings.push(("optimize_s".into(), t.elapsed().as_secs_f64()));
    optimizer_metrics(o, "", &res);
    power_metrics(o, "", &res.power);
    let mut trace = String::from("run,alternation,iteration,objective\n");
    trace_rows(&mut trace, "mimo", &res);
    o.file("trace.csv", trace);

    let scale = Complex64::new(1.0 / (4.0 * r.matching.r).sqrt(), 0.0);
    let mut worst = f64::INFINITY;
    let mut h_eff = Vec::new();
    for k in 0..h_mats.len() {
        let h = end_to_end(&problem, &h_mats[k], &res.psi, k, &res.w_ds[k])?;
        let table = diagonalization_report(&svds[k].u, &h)?;
        let d = dominance(&table);
        worst = worst.min(d);
        for i in 0..table.nrows().min(table.ncols()) {
            o.put(format!("lambda_hat.k{k}.diag{i}_db"), e3(table[(i, i)]));
        }
        o.put(format!("lambda_hat.k{k}.worst_row_dominance_db"), e3(d));
        let name = if k == 0 { "lambda_hat.csv".to_string() } else { format!("lambda_hat_k{k}.csv") };
        o.file(name, table_csv(&table));
        h_eff.push(svds[k].u.adjoint() * h * scale);
    }
    o.put("lambda_hat.worst_row_dominance_db", e3(worst));
    o.summary.push(("worst_row_dominance_db".into(), worst));
    let se = se_rows(&h_eff, noise, *p_tx)?;
    let mut csv = String::from("noise_dbm,sum_se\n");
    for (s2, v) in noise.iter().zip(&se) {
        let _ = writeln!(csv, "{:.3},{v:.6}", dbm(*s2));
        o.put(format!("se.noise_{:.1}_dbm", dbm(*s2)), format!("{v:.6}"));
    }
    o.file("se.csv", csv);
    o.summary.push(("sum_se_first".into(), se[0]));

    if let Some((sigmas, trials)) = &r.sensitivity {
        let mut csv = String::from("sigma_rel,mean_worst_dominance_db,std_db,min_worst_dominance_db\n");
        let ns = problem.n_scatterers();
        for &s in sigmas {
            let rep = sensitivity_analysis(&res.psi, ns, s, *trials, r.seed, exec, |psi| {
                let h = end_to_end(&problem, &h_mats[0], psi, 0, &res.w_ds[0])?;
                Ok(dominance(&diagonalization_report(&svds[0].u, &h)?))
            })?;
            let (mean, std) = mean_std(&rep.trials);
            let min = rep.trials.iter().copied().fold(f64::INFINITY, f64::min);
            let _ = writeln!(csv, "{s},{mean:.6},{std:.6},{min:.6}");
            o.put(format!("sensitivity.sigma_{s}.worst_row_dominance_db"), e3(mean));
            if o.summary_value("sensitivity_dominance_db").is_none() {
                o.summary.push(("sensitivity_dominance_db".into(), mean));
            }
        }
        o.file("sensitivity.csv", csv);
    }
    Ok(())
}
