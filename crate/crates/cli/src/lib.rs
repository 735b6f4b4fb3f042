//! Scenario files in, reports and CSV tables out.

use std::path::{Path, PathBuf};

use dsa_core::{DsaError, Exec};

pub mod config;
pub mod report;
pub mod run;
pub mod units;

use config::{ConfigErrors, Resolved, ScenarioConfig, SweepAxis};
pub use run::Outcome;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("invalid configuration:\n{0}")]
    Config(ConfigErrors),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] DsaError),
}

impl From<ConfigErrors> for CliError {
    fn from(e: ConfigErrors) -> Self {
        CliError::Config(e)
    }
}

impl CliError {
    /// 2 for anything the user can fix in the config or command line.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            CliError::Io(..) | CliError::Core(_) => 1,
        }
    }
}

/// A parsed config with its resolved form.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ScenarioConfig,
    pub resolved: Resolved,
    /// Directory relative paths are taken against.
    pub base: PathBuf,
}

impl Loaded {
    pub fn from_file(path: &Path, seed: Option<u64>) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, &base, seed)
    }

    pub fn from_str(text: &str, base: &Path, seed: Option<u64>) -> Result<Self, CliError> {
        let mut config = ScenarioConfig::from_toml(text)?;
        if let Some(s) = seed {
            config.seed = s;
        }
        Self::from_config(config, base)
    }

    pub fn from_config(config: ScenarioConfig, base: &Path) -> Result<Self, CliError> {
        let resolved = config.resolve(base)?;
        Ok(Self {
            config,
            resolved,
            base: base.to_path_buf(),
        })
    }
}

/// Runs the scenario on the path its geometry selects.
pub fn run(loaded: &Loaded, exec: Exec) -> Result<Outcome, CliError> {
    let mut o = run::execute(&loaded.resolved, loaded.resolved.sim, exec)?;
    o.file("config.resolved.toml", loaded.config.to_toml());
    Ok(o)
}

/// Evaluates the general network and the layered SIM chain on the same layout.
pub fn compare_sim(loaded: &Loaded, exec: Exec) -> Result<Outcome, CliError> {
    let dsa = run::execute(&loaded.resolved, false, exec)?.prefixed("dsa");
    let sim = run::execute(&loaded.resolved, true, exec)?.prefixed("sim");
    let mut o = Outcome::default();
    if let (Some(a), Some(b)) = (dsa.file_contents("dsa_se.csv"), sim.file_contents("sim_se.csv")) {
        let mut csv = String::from("noise_dbm,dsa_sum_se,sim_sum_se\n");
        for (la, lb) in a.lines().skip(1).zip(b.lines().skip(1)) {
            let (n, va) = la.split_once(',').unwrap_or((la, ""));
            let vb = lb.split_once(',').map_or("", |x| x.1);
            csv.push_str(&format!("{n},{va},{vb}\n"));
        }
        o.files.push(("se.csv".into(), csv));
    }
    for part in [dsa, sim] {
        o.metrics.extend(part.metrics);
        o.files.extend(part.files);
        o.summary.extend(part.summary);
        o.timings.extend(part.timings);
    }
    o.files.push(("config.resolved.toml".into(), loaded.config.to_toml()));
    Ok(o)
}

/// Re-runs the scenario for every value of one field.
///
/// Points are spread over a pool of `workers` threads and evaluated
/// sequentially inside, so each point's numbers do not depend on `workers`.
pub fn sweep(loaded: &Loaded, axis: SweepAxis, values: &[String], workers: usize) -> Result<Outcome, CliError> {
    use rayon::prelude::*;
    if values.is_empty() {
        return Err(CliError::Usage("a sweep needs at least one value".into()));
    }
    let points: Vec<Loaded> = values
        .iter()
        .map(|v| {
            let cfg = axis.apply(&loaded.config, v)?;
            Loaded::from_config(cfg, &loaded.base)
        })
        .collect::<Result<_, _>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {workers} workers: {e}")))?;
    let results: Vec<Result<Outcome, CliError>> =
        pool.install(|| points.par_iter().map(|p| run::execute(&p.resolved, p.resolved.sim, Exec::Sequential)).collect());
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let columns: Vec<String> = results[0].summary.iter().map(|(k, _)| k.clone()).collect();
    let mut csv = format!("value,{}\n", columns.join(","));
    let mut o = Outcome::default();
    o.metrics.push(("sweep.axis".into(), SweepAxis::NAMES[axis as usize].into()));
    o.metrics.push(("sweep.points".into(), values.len().to_string()));
    for (i, (v, r)) in values.iter().zip(&results).enumerate() {
        let row: Vec<String> = columns
            .iter()
            .map(|c| r.summary_value(c).map_or_else(String::new, |x| format!("{x:.6}")))
            .collect();
        csv.push_str(&format!("{v},{}\n", row.join(",")));
        let tag = format!("point{i}");
        o.metrics.push((format!("{tag}.value"), v.clone()));
        o.metrics.extend(r.metrics.iter().map(|(k, x)| (format!("{tag}.{k}"), x.clone())));
        o.timings.extend(r.timings.iter().map(|(k, x)| (format!("{tag}.{k}"), *x)));
    }
    o.files.push(("sweep.csv".into(), csv));
    o.files.push(("config.resolved.toml".into(), loaded.config.to_toml()));
    o.summary = results.into_iter().next().map(|r| r.summary).unwrap_or_default();
    Ok(o)
}
