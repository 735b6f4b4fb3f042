//! Declarative scenario files.
//!
//! Every dimensional value is a string with a unit suffix. Unknown keys are
//! rejected at parse time; everything else is checked by [`ScenarioConfig::resolve`].

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use dsa_core::channel::ReceiverKind;
use dsa_core::em::{wavelength, DsaGeometry, VaractorParams};
use dsa_core::multiport::MatchingMode;
use dsa_core::optimizer::{Init, ObjectiveKind, OptimizerConfig};

use crate::units::{parse, Dim, UnitError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub frequency: FrequencySection,
    pub geometry: GeometrySection,
    pub matching: MatchingSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub varactor: Option<VaractorSection>,
    pub scenario: UseCase,
    pub optimizer: OptimizerSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySection {
    pub carrier: String,
    #[serde(default = "one")]
    pub subcarriers: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<String>,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Disk,
    Cylinder,
    Random,
    SimLayers,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub shape: Shape,
    pub active: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ring_spacing: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rings: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disks: Option<usize>,
    /// Random shape: number of scatterers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scatterers: Option<usize>,
    /// Random shape: disk radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<String>,
    /// File shape: element table, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchingKindName {
    Perfect,
    Simplified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchingSection {
    pub mode: MatchingKindName,
    pub resistance: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VaractorSection {
    pub series_resistance: String,
    pub l1: String,
    pub l2: String,
    pub c_min: String,
    pub c_max: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReceiverName {
    #[default]
    Isotropic,
    HalfWaveDipole,
}

impl From<ReceiverName> for ReceiverKind {
    fn from(r: ReceiverName) -> Self {
        match r {
            ReceiverName::Isotropic => ReceiverKind::Isotropic,
            ReceiverName::HalfWaveDipole => ReceiverKind::HalfWaveDipole,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum UseCase {
    /// Steered beams on a far-field ring of test points.
    Beam {
        test_points: usize,
        distance: String,
        /// One run per angle for a single input and carrier; otherwise one
        /// angle per (input, subcarrier), input-major.
        angles: Vec<String>,
        target_gain: String,
        #[serde(default)]
        receiver: ReceiverName,
    },
    /// Zero forcing toward single-antenna users.
    Miso {
        users: Vec<String>,
        distance: String,
        p_tx: String,
        noise: Vec<String>,
        #[serde(default)]
        receiver: ReceiverName,
    },
    /// SVD precoding over a multipath channel to a receiving ULA.
    MimoPrecoder {
        receivers: usize,
        receiver_distance: String,
        receiver_spacing: String,
        scatterer_angles: Vec<String>,
        scatterer_distance: String,
        rank: usize,
        p_tx: String,
        noise: Vec<String>,
    },
}

impl UseCase {
    pub fn name(&self) -> &'static str {
        match self {
            UseCase::Beam { .. } => "beam",
            UseCase::Miso { .. } => "miso",
            UseCase::MimoPrecoder { .. } => "mimo-precoder",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitName {
    Random,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveName {
    Frobenius,
    Svd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    pub alternations: usize,
    pub iterations: usize,
    pub precoder: bool,
    pub objective: ObjectiveName,
    pub init: InitName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_spread: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    /// Without the precoder: a fixed end-to-end scale, or `"fit"` to take
    /// the least-squares scale at the initial loads. Defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivitySection {
    pub sigma_rel: Vec<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternExport {
    /// Horizontal cut only.
    #[default]
    Cut,
    Sphere,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default)]
    pub pattern: PatternExport,
}

/// One problem with a field path.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Every problem found in one pass over the config.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<FieldError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Default)]
struct Collector(Vec<FieldError>);

impl Collector {
    fn push(&mut self, field: &str, message: impl fmt::Display) {
        self.0.push(FieldError {
            field: field.to_string(),
            message: message.to_string(),
        });
    }

    fn qty(&mut self, field: &str, text: &str, dim: Dim, carrier: Option<f64>) -> f64 {
        match parse(text, dim, carrier) {
            Ok(v) => v,
            Err(UnitError { reason, .. }) => {
                self.push(field, format!("{text:?}: {reason}"));
                f64::NAN
            }
        }
    }

    fn positive(&mut self, field: &str, text: &str, dim: Dim, carrier: Option<f64>) -> f64 {
        let v = self.qty(field, text, dim, carrier);
        if v.is_finite() && v <= 0.0 {
            self.push(field, format!("{text:?} must be positive"));
        }
        v
    }

    fn list(&mut self, field: &str, items: &[String], dim: Dim, carrier: Option<f64>) -> Vec<f64> {
        if items.is_empty() {
            self.push(field, "must not be empty");
        }
        items
            .iter()
            .enumerate()
            .map(|(i, t)| self.qty(&format!("{field}[{i}]"), t, dim, carrier))
            .collect()
    }

    fn required<T: Clone>(&mut self, field: &str, v: &Option<T>) -> Option<T> {
        if v.is_none() {
            self.push(field, "required for this geometry shape");
        }
        v.clone()
    }
}

/// Geometry source after unit resolution.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometrySpec {
    Rings {
        ring_spacing: f64,
        rings: usize,
        disks: usize,
    },
    Random {
        radius: f64,
        scatterers: usize,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedUseCase {
    Beam {
        test_points: usize,
        distance: f64,
        angles: Vec<f64>,
        target_gain: f64,
        receiver: ReceiverKind,
    },
    Miso {
        users: Vec<f64>,
        distance: f64,
        p_tx: f64,
        noise: Vec<f64>,
        receiver: ReceiverKind,
    },
    MimoPrecoder {
        receivers: usize,
        receiver_distance: f64,
        receiver_spacing: f64,
        scatterer_angles: Vec<f64>,
        scatterer_distance: f64,
        rank: usize,
        p_tx: f64,
        noise: Vec<f64>,
    },
}

/// Validated scenario in SI units.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub seed: u64,
    pub carrier: f64,
    pub frequencies: Vec<f64>,
    pub geometry: GeometrySpec,
    pub n_active: usize,
    /// Evaluate the layered network through the SIM chain.
    pub sim: bool,
    pub matching: MatchingMode,
    pub varactor: VaractorParams,
    pub use_case: ResolvedUseCase,
    pub optimizer: OptimizerConfig,
    pub precoder: bool,
    pub objective: ObjectiveKind,
    pub sensitivity: Option<(Vec<f64>, usize)>,
    pub pattern: PatternExport,
}

impl Resolved {
    pub fn wavelength(&self) -> f64 {
        wavelength(self.carrier)
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigErrors> {
        toml::from_str(text).map_err(|e| {
            ConfigErrors(vec![FieldError {
                field: "config".into(),
                message: e.message().to_string(),
            }])
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every field and converts to SI units. `base` anchors relative paths.
    pub fn resolve(&self, base: &Path) -> Result<Resolved, ConfigErrors> {
        let mut c = Collector::default();

        let carrier = c.positive("frequency.carrier", &self.frequency.carrier, Dim::Frequency, None);
        let kk = self.frequency.subcarriers;
        if kk == 0 {
            c.push("frequency.subcarriers", "must be at least 1");
        }
        let bandwidth = match &self.frequency.bandwidth {
            Some(b) => c.qty("frequency.bandwidth", b, Dim::Frequency, None),
            None => 0.0,
        };
        if bandwidth < 0.0 {
            c.push("frequency.bandwidth", "must be non-negative");
        }
        if kk > 1 && bandwidth == 0.0 {
            c.push("frequency.bandwidth", "several subcarriers need a positive bandwidth");
        }
        let frequencies: Vec<f64> = (0..kk.max(1)).map(|k| carrier + k as f64 * bandwidth / kk.max(1) as f64).collect();
        let lam_f = carrier.is_finite().then_some(carrier);

        let g = &self.geometry;
        if g.active == 0 {
            c.push("geometry.active", "must be at least 1");
        }
        let rings_spec = |c: &mut Collector, disks: usize| -> Option<GeometrySpec> {
            let spacing = c.required("geometry.ring_spacing", &g.ring_spacing)?;
            let spacing = c.positive("geometry.ring_spacing", &spacing, Dim::Length, lam_f);
            let rings = c.required("geometry.rings", &g.rings)?;
            if rings == 0 {
                c.push("geometry.rings", "must be at least 1");
            }
            Some(GeometrySpec::Rings {
                ring_spacing: spacing,
                rings,
                disks,
            })
        };
        let geometry = match g.shape {
            Shape::Disk | Shape::SimLayers => {
                if g.disks.is_some_and(|d| d != 1) && g.shape == Shape::Disk {
                    c.push("geometry.disks", "a disk has exactly one layer along z; use shape = \"cylinder\"");
                }
                rings_spec(&mut c, g.disks.unwrap_or(1))
            }
            Shape::Cylinder => {
                let d = c.required("geometry.disks", &g.disks).unwrap_or(1);
                if d == 0 {
                    c.push("geometry.disks", "must be at least 1");
                }
                rings_spec(&mut c, d)
            }
            Shape::Random => {
                let r = c.required("geometry.radius", &g.radius);
                let n = c.required("geometry.scatterers", &g.scatterers);
                match (r, n) {
                    (Some(r), Some(n)) => Some(GeometrySpec::Random {
                        radius: c.positive("geometry.radius", &r, Dim::Length, lam_f),
                        scatterers: n,
                    }),
                    _ => None,
                }
            }
            Shape::File => c.required("geometry.path", &g.path).map(|p| GeometrySpec::File(base.join(p))),
        };
        let extra: &[(&str, bool)] = match g.shape {
            Shape::Disk | Shape::Cylinder | Shape::SimLayers => {
                &[("geometry.radius", g.radius.is_some()), ("geometry.scatterers", g.scatterers.is_some()), ("geometry.path", g.path.is_some())]
            }
            Shape::Random => &[("geometry.ring_spacing", g.ring_spacing.is_some()), ("geometry.rings", g.rings.is_some()), ("geometry.disks", g.disks.is_some()), ("geometry.path", g.path.is_some())],
            Shape::File => &[("geometry.ring_spacing", g.ring_spacing.is_some()), ("geometry.rings", g.rings.is_some()), ("geometry.disks", g.disks.is_some()), ("geometry.radius", g.radius.is_some()), ("geometry.scatterers", g.scatterers.is_some())],
        };
        for (field, present) in extra {
            if *present {
                c.push(field, "not used by this geometry shape");
            }
        }

        let r = c.positive("matching.resistance", &self.matching.resistance, Dim::Resistance, None);
        let matching = match self.matching.mode {
            MatchingKindName::Perfect => MatchingMode::perfect(r),
            MatchingKindName::Simplified => MatchingMode::simplified(r),
        };

        let varactor = match &self.varactor {
            None => VaractorParams::default(),
            Some(v) => {
                let p = VaractorParams {
                    r_v: c.qty("varactor.series_resistance", &v.series_resistance, Dim::Resistance, None),
                    l1: c.positive("varactor.l1", &v.l1, Dim::Inductance, None),
                    l2: c.positive("varactor.l2", &v.l2, Dim::Inductance, None),
                    c_min: c.positive("varactor.c_min", &v.c_min, Dim::Capacitance, None),
                    c_max: c.positive("varactor.c_max", &v.c_max, Dim::Capacitance, None),
                };
                if p.r_v.is_finite() && p.c_min.is_finite() && p.c_max.is_finite() {
                    if let Err(e) = p.validate() {
                        c.push("varactor", e);
                    }
                }
                p
            }
        };

        let use_case = match &self.scenario {
            UseCase::Beam {
                test_points,
                distance,
                angles,
                target_gain,
                receiver,
            } => {
                if *test_points == 0 {
                    c.push("scenario.test_points", "must be at least 1");
                }
                let angles = c.list("scenario.angles", angles, Dim::Angle, None);
                let joint = g.active * kk.max(1);
                if joint > 1 && angles.len() != joint {
                    c.push(
                        "scenario.angles",
                        format!("{joint} inputs x subcarriers need exactly {joint} angles, got {}", angles.len()),
                    );
                }
                ResolvedUseCase::Beam {
                    test_points: *test_points,
                    distance: c.positive("scenario.distance", distance, Dim::Length, lam_f),
                    angles,
                    target_gain: c.positive("scenario.target_gain", target_gain, Dim::Gain, None),
                    receiver: (*receiver).into(),
                }
            }
            UseCase::Miso {
                users,
                distance,
                p_tx,
                noise,
                receiver,
            } => {
                let users = c.list("scenario.users", users, Dim::Angle, None);
                if users.len() != g.active {
                    c.push(
                        "scenario.users",
                        format!("zero forcing needs one user per active element ({}), got {}", g.active, users.len()),
                    );
                }
                ResolvedUseCase::Miso {
                    users,
                    distance: c.positive("scenario.distance", distance, Dim::Length, lam_f),
                    p_tx: c.positive("scenario.p_tx", p_tx, Dim::Power, None),
                    noise: c.list("scenario.noise", noise, Dim::Power, None),
                    receiver: (*receiver).into(),
                }
            }
            UseCase::MimoPrecoder {
                receivers,
                receiver_distance,
                receiver_spacing,
                scatterer_angles,
                scatterer_distance,
                rank,
                p_tx,
                noise,
            } => {
                if *rank == 0 || *rank > *receivers {
                    c.push("scenario.rank", format!("must be in 1..={receivers}"));
                }
                if *rank != g.active {
                    c.push("scenario.rank", format!("one stream per active element needs rank = {}", g.active));
                }
                ResolvedUseCase::MimoPrecoder {
                    receivers: *receivers,
                    receiver_distance: c.positive("scenario.receiver_distance", receiver_distance, Dim::Length, lam_f),
                    receiver_spacing: c.positive("scenario.receiver_spacing", receiver_spacing, Dim::Length, lam_f),
                    scatterer_angles: c.list("scenario.scatterer_angles", scatterer_angles, Dim::Angle, None),
                    scatterer_distance: c.positive("scenario.scatterer_distance", scatterer_distance, Dim::Length, lam_f),
                    rank: *rank,
                    p_tx: c.positive("scenario.p_tx", p_tx, Dim::Power, None),
                    noise: c.list("scenario.noise", noise, Dim::Power, None),
                }
            }
        };

        let o = &self.optimizer;
        let objective = match o.objective {
            ObjectiveName::Frobenius => ObjectiveKind::Frobenius,
            ObjectiveName::Svd => {
                if !matches!(self.scenario, UseCase::MimoPrecoder { .. }) {
                    c.push("optimizer.objective", "the svd objective needs the mimo-precoder scenario");
                }
                ObjectiveKind::Svd
            }
        };
        let optimizer = OptimizerConfig {
            n_alt: o.alternations,
            n_inner: o.iterations,
            init: match o.init {
                InitName::Random => Init::Random,
                InitName::Zero => Init::Zero,
            },
            init_spread: o.init_spread.unwrap_or(5.0),
            seed: self.seed,
            fd_step: o.fd_step.unwrap_or(1e-6),
            fixed_alpha: match o.scale.as_deref().map(str::trim) {
                None => Some(1.0),
                Some("fit") => None,
                Some(t) => match t.parse::<f64>() {
                    Ok(v) if v.is_finite() && v > 0.0 => Some(v),
                    _ => {
                        c.push("optimizer.scale", format!("{t:?} is neither \"fit\" nor a positive number"));
                        Some(1.0)
                    }
                },
            },
            ..OptimizerConfig::default()
        };
        if o.precoder && o.scale.is_some() {
            c.push("optimizer.scale", "only used without the precoder");
        }
        if let Err(e) = optimizer.validate() {
            c.push("optimizer", e);
        }
        if !o.precoder && o.scale.as_deref().map(str::trim) != Some("fit") && o.alternations > 1 {
            c.push(
                "optimizer.alternations",
                "with neither precoder nor fitted scale the load step runs once; set alternations = 1",
            );
        }

        let sensitivity = self.sensitivity.as_ref().map(|s| {
            if s.trials == 0 {
                c.push("sensitivity.trials", "must be at least 1");
            }
            for (i, v) in s.sigma_rel.iter().enumerate() {
                if !(v.is_finite() && *v >= 0.0) {
                    c.push(&format!("sensitivity.sigma_rel[{i}]"), "must be finite and non-negative");
                }
            }
            (s.sigma_rel.clone(), s.trials)
        });

        if let Some(s) = &self.sweep {
            if let Err(e) = SweepAxis::parse(&s.axis) {
                c.push("sweep.axis", e);
            }
            if s.values.is_empty() {
                c.push("sweep.values", "must not be empty");
            }
        }

        if !c.0.is_empty() {
            return Err(ConfigErrors(c.0));
        }
        Ok(Resolved {
            seed: self.seed,
            carrier,
            frequencies,
            geometry: geometry.expect("validated"),
            n_active: g.active,
            sim: g.shape == Shape::SimLayers,
            matching,
            varactor,
            use_case,
            optimizer,
            precoder: o.precoder,
            objective,
            sensitivity,
            pattern: self.output.pattern,
        })
    }
}

/// Numeric fields a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    RingSpacing,
    Rings,
    Disks,
    SigmaRel,
    Noise,
}

impl SweepAxis {
    pub const NAMES: [&'static str; 5] = ["ring_spacing", "rings", "disks", "sigma_rel", "noise"];

    pub fn parse(name: &str) -> Result<Self, String> {
        Ok(match name {
            "ring_spacing" => SweepAxis::RingSpacing,
            "rings" => SweepAxis::Rings,
            "disks" => SweepAxis::Disks,
            "sigma_rel" => SweepAxis::SigmaRel,
            "noise" => SweepAxis::Noise,
            _ => return Err(format!("unknown axis {name:?}; expected one of {}", Self::NAMES.join(", "))),
        })
    }

    /// Copy of `cfg` with this axis set to `value`.
    pub fn apply(self, cfg: &ScenarioConfig, value: &str) -> Result<ScenarioConfig, ConfigErrors> {
        let err = |field: &str, message: String| {
            ConfigErrors(vec![FieldError {
                field: field.to_string(),
                message,
            }])
        };
        let int = |field: &str| -> Result<usize, ConfigErrors> {
            value.trim().parse().map_err(|_| err(field, format!("{value:?} is not a non-negative integer")))
        };
        let mut out = cfg.clone();
        match self {
            SweepAxis::RingSpacing => out.geometry.ring_spacing = Some(value.to_string()),
            SweepAxis::Rings => out.geometry.rings = Some(int("geometry.rings")?),
            SweepAxis::Disks => {
                out.geometry.disks = Some(int("geometry.disks")?);
                if out.geometry.shape == Shape::Disk {
                    out.geometry.shape = Shape::Cylinder;
                }
            }
            SweepAxis::SigmaRel => {
                let v: f64 = value.trim().parse().map_err(|_| err("sensitivity.sigma_rel", format!("{value:?} is not a number")))?;
                let trials = cfg.sensitivity.as_ref().map_or(20, |s| s.trials);
                out.sensitivity = Some(SensitivitySection {
                    sigma_rel: vec![v],
                    trials,
                });
            }
            SweepAxis::Noise => match &mut out.scenario {
                UseCase::Miso { noise, .. } | UseCase::MimoPrecoder { noise, .. } => *noise = vec![value.to_string()],
                UseCase::Beam { .. } => return Err(err("sweep.axis", "the beam scenario has no noise level".into())),
            },
        }
        Ok(out)
    }
}

/// Builds the element layout for a resolved spec.
pub fn build_geometry(spec: &GeometrySpec, resolved: &Resolved) -> Result<DsaGeometry, crate::CliError> {
    use dsa_core::em::geometry::random_disk;
    use dsa_core::em::DiskLayout;
    use dsa_core::seed::{purpose, substream};
    let lam = resolved.wavelength();
    Ok(match spec {
        GeometrySpec::Rings {
            ring_spacing,
            rings,
            disks,
        } => DiskLayout::new(lam, *ring_spacing, *rings, *disks, resolved.n_active).build()?,
        GeometrySpec::Random { radius, scatterers } => {
            let mut rng = substream(resolved.seed, purpose::GEOMETRY, 0);
            random_disk(&mut rng, lam, *radius, resolved.n_active, *scatterers)?
        }
        GeometrySpec::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| crate::CliError::Io(path.clone(), e))?;
            let g = DsaGeometry::from_csv(&text).map_err(|e| {
                crate::CliError::Config(ConfigErrors(vec![FieldError {
                    field: "geometry.path".into(),
                    message: format!("{}: {e}", path.display()),
                }]))
            })?;
            if g.n_active() != resolved.n_active {
                return Err(crate::CliError::Config(ConfigErrors(vec![FieldError {
                    field: "geometry.active".into(),
                    message: format!("file {} has {} active elements", path.display(), g.n_active()),
                }])));
            }
            g
        }
    })
}
