//! Dipole elements, array geometry and the deployment generators.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::Vector3;
use rand::Rng;

use crate::error::{DsaError, Result};

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Active,
    Scatterer,
}

impl ElementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Active => "active",
            ElementKind::Scatterer => "scatterer",
        }
    }
}

/// A thin straight wire dipole with sinusoidal current distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleElement {
    pub position: Vec3,
    pub length: f64,
    pub wire_radius: f64,
    pub orientation: Vec3,
    pub kind: ElementKind,
}

/// Maximum ratio wire_radius / length.
pub const MAX_RADIUS_RATIO: f64 = 0.05;

impl DipoleElement {
    pub fn new(position: Vec3, length: f64, wire_radius: f64, orientation: Vec3, kind: ElementKind) -> Self {
        Self {
            position,
            length,
            wire_radius,
            orientation,
            kind,
        }
    }

    /// Vertical (z-oriented) dipole.
    pub fn vertical(position: Vec3, length: f64, wire_radius: f64, kind: ElementKind) -> Self {
        Self::new(position, length, wire_radius, Vec3::z(), kind)
    }

    pub fn validate(&self, index: usize) -> Result<()> {
        let bad = |reason: String| Err(DsaError::InvalidElement { index, reason });
        if !(self.length > 0.0) || !self.length.is_finite() {
            return bad(format!("length must be positive, got {}", self.length));
        }
        if !(self.wire_radius > 0.0) {
            return bad(format!("wire radius must be positive, got {}", self.wire_radius));
        }
        if self.wire_radius > MAX_RADIUS_RATIO * self.length {
            return bad(format!(
                "wire radius {} exceeds {} x length",
                self.wire_radius, MAX_RADIUS_RATIO
            ));
        }
        if (self.orientation.norm() - 1.0).abs() > 1e-12 {
            return bad(format!("orientation norm {} is not 1", self.orientation.norm()));
        }
        if !self.position.iter().all(|x| x.is_finite()) {
            return bad("non-finite position".into());
        }
        Ok(())
    }
}

/// Ordered element cloud: active elements first, then scatterers.
#[derive(Debug, Clone, PartialEq)]
pub struct DsaGeometry {
    elements: Vec<DipoleElement>,
    n_active: usize,
    layers: Option<Vec<usize>>,
}

impl DsaGeometry {
    pub fn new(elements: Vec<DipoleElement>, layers: Option<Vec<usize>>) -> Result<Self> {
        if elements.is_empty() {
            return Err(DsaError::InvalidGeometry("no elements".into()));
        }
        for (i, e) in elements.iter().enumerate() {
            e.validate(i)?;
        }
        let n_active = elements.iter().take_while(|e| e.kind == ElementKind::Active).count();
        if n_active == 0 {
            return Err(DsaError::InvalidGeometry("at least one active element is required".into()));
        }
        if elements[n_active..].iter().any(|e| e.kind == ElementKind::Active) {
            return Err(DsaError::InvalidGeometry(
                "active elements must precede all scatterers".into(),
            ));
        }
        for i in 0..elements.len() {
            for j in (i + 1)..elements.len() {
                let d = (elements[i].position - elements[j].position).norm();
                let min = elements[i].wire_radius + elements[j].wire_radius;
                if d <= min {
                    return Err(DsaError::InvalidGeometry(format!(
                        "elements {i} and {j} are {d:.3e} m apart (minimum {min:.3e} m)"
                    )));
                }
            }
        }
        if let Some(l) = &layers {
            if l.len() != elements.len() {
                return Err(DsaError::InvalidGeometry(format!(
                    "layer annotation has {} entries for {} elements",
                    l.len(),
                    elements.len()
                )));
            }
            for (i, &li) in l.iter().enumerate() {
                if (li == 0) != (i < n_active) {
                    return Err(DsaError::InvalidGeometry(format!(
                        "element {i}: layer 0 must contain exactly the active elements"
                    )));
                }
            }
            let max = l.iter().copied().max().unwrap_or(0);
            for layer in 1..=max {
                if !l.contains(&layer) {
                    return Err(DsaError::InvalidGeometry(format!("layer {layer} is empty")));
                }
            }
            // Scatterers must be grouped by non-decreasing layer so the block partition is contiguous.
            if l[n_active..].windows(2).any(|w| w[1] < w[0]) {
                return Err(DsaError::InvalidGeometry(
                    "scatterers must be ordered by layer".into(),
                ));
            }
        }
        Ok(Self {
            elements,
            n_active,
            layers,
        })
    }

    pub fn elements(&self) -> &[DipoleElement] {
        &self.elements
    }

    pub fn n_active(&self) -> usize {
        self.n_active
    }

    pub fn n_scatterers(&self) -> usize {
        self.elements.len() - self.n_active
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn layers(&self) -> Option<&[usize]> {
        self.layers.as_deref()
    }

    /// Element count per scatterer layer 1..=L.
    pub fn layer_sizes(&self) -> Option<Vec<usize>> {
        let l = self.layers.as_ref()?;
        let max = l.iter().copied().max().unwrap_or(0);
        Some((1..=max).map(|k| l.iter().filter(|&&x| x == k).count()).collect())
    }

    pub fn with_layers(self, layers: Vec<usize>) -> Result<Self> {
        Self::new(self.elements, Some(layers))
    }

    /// Radius of the smallest origin-centred sphere containing every element.
    /// Elements of the outermost layer, re-labelled as driven elements.
    ///
    /// Used to evaluate fields of a SIM, which radiates through its last layer only.
    pub fn radiating_layer(&self) -> Result<DsaGeometry> {
        let layers = self
            .layers
            .as_ref()
            .ok_or_else(|| DsaError::InvalidGeometry("geometry has no layer annotation".into()))?;
        let last = layers.iter().copied().max().unwrap_or(0);
        let elements = self
            .elements
            .iter()
            .zip(layers)
            .filter(|(_, &l)| l == last)
            .map(|(e, _)| DipoleElement { kind: ElementKind::Active, ..e.clone() })
            .collect();
        DsaGeometry::new(elements, None)
    }

    pub fn bounding_radius(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| e.position.norm() + 0.5 * e.length)
            .fold(0.0, f64::max)
    }

    /// Writes the flat-table exchange format.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,x,y,z,length,radius,orientation");
        if self.layers.is_some() {
            s.push_str(",layer");
        }
        s.push('\n');
        for (i, e) in self.elements.iter().enumerate() {
            let _ = write!(
                s,
                "{},{:e},{:e},{:e},{:e},{:e},{}",
                e.kind.as_str(),
                e.position.x,
                e.position.y,
                e.position.z,
                e.length,
                e.wire_radius,
                format_orientation(&e.orientation)
            );
            if let Some(l) = &self.layers {
                let _ = write!(s, ",{}", l[i]);
            }
            s.push('\n');
        }
        s
    }

    /// Parses the flat-table exchange format (header row required).
    pub fn from_csv(text: &str) -> Result<Self> {
        let table = FlatTable::parse(text, &["kind", "x", "y", "z", "length", "radius", "orientation"])?;
        let layer_col = table.column("layer");
        let mut elements = Vec::new();
        let mut layers = Vec::new();
        for row in &table.rows {
            let kind = match row.text(table.required("kind"))? {
                "active" => ElementKind::Active,
                "scatterer" | "passive" => ElementKind::Scatterer,
                other => return Err(row.err(format!("unknown element kind '{other}'"))),
            };
            let position = Vec3::new(
                row.num(table.required("x"))?,
                row.num(table.required("y"))?,
                row.num(table.required("z"))?,
            );
            let orientation = parse_orientation(row.text(table.required("orientation"))?)
                .ok_or_else(|| row.err("bad orientation".into()))?;
            elements.push(DipoleElement::new(
                position,
                row.num(table.required("length"))?,
                row.num(table.required("radius"))?,
                orientation,
                kind,
            ));
            if let Some(c) = layer_col {
                layers.push(row.num(c)? as usize);
            }
        }
        if elements.is_empty() {
            return Err(DsaError::InvalidGeometry("geometry table has no rows".into()));
        }
        Self::new(elements, layer_col.map(|_| layers))
    }
}

pub(crate) fn format_orientation(o: &Vec3) -> String {
    if *o == Vec3::x() {
        "x".into()
    } else if *o == Vec3::y() {
        "y".into()
    } else if *o == Vec3::z() {
        "z".into()
    } else {
        format!("{:e} {:e} {:e}", o.x, o.y, o.z)
    }
}

pub(crate) fn parse_orientation(s: &str) -> Option<Vec3> {
    match s.trim() {
        "x" | "+x" => Some(Vec3::x()),
        "y" | "+y" => Some(Vec3::y()),
        "z" | "+z" => Some(Vec3::z()),
        "-x" => Some(-Vec3::x()),
        "-y" => Some(-Vec3::y()),
        "-z" => Some(-Vec3::z()),
        other => {
            let v: Vec<f64> = other
                .split(|c: char| c.is_whitespace() || c == ';')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse().ok())
                .collect::<Option<_>>()?;
            (v.len() == 3).then(|| Vec3::new(v[0], v[1], v[2]))
        }
    }
}

/// Minimal comma-separated table with a mandatory header row.
pub(crate) struct FlatTable {
    header: Vec<String>,
    pub rows: Vec<TableRow>,
}

pub(crate) struct TableRow {
    line: usize,
    cells: Vec<String>,
}

impl TableRow {
    pub fn err(&self, reason: String) -> DsaError {
        DsaError::Parse {
            line: self.line,
            reason,
        }
    }

    pub fn text(&self, col: usize) -> Result<&str> {
        self.cells
            .get(col)
            .map(|s| s.as_str())
            .ok_or_else(|| self.err(format!("missing column {col}")))
    }

    pub fn num(&self, col: usize) -> Result<f64> {
        let t = self.text(col)?;
        t.parse::<f64>()
            .map_err(|_| self.err(format!("'{t}' is not a number")))
    }
}

impl FlatTable {
    pub fn parse(text: &str, required: &[&str]) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (_, head) = lines.next().ok_or(DsaError::Parse {
            line: 1,
            reason: "empty table (header row required)".into(),
        })?;
        let header: Vec<String> = head.split(',').map(|s| s.trim().to_ascii_lowercase()).collect();
        for r in required {
            if !header.iter().any(|h| h == r) {
                return Err(DsaError::Parse {
                    line: 1,
                    reason: format!("missing column '{r}'"),
                });
            }
        }
        let rows = lines
            .map(|(i, l)| TableRow {
                line: i + 1,
                cells: l.split(',').map(|s| s.trim().to_string()).collect(),
            })
            .collect();
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn required(&self, name: &str) -> usize {
        self.column(name).expect("checked at parse time")
    }
}

/// Parameters of the concentric-ring disk / cylinder deployment.
///
/// Ring `l` (1-based) has radius `l * ring_spacing` and
/// `round(2 pi l ring_spacing / min(ring_spacing, lambda/4))` elements.
/// Disks are stacked along z at `disk_spacing`; the active elements sit in disk 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskLayout {
    pub wavelength: f64,
    pub ring_spacing: f64,
    pub rings: usize,
    pub disks: usize,
    pub n_active: usize,
    pub dipole_length: f64,
    pub wire_radius: f64,
    pub disk_spacing: f64,
}

impl DiskLayout {
    /// Half-wave dipoles of radius lambda/1000, disks lambda/2 apart.
    pub fn new(wavelength: f64, ring_spacing: f64, rings: usize, disks: usize, n_active: usize) -> Self {
        Self {
            wavelength,
            ring_spacing,
            rings,
            disks,
            n_active,
            dipole_length: 0.5 * wavelength,
            wire_radius: wavelength / 1000.0,
            disk_spacing: 0.5 * wavelength,
        }
    }

    pub fn ring_population(&self, ring: usize) -> usize {
        let arc = self.ring_spacing.min(0.25 * self.wavelength);
        ((2.0 * PI * ring as f64 * self.ring_spacing / arc).round() as usize).max(1)
    }

    /// Positions of the central elements (the actives in disk 0).
    fn centre_positions(&self, z: f64) -> Vec<Vec3> {
        if self.n_active == 1 {
            vec![Vec3::new(0.0, 0.0, z)]
        } else {
            let r = 0.5 * self.ring_spacing;
            (0..self.n_active)
                .map(|m| {
                    let a = 2.0 * PI * m as f64 / self.n_active as f64;
                    Vec3::new(r * a.cos(), r * a.sin(), z)
                })
                .collect()
        }
    }

    /// Builds the geometry; every element is annotated with its ring index as SIM layer.
    pub fn build(&self) -> Result<DsaGeometry> {
        if self.rings == 0 || self.disks == 0 || self.n_active == 0 {
            return Err(DsaError::InvalidGeometry(
                "rings, disks and active count must be at least 1".into(),
            ));
        }
        if !(self.ring_spacing > 0.0) {
            return Err(DsaError::InvalidGeometry("ring spacing must be positive".into()));
        }
        let mk = |p: Vec3, kind| DipoleElement::vertical(p, self.dipole_length, self.wire_radius, kind);
        let mut elements: Vec<DipoleElement> = self
            .centre_positions(0.0)
            .into_iter()
            .map(|p| mk(p, ElementKind::Active))
            .collect();
        let mut layers = vec![0; self.n_active];
        // Scatterers ordered by ring first so SIM layers are contiguous.
        for d in 1..self.disks {
            let z = d as f64 * self.disk_spacing;
            for p in self.centre_positions(z) {
                elements.push(mk(p, ElementKind::Scatterer));
                layers.push(1);
            }
        }
        for ring in 1..=self.rings {
            let radius = ring as f64 * self.ring_spacing;
            let count = self.ring_population(ring);
            for d in 0..self.disks {
                let z = d as f64 * self.disk_spacing;
                for m in 0..count {
                    let a = 2.0 * PI * m as f64 / count as f64;
                    elements.push(mk(Vec3::new(radius * a.cos(), radius * a.sin(), z), ElementKind::Scatterer));
                    layers.push(ring);
                }
            }
        }
        DsaGeometry::new(elements, Some(layers))
    }
}

/// Uniform random scatterer deployment inside a disk of the given radius.
///
/// Samples closer than `4 * wire_radius` to an existing element are rejected.
pub fn random_disk<R: Rng>(
    rng: &mut R,
    wavelength: f64,
    disk_radius: f64,
    n_active: usize,
    n_scatterers: usize,
) -> Result<DsaGeometry> {
    let layout = DiskLayout::new(wavelength, wavelength / 4.0, 1, 1, n_active);
    let mk = |p: Vec3, kind| DipoleElement::vertical(p, layout.dipole_length, layout.wire_radius, kind);
    let mut elements: Vec<DipoleElement> = layout
        .centre_positions(0.0)
        .into_iter()
        .map(|p| mk(p, ElementKind::Active))
        .collect();
    let min = 4.0 * layout.wire_radius;
    let mut attempts = 0usize;
    while elements.len() < n_active + n_scatterers {
        attempts += 1;
        if attempts > 1000 * (n_scatterers + 1) {
            return Err(DsaError::InvalidGeometry(format!(
                "could not place {n_scatterers} scatterers in a disk of radius {disk_radius} m"
            )));
        }
        let r = disk_radius * rng.random::<f64>().sqrt();
        let a = 2.0 * PI * rng.random::<f64>();
        let p = Vec3::new(r * a.cos(), r * a.sin(), 0.0);
        if elements.iter().all(|e| (e.position - p).norm() >= min) {
            elements.push(mk(p, ElementKind::Scatterer));
        }
    }
    DsaGeometry::new(elements, None)
}
