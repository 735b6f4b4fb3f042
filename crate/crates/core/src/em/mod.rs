//! Dipole geometry, analytical coupling and reconfigurable loads.

pub mod coupling;
pub mod geometry;
pub mod load;
pub mod quadrature;

pub use coupling::{
    assemble_impedance_matrix, assemble_impedance_matrix_with, dipole_mutual_impedance,
    dipole_self_impedance, PartitionedImpedance,
};
pub use geometry::{DipoleElement, DiskLayout, DsaGeometry, ElementKind};
pub use load::{capacitance_of, load_matrices, varactor_impedance, LoadBank, VaractorParams};

/// Speed of light in vacuum (m/s).
pub const C0: f64 = 299_792_458.0;
/// Free-space impedance (ohm).
pub const ETA0: f64 = 376.730_313_668;

pub fn wavelength(f: f64) -> f64 {
    C0 / f
}

pub fn wavenumber(f: f64) -> f64 {
    2.0 * std::f64::consts::PI * f / C0
}
