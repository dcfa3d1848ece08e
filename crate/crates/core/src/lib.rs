//! Casimir free energy and force between a sphere and a plane at finite
//! temperature: exact scattering-matrix evaluation, the proximity force
//! approximation, and closed-form asymptotics.

pub mod asympt;
pub mod error;
pub mod freeenergy;
pub mod kernel;
pub mod pfa;
pub mod quad;
pub mod specfun;
pub mod trlog;
pub mod wigner;

pub use error::{Error, Result};
pub use freeenergy::{force, matsubara_free_energy, thermal_part, vacuum_energy, Diagnostics, EnergyResult, ForceTarget};
pub use kernel::{Boundary, FieldKind, FieldSpec, Geometry};
pub use trlog::{QuadSettings, Truncation};
