//! Reconstruction of Young's modulus and Poisson's ratio maps from
//! steady-state strain elastograms, by inverting Eshelby's inclusion model
//! with a bounded least-squares eigenstrain-mismatch cost.
//!
//! The crate provides:
//!
//! - [`voigt`]: isotropic elasticity algebra in 6x6 Voigt notation
//!   (stiffness, compliance, the mismatch tensor A, uniaxial inversion);
//! - [`eshelby`]: Eshelby tensors for spheres, general ellipsoids,
//!   cylinders, pennies, thin disks and plane-strain cylinders, including
//!   elliptic-integral evaluation;
//! - [`forward`]: the exact forward model (remote strain, eigenstrain,
//!   interior strain/stress) and a synthetic phantom generator;
//! - [`inverse`]: per-pixel bounded least-squares estimation of (E, nu)
//!   and full-map reconstruction;
//! - [`image`]: median filtering, equivalent-ellipse fitting, creep
//!   steady-state extraction, RMSE and shape metrics;
//! - [`io`]: plain-text grid/config/sensor-log formats.
//!
//! All numeric code uses one Voigt component order,
//! `(11, 22, 33, 23, 31, 12)`, with 11 = lateral (x), 22 = axial (y,
//! compression axis) and 33 = elevational (z).

pub mod error;
pub mod eshelby;
pub mod forward;
pub mod image;
pub mod inverse;
pub mod io;
pub mod lm;
pub mod quad;
pub mod voigt;

pub use error::{Error, Result};
pub use eshelby::{EshelbyTensor, InclusionGeometry};
pub use forward::{Phantom, PhantomSpec, RemoteLoad};
pub use image::{BitGrid, CreepSeries, ScalarField, StrainField, WindowRect};
pub use inverse::{ReconstructionInput, ReconstructionResult, SolverSettings};
pub use io::RunConfig;
pub use voigt::{MaterialParams, Matrix6, Vec6};
