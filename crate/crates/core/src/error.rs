//! Error type shared by all core modules.

use thiserror::Error;

/// Errors produced by the elasticity, Eshelby, imaging and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// Elastic constants violate the isotropic-material invariants.
    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),

    /// Poisson's ratio at or above the lambda singularity at 0.5.
    #[error("Poisson's ratio {0} is at the incompressibility singularity")]
    PoissonSingular(f64),

    /// Inclusion and background moduli too close; the mismatch tensor A is undefined.
    #[error("inclusion/background contrast is singular (C - C0 not invertible)")]
    ContrastSingular,

    /// Axial strain too small to invert Hooke's law.
    #[error("axial strain magnitude below 1e-9; cannot invert")]
    DegenerateStrain,

    /// Elliptic integral modulus outside [0, 1).
    #[error("elliptic modulus k = {0} outside [0, 1)")]
    ModulusOutOfRange(f64),

    /// Elliptic integral amplitude outside [0, pi/2].
    #[error("elliptic amplitude theta = {0} outside [0, pi/2]")]
    ThetaOutOfRange(f64),

    /// Ellipsoid semi-axes too close for the general I-term formulas.
    #[error("semi-axes too close for the general ellipsoid path; use the limit geometry")]
    DegenerateAxes,

    /// Geometry violates its kind-specific invariants.
    #[error("invalid inclusion geometry: {0}")]
    InvalidGeometry(String),

    /// Linear system condition number beyond the trust threshold.
    #[error("singular system (condition number {0:.3e})")]
    SingularSystem(f64),

    /// Phantom inclusion footprint does not fit inside the grid.
    #[error("inclusion footprint exceeds the grid bounds")]
    FootprintOverflow,

    /// Background window intersects the inclusion mask.
    #[error("background window overlaps the inclusion mask")]
    WindowOverlapsMask,

    /// Background window extends past the grid.
    #[error("background window outside the grid bounds")]
    WindowOutOfBounds,

    /// Too few pixels to fit an ellipse.
    #[error("mask has {0} pixels; at least 10 required for ellipse fitting")]
    MaskTooSmall(usize),

    /// No tail of the creep series qualifies as a plateau.
    #[error("no steady-state plateau detected; experiment too short")]
    NoPlateau,

    /// RMSE denominator (sum of truth over the mask) is zero.
    #[error("sum of truth values over the mask is zero")]
    ZeroTruthSum,

    /// Grid headers disagree between files of one dataset.
    #[error("grid header mismatch: {0}")]
    HeaderMismatch(String),

    /// Grid file does not parse.
    #[error("malformed grid file: {0}")]
    MalformedGrid(String),

    /// Dataset lacks the required mask grid.
    #[error("dataset is missing the inclusion mask")]
    MissingMask,

    /// Force-sensor log has no samples.
    #[error("sensor log is empty")]
    EmptyLog,

    /// Force-sensor reading outside the 0-255 scale.
    #[error("sensor reading {0} outside 0-255")]
    ReadingOutOfRange(u32),

    /// Run configuration is inconsistent or incomplete.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
