use thiserror::Error;

/// Errors raised anywhere in the mesh → assembly → solve → output pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("refinement level {0} exceeds the supported maximum of 12")]
    RefinementTooDeep(u32),

    #[error("crack segment does not lie on mesh edges: {0}")]
    SegmentNotOnGrid(String),

    #[error("unknown or empty boundary tag `{0}`")]
    UnknownTag(String),

    #[error("degenerate cell {cell:?}: jacobian determinant {det:e}")]
    DegenerateCell { cell: Option<usize>, det: f64 },

    #[error("invalid material parameter `{field}`: {reason}")]
    InvalidMaterial { field: &'static str, reason: String },

    /// `1 + β tr ε` dropped to or below the singularity guard.
    #[error("density factor 1 + beta tr(eps) = {factor:e} is singular{}", fmt_location(.location))]
    SingularDensityFactor {
        factor: f64,
        /// `(cell, quadrature point)` when raised during assembly.
        location: Option<(usize, usize)>,
    },

    #[error("stress cannot be inverted: (c1 + 2 c2) - beta tr(T) = {denominator:e}")]
    SingularInversion { denominator: f64 },

    #[error("nonphysical compaction: 1 + tr(eps) = {value:e} <= 0")]
    NonphysicalCompaction { value: f64 },

    #[error("linear system is singular or numerically rank deficient")]
    SingularMatrix,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid boundary conditions: {0}")]
    InvalidBoundaryConditions(String),

    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value for `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_location(location: &Option<(usize, usize)>) -> String {
    match location {
        Some((cell, qp)) => format!(" in cell {cell} at quadrature point {qp}"),
        None => String::new(),
    }
}

impl Error {
    /// Process exit status for this error: 2 for bad input, 3 for solver
    /// failures, 4 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Parse { .. }
            | Error::Validation { .. }
            | Error::InvalidMaterial { .. }
            | Error::UnknownTag(_)
            | Error::SegmentNotOnGrid(_)
            | Error::RefinementTooDeep(_)
            | Error::InvalidBoundaryConditions(_)
            | Error::DimensionMismatch { .. } => 2,
            Error::Io(_) => 4,
            _ => 3,
        }
    }

    /// Attach a `(cell, quadrature point)` location to a density-factor error.
    pub(crate) fn at(self, cell: usize, qp: usize) -> Self {
        match self {
            Error::SingularDensityFactor { factor, .. } => Error::SingularDensityFactor {
                factor,
                location: Some((cell, qp)),
            },
            Error::DegenerateCell { det, .. } => Error::DegenerateCell {
                cell: Some(cell),
                det,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
