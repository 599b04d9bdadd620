use num_complex::Complex64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid sample at index {index}: {reason}")]
    InvalidSample { index: usize, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("spectral parameter {z} outside the domain: {reason}")]
    Domain { z: Complex64, reason: &'static str },

    #[error("integration accuracy not met: {0}")]
    Accuracy(String),

    #[error("|a(z)| = {modulus:e} below floor at real z = {z} (spectral singularity)")]
    SpectralSingularity { z: f64, modulus: f64 },

    #[error("winding number counts {expected} zeros but refinement found {found}")]
    CountMismatch { expected: usize, found: usize },

    #[error("zero of a(z) at or near the search box boundary (near {z})")]
    PoleNearBoundary { z: Complex64 },

    #[error("Jost solutions not parallel at pole {pole}: relative spread {spread:e}")]
    Dependence { pole: Complex64, spread: f64 },

    #[error("residue system is singular or ill-conditioned (condition estimate {cond:e})")]
    SingularSystem { cond: f64 },

    #[error("Blaschke factor has a pole at z = {z}")]
    PoleOfT { z: Complex64 },

    #[error("adaptive quadrature did not converge: estimated error {estimate:e}")]
    Quadrature { estimate: f64 },

    #[error("evaluation point {z} lies within {tol:e} of the integration ray")]
    RayProximity { z: Complex64, tol: f64 },

    #[error("log(1+|r|^2) at the grid edge is {mass:e}, exceeds the tail tolerance")]
    TailTruncation { mass: f64 },

    #[error("contour circles overlap: {0}")]
    CircleOverlap(String),

    #[error("small-norm operator does not contract (estimate {estimate:.3})")]
    NonContraction { estimate: f64 },

    #[error("contour quadrature under-resolved: C1 changed by {change:e} under node doubling")]
    Resolution { change: f64 },

    #[error("mass {mass:e} reached the window edges by t = {t}; widen the window")]
    EdgeMass { mass: f64, t: f64 },

    #[error("evolution blew up: max|u| = {max:e} exceeds guard {guard:e}")]
    BlowUp { max: f64, guard: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable identifier used in CLI error reports and by
    /// the C ABI.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidSample { .. } => "invalid-sample",
            Error::InvalidInput(_) => "invalid-input",
            Error::Domain { .. } => "domain",
            Error::Accuracy(_) => "accuracy",
            Error::SpectralSingularity { .. } => "spectral-singularity",
            Error::CountMismatch { .. } => "count-mismatch",
            Error::PoleNearBoundary { .. } => "pole-near-boundary",
            Error::Dependence { .. } => "dependence",
            Error::SingularSystem { .. } => "singular-system",
            Error::PoleOfT { .. } => "pole-of-t",
            Error::Quadrature { .. } => "quadrature",
            Error::RayProximity { .. } => "ray-proximity",
            Error::TailTruncation { .. } => "tail-truncation",
            Error::CircleOverlap(_) => "circle-overlap",
            Error::NonContraction { .. } => "non-contraction",
            Error::Resolution { .. } => "resolution",
            Error::EdgeMass { .. } => "edge-mass",
            Error::BlowUp { .. } => "blow-up",
            Error::Io(_) => "io",
            Error::Json(_) => "invalid-json",
            Error::Csv(_) => "invalid-csv",
        }
    }

    /// True for errors caused by malformed or out-of-contract input, as
    /// opposed to a numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidSample { .. }
                | Error::InvalidInput(_)
                | Error::Domain { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}
