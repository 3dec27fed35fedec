use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("unsupported dimension {0} (only 1 and 2 are implemented)")]
    UnsupportedDimension(usize),

    #[error("scale quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("wavelet is not admissible: {0}")]
    Inadmissible(String),

    #[error("scale range unresolvable on this grid: {0}")]
    UnresolvableScale(String),

    #[error("scale ratio {ratio} outside tabulated kernel support [{lo}, {hi}] with undecayed boundary")]
    ScaleRatioOutOfSupport { ratio: f64, lo: f64, hi: f64 },

    #[error("region mask is empty over the sample lattice")]
    EmptyMask,

    #[error("mask rasters have mismatched lattices")]
    GridMismatch,

    #[error("not enough samples above the noise floor: have {have}, need {need}")]
    InsufficientSamples { have: usize, need: usize },

    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),

    #[error("path lies entirely outside the field grid")]
    PathOutsideGrid,

    #[error("tube intersects fewer resolvable scales than required")]
    TubeUnresolvable,

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("separation precondition failed: {0}")]
    SeparationPrecondition(String),

    #[error("mask nesting violated at index {index}")]
    NestingViolated { index: usize },

    #[error("degenerate cusp: extent shorter than 4 grid steps")]
    DegenerateCusp,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-radial wavelet where spherical symmetry is required")]
    NonRadialWavelet,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed dump: {0}")]
    MalformedDump(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
