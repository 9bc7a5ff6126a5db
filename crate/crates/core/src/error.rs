use thiserror::Error;

/// Every failure mode of the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid disc: center and radius must be finite with radius > 0 (got radius {radius})")]
    InvalidDisc { radius: f64 },

    #[error("holes {first} and {second} overlap (closed discs intersect)")]
    HoleOverlap { first: usize, second: usize },

    #[error("hole {index} is not strictly inside the outer disc")]
    HoleEscapes { index: usize },

    #[error("non-finite coordinate in input point")]
    NonFinitePoint,

    #[error("point ({re}, {im}) is not an interior point of the domain")]
    PointOutsideDomain { re: f64, im: f64 },

    #[error("point ({re}, {im}) does not lie on exactly one boundary circle")]
    NotOnBoundary { re: f64, im: f64 },

    #[error("quadrature orders must be >= 4 (got radial {radial}, angular {angular})")]
    InvalidOrder { radial: usize, angular: usize },

    #[error("panel decomposition failed: minimal gap between boundary circles is {min_gap:e}")]
    DecompositionFailure { min_gap: f64 },

    #[error("integrand returned a non-finite value at node ({re}, {im})")]
    NonFiniteIntegrand { re: f64, im: f64 },

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("weight has no declared continuity point at ({re}, {im})")]
    MissingContinuityPoint { re: f64, im: f64 },

    #[error("basis degree cap must be >= 1")]
    InvalidDegreeCap,

    #[error("Gram matrix is ill-conditioned (condition estimate {condition:e}); lower the degree cap")]
    IllConditioned { condition: f64 },

    #[error("Gram matrix has a non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("Gram matrix is not positive definite (smallest eigenvalue ratio {ratio:e})")]
    NotPositiveDefinite { ratio: f64 },

    #[error("derivative order {requested} exceeds the basis maximum {available}")]
    DerivativeOrderUnsupported { requested: usize, available: usize },

    #[error("kernel order must be >= {min} (got {n})")]
    InvalidKernelOrder { n: usize, min: usize },

    #[error("leading minor J_{{n-2}} is numerically singular ({value:e} against scale {scale:e})")]
    SingularMinor { value: f64, scale: f64 },

    #[error("diagonal kernel value {value:e} is negative")]
    NegativeDiagonal { value: f64 },

    #[error("weight is not integrable, the diagonal zero set may be non-empty")]
    ZeroSetNonEmpty,

    #[error("constraint matrix is rank deficient")]
    RankDeficientConstraints,

    #[error("map is degenerate (ad - bc = 0 or zero scale)")]
    DegenerateMap,

    #[error("boundary circle {index} maps to a line")]
    ImageNotCircleDomain { index: usize },

    #[error("map has its pole inside the source domain")]
    PoleInDomain,

    #[error("localization cap touches hole {index}")]
    CapTouchesHole { index: usize },

    #[error("invalid experiment parameters: {0}")]
    InvalidExperiment(String),
}

impl Error {
    /// Conditioning, quadrature, and factorization failures, as opposed
    /// to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DecompositionFailure { .. }
                | Error::NonFiniteIntegrand { .. }
                | Error::IllConditioned { .. }
                | Error::NonFiniteEntry { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::SingularMinor { .. }
                | Error::NegativeDiagonal { .. }
                | Error::RankDeficientConstraints
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
