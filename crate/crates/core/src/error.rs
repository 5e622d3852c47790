use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a W state needs at least two photons, got {0}")]
    TooFewPhotons(usize),

    #[error("coefficients are not normalized: sum of |alpha|^2 = {0}")]
    NotNormalized(f64),

    #[error("coefficient alpha_{0} is zero")]
    ZeroCoefficient(usize),

    #[error("coefficient alpha_{0} is not finite")]
    NonFiniteCoefficient(usize),

    #[error("expected {expected} modes, got {got}")]
    ModeCountMismatch { expected: usize, got: usize },

    #[error("mode name must be nonempty")]
    EmptyModeName,

    #[error("mode `{0}` is registered twice")]
    DuplicateMode(String),

    #[error("mode `{0}` appears in both states")]
    OverlappingMode(String),

    #[error("mode `{0}` is not present in the state")]
    MissingMode(String),

    #[error("mode `{0}` is already used by the state")]
    ModeCollision(String),

    #[error("state has zero norm")]
    ZeroState,

    #[error("mode registries differ")]
    RegistryMismatch,

    #[error("photon count mismatch: expected {expected}, got {got}")]
    PhotonCountMismatch { expected: usize, got: usize },

    #[error("mode `{mode}` holds {count} photons in some term, expected exactly one")]
    NotSinglePhoton { mode: String, count: usize },

    #[error("mode `{0}` would hold more than two photons")]
    Overfilled(String),

    #[error("single-photon amplitudes are not normalized: |c_h|^2 + |c_v|^2 = {0}")]
    PhotonNotNormalized(f64),

    #[error("photon index {index} is outside 1..={n}")]
    PhotonIndex { index: usize, n: usize },

    #[error("step photon {0} coincides with the pivot photon")]
    StepIsPivot(usize),

    #[error("iteration number must be at least 1")]
    ZeroIteration,

    #[error("coupling phase theta must be positive, got {0}")]
    NonPositiveTheta(f64),

    #[error("number of trials must be at least 1")]
    ZeroTrials,

    #[error("malformed state: {0}")]
    MalformedState(String),
}
