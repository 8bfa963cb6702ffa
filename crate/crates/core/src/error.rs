//! Error type shared by all modules of the crate.

use crate::devices::DetectionPattern;
use crate::fock::Spatial;

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A state violated the unit-norm contract.
    #[error("state is not normalized: |norm^2 - 1| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    /// A mode matrix violated the unitarity contract.
    #[error("matrix is not unitary: max |U^H U - I| entry = {deviation:.3e}")]
    NotUnitary { deviation: f64 },

    /// Polarization measurement needs exactly one photon on the given side.
    #[error("measurement on {side:?} requires exactly one photon there")]
    UnsupportedMeasurement { side: Spatial },

    /// Photon replacement needs the side photon in a definite polarization.
    #[error("photon replacement on {side:?} requires a definite polarization")]
    IndefinitePolarization { side: Spatial },

    /// A detection pattern outside the four discriminator classes fired.
    /// Unreachable for states produced by this protocol; signals a bug.
    #[error("detection pattern {pattern:?} matches no mixed-basis symbol")]
    UnclassifiablePattern { pattern: DetectionPattern },

    /// A probability parameter fell outside `[0, 1]`.
    #[error("probability {value} outside [0, 1]")]
    ProbabilityOutOfRange { value: f64 },

    /// A probability vector or table failed validation.
    #[error("invalid distribution: {reason}")]
    InvalidDistribution { reason: String },

    /// A session configuration failed validation.
    #[error("invalid session config: {reason}")]
    InvalidConfig { reason: String },

    /// An estimator was handed no usable records.
    #[error("transcript holds no records usable by this estimator")]
    EmptyTranscript,
}
