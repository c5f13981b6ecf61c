//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its mathematical domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A rank lies outside `1..=population`.
    #[error("rank {rank} out of range for population {population}")]
    RankOutOfRange { rank: u64, population: u64 },

    /// The requested capacity holds the whole catalog; every hit rate is 1
    /// and no finite characteristic time exists.
    #[error("capacity {capacity} saturates the catalog (limit {limit}); all hit rates are 1")]
    CapacitySaturated { capacity: f64, limit: f64 },

    /// A hit profile was applied to a law with a different rank universe.
    #[error("mismatched rank universes: law has {law} items, profile covers {profile}")]
    MismatchedUniverse { law: u64, profile: u64 },

    /// An operation needs per-item enumeration but the catalog is too large.
    #[error("population {population} exceeds the enumeration limit {limit}")]
    PopulationTooLarge { population: u64, limit: u64 },

    /// Adaptive quadrature ran out of subdivisions before reaching the target.
    #[error("quadrature reached {achieved:.3e} absolute error (target {target:.3e}); estimate {estimate}")]
    QuadratureAccuracy {
        target: f64,
        achieved: f64,
        estimate: f64,
    },

    /// A root finder failed to converge (should not happen for the monotone
    /// maps solved here; indicates a malformed input).
    #[error("root finder did not converge: {0}")]
    NoConvergence(String),

    /// Scenario file violates the schema.
    #[error("scenario: {0}")]
    Scenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
