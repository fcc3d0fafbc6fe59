//! Numerical laboratory for the group `G = ⟨h₁, h₂⟩` generated by a
//! generalized complex Hénon map `h₁(x, y) = (y, P(y) − δx)` and its rotation
//! conjugate `h₂ = R_θ⁻¹ ∘ h₁ ∘ R_θ`.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: points of ℂ², projective points, rotations, chordal metric.
//! - [`henon`]: maps, inverses, projective extension, presets, filtrations.
//! - [`group`]: reduced words in the free group, walk measures, drift.
//! - [`dynamics`]: orbits, certified escape, cone systems, the escaping collar.
//! - [`measure`]: Monte Carlo chains, empirical measures, stationarity and
//!   filled Julia set experiments.
//!
//! The guide in `book/` walks through each of these with runnable snippets.

pub mod dynamics;
pub mod geometry;
pub mod group;
pub mod henon;
pub mod measure;
pub mod rng;

pub use num_complex::Complex64;

pub use geometry::{chordal_distance, direction_of, rotate, Direction, Point2, ProjPoint};
pub use group::{Generator, WalkMeasure, Word};
pub use henon::{Filtration, GroupPreset, HenonMap, HenonPair, Region};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("projective coordinates are all zero")]
    DegenerateProjective,
    #[error("the origin has no direction at infinity")]
    OriginHasNoDirection,
    #[error("invalid Hénon map: {0}")]
    InvalidMap(String),
    #[error("invalid rotation angle {0}: indeterminacy directions are not separated")]
    InvalidAngle(f64),
    #[error("growth factor must be nonnegative, got {0}")]
    NegativeGrowth(f64),
    #[error("invalid walk measure: {0}")]
    InvalidMeasure(String),
    #[error("word length {0} exceeds the enumeration cap of {cap}", cap = group::MAX_ENUMERATION_LENGTH)]
    EnumerationTooLong(usize),
    #[error("invalid word token {0:?}")]
    InvalidWordToken(char),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no trajectories supplied")]
    EmptyTrajectories,
    #[error("empty point sample")]
    EmptySample,
    #[error("unregistered test function {0:?}")]
    UnknownTestFunction(String),
    #[error("symmetric weights required, got {0:?}")]
    AsymmetricWeights([f64; 4]),
    #[error("orbit overflowed to a non-finite value")]
    EscapeOverflow,
    #[error("malformed JSON: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/henon-maps.md")]
    mod henon_maps {}
    #[doc = include_str!("../../../book/src/free-group.md")]
    mod free_group {}
    #[doc = include_str!("../../../book/src/cones-and-collar.md")]
    mod cones_and_collar {}
    #[doc = include_str!("../../../book/src/random-dynamics.md")]
    mod random_dynamics {}
    #[doc = include_str!("../../../book/src/filled-julia.md")]
    mod filled_julia {}
}
