//! Gadget constructions for low-degree polynomial threshold functions.
//!
//! The crate implements the constructive side of a family of dictator-vs-
//! quasirandom tests for degree-`d` PTFs and the reductions that consume
//! them, at desk scale:
//!
//! * [`poly`] — sparse multivariate polynomials over multiset monomial keys,
//!   with weights, influential-index sets, restrictions, exact Gaussian L2
//!   norms, and the collapse substitution `x_i <- g_i^d`, `x_{n+i} <- g_i`.
//! * [`gauss`] — seeded Gaussian/Bernoulli sampling, a discretized-Gaussian
//!   quantile coupling `(g, h)` driven by one shared uniform, binomial and
//!   normal CDFs/quantiles, and anticoncentration spot checks.
//! * [`gadgets`] — the three labeled-example samplers (halfspace test `T1`,
//!   degree-`d` test `Td`, scaled test `T2`) and a deterministic
//!   pass-probability estimator with Hoeffding confidence intervals.
//! * [`reduction`] — Unique-Games and Label-Cover instances, planted
//!   generators, brute-force optima, the example-stream reductions, and
//!   folding (projection onto the orthogonal complement of the constraint
//!   span).
//! * [`analysis`] — decoding influential coordinates back to labelings,
//!   agreement scoring, LP feasibility at margin 1 over the degree-`d`
//!   monomial lift, and an exact max-agreement solver by arrangement
//!   enumeration.
//! * [`verify`] — the acceptance checks wired into both `cargo test` and the
//!   `ptflab verify` subcommand.
//!
//! Everything that consumes randomness takes an explicit [`gauss::RngSeed`];
//! equal seeds give byte-identical outputs, with or without the `parallel`
//! feature.

pub mod analysis;
pub mod cli;
pub mod dataset;
pub mod gadgets;
pub mod gauss;
pub(crate) mod par;
pub mod poly;
pub mod reduction;
pub mod verify;

use std::fmt;

/// Crate-wide error type.
#[derive(Debug)]
pub enum Error {
    /// A vector or polynomial had the wrong dimension.
    DimensionMismatch { expected: usize, got: usize },
    /// A computation produced or received a NaN where a real was required.
    NotFinite { what: String },
    /// Structurally valid input on which the operation is undefined
    /// (zero weight, constant polynomial, empty example set, ...).
    Degenerate { what: String },
    /// A parameter was outside its documented range.
    InvalidInput { what: String },
    /// The instance exceeds a documented desk-scale capacity limit.
    Capacity { what: String },
    /// A configuration that cannot be run faithfully (e.g. scale overflow).
    Config { what: String },
    /// File or serialization trouble.
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, got } => {
                write!(f, "dimension mismatch: expected {expected}, got {got}")
            }
            Error::NotFinite { what } => write!(f, "non-finite value: {what}"),
            Error::Degenerate { what } => write!(f, "degenerate input: {what}"),
            Error::InvalidInput { what } => write!(f, "invalid input: {what}"),
            Error::Capacity { what } => write!(f, "capacity exceeded: {what}"),
            Error::Config { what } => write!(f, "bad configuration: {what}"),
            Error::Io(what) => write!(f, "io error: {what}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(what: impl Into<String>) -> Self {
        Error::InvalidInput { what: what.into() }
    }

    pub(crate) fn degenerate(what: impl Into<String>) -> Self {
        Error::Degenerate { what: what.into() }
    }

    pub(crate) fn capacity(what: impl Into<String>) -> Self {
        Error::Capacity { what: what.into() }
    }

    pub(crate) fn config(what: impl Into<String>) -> Self {
        Error::Config { what: what.into() }
    }
}
