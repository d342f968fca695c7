//! Restricted Monte Carlo algorithms under exact cost accounting.
//!
//! Strategies consume information calls and calls to a finite family of
//! random functionals. The crate executes them exactly or by sampling,
//! truncates and derandomizes them, and compares their errors with
//! deterministic minimal errors.

pub mod bounds;
pub mod engine;
pub mod error;
pub mod explore;
pub mod model;
pub mod problems;
pub mod rates;
pub mod scalar;
pub mod suite;
pub mod transforms;
pub mod tree;
pub mod wellformed;

pub use error::{Error, Result};
pub use model::{
    action_at, Action, Answer, Caps, Entry, ExtendedOutput, FiniteRestriction, FnStrategy,
    InfoQuery, Norm, Problem, Query, RandQuery, Strategy, Symbol, Transcript, Vector,
};
pub use scalar::{Rational, Scalar, FLOAT_TOLERANCE};
