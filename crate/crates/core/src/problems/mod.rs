//! Concrete problems, restrictions and reference algorithms.

pub mod grid;
pub mod lipschitz;
pub mod strategies;

use std::collections::BTreeMap;

use crate::error::Result;
use crate::model::FiniteRestriction;
use crate::scalar::Scalar;

pub use grid::{make_grid_problem, GridInput, GridProblem};
pub use lipschitz::{make_lipschitz_problem, FamilySpec, LipschitzProblem, PiecewiseLinear};
pub use strategies::{bit_stratified_mc, midpoint_rule, BitStratifiedMc, MidpointRule};

/// Fair independent bits with alphabet `{u0, u1}`.
pub fn make_bit_restriction<S: Scalar>() -> FiniteRestriction<S> {
    FiniteRestriction::new(
        vec!["u0".to_string(), "u1".to_string()],
        vec![S::ratio(1, 2), S::ratio(1, 2)],
    )
    .expect("the bit restriction is valid")
}

/// A finite restriction from an alphabet, a default distribution and
/// optional per-query overrides.
pub fn make_finite_restriction<S: Scalar>(
    alphabet: Vec<String>,
    distribution: Vec<S>,
    overrides: BTreeMap<u64, Vec<S>>,
) -> Result<FiniteRestriction<S>> {
    FiniteRestriction::with_overrides(alphabet, distribution, overrides)
}
