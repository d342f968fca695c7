//! Grid-average problem over sign vectors.
//!
//! Inputs are `f ∈ {−1,+1}^m`, information is coordinate evaluation and the
//! solution is the mean `(1/m) Σ f(i)`. Small instances are enumerated in
//! full. Larger ones need a test set; [`adversarial_inputs`] builds one that
//! attains the exact supremum for a given strategy.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::explore::explore;
use crate::model::{Action, FiniteRestriction, InfoQuery, Norm, Problem, Strategy, Vector};
use crate::scalar::Scalar;

/// Largest `m` whose full input set may be listed.
pub const MAX_ENUMERABLE_M: usize = 24;
/// Largest `m` representable at all.
pub const MAX_GRID_M: usize = 63;

/// Sign vector packed into a bit mask: bit `i - 1` set means `f(i) = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridInput(pub u64);

impl GridInput {
    pub fn from_signs(signs: &[i8]) -> Self {
        let mut bits = 0u64;
        for (i, s) in signs.iter().enumerate() {
            if *s > 0 {
                bits |= 1 << i;
            }
        }
        GridInput(bits)
    }

    /// `f(i)` for 1-based `i`.
    pub fn sign(&self, i: usize) -> i64 {
        if self.0 >> (i - 1) & 1 == 1 {
            1
        } else {
            -1
        }
    }

    pub fn signs(&self, m: usize) -> Vec<i8> {
        (1..=m).map(|i| self.sign(i) as i8).collect()
    }
}

#[derive(Debug, Clone)]
pub struct GridProblem {
    m: usize,
    test_set: Option<Vec<GridInput>>,
}

/// Grid problem with the full input set of all `2^m` sign vectors.
pub fn make_grid_problem(m: usize) -> Result<GridProblem> {
    if m > MAX_ENUMERABLE_M {
        return Err(Error::SizeTooLarge(format!(
            "grid size {m} exceeds the enumeration limit {MAX_ENUMERABLE_M}"
        )));
    }
    GridProblem::new(m)
}

impl GridProblem {
    /// Any `1 <= m <= 63`; sizes above 24 need an explicit test set.
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::BadParams("grid size must be at least 1".into()));
        }
        if m > MAX_GRID_M {
            return Err(Error::SizeTooLarge(format!("grid size {m} exceeds {MAX_GRID_M}")));
        }
        Ok(GridProblem { m, test_set: None })
    }

    pub fn with_test_inputs(mut self, inputs: Vec<GridInput>) -> Self {
        self.test_set = Some(inputs);
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn all_inputs(&self) -> Result<Vec<GridInput>> {
        if self.m > MAX_ENUMERABLE_M {
            return Err(Error::SizeTooLarge(format!(
                "cannot list 2^{} inputs; supply a test set",
                self.m
            )));
        }
        Ok((0..1u64 << self.m).map(GridInput).collect())
    }
}

impl<S: Scalar> Problem<S> for GridProblem {
    type Input = GridInput;

    fn name(&self) -> String {
        format!("grid(m={})", self.m)
    }

    fn evaluate(&self, input: &GridInput, query: &InfoQuery<S>) -> Result<S> {
        <Self as Problem<S>>::validate_query(self, query)?;
        match query {
            InfoQuery::Coord(i) => Ok(S::from_int(input.sign(*i))),
            InfoQuery::Point(_) => unreachable!(),
        }
    }

    fn solution(&self, input: &GridInput) -> Vector<S> {
        let sum: i64 = (1..=self.m).map(|i| input.sign(i)).sum();
        Vector::scalar(S::ratio(sum, self.m as i64))
    }

    fn norm(&self) -> Norm {
        Norm::Abs
    }

    fn test_inputs(&self) -> Result<Vec<GridInput>> {
        match &self.test_set {
            Some(inputs) => Ok(inputs.clone()),
            None => self.all_inputs(),
        }
    }

    fn exhaustive(&self) -> bool {
        self.test_set.is_none() && self.m <= MAX_ENUMERABLE_M
    }

    fn answer_alphabet(&self) -> Option<Vec<S>> {
        Some(vec![S::from_int(-1), S::from_int(1)])
    }

    fn queries(&self) -> Option<Vec<InfoQuery<S>>> {
        Some((1..=self.m).map(InfoQuery::Coord).collect())
    }

    fn validate_query(&self, query: &InfoQuery<S>) -> Result<()> {
        match query {
            InfoQuery::Coord(i) if (1..=self.m).contains(i) => Ok(()),
            other => Err(Error::InvalidQuery(format!(
                "{other} is not a coordinate of a grid of size {}",
                self.m
            ))),
        }
    }

    fn describe_input(&self, input: &GridInput) -> String {
        input
            .signs(self.m)
            .iter()
            .map(|s| if *s > 0 { '+' } else { '-' })
            .collect()
    }
}

/// Every coordinate the strategy can query on some input and some branch.
pub fn touched_coordinates<S: Scalar>(
    strategy: &dyn Strategy<S>,
    problem: &GridProblem,
    restriction: &FiniteRestriction<S>,
    max_depth: usize,
) -> Result<BTreeSet<usize>> {
    let alphabet = <GridProblem as Problem<S>>::answer_alphabet(problem).expect("finite");
    let mut touched = BTreeSet::new();
    let summary = explore(strategy, &alphabet, restriction, max_depth, |_, action| {
        if let Action::AskInfo(q) = action {
            <GridProblem as Problem<S>>::validate_query(problem, q)?;
            if let InfoQuery::Coord(i) = q {
                touched.insert(*i);
            }
        }
        Ok(())
    })?;
    if !summary.complete {
        return Err(Error::NonterminatingPath { max_steps: max_depth });
    }
    Ok(touched)
}

/// Inputs attaining the exact worst case for a strategy that only reads `touched`.
///
/// For fixed values on the touched coordinates, outputs and costs do not
/// depend on the remaining coordinates, while the solution is affine in
/// their sum. The expected error is then convex in that sum and maximal at
/// an endpoint, so "all +1" and "all −1" on the untouched coordinates
/// suffice.
pub fn adversarial_inputs(m: usize, touched: &BTreeSet<usize>) -> Result<Vec<GridInput>> {
    if touched.len() > MAX_ENUMERABLE_M {
        return Err(Error::SizeTooLarge(format!(
            "{} touched coordinates",
            touched.len()
        )));
    }
    let coords: Vec<usize> = touched.iter().copied().collect();
    let free_mask: u64 = (1..=m)
        .filter(|i| !touched.contains(i))
        .fold(0, |acc, i| acc | 1 << (i - 1));
    let fills: Vec<u64> = if free_mask == 0 { vec![0] } else { vec![0, free_mask] };
    let mut inputs = Vec::with_capacity(fills.len() << coords.len());
    for assignment in 0..1u64 << coords.len() {
        let mut bits = 0u64;
        for (k, i) in coords.iter().enumerate() {
            if assignment >> k & 1 == 1 {
                bits |= 1 << (i - 1);
            }
        }
        for fill in &fills {
            inputs.push(GridInput(bits | fill));
        }
    }
    Ok(inputs)
}

/// Grid problem of size `m` whose test set is exact for `strategy`.
pub fn exact_test_problem<S: Scalar>(
    strategy: &dyn Strategy<S>,
    m: usize,
    restriction: &FiniteRestriction<S>,
    max_depth: usize,
) -> Result<GridProblem> {
    let base = GridProblem::new(m)?;
    let touched = touched_coordinates(strategy, &base, restriction, max_depth)?;
    let inputs = adversarial_inputs(m, &touched)?;
    Ok(base.with_test_inputs(inputs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    type Q = Rational;

    fn sol(p: &GridProblem, signs: &[i8]) -> Q {
        <GridProblem as Problem<Q>>::solution(p, &GridInput::from_signs(signs)).0[0].clone()
    }

    #[test]
    fn m1_has_two_inputs() {
        let p = make_grid_problem(1).unwrap();
        let inputs = <GridProblem as Problem<Q>>::test_inputs(&p).unwrap();
        assert_eq!(inputs.len(), 2);
        let values: Vec<Q> = inputs
            .iter()
            .map(|f| <GridProblem as Problem<Q>>::solution(&p, f).0[0].clone())
            .collect();
        assert_eq!(values, vec![Q::from_int(-1), Q::from_int(1)]);
    }

    #[test]
    fn solution_is_the_average() {
        let p2 = make_grid_problem(2).unwrap();
        assert_eq!(sol(&p2, &[-1, 1]), Q::zero());
        let p3 = make_grid_problem(3).unwrap();
        assert_eq!(sol(&p3, &[1, 1, -1]), Q::ratio(1, 3));
    }

    #[test]
    fn size_limits() {
        assert!(matches!(make_grid_problem(25), Err(Error::SizeTooLarge(_))));
        assert!(make_grid_problem(0).is_err());
        let p = GridProblem::new(32).unwrap();
        assert!(<GridProblem as Problem<Q>>::test_inputs(&p).is_err());
        assert!(!<GridProblem as Problem<Q>>::exhaustive(&p));
    }

    #[test]
    fn queries_outside_the_grid_are_invalid() {
        let p = make_grid_problem(3).unwrap();
        let r = <GridProblem as Problem<Q>>::validate_query(&p, &InfoQuery::Coord(4));
        assert!(matches!(r, Err(Error::InvalidQuery(_))));
        let r = <GridProblem as Problem<Q>>::validate_query(&p, &InfoQuery::Point(Q::zero()));
        assert!(r.is_err());
    }

    #[test]
    fn adversarial_set_covers_touched_assignments_and_both_fills() {
        let touched: BTreeSet<usize> = [2, 5].into_iter().collect();
        let inputs = adversarial_inputs(6, &touched).unwrap();
        assert_eq!(inputs.len(), 8);
        let all_plus = inputs.iter().filter(|f| f.signs(6) == vec![1, 1, 1, 1, 1, 1]).count();
        assert_eq!(all_plus, 1);
        let everything: BTreeSet<usize> = (1..=3).collect();
        assert_eq!(adversarial_inputs(3, &everything).unwrap().len(), 8);
    }
}
