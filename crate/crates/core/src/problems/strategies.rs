//! Reference strategies: small grid examples, the midpoint rule and a
//! random-bit stratified integrator.

use crate::model::{Action, Caps, Entry, FnStrategy, InfoQuery, RandQuery, Strategy, Symbol, Transcript, Vector};
use crate::error::Result;
use crate::scalar::Scalar;

/// Stops immediately with `value`.
pub fn constant<S: Scalar>(value: Vector<S>) -> FnStrategy<S> {
    let dim = value.dim();
    FnStrategy::new(format!("constant({value})"), move |_| Ok(Action::Stop(value.clone())))
        .with_caps(Caps::new(0, 0))
        .with_output_dim(dim)
}

/// Asks bit 1 and outputs `+1` on `u1`, `−1` on `u0`.
pub fn coin_a0<S: Scalar>() -> FnStrategy<S> {
    FnStrategy::new("coin", |t: &Transcript<S>| {
        Ok(match t.entries().first().and_then(Entry::symbol) {
            None => Action::AskRand(RandQuery(1)),
            Some(Symbol(1)) => Action::Stop(Vector::scalar(S::one())),
            Some(_) => Action::Stop(Vector::scalar(-S::one())),
        })
    })
    .with_caps(Caps::new(0, 1))
}

/// Asks `f(coord)` and outputs it.
pub fn read_coordinate<S: Scalar>(coord: usize) -> FnStrategy<S> {
    FnStrategy::new(format!("read({coord})"), move |t: &Transcript<S>| {
        Ok(match t.info_values().next() {
            None => Action::AskInfo(InfoQuery::Coord(coord)),
            Some(v) => Action::Stop(Vector::scalar(v.clone())),
        })
    })
    .with_caps(Caps::new(1, 0))
}

/// Asks bit 1, then outputs `f(1)` on `u0` and `f(2)` on `u1`.
pub fn bit_then_query<S: Scalar>() -> FnStrategy<S> {
    FnStrategy::new("bit-then-query", |t: &Transcript<S>| {
        let e = t.entries();
        Ok(match e.len() {
            0 => Action::AskRand(RandQuery(1)),
            1 => Action::AskInfo(InfoQuery::Coord(1 + e[0].symbol().map_or(0, |s| s.0))),
            _ => Action::Stop(Vector::scalar(e[1].info_value().cloned().unwrap_or_else(S::zero))),
        })
    })
    .with_caps(Caps::new(1, 1))
}

/// Asks bit 1; stops with 0 on `u0`, outputs `f(1)` on `u1`.
pub fn bit_or_query<S: Scalar>() -> FnStrategy<S> {
    FnStrategy::new("bit-or-query", |t: &Transcript<S>| {
        let e = t.entries();
        Ok(match e.len() {
            0 => Action::AskRand(RandQuery(1)),
            1 if e[0].symbol() == Some(Symbol(0)) => Action::Stop(Vector::scalar(S::zero())),
            1 => Action::AskInfo(InfoQuery::Coord(1)),
            _ => Action::Stop(Vector::scalar(e[1].info_value().cloned().unwrap_or_else(S::zero))),
        })
    })
    .with_caps(Caps::new(1, 1))
}

/// Asks `count` bits `1..=count` and stops with 0.
pub fn bits_only<S: Scalar>(count: u64) -> FnStrategy<S> {
    FnStrategy::new(format!("bits({count})"), move |t: &Transcript<S>| {
        Ok(if (t.len() as u64) < count {
            Action::AskRand(RandQuery(t.len() as u64 + 1))
        } else {
            Action::Stop(Vector::scalar(S::zero()))
        })
    })
    .with_caps(Caps::new(0, count as usize))
}

/// Asks `f(1), …, f(count)` and outputs their mean.
pub fn read_prefix<S: Scalar>(count: usize) -> FnStrategy<S> {
    FnStrategy::new(format!("read-prefix({count})"), move |t: &Transcript<S>| {
        Ok(if t.len() < count {
            Action::AskInfo(InfoQuery::Coord(t.len() + 1))
        } else {
            Action::Stop(Vector::scalar(mean(t.info_values())))
        })
    })
    .with_caps(Caps::new(count, 0))
}

pub(crate) fn mean<'a, S: Scalar>(values: impl Iterator<Item = &'a S>) -> S {
    let (sum, n) = values.fold((S::zero(), 0usize), |(s, n), v| (s + v.clone(), n + 1));
    if n == 0 {
        S::zero()
    } else {
        sum / S::from_usize(n)
    }
}

/// Deterministic rule `(1/n) Σ f((2i − 1)/(2n))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MidpointRule {
    n: usize,
}

pub fn midpoint_rule(n: usize) -> MidpointRule {
    assert!(n >= 1, "midpoint rule needs n >= 1");
    MidpointRule { n }
}

impl MidpointRule {
    pub fn n(&self) -> usize {
        self.n
    }
}

impl<S: Scalar> Strategy<S> for MidpointRule {
    fn action(&self, t: &Transcript<S>) -> Result<Action<S>> {
        let i = t.len();
        Ok(if i < self.n {
            Action::AskInfo(InfoQuery::Point(S::ratio(2 * i as i64 + 1, 2 * self.n as i64)))
        } else {
            Action::Stop(Vector::scalar(mean(t.info_values())))
        })
    }

    fn declared_caps(&self) -> Option<Caps> {
        Some(Caps::new(self.n, 0))
    }

    fn name(&self) -> String {
        format!("midpoint(n={})", self.n)
    }
}

/// Stratified rule on `cells` equal cells: per cell, `bits` fresh random
/// bits pick one of `2^bits` dyadic sub-cell midpoints.
///
/// Bit `j = c·bits + p + 1` is the `p`-th bit of cell `c`, most significant
/// first; `u1` reads as 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitStratifiedMc {
    cells: usize,
    bits: usize,
}

pub fn bit_stratified_mc(cells: usize, bits: usize) -> BitStratifiedMc {
    assert!(cells >= 1 && bits >= 1, "stratified rule needs cells, bits >= 1");
    assert!(bits <= 30, "at most 30 bits per cell");
    BitStratifiedMc { cells, bits }
}

impl BitStratifiedMc {
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    /// Sample point of cell `c` (0-based) for sub-cell index `u`.
    pub fn point<S: Scalar>(&self, c: usize, u: u64) -> S {
        let scale = 1i64 << (self.bits + 1);
        S::ratio(scale * c as i64 + 2 * u as i64 + 1, scale * self.cells as i64)
    }
}

impl<S: Scalar> Strategy<S> for BitStratifiedMc {
    fn action(&self, t: &Transcript<S>) -> Result<Action<S>> {
        let b = self.bits;
        let step = b + 1;
        let (c, phase) = (t.len() / step, t.len() % step);
        if c >= self.cells {
            return Ok(Action::Stop(Vector::scalar(mean(t.info_values()))));
        }
        if phase < b {
            return Ok(Action::AskRand(RandQuery((c * b + phase + 1) as u64)));
        }
        let u = t.entries()[c * step..c * step + b]
            .iter()
            .fold(0u64, |acc, e| acc << 1 | e.symbol().map_or(0, |s| s.0 as u64));
        Ok(Action::AskInfo(InfoQuery::Point(self.point(c, u))))
    }

    fn declared_caps(&self) -> Option<Caps> {
        Some(Caps::new(self.cells, self.cells * self.bits))
    }

    fn name(&self) -> String {
        format!("bit-stratified(cells={}, bits={})", self.cells, self.bits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{enumerate_branches, expected_cards, expected_output, prob_within_caps, run_sampled};
    use crate::problems::grid::{GridInput, GridProblem};
    use crate::problems::lipschitz::{hat, linear, sawtooth, LipschitzProblem};
    use crate::problems::make_bit_restriction;
    use crate::scalar::Rational;

    type Q = Rational;

    fn lip(members: Vec<crate::problems::PiecewiseLinear<Q>>) -> LipschitzProblem<Q> {
        LipschitzProblem::new(members).unwrap()
    }

    #[test]
    fn midpoint_single_point_is_exact_on_linear() {
        let f = linear::<Q>(Q::one(), Q::zero()).unwrap();
        let p = lip(vec![f.clone()]);
        let run = run_sampled(&midpoint_rule(1), &p, &f, &make_bit_restriction(), 0, 10).unwrap();
        assert_eq!(run.output, Vector::scalar(Q::ratio(1, 2)));
        assert_eq!((run.card_info, run.card_rand), (1, 0));
    }

    #[test]
    fn midpoint_misses_the_sawtooth_by_a_quarter_over_n() {
        let f = sawtooth::<Q>(2, Q::ratio(1, 2), false, false).unwrap();
        let p = lip(vec![f.clone()]);
        let out = expected_output(&midpoint_rule(2), &p, &f, &make_bit_restriction()).unwrap();
        assert_eq!((out.first().clone() - f.integral()).abs(), Q::ratio(1, 8));
    }

    #[test]
    fn midpoint_on_hat_within_worst_case() {
        let f = hat::<Q>(Q::ratio(1, 2), Q::ratio(1, 2)).unwrap();
        let p = lip(vec![f.clone()]);
        let out = expected_output(&midpoint_rule(4), &p, &f, &make_bit_restriction()).unwrap();
        assert!((out.first().clone() - Q::ratio(1, 4)).abs() <= Q::ratio(1, 16));
        let cards = expected_cards(&midpoint_rule(4), &p, &f, &make_bit_restriction()).unwrap();
        assert_eq!(cards, (Q::from_int(4), Q::zero()));
    }

    #[test]
    fn stratified_single_cell_single_bit() {
        let f = linear::<Q>(Q::one(), Q::zero()).unwrap();
        let p = lip(vec![f.clone()]);
        let r = make_bit_restriction();
        let s = bit_stratified_mc(1, 1);
        let branches = enumerate_branches(&s, &p, &f, &r, 100).unwrap();
        let outs: Vec<Q> = branches.iter().map(|b| b.run.output.first().clone()).collect();
        assert_eq!(outs, vec![Q::ratio(1, 4), Q::ratio(3, 4)]);
        assert_eq!(expected_output(&s, &p, &f, &r).unwrap(), Vector::scalar(Q::ratio(1, 2)));

        let c = linear::<Q>(Q::zero(), Q::ratio(3, 7)).unwrap();
        let p = lip(vec![c.clone()]);
        for b in enumerate_branches(&s, &p, &c, &r, 100).unwrap() {
            assert_eq!(b.run.output, Vector::scalar(Q::ratio(3, 7)));
        }
    }

    #[test]
    fn stratified_costs_are_branch_independent() {
        let f = hat::<Q>(Q::ratio(1, 3), Q::ratio(1, 4)).unwrap();
        let p = lip(vec![f.clone()]);
        let branches = enumerate_branches(&bit_stratified_mc(2, 2), &p, &f, &make_bit_restriction(), 100).unwrap();
        assert_eq!(branches.len(), 16);
        assert!(branches.iter().all(|b| (b.run.card_info, b.run.card_rand) == (2, 4)));
    }

    #[test]
    fn stratified_is_unbiased_on_cellwise_linear_inputs() {
        // Knots at multiples of 1/4, so every one of four cells sees a linear piece.
        let f = crate::problems::PiecewiseLinear::new(
            "zigzag",
            vec![
                (Q::zero(), Q::zero()),
                (Q::ratio(1, 4), Q::ratio(1, 4)),
                (Q::ratio(1, 2), Q::ratio(1, 8)),
                (Q::ratio(3, 4), Q::ratio(1, 8)),
                (Q::one(), Q::ratio(-1, 8)),
            ],
        )
        .unwrap();
        let p = lip(vec![f.clone()]);
        for bits in 1..=3 {
            let out = expected_output(&bit_stratified_mc(4, bits), &p, &f, &make_bit_restriction()).unwrap();
            assert_eq!(out, Vector::scalar(f.integral()));
        }
    }

    #[test]
    fn grid_examples_have_the_expected_costs() {
        let p = GridProblem::new(2).unwrap();
        let r = make_bit_restriction::<Q>();
        let f = GridInput::from_signs(&[-1, 1]);
        assert_eq!(expected_output(&bit_then_query(), &p, &f, &r).unwrap(), Vector::scalar(Q::zero()));
        assert_eq!(expected_output(&coin_a0(), &p, &f, &r).unwrap(), Vector::scalar(Q::zero()));
        assert_eq!(
            expected_cards(&bit_or_query(), &p, &f, &r).unwrap(),
            (Q::ratio(1, 2), Q::one())
        );
        assert_eq!(prob_within_caps(&bit_or_query(), &p, &f, &r, 0, 1).unwrap(), Q::ratio(1, 2));
        assert_eq!(prob_within_caps(&coin_a0(), &p, &f, &r, 0, 1).unwrap(), Q::one());
        assert_eq!(prob_within_caps(&coin_a0(), &p, &f, &r, 0, 0).unwrap(), Q::zero());
        let four = enumerate_branches(&bits_only(2), &p, &f, &r, 10).unwrap();
        assert_eq!(four.len(), 4);
        assert!(four.iter().all(|b| b.probability == Q::ratio(1, 4)));
        let single = enumerate_branches(&constant(Vector::scalar(Q::from_int(7))), &p, &f, &r, 10).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].probability, Q::one());
    }
}
