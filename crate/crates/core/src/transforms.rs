//! Budget truncation, derandomization and the conditional-expectation
//! pipeline built from them.
//!
//! A [`DeterministicTree`] is kept as a program rather than an expanded
//! tree: conditioning on a random answer means running the source strategy
//! on transcripts that already contain that answer. Expansion into a
//! [`DecisionTree`] is available when the information alphabet is finite.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::json;

use crate::engine::{enumerate_branches, expected_cards, DEFAULT_MAX_STEPS};
use crate::error::{Error, Result};
use crate::model::{
    Action, Caps, Entry, ExtendedOutput, FiniteRestriction, InfoQuery, Problem, Query, Strategy,
    Transcript, Vector,
};
use crate::scalar::Scalar;
use crate::tree::{materialize, DecisionTree};

/// Running counts behind the truncation rule at one transcript.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationBookkeeping {
    /// Information calls among the calls made so far plus the pending one.
    pub d: usize,
    /// Random calls among the calls made so far plus the pending one.
    pub d_prime: usize,
    /// `true` when the pending call would exceed a cap.
    pub zeta: bool,
}

/// A strategy cut off before its first call beyond the caps.
///
/// Outputs `(value, 1)` when the wrapped strategy stops in time and
/// `(0, 0)` otherwise; the flag is the trailing output coordinate.
#[derive(Clone)]
pub struct Truncated<S> {
    inner: Arc<dyn Strategy<S>>,
    caps: Caps,
}

pub fn truncate<S: Scalar>(strategy: Arc<dyn Strategy<S>>, cap_info: usize, cap_rand: usize) -> Truncated<S> {
    Truncated {
        inner: strategy,
        caps: Caps::new(cap_info, cap_rand),
    }
}

impl<S: Scalar> Truncated<S> {
    pub fn caps(&self) -> Caps {
        self.caps
    }

    pub fn inner(&self) -> &Arc<dyn Strategy<S>> {
        &self.inner
    }

    pub fn bookkeeping(&self, t: &Transcript<S>) -> Result<TruncationBookkeeping> {
        let (mut d, mut d_prime) = (t.info_count(), t.rand_count());
        match self.inner.action(t)? {
            Action::AskInfo(_) => d += 1,
            Action::AskRand(_) => d_prime += 1,
            Action::Stop(_) => {}
        }
        Ok(TruncationBookkeeping {
            d,
            d_prime,
            zeta: d > self.caps.info || d_prime > self.caps.rand,
        })
    }

    fn cut(&self) -> Action<S> {
        Action::Stop(ExtendedOutput::new(Vector::zeros(self.inner.output_dim()), S::zero()).into_vector())
    }
}

impl<S: Scalar> Strategy<S> for Truncated<S> {
    fn action(&self, t: &Transcript<S>) -> Result<Action<S>> {
        Ok(match self.inner.action(t)? {
            Action::Stop(v) => Action::Stop(ExtendedOutput::new(v, S::one()).into_vector()),
            Action::AskInfo(_) if t.info_count() + 1 > self.caps.info => self.cut(),
            Action::AskRand(_) if t.rand_count() + 1 > self.caps.rand => self.cut(),
            other => other,
        })
    }

    fn output_dim(&self) -> usize {
        self.inner.output_dim() + 1
    }

    fn declared_caps(&self) -> Option<Caps> {
        Some(self.caps)
    }

    fn name(&self) -> String {
        format!("truncate({}, {})", self.inner.name(), self.caps)
    }
}

#[derive(Clone)]
enum Program<S> {
    Constant(Vector<S>),
    /// The source strategy run from `prefix`, random calls averaged out.
    Conditioned {
        source: Arc<dyn Strategy<S>>,
        restriction: Option<Arc<FiniteRestriction<S>>>,
        prefix: Transcript<S>,
        max_steps: usize,
    },
    Composed {
        parts: Vec<DeterministicTree<S>>,
        weights: Vec<S>,
    },
    Normalized(Box<DeterministicTree<S>>),
}

/// A deterministic algorithm: information calls only, output a fixed
/// function of the answers.
#[derive(Clone)]
pub struct DeterministicTree<S> {
    program: Program<S>,
    output_dim: usize,
    cost_bound: Option<usize>,
    name: String,
}

impl<S: Scalar> fmt::Debug for DeterministicTree<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DeterministicTree")
            .field("name", &self.name)
            .field("output_dim", &self.output_dim)
            .field("cost_bound", &self.cost_bound)
            .finish()
    }
}

enum Halt<S> {
    Ask(InfoQuery<S>),
    Fail(Error),
}

impl<S> From<Error> for Halt<S> {
    fn from(e: Error) -> Self {
        Halt::Fail(e)
    }
}

type OracleFn<'a, S> = dyn FnMut(&InfoQuery<S>) -> std::result::Result<S, Halt<S>> + 'a;

struct Ctx<'a, S> {
    oracle: &'a mut OracleFn<'a, S>,
    path: Vec<usize>,
    weight: S,
    trace: Option<Trace<S>>,
}

impl<S: Scalar> Ctx<'_, S> {
    fn ask(&mut self, q: &InfoQuery<S>) -> std::result::Result<S, Halt<S>> {
        let v = (self.oracle)(q)?;
        if let Some(t) = &mut self.trace {
            t.steps.push(TraceStep {
                path: path_id(&self.path),
                query: q.clone(),
                answer: v.clone(),
            });
        }
        Ok(v)
    }

    fn leaf(&mut self, output: &Vector<S>) {
        if let Some(t) = &mut self.trace {
            t.leaves.push(TraceLeaf {
                path: path_id(&self.path),
                weight: self.weight.clone(),
                output: output.clone(),
            });
        }
    }

    fn descend<T>(
        &mut self,
        index: usize,
        weight: &S,
        body: impl FnOnce(&mut Self) -> std::result::Result<T, Halt<S>>,
    ) -> std::result::Result<T, Halt<S>> {
        let saved = self.weight.clone();
        self.path.push(index);
        self.weight = saved.clone() * weight.clone();
        let out = body(self);
        self.path.pop();
        self.weight = saved;
        out
    }
}

fn path_id(path: &[usize]) -> String {
    if path.is_empty() {
        return "root".into();
    }
    path.iter().map(usize::to_string).collect::<Vec<_>>().join(".")
}

fn weighted_sum<S: Scalar>(
    dim: usize,
    terms: impl IntoIterator<Item = std::result::Result<(S, Vector<S>), Halt<S>>>,
) -> std::result::Result<Vector<S>, Halt<S>> {
    let mut acc = Vector::zeros(dim);
    for term in terms {
        let (w, v) = term?;
        acc = acc.add(&v.scale(&w));
    }
    Ok(acc)
}

fn run_conditioned<S: Scalar>(
    source: &Arc<dyn Strategy<S>>,
    restriction: Option<&Arc<FiniteRestriction<S>>>,
    mut t: Transcript<S>,
    max_steps: usize,
    ctx: &mut Ctx<'_, S>,
) -> std::result::Result<Vector<S>, Halt<S>> {
    loop {
        let action = source.action(&t)?;
        if !action.is_stop() && t.len() >= max_steps {
            return Err(Error::NonterminatingPath { max_steps }.into());
        }
        match action {
            Action::Stop(v) => {
                ctx.leaf(&v);
                return Ok(v);
            }
            Action::AskInfo(q) => {
                let v = ctx.ask(&q)?;
                t.push(Entry::info(q, v));
            }
            Action::AskRand(j) => {
                if let Some(s) = t.recorded_rand(j) {
                    t.push(Entry::rand(j, s));
                    continue;
                }
                let r = restriction.ok_or_else(|| {
                    Error::MalformedStrategy(format!("random query {} without a restriction", j.0))
                })?;
                let dim = source.output_dim();
                let mut acc = Vector::zeros(dim);
                for (idx, (s, p)) in r.support(j).into_iter().enumerate() {
                    let branch = t.extended(Entry::rand(j, s));
                    let v = ctx.descend(idx, &p, |ctx| run_conditioned(source, Some(r), branch, max_steps, ctx))?;
                    acc = acc.add(&v.scale(&p));
                }
                return Ok(acc);
            }
        }
    }
}

impl<S: Scalar> DeterministicTree<S> {
    /// The tree that asks nothing and stops with `value`.
    pub fn constant(value: Vector<S>) -> Self {
        DeterministicTree {
            output_dim: value.dim(),
            name: format!("constant({value})"),
            program: Program::Constant(value),
            cost_bound: Some(0),
        }
    }

    /// Wraps a strategy that never asks for randomness.
    pub fn from_deterministic(strategy: Arc<dyn Strategy<S>>) -> Self {
        DeterministicTree {
            output_dim: strategy.output_dim(),
            name: strategy.name(),
            cost_bound: strategy.declared_caps().filter(|c| c.rand == 0).map(|c| c.info),
            program: Program::Conditioned {
                source: strategy,
                restriction: None,
                prefix: Transcript::new(),
                max_steps: DEFAULT_MAX_STEPS,
            },
        }
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    /// Guaranteed worst-case number of information calls, when known.
    pub fn cost_bound(&self) -> Option<usize> {
        self.cost_bound
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn eval(&self, ctx: &mut Ctx<'_, S>) -> std::result::Result<Vector<S>, Halt<S>> {
        match &self.program {
            Program::Constant(v) => {
                ctx.leaf(v);
                Ok(v.clone())
            }
            Program::Conditioned {
                source,
                restriction,
                prefix,
                max_steps,
            } => run_conditioned(source, restriction.as_ref(), prefix.clone(), *max_steps, ctx),
            Program::Composed { parts, weights } => weighted_sum(
                self.output_dim,
                parts.iter().zip(weights).enumerate().map(|(i, (part, w))| {
                    let v = ctx.descend(i, w, |ctx| part.eval(ctx))?;
                    Ok((w.clone(), v))
                }),
            ),
            Program::Normalized(inner) => {
                let ext = ExtendedOutput::from_vector(&inner.eval(ctx)?)?;
                Ok(if ext.flag.is_zero() {
                    Vector::zeros(self.output_dim)
                } else {
                    ext.value.scale(&(S::one() / ext.flag))
                })
            }
        }
    }

    /// Runs against an answer oracle; returns the output and the number of calls.
    pub fn evaluate_with(&self, mut oracle: impl FnMut(&InfoQuery<S>) -> Result<S>) -> Result<(Vector<S>, usize)> {
        let mut calls = 0usize;
        let mut f = |q: &InfoQuery<S>| {
            calls += 1;
            oracle(q).map_err(Halt::Fail)
        };
        let mut ctx = Ctx {
            oracle: &mut f,
            path: Vec::new(),
            weight: S::one(),
            trace: None,
        };
        let out = self.eval(&mut ctx);
        drop(ctx);
        match out {
            Ok(v) => Ok((v, calls)),
            Err(Halt::Fail(e)) => Err(e),
            Err(Halt::Ask(_)) => unreachable!("live oracles answer every query"),
        }
    }

    /// Output and information cardinality on input `f`.
    pub fn run<P: Problem<S>>(&self, problem: &P, input: &P::Input) -> Result<(Vector<S>, usize)> {
        self.evaluate_with(|q| {
            problem
                .validate_query(q)
                .map_err(|e| Error::MalformedStrategy(format!("invalid information query {q}: {e}")))?;
            problem.evaluate(input, q)
        })
    }

    /// Query log with composition paths plus the weighted leaves that
    /// make up the output.
    pub fn trace<P: Problem<S>>(&self, problem: &P, input: &P::Input) -> Result<Trace<S>> {
        let mut oracle = |q: &InfoQuery<S>| problem.evaluate(input, q).map_err(Halt::Fail);
        let mut ctx = Ctx {
            oracle: &mut oracle,
            path: Vec::new(),
            weight: S::one(),
            trace: Some(Trace {
                steps: Vec::new(),
                leaves: Vec::new(),
                output: Vector::zeros(self.output_dim),
                normalized: matches!(self.program, Program::Normalized(_)),
            }),
        };
        let out = self.eval(&mut ctx);
        let mut trace = ctx.trace.take().expect("tracing enabled");
        match out {
            Ok(v) => {
                trace.output = v;
                Ok(trace)
            }
            Err(Halt::Fail(e)) => Err(e),
            Err(Halt::Ask(_)) => unreachable!("live oracles answer every query"),
        }
    }

    /// Expands into an explicit tree; needs a finite information alphabet.
    pub fn materialize<P: Problem<S>>(&self, problem: &P) -> Result<DecisionTree<S>> {
        let answers = problem.answer_alphabet().ok_or_else(|| {
            Error::BadParams("continuous answers cannot be expanded into a tree; use a trace".into())
        })?;
        let depth = self.cost_bound.unwrap_or(DEFAULT_MAX_STEPS);
        let mut tree = materialize(self, &answers, None, depth)?;
        tree.caps = self.cost_bound.map(|n| Caps::new(n, 0));
        Ok(tree)
    }
}

impl<S: Scalar> Strategy<S> for DeterministicTree<S> {
    /// Replays the program against the answers already in the transcript.
    fn action(&self, t: &Transcript<S>) -> Result<Action<S>> {
        let entries = t.entries();
        let mut next = 0usize;
        let mut oracle = |q: &InfoQuery<S>| match entries.get(next) {
            None => Err(Halt::Ask(q.clone())),
            Some(e) => match (e.query(), e.info_value()) {
                (Query::Info(asked), Some(v)) if asked == q => {
                    next += 1;
                    Ok(v.clone())
                }
                _ => Err(Halt::Fail(Error::MalformedTranscript(format!(
                    "entry {next} does not answer {q}"
                )))),
            },
        };
        let mut ctx = Ctx {
            oracle: &mut oracle,
            path: Vec::new(),
            weight: S::one(),
            trace: None,
        };
        let out = self.eval(&mut ctx);
        drop(ctx);
        match out {
            Ok(_) if next < entries.len() => Err(Error::MalformedTranscript(
                "transcript continues past the stop".into(),
            )),
            Ok(v) => Ok(Action::Stop(v)),
            Err(Halt::Ask(q)) => Ok(Action::AskInfo(q)),
            Err(Halt::Fail(e)) => Err(e),
        }
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn declared_caps(&self) -> Option<Caps> {
        self.cost_bound.map(|n| Caps::new(n, 0))
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep<S> {
    /// Composition path, e.g. `0.1` for the second part of the first part.
    pub path: String,
    pub query: InfoQuery<S>,
    pub answer: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceLeaf<S> {
    pub path: String,
    pub weight: S,
    pub output: Vector<S>,
}

/// Execution log of a deterministic tree on one input.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<S> {
    pub steps: Vec<TraceStep<S>>,
    /// The output is `Σ weight · output` over leaves, divided by the flag
    /// coordinate when `normalized`.
    pub leaves: Vec<TraceLeaf<S>>,
    pub output: Vector<S>,
    pub normalized: bool,
}

impl<S: Scalar> Trace<S> {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "steps": self.steps.iter().map(|s| json!({
                "path": s.path,
                "query": s.query.to_string(),
                "answer": s.answer.to_json(),
            })).collect::<Vec<_>>(),
            "leaves": self.leaves.iter().map(|l| json!({
                "path": l.path,
                "weight": l.weight.to_json(),
                "output": l.output.to_json(),
            })).collect::<Vec<_>>(),
            "normalized": self.normalized,
            "output": self.output.to_json(),
        })
    }
}

/// `n · q^k`, or `None` on overflow.
pub fn lemma2_cost_bound(caps: Caps, alphabet_size: usize) -> Option<usize> {
    u32::try_from(caps.rand)
        .ok()
        .and_then(|k| alphabet_size.checked_pow(k))
        .and_then(|p| p.checked_mul(caps.info))
}

/// Largest branch cardinalities over the problem's test inputs.
pub fn observed_caps<S: Scalar, P: Problem<S>>(
    strategy: &dyn Strategy<S>,
    restriction: &FiniteRestriction<S>,
    problem: &P,
) -> Result<Caps> {
    let inputs = problem.test_inputs()?;
    let per_input: Vec<Caps> = inputs
        .par_iter()
        .map(|f| {
            let branches = enumerate_branches(strategy, problem, f, restriction, DEFAULT_MAX_STEPS)?;
            Ok(branches.iter().fold(Caps::new(0, 0), |c, b| {
                Caps::new(c.info.max(b.run.card_info), c.rand.max(b.run.card_rand))
            }))
        })
        .collect::<Result<_>>()?;
    Ok(per_input
        .into_iter()
        .fold(Caps::new(0, 0), |a, b| Caps::new(a.info.max(b.info), a.rand.max(b.rand))))
}

/// Derandomizes under the declared hard caps, or the observed ones when
/// nothing is declared.
pub fn derandomize<S: Scalar, P: Problem<S>>(
    strategy: Arc<dyn Strategy<S>>,
    restriction: &FiniteRestriction<S>,
    problem: &P,
) -> Result<DeterministicTree<S>> {
    let observed = observed_caps(strategy.as_ref(), restriction, problem)?;
    let caps = match strategy.declared_caps() {
        Some(c) if !c.admits(observed.info, observed.rand) => {
            return Err(Error::CapsViolated(format!(
                "{} declares {c} but reaches {observed}",
                strategy.name()
            )))
        }
        Some(c) => c,
        None => observed,
    };
    build_derandomized(strategy, restriction, caps)
}

/// Derandomizes after checking that `caps` hold on every branch of every test input.
pub fn derandomize_with_caps<S: Scalar, P: Problem<S>>(
    strategy: Arc<dyn Strategy<S>>,
    restriction: &FiniteRestriction<S>,
    problem: &P,
    caps: Caps,
) -> Result<DeterministicTree<S>> {
    let observed = observed_caps(strategy.as_ref(), restriction, problem)?;
    if !caps.admits(observed.info, observed.rand) {
        return Err(Error::CapsViolated(format!(
            "{} reaches {observed}, beyond {caps}",
            strategy.name()
        )));
    }
    build_derandomized(strategy, restriction, caps)
}

fn build_derandomized<S: Scalar>(
    strategy: Arc<dyn Strategy<S>>,
    restriction: &FiniteRestriction<S>,
    caps: Caps,
) -> Result<DeterministicTree<S>> {
    Ok(DeterministicTree {
        output_dim: strategy.output_dim(),
        name: format!("derandomize({})", strategy.name()),
        cost_bound: lemma2_cost_bound(caps, restriction.alphabet_size()),
        program: Program::Conditioned {
            source: strategy,
            restriction: Some(Arc::new(restriction.clone())),
            prefix: Transcript::new(),
            max_steps: caps.info + caps.rand,
        },
    })
}

/// Runs the trees one after another and outputs the weighted sum.
pub fn compose_sequential<S: Scalar>(trees: Vec<DeterministicTree<S>>, weights: Vec<S>) -> Result<DeterministicTree<S>> {
    if trees.len() != weights.len() {
        return Err(Error::LengthMismatch {
            trees: trees.len(),
            weights: weights.len(),
        });
    }
    let first = trees
        .first()
        .ok_or_else(|| Error::BadParams("nothing to compose".into()))?;
    let dim = first.output_dim;
    if trees.iter().any(|t| t.output_dim != dim) {
        return Err(Error::BadParams("composed trees must share the output dimension".into()));
    }
    if let Some(w) = weights.iter().find(|w| **w < S::zero()) {
        return Err(Error::BadDistribution(format!("negative weight {w}")));
    }
    let total = weights.iter().cloned().fold(S::zero(), |a, b| a + b);
    let closed = if S::EXACT {
        total == S::one()
    } else {
        (total.to_f64() - 1.0).abs() <= 1e-12
    };
    if !closed {
        return Err(Error::BadDistribution(format!("weights sum to {total}")));
    }
    let cost_bound = trees
        .iter()
        .try_fold(0usize, |acc, t| t.cost_bound.and_then(|c| acc.checked_add(c)));
    let name = format!(
        "compose({})",
        trees.iter().map(|t| t.name.as_str()).collect::<Vec<_>>().join(", ")
    );
    Ok(DeterministicTree {
        output_dim: dim,
        cost_bound,
        name,
        program: Program::Composed { parts: trees, weights },
    })
}

/// Maps an output `(v, w)` to `v / w`, or to 0 when `w = 0`.
pub fn conditional_normalize<S: Scalar>(tree: DeterministicTree<S>) -> DeterministicTree<S> {
    assert!(tree.output_dim >= 1, "normalization needs a flag coordinate");
    DeterministicTree {
        output_dim: tree.output_dim - 1,
        cost_bound: tree.cost_bound,
        name: format!("normalize({})", tree.name),
        program: Program::Normalized(Box::new(tree)),
    }
}

/// Checks `E card ≤ budgets` on every test input, truncates at three times
/// the budgets, derandomizes and normalizes.
pub fn theorem1_pipeline<S: Scalar, P: Problem<S>>(
    strategy: Arc<dyn Strategy<S>>,
    budgets: Caps,
    restriction: &FiniteRestriction<S>,
    problem: &P,
) -> Result<DeterministicTree<S>> {
    check_budgets(strategy.as_ref(), budgets, restriction, problem)?;
    let caps = budgets.scaled(3);
    let truncated: Arc<dyn Strategy<S>> = Arc::new(truncate(strategy, caps.info, caps.rand));
    let tree = build_derandomized(truncated, restriction, caps)?;
    Ok(conditional_normalize(tree))
}

/// Fails with `BudgetViolated` unless `E card_info ≤ n` and `E card_rand ≤ k` on every test input.
pub fn check_budgets<S: Scalar, P: Problem<S>>(
    strategy: &dyn Strategy<S>,
    budgets: Caps,
    restriction: &FiniteRestriction<S>,
    problem: &P,
) -> Result<()> {
    let inputs = problem.test_inputs()?;
    inputs.par_iter().try_for_each(|f| {
        let (ci, cr) = expected_cards(strategy, problem, f, restriction)?;
        if ci > S::from_usize(budgets.info) || cr > S::from_usize(budgets.rand) {
            return Err(Error::BudgetViolated(format!(
                "E card = ({ci}, {cr}) on {} exceeds {budgets}",
                problem.describe_input(f)
            )));
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{empirical_error, enumerate_branches, expected_output, run_sampled, ErrorMode};
    use crate::model::FnStrategy;
    use crate::problems::grid::{GridInput, GridProblem};
    use crate::problems::make_bit_restriction;
    use crate::problems::strategies::{bit_then_query, coin_a0, constant, read_coordinate, read_prefix};
    use crate::scalar::Rational;

    type Q = Rational;

    fn q(n: i64, d: i64) -> Q {
        Q::ratio(n, d)
    }

    fn grid(m: usize) -> GridProblem {
        GridProblem::new(m).unwrap()
    }

    #[test]
    fn truncating_a_constant_changes_nothing_but_the_flag() {
        let t = truncate::<Q>(Arc::new(constant(Vector::scalar(Q::from_int(7)))), 0, 0);
        assert_eq!(
            t.action(&Transcript::new()).unwrap(),
            Action::Stop(Vector(vec![Q::from_int(7), Q::one()]))
        );
    }

    #[test]
    fn truncation_stops_before_the_call_beyond_the_cap() {
        let t = truncate::<Q>(Arc::new(read_prefix(2)), 1, 0);
        let p = grid(2);
        for f in <GridProblem as Problem<Q>>::test_inputs(&p).unwrap() {
            let run = run_sampled(&t, &p, &f, &make_bit_restriction(), 0, 10).unwrap();
            assert_eq!(run.output, Vector(vec![Q::zero(), Q::zero()]));
            assert_eq!(run.card_info, 1);
        }
        let after_one = Transcript::from_entries(vec![Entry::info(InfoQuery::Coord(1), Q::one())]);
        let book = t.bookkeeping(&after_one).unwrap();
        assert_eq!(book, TruncationBookkeeping { d: 2, d_prime: 0, zeta: true });
    }

    #[test]
    fn truncated_coin_keeps_both_branches() {
        let t = truncate::<Q>(Arc::new(coin_a0()), 0, 1);
        let p = grid(1);
        let outs: Vec<Vector<Q>> = enumerate_branches(&t, &p, &GridInput(0), &make_bit_restriction(), 10)
            .unwrap()
            .into_iter()
            .map(|b| b.run.output)
            .collect();
        assert_eq!(
            outs,
            vec![Vector(vec![-Q::one(), Q::one()]), Vector(vec![Q::one(), Q::one()])]
        );
    }

    #[test]
    fn derandomized_coin_is_the_constant_zero() {
        let p = grid(1);
        let tree = derandomize::<Q, _>(Arc::new(coin_a0()), &make_bit_restriction(), &p).unwrap();
        assert_eq!(tree.cost_bound(), Some(0));
        for f in <GridProblem as Problem<Q>>::test_inputs(&p).unwrap() {
            assert_eq!(tree.run(&p, &f).unwrap(), (Vector::scalar(Q::zero()), 0));
        }
        let explicit = tree.materialize(&p).unwrap();
        assert_eq!(explicit.root, crate::tree::Node::stop(Vector::scalar(Q::zero())));
    }

    #[test]
    fn pure_information_strategy_is_unchanged() {
        let p = grid(2);
        let r = make_bit_restriction::<Q>();
        let tree = derandomize::<Q, _>(Arc::new(read_coordinate(1)), &r, &p).unwrap();
        assert_eq!(tree.cost_bound(), Some(1));
        let explicit = tree.materialize(&p).unwrap();
        let original = materialize(&read_coordinate::<Q>(1), &[Q::from_int(-1), Q::one()], None, 5).unwrap();
        assert_eq!(explicit.root, original.root);
    }

    #[test]
    fn bit_then_query_becomes_a_two_query_average() {
        let p = grid(2);
        let r = make_bit_restriction::<Q>();
        let tree = derandomize::<Q, _>(Arc::new(bit_then_query()), &r, &p).unwrap();
        assert_eq!(tree.cost_bound(), Some(2));
        for f in <GridProblem as Problem<Q>>::test_inputs(&p).unwrap() {
            let (out, cost) = tree.run(&p, &f).unwrap();
            let expected = q(f.sign(1) + f.sign(2), 2);
            assert_eq!(out, Vector::scalar(expected));
            assert_eq!(cost, 2);
        }
        let trace = tree.trace(&p, &GridInput::from_signs(&[-1, 1])).unwrap();
        let paths: Vec<&str> = trace.steps.iter().map(|s| s.path.as_str()).collect();
        assert_eq!(paths, vec!["0", "1"]);
        assert_eq!(trace.leaves.len(), 2);
        assert_eq!(trace.output, Vector::scalar(Q::zero()));
    }

    #[test]
    fn false_caps_are_caught() {
        let p = grid(2);
        let liar = Arc::new(bit_then_query::<Q>().with_caps(Caps::new(0, 1)));
        let err = derandomize::<Q, _>(liar, &make_bit_restriction(), &p).unwrap_err();
        assert!(matches!(err, Error::CapsViolated(_)));
        let err = derandomize_with_caps::<Q, _>(Arc::new(read_prefix(2)), &make_bit_restriction(), &p, Caps::new(1, 0));
        assert!(matches!(err, Err(Error::CapsViolated(_))));
    }

    #[test]
    fn composition_adds_costs_and_averages_outputs() {
        let a = DeterministicTree::constant(Vector::scalar(Q::from_int(2)));
        let b = DeterministicTree::constant(Vector::scalar(Q::from_int(5)));
        let c = compose_sequential(vec![a.clone(), b], vec![q(1, 2), q(1, 2)]).unwrap();
        let p = grid(2);
        assert_eq!(c.run(&p, &GridInput(0)).unwrap(), (Vector::scalar(q(7, 2)), 0));

        let one = compose_sequential(vec![a.clone()], vec![Q::one()]).unwrap();
        assert_eq!(one.run(&p, &GridInput(0)).unwrap(), a.run(&p, &GridInput(0)).unwrap());

        let r1 = DeterministicTree::from_deterministic(Arc::new(read_coordinate::<Q>(1)));
        let r2 = DeterministicTree::from_deterministic(Arc::new(read_coordinate::<Q>(2)));
        let both = compose_sequential(vec![r1, r2], vec![q(1, 4), q(3, 4)]).unwrap();
        assert_eq!(both.cost_bound(), Some(2));
        for f in <GridProblem as Problem<Q>>::test_inputs(&p).unwrap() {
            let (out, cost) = both.run(&p, &f).unwrap();
            assert_eq!(cost, 2);
            assert_eq!(out, Vector::scalar(q(f.sign(1), 4) + q(3 * f.sign(2), 4)));
        }

        assert!(matches!(
            compose_sequential(vec![a.clone()], vec![q(1, 2), q(1, 2)]),
            Err(Error::LengthMismatch { trees: 1, weights: 2 })
        ));
        assert!(compose_sequential(vec![a], vec![q(1, 2)]).is_err());
    }

    #[test]
    fn normalization_divides_by_the_flag() {
        let p = grid(1);
        let cases = [
            (vec![Q::from_int(3), q(1, 2)], Q::from_int(6)),
            (vec![Q::zero(), Q::zero()], Q::zero()),
            (vec![q(-2, 3), Q::one()], q(-2, 3)),
        ];
        for (leaf, expected) in cases {
            let n = conditional_normalize(DeterministicTree::constant(Vector(leaf)));
            assert_eq!(n.output_dim(), 1);
            assert_eq!(n.run(&p, &GridInput(0)).unwrap().0, Vector::scalar(expected));
        }
    }

    #[test]
    fn pipeline_on_small_examples() {
        let r = make_bit_restriction::<Q>();
        let p = grid(1);
        let c = theorem1_pipeline::<Q, _>(Arc::new(constant(Vector::scalar(q(1, 3)))), Caps::new(0, 0), &r, &p).unwrap();
        assert_eq!(c.run(&p, &GridInput(1)).unwrap(), (Vector::scalar(q(1, 3)), 0));

        let coin = theorem1_pipeline::<Q, _>(Arc::new(coin_a0()), Caps::new(0, 1), &r, &p).unwrap();
        let err = empirical_error(&coin_a0::<Q>(), &p, &r, ErrorMode::ExactEnumeration).unwrap();
        for f in <GridProblem as Problem<Q>>::test_inputs(&p).unwrap() {
            let (out, _) = coin.run(&p, &f).unwrap();
            assert_eq!(out, Vector::scalar(Q::zero()));
            assert!(Q::one() <= Q::from_int(3) * err.sup.clone());
        }

        let p2 = grid(2);
        let btq = theorem1_pipeline::<Q, _>(Arc::new(bit_then_query()), Caps::new(1, 1), &r, &p2).unwrap();
        assert!(btq.cost_bound().unwrap() <= 24);
        let s = bit_then_query::<Q>();
        for f in <GridProblem as Problem<Q>>::test_inputs(&p2).unwrap() {
            let (out, cost) = btq.run(&p2, &f).unwrap();
            assert!(cost <= 24);
            assert_eq!(out, expected_output(&s, &p2, &f, &r).unwrap());
        }

        let over = theorem1_pipeline::<Q, _>(Arc::new(read_prefix(2)), Caps::new(1, 0), &r, &p2);
        assert!(matches!(over, Err(Error::BudgetViolated(_))));
    }

    #[test]
    fn replayed_tree_matches_direct_run() {
        let p = grid(3);
        let r = make_bit_restriction::<Q>();
        let adaptive = FnStrategy::<Q>::new("adaptive", |t| {
            let e = t.entries();
            Ok(match e.len() {
                0 => Action::AskInfo(InfoQuery::Coord(1)),
                1 => Action::AskRand(crate::model::RandQuery(1)),
                2 => {
                    let first = e[0].info_value().unwrap().clone();
                    let bit = e[1].symbol().unwrap().0;
                    if first > Q::zero() {
                        Action::AskInfo(InfoQuery::Coord(2 + bit))
                    } else {
                        Action::Stop(Vector::scalar(Q::from_int(-1)))
                    }
                }
                _ => Action::Stop(Vector::scalar(e[2].info_value().unwrap().clone())),
            })
        })
        .with_caps(Caps::new(2, 1));
        let tree = derandomize::<Q, _>(Arc::new(adaptive.clone()), &r, &p).unwrap();
        for f in <GridProblem as Problem<Q>>::test_inputs(&p).unwrap() {
            let direct = tree.run(&p, &f).unwrap();
            let replay = run_sampled(&tree, &p, &f, &r, 0, 100).unwrap();
            assert_eq!(replay.output, direct.0);
            assert_eq!(replay.card_info, direct.1);
            assert_eq!(replay.card_rand, 0);
            assert_eq!(direct.0, expected_output(&adaptive, &p, &f, &r).unwrap());
        }
    }
}
