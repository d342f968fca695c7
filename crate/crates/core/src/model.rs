//! Problems, access restrictions, transcripts and strategies.
//!
//! A strategy is one total function from transcripts to actions. Stopping at
//! a transcript of length `i` plays the role of the stop rule firing at step
//! `i` with the attached output; any other action names the next call.
//! Information answers and random answers carry distinct tags, so the two
//! answer alphabets stay disjoint whatever their raw representation.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A query identifying an information functional.
#[derive(Debug, Clone, PartialEq, PartialOrd)]
pub enum InfoQuery<S> {
    /// Coordinate evaluation `f(i)`, 1-based.
    Coord(usize),
    /// Point evaluation `f(x)`.
    Point(S),
}

impl<S: Scalar> fmt::Display for InfoQuery<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfoQuery::Coord(i) => write!(f, "f({i})"),
            InfoQuery::Point(x) => write!(f, "f({x})"),
        }
    }
}

/// Index `j >= 1` of a random functional, e.g. the `j`-th random bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RandQuery(pub u64);

impl RandQuery {
    pub fn new(j: u64) -> Result<Self> {
        if j == 0 {
            return Err(Error::MalformedStrategy("random query index must be >= 1".into()));
        }
        Ok(RandQuery(j))
    }

    pub fn index(self) -> u64 {
        self.0
    }
}

/// Index into a restriction's finite alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Symbol(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub enum Query<S> {
    Info(InfoQuery<S>),
    Rand(RandQuery),
}

/// An answer tagged with its origin.
#[derive(Debug, Clone, PartialEq)]
pub enum Answer<S> {
    Info(S),
    Rand(Symbol),
}

/// One `(query, answer)` pair; the constructor enforces matching tags.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry<S> {
    query: Query<S>,
    answer: Answer<S>,
}

impl<S: Scalar> Entry<S> {
    pub fn new(query: Query<S>, answer: Answer<S>) -> Result<Self> {
        match (&query, &answer) {
            (Query::Info(_), Answer::Info(_)) => {}
            (Query::Rand(RandQuery(0)), _) => {
                return Err(Error::MalformedTranscript("random query index 0".into()))
            }
            (Query::Rand(_), Answer::Rand(_)) => {}
            _ => {
                return Err(Error::MalformedTranscript(
                    "answer tag does not match query kind".into(),
                ))
            }
        }
        Ok(Entry { query, answer })
    }

    pub fn info(query: InfoQuery<S>, value: S) -> Self {
        Entry {
            query: Query::Info(query),
            answer: Answer::Info(value),
        }
    }

    pub fn rand(query: RandQuery, symbol: Symbol) -> Self {
        Entry {
            query: Query::Rand(query),
            answer: Answer::Rand(symbol),
        }
    }

    pub fn query(&self) -> &Query<S> {
        &self.query
    }

    pub fn answer(&self) -> &Answer<S> {
        &self.answer
    }

    pub fn is_info(&self) -> bool {
        matches!(self.query, Query::Info(_))
    }

    pub fn info_value(&self) -> Option<&S> {
        match &self.answer {
            Answer::Info(v) => Some(v),
            Answer::Rand(_) => None,
        }
    }

    pub fn symbol(&self) -> Option<Symbol> {
        match &self.answer {
            Answer::Rand(s) => Some(*s),
            Answer::Info(_) => None,
        }
    }
}

/// Append-only sequence of answered calls.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript<S> {
    entries: Vec<Entry<S>>,
}

impl<S: Scalar> Transcript<S> {
    pub fn new() -> Self {
        Transcript { entries: Vec::new() }
    }

    pub fn from_entries(entries: Vec<Entry<S>>) -> Self {
        Transcript { entries }
    }

    pub fn push(&mut self, entry: Entry<S>) {
        self.entries.push(entry);
    }

    /// Returns a copy extended by one entry.
    pub fn extended(&self, entry: Entry<S>) -> Self {
        let mut next = self.clone();
        next.push(entry);
        next
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Entry<S>] {
        &self.entries
    }

    pub fn info_count(&self) -> usize {
        self.entries.iter().filter(|e| e.is_info()).count()
    }

    pub fn rand_count(&self) -> usize {
        self.entries.len() - self.info_count()
    }

    pub fn info_values(&self) -> impl Iterator<Item = &S> {
        self.entries.iter().filter_map(Entry::info_value)
    }

    /// The answer previously recorded for an identical information query.
    pub fn recorded_info(&self, query: &InfoQuery<S>) -> Option<&S> {
        self.entries.iter().find_map(|e| match (&e.query, &e.answer) {
            (Query::Info(q), Answer::Info(v)) if q == query => Some(v),
            _ => None,
        })
    }

    /// The symbol previously drawn for random functional `j`.
    pub fn recorded_rand(&self, query: RandQuery) -> Option<Symbol> {
        self.entries.iter().find_map(|e| match (&e.query, &e.answer) {
            (Query::Rand(q), Answer::Rand(s)) if *q == query => Some(*s),
            _ => None,
        })
    }

    /// Rejects entries whose answer tag disagrees with the query kind, and
    /// random symbols outside the given alphabet size.
    pub fn validate(&self, alphabet_size: Option<usize>) -> Result<()> {
        for (i, e) in self.entries.iter().enumerate() {
            Entry::new(e.query.clone(), e.answer.clone())
                .map_err(|err| Error::MalformedTranscript(format!("entry {i}: {err}")))?;
            if let (Some(size), Answer::Rand(Symbol(s))) = (alphabet_size, &e.answer) {
                if *s >= size {
                    return Err(Error::MalformedTranscript(format!(
                        "entry {i}: symbol {s} outside alphabet of size {size}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Element of the finite-dimensional output space.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector<S>(pub Vec<S>);

impl<S: Scalar> Vector<S> {
    pub fn zeros(dim: usize) -> Self {
        Vector(vec![S::zero(); dim])
    }

    pub fn scalar(value: S) -> Self {
        Vector(vec![value])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[S] {
        &self.0
    }

    pub fn first(&self) -> &S {
        &self.0[0]
    }

    pub fn scale(&self, factor: &S) -> Self {
        Vector(self.0.iter().map(|x| x.clone() * factor.clone()).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.clone() - b.clone())
                .collect(),
        )
    }

    pub fn approx_eq(&self, other: &Self) -> bool {
        self.dim() == other.dim() && self.0.iter().zip(&other.0).all(|(a, b)| a.approx_eq(b))
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(Scalar::to_f64).collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(self.0.iter().map(Scalar::to_json).collect())
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        match value {
            serde_json::Value::Array(items) => {
                Ok(Vector(items.iter().map(S::from_json).collect::<Result<_>>()?))
            }
            other => Ok(Vector(vec![S::from_json(other)?])),
        }
    }
}

impl<S: Scalar> fmt::Display for Vector<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// Norm on the output space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    /// Absolute value; scalar outputs only.
    Abs,
    /// Maximum norm.
    Max,
}

impl Norm {
    pub fn of<S: Scalar>(self, v: &Vector<S>) -> S {
        match self {
            Norm::Abs => {
                debug_assert_eq!(v.dim(), 1, "absolute value norm on a vector");
                v.0[0].abs()
            }
            Norm::Max => v
                .0
                .iter()
                .map(Scalar::abs)
                .fold(S::zero(), S::max_of),
        }
    }

    pub fn distance<S: Scalar>(self, a: &Vector<S>, b: &Vector<S>) -> S {
        self.of(&a.sub(b))
    }

    /// Checks the norm axioms on basis vectors, their scalings and sums.
    pub fn check<S: Scalar>(self, dim: usize) -> Result<()> {
        if self == Norm::Abs && dim != 1 {
            return Err(Error::BadParams(format!(
                "absolute value norm needs dimension 1, got {dim}"
            )));
        }
        if !self.of(&Vector::<S>::zeros(dim)).is_zero() {
            return Err(Error::BadParams("norm of zero is not zero".into()));
        }
        let basis: Vec<Vector<S>> = (0..dim)
            .map(|i| {
                let mut v = Vector::zeros(dim);
                v.0[i] = S::one();
                v
            })
            .collect();
        for (i, e) in basis.iter().enumerate() {
            for c in [S::from_int(-3), S::ratio(1, 2), S::from_int(2)] {
                let scaled = self.of(&e.scale(&c));
                if !scaled.approx_eq(&(c.abs() * self.of(e))) {
                    return Err(Error::BadParams(format!("norm not homogeneous on e{i}")));
                }
            }
            for other in &basis {
                let lhs = self.of(&e.add(other));
                if !lhs.le_tol(&(self.of(e) + self.of(other))) {
                    return Err(Error::BadParams("triangle inequality fails".into()));
                }
            }
        }
        Ok(())
    }
}

/// Pair of per-run call limits `(info, rand)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Caps {
    pub info: usize,
    pub rand: usize,
}

impl Caps {
    pub fn new(info: usize, rand: usize) -> Self {
        Caps { info, rand }
    }

    pub fn admits(&self, info: usize, rand: usize) -> bool {
        info <= self.info && rand <= self.rand
    }

    pub fn scaled(&self, factor: usize) -> Self {
        Caps::new(self.info * factor, self.rand * factor)
    }
}

impl fmt::Display for Caps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.info, self.rand)
    }
}

/// Output of a truncated strategy: the original value and a flag.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedOutput<S> {
    pub value: Vector<S>,
    pub flag: S,
}

impl<S: Scalar> ExtendedOutput<S> {
    pub fn new(value: Vector<S>, flag: S) -> Self {
        ExtendedOutput { value, flag }
    }

    /// The flag is stored as the trailing coordinate.
    pub fn into_vector(self) -> Vector<S> {
        let mut v = self.value.0;
        v.push(self.flag);
        Vector(v)
    }

    pub fn from_vector(v: &Vector<S>) -> Result<Self> {
        let (flag, value) = v
            .0
            .split_last()
            .ok_or_else(|| Error::MalformedStrategy("empty extended output".into()))?;
        Ok(ExtendedOutput {
            value: Vector(value.to_vec()),
            flag: flag.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action<S> {
    AskInfo(InfoQuery<S>),
    AskRand(RandQuery),
    Stop(Vector<S>),
}

impl<S: Scalar> Action<S> {
    pub fn is_stop(&self) -> bool {
        matches!(self, Action::Stop(_))
    }
}

/// An adaptive algorithm as a pure mapping from transcripts to actions.
///
/// Implementations must return equal actions for equal transcripts; the
/// well-formedness battery replays transcripts to check this.
pub trait Strategy<S: Scalar>: Send + Sync {
    fn action(&self, transcript: &Transcript<S>) -> Result<Action<S>>;

    fn output_dim(&self) -> usize {
        1
    }

    /// Output used when a run is cut off without stopping.
    fn default_output(&self) -> Vector<S> {
        Vector::zeros(self.output_dim())
    }

    /// Hard per-run caps the strategy promises on every path, if any.
    fn declared_caps(&self) -> Option<Caps> {
        None
    }

    fn name(&self) -> String {
        "strategy".to_string()
    }
}

impl<S: Scalar, T: Strategy<S> + ?Sized> Strategy<S> for Arc<T> {
    fn action(&self, transcript: &Transcript<S>) -> Result<Action<S>> {
        (**self).action(transcript)
    }
    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }
    fn default_output(&self) -> Vector<S> {
        (**self).default_output()
    }
    fn declared_caps(&self) -> Option<Caps> {
        (**self).declared_caps()
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

/// Returns the strategy's action after validating the transcript.
pub fn action_at<S: Scalar>(
    strategy: &dyn Strategy<S>,
    transcript: &Transcript<S>,
) -> Result<Action<S>> {
    transcript.validate(None)?;
    strategy.action(transcript)
}

type ActionFn<S> = dyn Fn(&Transcript<S>) -> Result<Action<S>> + Send + Sync;

/// A strategy given by a closure.
#[derive(Clone)]
pub struct FnStrategy<S> {
    name: String,
    output_dim: usize,
    caps: Option<Caps>,
    f: Arc<ActionFn<S>>,
}

impl<S: Scalar> FnStrategy<S> {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&Transcript<S>) -> Result<Action<S>> + Send + Sync + 'static,
    ) -> Self {
        FnStrategy {
            name: name.into(),
            output_dim: 1,
            caps: None,
            f: Arc::new(f),
        }
    }

    pub fn with_caps(mut self, caps: Caps) -> Self {
        self.caps = Some(caps);
        self
    }

    pub fn with_output_dim(mut self, dim: usize) -> Self {
        self.output_dim = dim;
        self
    }
}

impl<S: Scalar> fmt::Debug for FnStrategy<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnStrategy").field("name", &self.name).finish()
    }
}

impl<S: Scalar> Strategy<S> for FnStrategy<S> {
    fn action(&self, transcript: &Transcript<S>) -> Result<Action<S>> {
        (self.f)(transcript)
    }
    fn output_dim(&self) -> usize {
        self.output_dim
    }
    fn declared_caps(&self) -> Option<Caps> {
        self.caps
    }
    fn name(&self) -> String {
        self.name.clone()
    }
}

/// An abstract numerical problem: inputs, solution operator, information
/// evaluator and normed output space.
pub trait Problem<S: Scalar>: Send + Sync {
    type Input: Clone + fmt::Debug + Send + Sync;

    fn name(&self) -> String;

    fn evaluate(&self, input: &Self::Input, query: &InfoQuery<S>) -> Result<S>;

    fn solution(&self, input: &Self::Input) -> Vector<S>;

    fn output_dim(&self) -> usize {
        1
    }

    fn norm(&self) -> Norm {
        Norm::Abs
    }

    /// Inputs used for error suprema and precondition checks.
    fn test_inputs(&self) -> Result<Vec<Self::Input>>;

    /// `true` when [`Problem::test_inputs`] is the whole input set.
    fn exhaustive(&self) -> bool;

    /// Finite information alphabet, when there is one.
    fn answer_alphabet(&self) -> Option<Vec<S>> {
        None
    }

    /// The full finite set of information queries, when there is one.
    fn queries(&self) -> Option<Vec<InfoQuery<S>>> {
        None
    }

    fn validate_query(&self, query: &InfoQuery<S>) -> Result<()>;

    fn describe_input(&self, input: &Self::Input) -> String {
        format!("{input:?}")
    }
}

/// Finite access restriction: alphabet plus one distribution per random
/// functional, draws independent across distinct functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteRestriction<S> {
    alphabet: Vec<String>,
    default: Vec<S>,
    overrides: BTreeMap<u64, Vec<S>>,
}

impl<S: Scalar> FiniteRestriction<S> {
    /// Every random functional uses `distribution`.
    pub fn new(alphabet: Vec<String>, distribution: Vec<S>) -> Result<Self> {
        Self::with_overrides(alphabet, distribution, BTreeMap::new())
    }

    pub fn uniform(alphabet: Vec<String>) -> Result<Self> {
        let q = alphabet.len();
        if q == 0 {
            return Err(Error::BadDistribution("empty alphabet".into()));
        }
        Self::new(alphabet, vec![S::ratio(1, q as i64); q])
    }

    /// Per-functional distributions; `overrides[j]` replaces the default for `j`.
    pub fn with_overrides(
        alphabet: Vec<String>,
        distribution: Vec<S>,
        overrides: BTreeMap<u64, Vec<S>>,
    ) -> Result<Self> {
        if alphabet.is_empty() {
            return Err(Error::BadDistribution("empty alphabet".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for label in &alphabet {
            if !seen.insert(label) {
                return Err(Error::BadDistribution(format!("duplicate symbol `{label}`")));
            }
        }
        check_distribution(alphabet.len(), &distribution)?;
        for (j, d) in &overrides {
            if *j == 0 {
                return Err(Error::BadDistribution("random query index 0".into()));
            }
            check_distribution(alphabet.len(), d)
                .map_err(|e| Error::BadDistribution(format!("query {j}: {e}")))?;
        }
        Ok(FiniteRestriction {
            alphabet,
            default: distribution,
            overrides,
        })
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet.len()
    }

    pub fn label(&self, symbol: Symbol) -> &str {
        &self.alphabet[symbol.0]
    }

    pub fn symbol_of(&self, label: &str) -> Option<Symbol> {
        self.alphabet.iter().position(|l| l == label).map(Symbol)
    }

    pub fn distribution(&self, query: RandQuery) -> &[S] {
        self.overrides.get(&query.0).unwrap_or(&self.default)
    }

    pub fn probability(&self, query: RandQuery, symbol: Symbol) -> S {
        self.distribution(query)[symbol.0].clone()
    }

    /// Symbols with positive probability, in alphabet order.
    pub fn support(&self, query: RandQuery) -> Vec<(Symbol, S)> {
        self.distribution(query)
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > S::zero())
            .map(|(i, p)| (Symbol(i), p.clone()))
            .collect()
    }

    /// Draws always come from independent per-query distributions here.
    pub fn independent(&self) -> bool {
        true
    }
}

fn check_distribution<S: Scalar>(size: usize, probs: &[S]) -> Result<()> {
    if probs.len() != size {
        return Err(Error::BadDistribution(format!(
            "{} probabilities for an alphabet of size {size}",
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| **p < S::zero()) {
        return Err(Error::BadDistribution(format!("negative probability {p}")));
    }
    let total = probs.iter().cloned().fold(S::zero(), |a, b| a + b);
    let closed = if S::EXACT {
        total == S::one()
    } else {
        (total.to_f64() - 1.0).abs() <= 1e-12
    };
    if !closed {
        return Err(Error::BadDistribution(format!("probabilities sum to {total}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    type Q = Rational;

    #[test]
    fn entry_tags_must_match() {
        let bad = Entry::<Q>::new(Query::Info(InfoQuery::Coord(1)), Answer::Rand(Symbol(0)));
        assert!(matches!(bad, Err(Error::MalformedTranscript(_))));
        let bad = Entry::<Q>::new(Query::Rand(RandQuery(1)), Answer::Info(Q::one()));
        assert!(matches!(bad, Err(Error::MalformedTranscript(_))));
        let zero = Entry::<Q>::new(Query::Rand(RandQuery(0)), Answer::Rand(Symbol(0)));
        assert!(zero.is_err());
    }

    #[test]
    fn answers_are_disjoint_even_with_equal_raw_values() {
        // Info value 0 and random symbol 0 never compare equal.
        let info = Answer::<Q>::Info(Q::zero());
        let rand = Answer::<Q>::Rand(Symbol(0));
        assert_ne!(info, rand);
    }

    #[test]
    fn transcript_validation_catches_out_of_alphabet_symbols() {
        let t = Transcript::<Q>::from_entries(vec![Entry::rand(RandQuery(1), Symbol(2))]);
        assert!(t.validate(Some(3)).is_ok());
        assert!(matches!(t.validate(Some(2)), Err(Error::MalformedTranscript(_))));
    }

    #[test]
    fn constant_and_coin_actions() {
        let constant = FnStrategy::<Q>::new("constant", |_| Ok(Action::Stop(Vector::scalar(Q::from_int(7)))));
        assert_eq!(
            action_at(&constant, &Transcript::new()).unwrap(),
            Action::Stop(Vector::scalar(Q::from_int(7)))
        );
        let coin = FnStrategy::<Q>::new("coin", |t| {
            Ok(match t.entries().first().and_then(Entry::symbol) {
                None => Action::AskRand(RandQuery(1)),
                Some(Symbol(1)) => Action::Stop(Vector::scalar(Q::one())),
                Some(_) => Action::Stop(Vector::scalar(-Q::one())),
            })
        });
        assert_eq!(action_at(&coin, &Transcript::new()).unwrap(), Action::AskRand(RandQuery(1)));
        let t = Transcript::from_entries(vec![Entry::rand(RandQuery(1), Symbol(1))]);
        assert_eq!(action_at(&coin, &t).unwrap(), Action::Stop(Vector::scalar(Q::one())));
    }

    #[test]
    fn restriction_rejects_bad_distributions() {
        let ab = vec!["a".to_string(), "b".to_string()];
        assert!(FiniteRestriction::<Q>::new(ab.clone(), vec![Q::ratio(1, 2), Q::ratio(1, 3)]).is_err());
        assert!(FiniteRestriction::<Q>::new(ab.clone(), vec![Q::from_int(2), Q::from_int(-1)]).is_err());
        assert!(FiniteRestriction::<Q>::new(ab.clone(), vec![Q::one()]).is_err());
        assert!(FiniteRestriction::<Q>::new(vec!["a".into(), "a".into()], vec![Q::ratio(1, 2); 2]).is_err());
        let r = FiniteRestriction::<Q>::new(ab, vec![Q::ratio(9, 10), Q::ratio(1, 10)]).unwrap();
        assert_eq!(r.probability(RandQuery(5), Symbol(1)), Q::ratio(1, 10));
    }

    #[test]
    fn zero_probability_symbols_leave_the_support() {
        let r = FiniteRestriction::<Q>::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![Q::ratio(1, 2), Q::zero(), Q::ratio(1, 2)],
        )
        .unwrap();
        let support: Vec<_> = r.support(RandQuery(1)).into_iter().map(|(s, _)| s).collect();
        assert_eq!(support, vec![Symbol(0), Symbol(2)]);
    }

    #[test]
    fn norms_pass_axiom_checks() {
        assert!(Norm::Abs.check::<Q>(1).is_ok());
        assert!(Norm::Max.check::<Q>(3).is_ok());
        assert!(Norm::Abs.check::<Q>(2).is_err());
        let v = Vector(vec![Q::from_int(-3), Q::from_int(2)]);
        assert_eq!(Norm::Max.of(&v), Q::from_int(3));
    }

    #[test]
    fn extended_output_round_trips_through_vector() {
        let e = ExtendedOutput::new(Vector(vec![Q::from_int(3), Q::from_int(4)]), Q::ratio(1, 2));
        let v = e.clone().into_vector();
        assert_eq!(v.dim(), 3);
        assert_eq!(ExtendedOutput::from_vector(&v).unwrap(), e);
    }
}
