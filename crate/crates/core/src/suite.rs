//! Verification suite: randomized grid strategies and the property checks
//! run over them.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::bounds::{det_minimal_error_grid, theorem1_inflated_cardinality, theorem1_lower_bound};
use crate::engine::{
    empirical_error, enumerate_branches, execute, expected_cards, expected_output, mass_within,
    ErrorMode, RandomSource, DEFAULT_MAX_STEPS,
};
use crate::error::{Error, Result};
use crate::model::{
    Action, Caps, Entry, ExtendedOutput, FiniteRestriction, FnStrategy, InfoQuery, Problem,
    RandQuery, Strategy, Symbol, Transcript, Vector,
};
use crate::problems::grid::{exact_test_problem, make_grid_problem, GridProblem};
use crate::problems::make_bit_restriction;
use crate::problems::strategies::{bit_or_query, bit_then_query, coin_a0, mean};
use crate::scalar::{Rational, Scalar};
use crate::transforms::{derandomize, theorem1_pipeline, truncate};
use crate::tree::{DecisionTree, Node};

type Q = Rational;

/// Suites accepted by [`run_suite`].
pub const SUITES: [&str; 6] = ["lemma1", "lemma2", "markov", "factor3", "theorem1", "all"];

/// One strategy of the suite with the grid it runs on.
#[derive(Clone)]
pub struct SuiteCase {
    pub name: String,
    pub strategy: Arc<dyn Strategy<Q>>,
    pub m: usize,
    pub restriction: FiniteRestriction<Q>,
}

impl SuiteCase {
    fn new(strategy: impl Strategy<Q> + 'static, m: usize, restriction: FiniteRestriction<Q>) -> Self {
        SuiteCase {
            name: strategy.name(),
            strategy: Arc::new(strategy),
            m,
            restriction,
        }
    }

    pub fn problem(&self) -> GridProblem {
        make_grid_problem(self.m).expect("suite grids are small")
    }
}

fn ternary(weights: [Q; 3]) -> FiniteRestriction<Q> {
    FiniteRestriction::new(
        vec!["a".into(), "b".into(), "c".into()],
        weights.to_vec(),
    )
    .expect("valid ternary restriction")
}

fn uniform_ternary() -> FiniteRestriction<Q> {
    ternary([Q::ratio(1, 3), Q::ratio(1, 3), Q::ratio(1, 3)])
}

fn symbols(t: &Transcript<Q>) -> Vec<usize> {
    t.entries().iter().filter_map(Entry::symbol).map(|s| s.0).collect()
}

/// Asks `k` random symbols first, then `n` coordinates chosen by their
/// base-`q` value. Every branch pays for all `n` queries, so derandomizing
/// costs exactly `n q^k`.
pub fn full_branching(n: usize, k: usize, q: usize, m: usize) -> FnStrategy<Q> {
    FnStrategy::new(format!("full-branching(n={n}, k={k}, q={q})"), move |t: &Transcript<Q>| {
        let len = t.len();
        if len < k {
            return Ok(Action::AskRand(RandQuery(len as u64 + 1)));
        }
        let u = symbols(t).iter().fold(0usize, |acc, s| acc * q + s);
        if len < k + n {
            let i = len - k;
            return Ok(Action::AskInfo(InfoQuery::Coord((u + i) % m + 1)));
        }
        Ok(Action::Stop(Vector::scalar(mean(t.info_values()))))
    })
    .with_caps(Caps::new(n, k))
}

/// Three bits pick a coordinate of a 6-grid; outputs its value.
fn random_coordinate() -> FnStrategy<Q> {
    FnStrategy::new("random-coordinate", |t: &Transcript<Q>| {
        let len = t.len();
        if len < 3 {
            return Ok(Action::AskRand(RandQuery(len as u64 + 1)));
        }
        let u = symbols(t).iter().fold(0usize, |acc, s| acc * 2 + s);
        Ok(match t.info_values().next() {
            None => Action::AskInfo(InfoQuery::Coord(u % 6 + 1)),
            Some(v) => Action::Stop(Vector::scalar(v.clone())),
        })
    })
    .with_caps(Caps::new(1, 3))
}

/// Reads `f(1)`; on `+1` a bit decides between `f(2)` and `f(3)`.
fn info_then_bit() -> FnStrategy<Q> {
    FnStrategy::new("info-then-bit", |t: &Transcript<Q>| {
        let e = t.entries();
        Ok(match e.len() {
            0 => Action::AskInfo(InfoQuery::Coord(1)),
            1 if e[0].info_value() < Some(&Q::zero()) => Action::Stop(Vector::scalar(-Q::one())),
            1 => Action::AskRand(RandQuery(1)),
            2 => Action::AskInfo(InfoQuery::Coord(2 + e[1].symbol().map_or(0, |s| s.0))),
            _ => Action::Stop(Vector::scalar(mean(t.info_values()))),
        })
    })
    .with_caps(Caps::new(2, 1))
}

/// Draws fresh bits until `u1` or three draws, reading one coordinate per draw.
fn geometric() -> FnStrategy<Q> {
    FnStrategy::new("geometric", |t: &Transcript<Q>| {
        let e = t.entries();
        let len = e.len();
        if len % 2 == 0 {
            let draws = len / 2;
            let done = draws == 3 || (draws > 0 && e[len - 2].symbol() == Some(Symbol(1)));
            return Ok(if done {
                Action::Stop(Vector::scalar(mean(t.info_values())))
            } else {
                Action::AskRand(RandQuery(draws as u64 + 1))
            });
        }
        Ok(Action::AskInfo(InfoQuery::Coord(len / 2 + 1)))
    })
    .with_caps(Caps::new(3, 3))
}

/// Three bits; all `u1` (probability 1/8) reads the whole 6-grid,
/// otherwise only `f(1)`.
fn lottery() -> FnStrategy<Q> {
    FnStrategy::new("lottery", |t: &Transcript<Q>| {
        let len = t.len();
        if len < 3 {
            return Ok(Action::AskRand(RandQuery(len as u64 + 1)));
        }
        let jackpot = symbols(t).iter().all(|s| *s == 1);
        let reads = if jackpot { 6 } else { 1 };
        Ok(if len - 3 < reads {
            Action::AskInfo(InfoQuery::Coord(len - 3 + 1))
        } else {
            Action::Stop(Vector::scalar(mean(t.info_values())))
        })
    })
    .with_caps(Caps::new(6, 3))
}

/// Ternary draws with weights (1/2, 1/3, 1/6).
fn skewed_ternary() -> FnStrategy<Q> {
    FnStrategy::new("skewed-ternary", |t: &Transcript<Q>| {
        let e = t.entries();
        let first = e.first().and_then(Entry::symbol).map(|s| s.0);
        Ok(match (e.len(), first) {
            (0, _) => Action::AskRand(RandQuery(1)),
            (1, Some(0)) => Action::Stop(Vector::scalar(Q::zero())),
            (1, _) => Action::AskInfo(InfoQuery::Coord(1)),
            (2, Some(1)) => Action::AskRand(RandQuery(2)),
            (2, _) => Action::AskInfo(InfoQuery::Coord(2)),
            (3, Some(1)) => {
                let s = e[2].symbol().map_or(0, |s| s.0) as i64;
                let v = e[1].info_value().cloned().unwrap_or_else(Q::zero);
                Action::Stop(Vector::scalar(v * Q::ratio(s - 1, 1)))
            }
            _ => Action::Stop(Vector::scalar(mean(t.info_values()))),
        })
    })
    .with_caps(Caps::new(2, 2))
}

/// Asks bit 1 twice; the second call repeats the first symbol.
fn repeated_draw() -> FnStrategy<Q> {
    FnStrategy::new("repeated-draw", |t: &Transcript<Q>| {
        let e = t.entries();
        Ok(match e.len() {
            0 | 1 => Action::AskRand(RandQuery(1)),
            2 => {
                let same = e[0].symbol() == e[1].symbol();
                let c = if same { 1 + e[0].symbol().map_or(0, |s| s.0) } else { 2 };
                Action::AskInfo(InfoQuery::Coord(c))
            }
            _ => Action::Stop(Vector::scalar(e[2].info_value().cloned().unwrap_or_else(Q::zero))),
        })
    })
    .with_caps(Caps::new(1, 2))
}

/// One bit per pair `{2i−1, 2i}` of a 6-grid, interleaved with the reads.
fn stratified_pairs() -> FnStrategy<Q> {
    FnStrategy::new("stratified-pairs", |t: &Transcript<Q>| {
        let e = t.entries();
        let len = e.len();
        if len == 6 {
            return Ok(Action::Stop(Vector::scalar(mean(t.info_values()))));
        }
        let pair = len / 2;
        Ok(if len % 2 == 0 {
            Action::AskRand(RandQuery(pair as u64 + 1))
        } else {
            let bit = e[len - 1].symbol().map_or(0, |s| s.0);
            Action::AskInfo(InfoQuery::Coord(2 * pair + 1 + bit))
        })
    })
    .with_caps(Caps::new(3, 3))
}

/// Parameters of the random decision-tree generator.
#[derive(Debug, Clone)]
pub struct TreeSpec {
    pub m: usize,
    /// Coordinates the tree may read.
    pub coords: Vec<usize>,
    pub alphabet: Vec<String>,
    pub caps: Caps,
    /// Probability of stopping at a node where a call is still allowed.
    pub stop_probability: f64,
}

/// A random tree within `spec.caps`. Random nodes occasionally repeat an
/// earlier index; stop outputs mix constants and averages of the answers.
pub fn random_tree(spec: &TreeSpec, seed: u64) -> DecisionTree<Q> {
    struct Gen<'a> {
        spec: &'a TreeSpec,
        rng: ChaCha8Rng,
    }
    impl Gen<'_> {
        fn output(&mut self, seen: &[Q]) -> Vector<Q> {
            let sum = seen.iter().cloned().fold(Q::zero(), |a, b| a + b);
            let v = match self.rng.gen_range(0..4) {
                0 => mean(seen.iter()),
                1 => Q::ratio(self.rng.gen_range(-8..=8), 8),
                2 => sum / Q::from_usize(self.spec.m),
                _ => mean(seen.iter()) * Q::ratio(self.rng.gen_range(0..=4), 4),
            };
            Vector::scalar(v)
        }

        fn node(&mut self, used: Caps, drawn: &[u64], seen: &mut Vec<Q>) -> Node<Q> {
            let can_info = used.info < self.spec.caps.info;
            let can_rand = used.rand < self.spec.caps.rand;
            if !(can_info || can_rand) || self.rng.gen_bool(self.spec.stop_probability) {
                return Node::stop(self.output(seen));
            }
            let info = can_info && (!can_rand || self.rng.gen_bool(0.5));
            if info {
                let coord = self.spec.coords[self.rng.gen_range(0..self.spec.coords.len())];
                let mut children = Vec::new();
                for v in [Q::from_int(-1), Q::one()] {
                    seen.push(v.clone());
                    let child = self.node(Caps::new(used.info + 1, used.rand), drawn, seen);
                    seen.pop();
                    children.push((v, child));
                }
                Node::Info {
                    query: InfoQuery::Coord(coord),
                    children,
                }
            } else {
                let j = if !drawn.is_empty() && self.rng.gen_bool(0.15) {
                    drawn[self.rng.gen_range(0..drawn.len())]
                } else {
                    drawn.iter().max().map_or(1, |j| j + 1)
                };
                let mut next = drawn.to_vec();
                if !next.contains(&j) {
                    next.push(j);
                }
                let children = (0..self.spec.alphabet.len())
                    .map(|s| (Symbol(s), self.node(Caps::new(used.info, used.rand + 1), &next, seen)))
                    .collect();
                Node::Rand {
                    query: RandQuery(j),
                    children,
                }
            }
        }
    }
    let mut g = Gen {
        spec,
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let root = g.node(Caps::new(0, 0), &[], &mut Vec::new());
    DecisionTree::new(format!("random-tree(seed={seed})"), 1, spec.alphabet.clone(), root).with_caps(spec.caps)
}

fn bits() -> Vec<String> {
    make_bit_restriction::<Q>().alphabet().to_vec()
}

/// The shipped suite: hand-written strategies plus seeded random trees.
pub fn verification_suite() -> Vec<SuiteCase> {
    let bit = make_bit_restriction::<Q>;
    let mut cases = vec![
        SuiteCase::new(coin_a0(), 1, bit()),
        SuiteCase::new(bit_then_query(), 2, bit()),
        SuiteCase::new(bit_or_query(), 2, bit()),
        SuiteCase::new(full_branching(2, 2, 2, 4), 4, bit()),
        SuiteCase::new(full_branching(1, 2, 3, 3), 3, uniform_ternary()),
        SuiteCase::new(random_coordinate(), 6, bit()),
        SuiteCase::new(info_then_bit(), 3, bit()),
        SuiteCase::new(geometric(), 3, bit()),
        SuiteCase::new(lottery(), 6, bit()),
        SuiteCase::new(
            skewed_ternary(),
            2,
            ternary([Q::ratio(1, 2), Q::ratio(1, 3), Q::ratio(1, 6)]),
        ),
        SuiteCase::new(repeated_draw(), 2, bit()),
        SuiteCase::new(stratified_pairs(), 6, bit()),
    ];
    for seed in 0..8u64 {
        let ternary_alphabet = seed % 3 == 2;
        let m = 2 + (seed as usize % 4);
        let spec = TreeSpec {
            m,
            coords: (1..=m).collect(),
            alphabet: if ternary_alphabet { uniform_ternary().alphabet().to_vec() } else { bits() },
            caps: Caps::new(1 + seed as usize % 3, 1 + (seed as usize / 2) % 3),
            stop_probability: 0.2,
        };
        let restriction = if ternary_alphabet { uniform_ternary() } else { bit() };
        cases.push(SuiteCase::new(random_tree(&spec, 1000 + seed), m, restriction));
    }
    cases
}

/// A suite case by name.
pub fn find_case(name: &str) -> Option<SuiteCase> {
    verification_suite().into_iter().find(|c| c.name == name)
}

/// One check with its outcome and a witness.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub case: String,
    pub check: String,
    pub passed: bool,
    pub witness: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "suite": self.suite,
            "passed": self.passed(),
            "total": self.checks.len(),
            "failed": self.failures().len(),
            "checks": self.checks.iter().map(|c| json!({
                "case": c.case,
                "check": c.check,
                "passed": c.passed,
                "witness": c.witness,
            })).collect::<Vec<_>>(),
        })
    }
}

fn check(case: &str, name: &str, passed: bool, witness: Value) -> Check {
    Check {
        case: case.to_string(),
        check: name.to_string(),
        passed,
        witness,
    }
}

/// Caps tried for truncation.
pub const LEMMA1_CAPS: [(usize, usize); 7] = [(0, 0), (1, 0), (0, 1), (1, 1), (2, 1), (1, 2), (3, 3)];

/// Truncation reproduces `(A · 1_B, 1_B)` on every branch and respects the caps.
pub fn lemma1_suite(cases: &[SuiteCase]) -> Result<SuiteReport> {
    let checks = cases
        .par_iter()
        .map(|case| {
            let p = case.problem();
            let mut mismatches = 0usize;
            let mut cap_breaks = 0usize;
            let mut branches_seen = 0usize;
            let mut first_witness = Value::Null;
            for (ci, cr) in LEMMA1_CAPS {
                let caps = Caps::new(ci, cr);
                let t = truncate(case.strategy.clone(), ci, cr);
                for f in <GridProblem as Problem<Q>>::test_inputs(&p)? {
                    for b in enumerate_branches(case.strategy.as_ref(), &p, &f, &case.restriction, DEFAULT_MAX_STEPS)? {
                        branches_seen += 1;
                        let run = execute(&t, &p, &f, &case.restriction, &RandomSource::Fixed(b.omega()), DEFAULT_MAX_STEPS)?;
                        let inside = caps.admits(b.run.card_info, b.run.card_rand);
                        let indicator = if inside { Q::one() } else { Q::zero() };
                        let expected = ExtendedOutput::new(b.run.output.scale(&indicator), indicator).into_vector();
                        if run.output != expected {
                            mismatches += 1;
                            if first_witness.is_null() {
                                first_witness = json!({
                                    "caps": caps, "input": <GridProblem as Problem<Q>>::describe_input(&p, &f),
                                    "got": run.output.to_json(), "expected": expected.to_json(),
                                });
                            }
                        }
                        if !caps.admits(run.card_info, run.card_rand) {
                            cap_breaks += 1;
                        }
                    }
                }
            }
            Ok(vec![
                check(&case.name, "output pair", mismatches == 0, json!({
                    "branches": branches_seen, "mismatches": mismatches, "first": first_witness,
                })),
                check(&case.name, "pointwise caps", cap_breaks == 0, json!({
                    "branches": branches_seen, "violations": cap_breaks,
                })),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        suite: "lemma1".into(),
        checks: checks.into_iter().flatten().collect(),
    })
}

/// Derandomized output equals the expectation; cost stays within `n q^k`.
pub fn lemma2_suite(cases: &[SuiteCase]) -> Result<SuiteReport> {
    let checks = cases
        .par_iter()
        .map(|case| {
            let p = case.problem();
            let tree = derandomize(case.strategy.clone(), &case.restriction, &p)?;
            let bound = tree.cost_bound().ok_or_else(|| Error::Overflow("cost bound".into()))?;
            let mut unequal = Vec::new();
            let mut worst = 0usize;
            for f in <GridProblem as Problem<Q>>::test_inputs(&p)? {
                let (out, cost) = tree.run(&p, &f)?;
                worst = worst.max(cost);
                let expected = expected_output(case.strategy.as_ref(), &p, &f, &case.restriction)?;
                if out != expected {
                    unequal.push(<GridProblem as Problem<Q>>::describe_input(&p, &f));
                }
            }
            let explicit = tree.materialize(&p)?;
            let rand_nodes = explicit.root.rand_node_count();
            Ok(vec![
                check(&case.name, "exact expectation", unequal.is_empty(), json!({"unequal_inputs": unequal})),
                check(&case.name, "cost bound", worst <= bound, json!({
                    "worst_card_info": worst, "bound": bound, "attained": worst == bound,
                })),
                check(&case.name, "no random nodes", rand_nodes == 0, json!({
                    "rand_nodes": rand_nodes, "nodes": explicit.root.node_count(),
                })),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        suite: "lemma2".into(),
        checks: checks.into_iter().flatten().collect(),
    })
}

/// Smallest integer budgets covering the expected cardinalities on every input.
pub fn verified_budgets(case: &SuiteCase) -> Result<Caps> {
    let p = case.problem();
    let mut budgets = Caps::new(0, 0);
    for f in <GridProblem as Problem<Q>>::test_inputs(&p)? {
        let (ci, cr) = expected_cards(case.strategy.as_ref(), &p, &f, &case.restriction)?;
        budgets.info = budgets.info.max(ceil_usize(&ci));
        budgets.rand = budgets.rand.max(ceil_usize(&cr));
    }
    Ok(budgets)
}

fn ceil_usize(x: &Q) -> usize {
    let fl = x.floor_to_i64();
    let c = if Q::from_int(fl) == *x { fl } else { fl + 1 };
    c.max(0) as usize
}

/// `P(card ≤ 3n, card′ ≤ 3k) ≥ 1/3` under verified expectation budgets.
pub fn markov_suite(cases: &[SuiteCase]) -> Result<SuiteReport> {
    markov_suite_at(cases, None)
}

/// As [`markov_suite`], at fixed budgets when given. Budgets the expected
/// cardinalities exceed are reported as failed checks.
pub fn markov_suite_at(cases: &[SuiteCase], fixed: Option<Caps>) -> Result<SuiteReport> {
    let checks = cases
        .par_iter()
        .map(|case| {
            let p = case.problem();
            let base = verified_budgets(case)?;
            let mut out = Vec::new();
            let list = match fixed {
                Some(b) => {
                    let ok = base.info <= b.info && base.rand <= b.rand;
                    out.push(check(&case.name, "expectation budgets", ok, json!({"budgets": b, "required": base})));
                    if !ok {
                        return Ok(out);
                    }
                    vec![b]
                }
                None => vec![base, Caps::new(base.info + 1, base.rand), Caps::new(base.info, base.rand + 1)],
            };
            for budgets in list {
                let caps = budgets.scaled(3);
                let mut min_mass: Option<Q> = None;
                for f in <GridProblem as Problem<Q>>::test_inputs(&p)? {
                    let branches = enumerate_branches(case.strategy.as_ref(), &p, &f, &case.restriction, DEFAULT_MAX_STEPS)?;
                    let mass = mass_within(&branches, caps);
                    if min_mass.as_ref().is_none_or(|m| mass < *m) {
                        min_mass = Some(mass);
                    }
                }
                let min_mass = min_mass.expect("nonempty input set");
                out.push(check(
                    &case.name,
                    &format!("P(B_f) >= 1/3 at budgets {budgets}"),
                    min_mass >= Q::ratio(1, 3),
                    json!({"budgets": budgets, "caps": caps, "min_probability": min_mass.to_json()}),
                ));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        suite: "markov".into(),
        checks: checks.into_iter().flatten().collect(),
    })
}

/// Pipeline output is the conditional expectation and loses at most a factor 3.
pub fn factor3_suite(cases: &[SuiteCase]) -> Result<SuiteReport> {
    let checks = cases
        .par_iter()
        .map(|case| {
            let p = case.problem();
            let budgets = verified_budgets(case)?;
            let caps = budgets.scaled(3);
            let tree = theorem1_pipeline(case.strategy.clone(), budgets, &case.restriction, &p)?;
            let bound = theorem1_inflated_cardinality(budgets.info, budgets.rand, case.restriction.alphabet_size())?;
            let mut violations = Vec::new();
            let mut not_conditional = Vec::new();
            let mut worst_cost = 0usize;
            let mut tightest: Option<(Q, Q)> = None;
            for f in <GridProblem as Problem<Q>>::test_inputs(&p)? {
                let truth = <GridProblem as Problem<Q>>::solution(&p, &f);
                let branches = enumerate_branches(case.strategy.as_ref(), &p, &f, &case.restriction, DEFAULT_MAX_STEPS)?;
                let rhs = Q::from_int(3)
                    * branches.iter().fold(Q::zero(), |acc, b| {
                        acc + b.probability.clone() * (truth.first().clone() - b.run.output.first().clone()).abs()
                    });
                let (out, cost) = tree.run(&p, &f)?;
                worst_cost = worst_cost.max(cost);
                let lhs = (truth.first().clone() - out.first().clone()).abs();
                if lhs > rhs {
                    violations.push(<GridProblem as Problem<Q>>::describe_input(&p, &f));
                }
                if tightest.as_ref().is_none_or(|(l, r)| rhs.clone() - lhs.clone() < r.clone() - l.clone()) {
                    tightest = Some((lhs.clone(), rhs.clone()));
                }
                let mass = mass_within(&branches, caps);
                let inside = branches
                    .iter()
                    .filter(|b| caps.admits(b.run.card_info, b.run.card_rand))
                    .fold(Q::zero(), |acc, b| acc + b.probability.clone() * b.run.output.first().clone());
                let conditional = if mass.is_zero() { Q::zero() } else { inside / mass };
                if out != Vector::scalar(conditional) {
                    not_conditional.push(<GridProblem as Problem<Q>>::describe_input(&p, &f));
                }
            }
            let (lhs, rhs) = tightest.expect("nonempty input set");
            Ok(vec![
                check(&case.name, "factor 3 per input", violations.is_empty(), json!({
                    "budgets": budgets, "violations": violations,
                    "tightest": {"lhs": lhs.to_json(), "rhs": rhs.to_json()},
                })),
                check(&case.name, "conditional expectation", not_conditional.is_empty(), json!({"mismatches": not_conditional})),
                check(&case.name, "inflated cost bound", worst_cost <= bound, json!({
                    "worst_card_info": worst_cost, "bound": bound,
                })),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        suite: "factor3".into(),
        checks: checks.into_iter().flatten().collect(),
    })
}

/// Budgets examined on the large grid.
pub const THEOREM1_BUDGETS: [(usize, usize); 3] = [(1, 0), (2, 0), (1, 1)];

/// Random strategies per budget in the adversarial search.
pub const ADVERSARIAL_PER_BUDGET: usize = 100;

/// Random strategies whose expected cards fit `budgets` on the grid of size `m`.
pub fn adversarial_strategies(m: usize, budgets: Caps, count: usize, seed: u64) -> Result<Vec<SuiteCase>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let restriction = make_bit_restriction::<Q>();
    let mut out = Vec::new();
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > count * 200 {
            return Err(Error::BadParams(format!(
                "could not generate {count} strategies within budgets {budgets}"
            )));
        }
        let pool = rng.gen_range(1..=8usize.min(m));
        let mut coords: Vec<usize> = (1..=m).collect();
        for i in 0..pool {
            let j = rng.gen_range(i..m);
            coords.swap(i, j);
        }
        coords.truncate(pool);
        let caps = Caps::new(
            if budgets.rand == 0 { budgets.info } else { budgets.info + rng.gen_range(0..=2) },
            if budgets.rand == 0 { 0 } else { budgets.rand + rng.gen_range(0..=1) },
        );
        let spec = TreeSpec {
            m,
            coords,
            alphabet: restriction.alphabet().to_vec(),
            caps,
            stop_probability: rng.gen_range(0.1..0.6),
        };
        let tree = random_tree(&spec, rng.gen());
        let case = SuiteCase {
            name: format!("adversarial-{}-{}", budgets, out.len()),
            strategy: Arc::new(tree),
            m,
            restriction: restriction.clone(),
        };
        let p = exact_test_problem(case.strategy.as_ref(), m, &restriction, DEFAULT_MAX_STEPS)?;
        if fits_budgets(&case, &p, budgets)? {
            out.push(case);
        }
    }
    Ok(out)
}

fn fits_budgets(case: &SuiteCase, p: &GridProblem, budgets: Caps) -> Result<bool> {
    for f in <GridProblem as Problem<Q>>::test_inputs(p)? {
        let (ci, cr) = expected_cards(case.strategy.as_ref(), p, &f, &case.restriction)?;
        if ci > Q::from_usize(budgets.info) || cr > Q::from_usize(budgets.rand) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `e(A) ≥ (1/3) e^det_{3n q^{3k}}` on the grid of size `m`, for suite
/// strategies over bits and the adversarial search.
pub fn theorem1_suite(cases: &[SuiteCase], m: usize, adversarial: usize) -> Result<SuiteReport> {
    let mut pool: Vec<SuiteCase> = cases
        .iter()
        .filter(|c| c.restriction.alphabet_size() == 2 && c.m <= m)
        .cloned()
        .map(|mut c| {
            c.m = m;
            c
        })
        .collect();
    for (i, (n, k)) in THEOREM1_BUDGETS.iter().enumerate() {
        pool.extend(adversarial_strategies(m, Caps::new(*n, *k), adversarial, 7 + i as u64)?);
    }
    let rows = pool
        .par_iter()
        .map(|case| {
            let p = exact_test_problem(case.strategy.as_ref(), m, &case.restriction, DEFAULT_MAX_STEPS)?;
            let mut rows = Vec::new();
            let mut report = None;
            for (n, k) in THEOREM1_BUDGETS {
                let card = theorem1_inflated_cardinality(n, k, 2)?;
                if card >= m || !fits_budgets(case, &p, Caps::new(n, k))? {
                    continue;
                }
                let err = match &report {
                    Some(e) => e,
                    None => report.insert(empirical_error(case.strategy.as_ref(), &p, &case.restriction, ErrorMode::ExactEnumeration)?),
                };
                let bound = theorem1_lower_bound(|c| Ok(det_minimal_error_grid::<Q>(m, c)), n, k, 2)?;
                rows.push((case.name.clone(), n, k, card, err.sup.clone(), bound));
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table: BTreeMap<(usize, usize), (usize, usize, Option<(String, Q, Q)>)> = BTreeMap::new();
    let mut checks = Vec::new();
    for (name, n, k, card, err, bound) in rows.into_iter().flatten() {
        let ok = err >= bound;
        let entry = table.entry((n, k)).or_insert((0, 0, None));
        entry.0 += 1;
        if !ok {
            entry.1 += 1;
        }
        let slack = err.clone() - bound.clone();
        if entry.2.as_ref().is_none_or(|(_, e, b)| slack < e.clone() - b.clone()) {
            entry.2 = Some((name.clone(), err.clone(), bound.clone()));
        }
        if !name.starts_with("adversarial-") || !ok {
            checks.push(check(&name, &format!("e(A) >= bound at (n,k)=({n},{k})"), ok, json!({
                "m": m, "inflated_cardinality": card, "error": err.to_json(), "bound": bound.to_json(),
            })));
        }
    }
    for ((n, k), (count, failures, tightest)) in &table {
        let (name, err, bound) = tightest.clone().expect("at least one row");
        checks.push(check(
            "table",
            &format!("(n,k)=({n},{k})"),
            *failures == 0,
            json!({
                "m": m,
                "strategies": count,
                "counterexamples": failures,
                "bound": bound.to_json(),
                "tightest": {"strategy": name, "error": err.to_json()},
            }),
        ));
    }
    for (n, k) in THEOREM1_BUDGETS {
        if theorem1_inflated_cardinality(n, k, 2)? < m && !table.contains_key(&(n, k)) {
            checks.push(check("table", &format!("(n,k)=({n},{k})"), false, json!({"error": "no strategy examined"})));
        }
    }
    Ok(SuiteReport {
        suite: "theorem1".into(),
        checks,
    })
}

/// Knobs of [`run_suite_on`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteOptions {
    /// Grid size of the theorem1 suite.
    pub m: usize,
    /// Random strategies per budget in the theorem1 suite.
    pub adversarial: usize,
    /// Fixed budgets for the markov suite.
    pub markov_budgets: Option<Caps>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            m: 32,
            adversarial: ADVERSARIAL_PER_BUDGET,
            markov_budgets: None,
        }
    }
}

/// Runs one named suite (or `all`) on the shipped strategies.
pub fn run_suite(name: &str, m: usize) -> Result<Vec<SuiteReport>> {
    let opts = SuiteOptions {
        m,
        ..SuiteOptions::default()
    };
    run_suite_on(name, &verification_suite(), &opts)
}

pub fn run_suite_on(name: &str, cases: &[SuiteCase], opts: &SuiteOptions) -> Result<Vec<SuiteReport>> {
    let one = |s: &str| -> Result<SuiteReport> {
        match s {
            "lemma1" => lemma1_suite(cases),
            "lemma2" => lemma2_suite(cases),
            "markov" => markov_suite_at(cases, opts.markov_budgets),
            "factor3" => factor3_suite(cases),
            "theorem1" => theorem1_suite(cases, opts.m, opts.adversarial),
            other => Err(Error::UnknownSuite(other.to_string())),
        }
    };
    if name == "all" {
        SUITES[..5].iter().map(|s| one(s)).collect()
    } else {
        Ok(vec![one(name)?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wellformed::assert_well_formed;

    #[test]
    fn suite_is_large_enough_and_well_formed() {
        let cases = verification_suite();
        assert!(cases.len() >= 10);
        let mut names: Vec<&str> = cases.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), cases.len(), "names must be unique");
        for c in &cases {
            assert!(c.m <= 6 && [2, 3].contains(&c.restriction.alphabet_size()));
            let report = assert_well_formed(c.strategy.as_ref(), &c.restriction, &c.problem(), 32).unwrap();
            assert!(report.ok(), "{}: {:?}", c.name, report);
            assert!(report.caps_verified(), "{}", c.name);
            assert!(report.observed_caps.rand <= 3, "{}", c.name);
        }
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(matches!(run_suite("lemma3", 32), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn markov_at_fixed_budgets() {
        let coin = vec![find_case("coin").unwrap()];
        let r = markov_suite_at(&coin, Some(Caps::new(0, 1))).unwrap();
        assert!(r.passed());
        let p = r.checks.iter().find(|c| c.check.starts_with("P(B_f)")).unwrap();
        assert_eq!(p.witness["min_probability"], Q::one().to_json());
        let r = markov_suite_at(&coin, Some(Caps::new(0, 0))).unwrap();
        assert!(!r.passed());
    }

    #[test]
    fn random_trees_are_reproducible_and_capped() {
        let spec = TreeSpec {
            m: 4,
            coords: vec![1, 2, 3, 4],
            alphabet: bits(),
            caps: Caps::new(2, 2),
            stop_probability: 0.1,
        };
        let a = random_tree(&spec, 5);
        assert_eq!(a, random_tree(&spec, 5));
        let w = a.worst_case_caps();
        assert!(spec.caps.admits(w.info, w.rand));
    }

    #[test]
    fn heavy_tailed_members_have_fractional_budgets() {
        let lottery = find_case("lottery").unwrap();
        let p = lottery.problem();
        let f = crate::problems::GridInput(0);
        assert_eq!(
            expected_cards(lottery.strategy.as_ref(), &p, &f, &lottery.restriction).unwrap(),
            (Q::ratio(13, 8), Q::from_int(3))
        );
        let geo = find_case("geometric").unwrap();
        assert_eq!(
            expected_cards(geo.strategy.as_ref(), &geo.problem(), &f, &geo.restriction).unwrap(),
            (Q::ratio(7, 4), Q::ratio(7, 4))
        );
        assert_eq!(verified_budgets(&geo).unwrap(), Caps::new(2, 2));
    }
}
