//! Execution of strategies against inputs.
//!
//! Randomness is realized per random functional: the symbol returned for
//! `ξ_j` is a fixed function of `(seed, j)`, so a seed plays the part of one
//! sample point `ω`. Asking the same functional twice returns the same
//! symbol. Exhaustive enumeration walks every positive-probability branch.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    Action, Caps, Entry, FiniteRestriction, InfoQuery, Problem, RandQuery, Strategy, Symbol,
    Transcript, Vector,
};
use crate::scalar::Scalar;

/// Step limit used when callers do not pass one.
pub const DEFAULT_MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult<S> {
    pub output: Vector<S>,
    pub card_info: usize,
    pub card_rand: usize,
    pub transcript: Transcript<S>,
    pub terminated: bool,
}

/// Where random symbols come from during a single run.
#[derive(Debug, Clone)]
pub enum RandomSource {
    /// `ξ_j` is drawn from a ChaCha stream keyed by `(seed, j)`.
    Seeded(u64),
    /// Fixed assignment `j -> symbol`; asking an unassigned `j` is an error.
    Fixed(BTreeMap<u64, Symbol>),
}

/// Draws the symbol of random functional `query` for sample point `seed`.
pub fn draw_symbol<S: Scalar>(
    restriction: &FiniteRestriction<S>,
    seed: u64,
    query: RandQuery,
) -> Symbol {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(query.0);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = Symbol(0);
    for (i, p) in restriction.distribution(query).iter().enumerate() {
        let p = p.to_f64();
        if p > 0.0 {
            last_positive = Symbol(i);
            acc += p;
            if u < acc {
                return Symbol(i);
            }
        }
    }
    last_positive
}

fn checked_info<S: Scalar, P: Problem<S>>(
    problem: &P,
    input: &P::Input,
    query: &InfoQuery<S>,
) -> Result<S> {
    problem
        .validate_query(query)
        .map_err(|e| Error::MalformedStrategy(format!("invalid information query {query}: {e}")))?;
    problem.evaluate(input, query)
}

fn checked_rand(query: RandQuery) -> Result<()> {
    if query.0 == 0 {
        return Err(Error::MalformedStrategy("random query index 0".into()));
    }
    Ok(())
}

fn check_output<S: Scalar>(strategy: &dyn Strategy<S>, v: &Vector<S>) -> Result<()> {
    if v.dim() != strategy.output_dim() {
        return Err(Error::MalformedStrategy(format!(
            "output of dimension {} from a strategy declaring {}",
            v.dim(),
            strategy.output_dim()
        )));
    }
    Ok(())
}

/// Runs one execution with the given randomness.
pub fn execute<S: Scalar, P: Problem<S>>(
    strategy: &dyn Strategy<S>,
    problem: &P,
    input: &P::Input,
    restriction: &FiniteRestriction<S>,
    source: &RandomSource,
    max_steps: usize,
) -> Result<RunResult<S>> {
    let mut transcript = Transcript::new();
    loop {
        let action = strategy.action(&transcript)?;
        if let Action::Stop(output) = action {
            check_output(strategy, &output)?;
            let card_info = transcript.info_count();
            let card_rand = transcript.rand_count();
            return Ok(RunResult {
                output,
                card_info,
                card_rand,
                transcript,
                terminated: true,
            });
        }
        if transcript.len() >= max_steps {
            let card_info = transcript.info_count();
            let card_rand = transcript.rand_count();
            return Ok(RunResult {
                output: strategy.default_output(),
                card_info,
                card_rand,
                transcript,
                terminated: false,
            });
        }
        let entry = match action {
            Action::AskInfo(q) => {
                let v = checked_info(problem, input, &q)?;
                Entry::info(q, v)
            }
            Action::AskRand(j) => {
                checked_rand(j)?;
                let symbol = match transcript.recorded_rand(j) {
                    Some(s) => s,
                    None => match source {
                        RandomSource::Seeded(seed) => draw_symbol(restriction, *seed, j),
                        RandomSource::Fixed(map) => *map.get(&j.0).ok_or_else(|| {
                            Error::MalformedStrategy(format!("no fixed value for random query {}", j.0))
                        })?,
                    },
                };
                Entry::rand(j, symbol)
            }
            Action::Stop(_) => unreachable!(),
        };
        transcript.push(entry);
    }
}

/// Runs one execution with randomness drawn from `seed`.
pub fn run_sampled<S: Scalar, P: Problem<S>>(
    strategy: &dyn Strategy<S>,
    problem: &P,
    input: &P::Input,
    restriction: &FiniteRestriction<S>,
    seed: u64,
    max_steps: usize,
) -> Result<RunResult<S>> {
    if max_steps == 0 {
        return Err(Error::BadParams("max_steps must be at least 1".into()));
    }
    execute(
        strategy,
        problem,
        input,
        restriction,
        &RandomSource::Seeded(seed),
        max_steps,
    )
}

/// One leaf of the randomness tree.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchOutcome<S> {
    pub probability: S,
    pub run: RunResult<S>,
}

impl<S: Scalar> BranchOutcome<S> {
    /// Assignment `j -> symbol` realizing this branch.
    pub fn omega(&self) -> BTreeMap<u64, Symbol> {
        self.run
            .transcript
            .entries()
            .iter()
            .filter_map(|e| match (e.query(), e.symbol()) {
                (crate::model::Query::Rand(j), Some(s)) => Some((j.0, s)),
                _ => None,
            })
            .collect()
    }
}

/// Depth-first expansion over every positive-probability random answer.
pub fn enumerate_branches<S: Scalar, P: Problem<S>>(
    strategy: &dyn Strategy<S>,
    problem: &P,
    input: &P::Input,
    restriction: &FiniteRestriction<S>,
    max_steps: usize,
) -> Result<Vec<BranchOutcome<S>>> {
    let mut out = Vec::new();
    let mut stack = vec![(Transcript::new(), S::one())];
    while let Some((mut transcript, probability)) = stack.pop() {
        loop {
            let action = strategy.action(&transcript)?;
            match action {
                Action::Stop(output) => {
                    check_output(strategy, &output)?;
                    let card_info = transcript.info_count();
                    let card_rand = transcript.rand_count();
                    out.push(BranchOutcome {
                        probability,
                        run: RunResult {
                            output,
                            card_info,
                            card_rand,
                            transcript,
                            terminated: true,
                        },
                    });
                    break;
                }
                _ if transcript.len() >= max_steps => {
                    return Err(Error::NonterminatingPath { max_steps });
                }
                Action::AskInfo(q) => {
                    let v = checked_info(problem, input, &q)?;
                    transcript.push(Entry::info(q, v));
                }
                Action::AskRand(j) => {
                    checked_rand(j)?;
                    if let Some(s) = transcript.recorded_rand(j) {
                        transcript.push(Entry::rand(j, s));
                        continue;
                    }
                    let support = restriction.support(j);
                    // Reverse so branches pop in alphabet order.
                    for (symbol, p) in support.into_iter().rev() {
                        stack.push((
                            transcript.extended(Entry::rand(j, symbol)),
                            probability.clone() * p,
                        ));
                    }
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// Probability-weighted sum of branch outputs.
pub fn expected_output<S: Scalar, P: Problem<S>>(
    strategy: &dyn Strategy<S>,
    problem: &P,
    input: &P::Input,
    restriction: &FiniteRestriction<S>,
) -> Result<Vector<S>> {
    let branches = enumerate_branches(strategy, problem, input, restriction, DEFAULT_MAX_STEPS)?;
    Ok(mean_of_branches(strategy.output_dim(), &branches))
}

pub(crate) fn mean_of_branches<S: Scalar>(dim: usize, branches: &[BranchOutcome<S>]) -> Vector<S> {
    branches.iter().fold(Vector::zeros(dim), |acc, b| {
        acc.add(&b.run.output.scale(&b.probability))
    })
}

/// Exact expectations of the information and random cardinalities.
pub fn expected_cards<S: Scalar, P: Problem<S>>(
    strategy: &dyn Strategy<S>,
    problem: &P,
    input: &P::Input,
    restriction: &FiniteRestriction<S>,
) -> Result<(S, S)> {
    let branches = enumerate_branches(strategy, problem, input, restriction, DEFAULT_MAX_STEPS)?;
    Ok(cards_of_branches(&branches))
}

pub(crate) fn cards_of_branches<S: Scalar>(branches: &[BranchOutcome<S>]) -> (S, S) {
    branches.iter().fold((S::zero(), S::zero()), |(ci, cr), b| {
        (
            ci + b.probability.clone() * S::from_usize(b.run.card_info),
            cr + b.probability.clone() * S::from_usize(b.run.card_rand),
        )
    })
}

/// Total probability of branches with `card_info <= cap_info` and `card_rand <= cap_rand`.
pub fn prob_within_caps<S: Scalar, P: Problem<S>>(
    strategy: &dyn Strategy<S>,
    problem: &P,
    input: &P::Input,
    restriction: &FiniteRestriction<S>,
    cap_info: usize,
    cap_rand: usize,
) -> Result<S> {
    let branches = enumerate_branches(strategy, problem, input, restriction, DEFAULT_MAX_STEPS)?;
    Ok(mass_within(&branches, Caps::new(cap_info, cap_rand)))
}

pub(crate) fn mass_within<S: Scalar>(branches: &[BranchOutcome<S>], caps: Caps) -> S {
    branches
        .iter()
        .filter(|b| caps.admits(b.run.card_info, b.run.card_rand))
        .fold(S::zero(), |acc, b| acc + b.probability.clone())
}

/// How errors are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMode {
    ExactEnumeration,
    Sampled { seed: u64, samples: usize },
}

impl ErrorMode {
    pub fn label(&self) -> &'static str {
        match self {
            ErrorMode::ExactEnumeration => "exact-enumeration",
            ErrorMode::Sampled { .. } => "sampled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputError<S> {
    pub input: String,
    pub error: S,
    /// Standard error of the mean, sampled mode only.
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport<S> {
    pub per_input: Vec<InputError<S>>,
    pub sup: S,
    /// Index of the first input attaining the supremum.
    pub argmax: usize,
    pub mode: ErrorMode,
    /// `true` when the test set is not the whole input set, so `sup` only
    /// bounds the true worst-case error from below.
    pub lower_estimate: bool,
}

impl<S: Scalar> ErrorReport<S> {
    pub fn to_json(&self) -> serde_json::Value {
        let (seed, samples) = match self.mode {
            ErrorMode::Sampled { seed, samples } => (Some(seed), Some(samples)),
            ErrorMode::ExactEnumeration => (None, None),
        };
        serde_json::json!({
            "mode": self.mode.label(),
            "arithmetic": S::MODE,
            "seed": seed,
            "samples": samples,
            "sup": self.sup.to_json(),
            "argmax": self.argmax,
            "lower_estimate": self.lower_estimate,
            "per_input": self.per_input.iter().map(|e| serde_json::json!({
                "input": e.input,
                "error": e.error.to_json(),
                "stderr": e.stderr,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Expected error `E‖S(f) − A(f,·)‖` of one input.
pub fn input_error<S: Scalar, P: Problem<S>>(
    strategy: &dyn Strategy<S>,
    problem: &P,
    input: &P::Input,
    restriction: &FiniteRestriction<S>,
    mode: ErrorMode,
) -> Result<(S, Option<f64>)> {
    let truth = problem.solution(input);
    let norm = problem.norm();
    match mode {
        ErrorMode::ExactEnumeration => {
            let branches =
                enumerate_branches(strategy, problem, input, restriction, DEFAULT_MAX_STEPS)?;
            let e = branches.iter().fold(S::zero(), |acc, b| {
                acc + b.probability.clone() * norm.distance(&truth, &b.run.output)
            });
            Ok((e, None))
        }
        ErrorMode::Sampled { seed, samples } => {
            if samples < 2 {
                return Err(Error::InsufficientSamples(samples));
            }
            let mut values = Vec::with_capacity(samples);
            for s in 0..samples {
                let run = run_sampled(
                    strategy,
                    problem,
                    input,
                    restriction,
                    seed.wrapping_add(s as u64),
                    DEFAULT_MAX_STEPS,
                )?;
                values.push(norm.distance(&truth, &run.output));
            }
            let n = S::from_usize(samples);
            let mean = values.iter().cloned().fold(S::zero(), |a, b| a + b) / n;
            let m = mean.to_f64();
            let var = values
                .iter()
                .map(|v| (v.to_f64() - m).powi(2))
                .sum::<f64>()
                / (samples as f64 - 1.0);
            Ok((mean, Some((var / samples as f64).sqrt())))
        }
    }
}

/// Worst expected error over the problem's test inputs.
pub fn empirical_error<S: Scalar, P: Problem<S>>(
    strategy: &dyn Strategy<S>,
    problem: &P,
    restriction: &FiniteRestriction<S>,
    mode: ErrorMode,
) -> Result<ErrorReport<S>> {
    let inputs = problem.test_inputs()?;
    let mut report = empirical_error_on(strategy, problem, &inputs, restriction, mode)?;
    report.lower_estimate = !problem.exhaustive();
    Ok(report)
}

/// Worst expected error over an explicit list of inputs.
pub fn empirical_error_on<S: Scalar, P: Problem<S>>(
    strategy: &dyn Strategy<S>,
    problem: &P,
    inputs: &[P::Input],
    restriction: &FiniteRestriction<S>,
    mode: ErrorMode,
) -> Result<ErrorReport<S>> {
    if inputs.is_empty() {
        return Err(Error::BadParams("empty test set".into()));
    }
    let per_input: Vec<InputError<S>> = inputs
        .par_iter()
        .map(|f| {
            let (error, stderr) = input_error(strategy, problem, f, restriction, mode)?;
            Ok(InputError {
                input: problem.describe_input(f),
                error,
                stderr,
            })
        })
        .collect::<Result<_>>()?;
    let mut argmax = 0;
    for (i, e) in per_input.iter().enumerate() {
        if e.error > per_input[argmax].error {
            argmax = i;
        }
    }
    Ok(ErrorReport {
        sup: per_input[argmax].error.clone(),
        argmax,
        per_input,
        mode,
        lower_estimate: true,
    })
}

/// Writes branches as CSV: `branch_id, probability, output…, card_info, card_rand`.
pub fn write_branches_csv<S: Scalar, W: std::io::Write>(
    branches: &[BranchOutcome<S>],
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let dim = branches.first().map(|b| b.run.output.dim()).unwrap_or(1);
    let mut header = vec!["branch_id".to_string(), "probability".to_string()];
    if dim == 1 {
        header.push("output".into());
    } else {
        header.extend((0..dim).map(|i| format!("output_{i}")));
    }
    header.push("card_info".into());
    header.push("card_rand".into());
    w.write_record(&header)?;
    for (i, b) in branches.iter().enumerate() {
        let mut row = vec![i.to_string(), b.probability.to_string()];
        row.extend(b.run.output.components().iter().map(|x| x.to_string()));
        row.push(b.run.card_info.to_string());
        row.push(b.run.card_rand.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
