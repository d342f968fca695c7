//! Replay battery for purity, query validity and declared caps.

use serde_json::json;

use crate::engine::draw_symbol;
use crate::error::Result;
use crate::explore::explore;
use crate::model::{Action, Caps, Entry, FiniteRestriction, Problem, Strategy, Transcript};
use crate::scalar::Scalar;

/// Seeds replayed per test input in sampled mode.
pub const SAMPLED_SEEDS: u64 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct WellFormedReport {
    pub strategy: String,
    /// `"exhaustive"` when every transcript up to the probe depth was replayed.
    pub mode: &'static str,
    pub transcripts_checked: usize,
    /// `false` when some path was cut at the probe depth.
    pub complete: bool,
    pub purity_violations: Vec<String>,
    pub invalid_queries: Vec<String>,
    pub declared_caps: Option<Caps>,
    pub observed_caps: Caps,
    pub cap_violations: Vec<String>,
}

impl WellFormedReport {
    pub fn pure(&self) -> bool {
        self.purity_violations.is_empty()
    }

    /// Declared caps held on every replayed path, and the replay was complete.
    pub fn caps_verified(&self) -> bool {
        self.declared_caps.is_some() && self.complete && self.cap_violations.is_empty()
    }

    pub fn ok(&self) -> bool {
        self.pure() && self.invalid_queries.is_empty() && self.cap_violations.is_empty()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "strategy": self.strategy,
            "mode": self.mode,
            "transcripts_checked": self.transcripts_checked,
            "complete": self.complete,
            "pure": self.pure(),
            "purity_violations": self.purity_violations,
            "invalid_queries": self.invalid_queries,
            "declared_caps": self.declared_caps,
            "observed_caps": self.observed_caps,
            "caps_verified": self.caps_verified(),
            "cap_violations": self.cap_violations,
        })
    }
}

struct Checker<'a, S: Scalar, P: Problem<S>> {
    strategy: &'a dyn Strategy<S>,
    problem: &'a P,
    report: WellFormedReport,
}

impl<S: Scalar, P: Problem<S>> Checker<'_, S, P> {
    /// Checks one transcript with its first action and returns a second,
    /// independent call's action.
    fn check(&mut self, t: &Transcript<S>, action: &Action<S>) -> Result<()> {
        self.report.transcripts_checked += 1;
        let again = self.strategy.action(t)?;
        if &again != action {
            self.report.purity_violations.push(format!(
                "transcript of length {}: {action:?} then {again:?}",
                t.len()
            ));
        }
        let (info, rand) = (t.info_count(), t.rand_count());
        let pending = match action {
            Action::Stop(_) => {
                self.report.observed_caps.info = self.report.observed_caps.info.max(info);
                self.report.observed_caps.rand = self.report.observed_caps.rand.max(rand);
                (info, rand)
            }
            Action::AskInfo(q) => {
                if let Err(e) = self.problem.validate_query(q) {
                    self.report.invalid_queries.push(e.to_string());
                }
                (info + 1, rand)
            }
            Action::AskRand(j) => {
                if j.0 == 0 {
                    self.report.invalid_queries.push("random query index 0".into());
                }
                (info, rand + 1)
            }
        };
        if let Some(c) = self.report.declared_caps {
            if !c.admits(pending.0, pending.1) {
                self.report.cap_violations.push(format!(
                    "path reaches ({}, {}) calls, declared {c}",
                    pending.0, pending.1
                ));
            }
        }
        Ok(())
    }
}

/// Replays transcripts of `strategy` and collects findings.
///
/// With finite answer alphabets every transcript up to `probe_budget` calls
/// is replayed. Otherwise runs on each test input with a fixed set of seeds
/// are replayed step by step.
pub fn assert_well_formed<S: Scalar, P: Problem<S>>(
    strategy: &dyn Strategy<S>,
    restriction: &FiniteRestriction<S>,
    problem: &P,
    probe_budget: usize,
) -> Result<WellFormedReport> {
    let exhaustive = problem.answer_alphabet();
    let mut checker = Checker {
        strategy,
        problem,
        report: WellFormedReport {
            strategy: strategy.name(),
            mode: if exhaustive.is_some() { "exhaustive" } else { "sampled" },
            transcripts_checked: 0,
            complete: true,
            purity_violations: Vec::new(),
            invalid_queries: Vec::new(),
            declared_caps: strategy.declared_caps(),
            observed_caps: Caps::new(0, 0),
            cap_violations: Vec::new(),
        },
    };
    match exhaustive {
        Some(answers) => {
            let summary = explore(strategy, &answers, restriction, probe_budget, |t, a| checker.check(t, a))?;
            checker.report.complete = summary.complete;
        }
        None => {
            for input in problem.test_inputs()? {
                for seed in 0..SAMPLED_SEEDS {
                    let mut t = Transcript::new();
                    loop {
                        let action = strategy.action(&t)?;
                        checker.check(&t, &action)?;
                        if action.is_stop() {
                            break;
                        }
                        if t.len() >= probe_budget {
                            checker.report.complete = false;
                            break;
                        }
                        let entry = match action {
                            Action::AskInfo(q) => match problem.evaluate(&input, &q) {
                                Ok(v) => Entry::info(q, v),
                                Err(_) => break,
                            },
                            Action::AskRand(j) => {
                                let s = t.recorded_rand(j).unwrap_or_else(|| draw_symbol(restriction, seed, j));
                                Entry::rand(j, s)
                            }
                            Action::Stop(_) => unreachable!(),
                        };
                        t.push(entry);
                    }
                }
            }
        }
    }
    Ok(checker.report)
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};

    use super::*;
    use crate::model::{FnStrategy, InfoQuery, Vector};
    use crate::problems::grid::GridProblem;
    use crate::problems::lipschitz::{hat, linear, LipschitzProblem};
    use crate::problems::make_bit_restriction;
    use crate::problems::strategies::{coin_a0, midpoint_rule, read_prefix};
    use crate::scalar::Rational;

    type Q = Rational;

    #[test]
    fn coin_is_pure_and_within_caps() {
        let p = GridProblem::new(1).unwrap();
        let report = assert_well_formed(&coin_a0::<Q>(), &make_bit_restriction(), &p, 1).unwrap();
        assert_eq!(report.mode, "exhaustive");
        assert!(report.pure());
        assert!(report.caps_verified());
        assert_eq!(report.observed_caps, Caps::new(0, 1));
    }

    #[test]
    fn impure_strategy_is_flagged() {
        let counter = AtomicUsize::new(0);
        let flaky = FnStrategy::<Q>::new("flaky", move |_| {
            let n = counter.fetch_add(1, Ordering::SeqCst);
            Ok(Action::Stop(Vector::scalar(Q::from_usize(n))))
        });
        let p = GridProblem::new(1).unwrap();
        let report = assert_well_formed(&flaky, &make_bit_restriction(), &p, 3).unwrap();
        assert!(!report.pure());
        assert!(!report.ok());
    }

    #[test]
    fn midpoint_sampled_replay() {
        let p = LipschitzProblem::new(vec![
            linear::<Q>(Q::one(), Q::zero()).unwrap(),
            hat::<Q>(Q::ratio(1, 2), Q::ratio(1, 2)).unwrap(),
        ])
        .unwrap();
        let report = assert_well_formed(&midpoint_rule(4), &make_bit_restriction(), &p, 16).unwrap();
        assert_eq!(report.mode, "sampled");
        assert!(report.ok());
        assert!(report.caps_verified());
        assert_eq!(report.observed_caps, Caps::new(4, 0));
    }

    #[test]
    fn invalid_queries_and_false_caps_are_reported() {
        let p = GridProblem::new(2).unwrap();
        let outside = FnStrategy::<Q>::new("outside", |t| {
            Ok(if t.is_empty() {
                Action::AskInfo(InfoQuery::Coord(5))
            } else {
                Action::Stop(Vector::scalar(Q::zero()))
            })
        });
        let report = assert_well_formed(&outside, &make_bit_restriction(), &p, 4).unwrap();
        assert_eq!(report.invalid_queries.len(), 1);

        let liar = read_prefix::<Q>(2).with_caps(Caps::new(1, 0));
        let report = assert_well_formed(&liar, &make_bit_restriction(), &p, 4).unwrap();
        assert!(!report.cap_violations.is_empty());
        assert!(!report.caps_verified());
    }
}
