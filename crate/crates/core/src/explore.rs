//! Walks every reachable transcript of a strategy when both answer
//! alphabets are finite.
//!
//! Repeated identical queries are answered consistently: a functional is a
//! fixed map, so a transcript that answers the same query twice with
//! different values can never occur and is not visited.

use crate::error::Result;
use crate::model::{Action, Caps, Entry, FiniteRestriction, Strategy, Transcript};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ExploreSummary {
    /// `false` when some path was cut at the depth limit.
    pub complete: bool,
    pub transcripts: usize,
    /// Largest cardinalities seen at a stop.
    pub max_caps: Caps,
    /// Largest number of information calls seen on any transcript.
    pub max_info_depth: usize,
}

/// Depth-first walk; `visit` sees every transcript with its action.
pub fn explore<S: Scalar>(
    strategy: &dyn Strategy<S>,
    answers: &[S],
    restriction: &FiniteRestriction<S>,
    max_depth: usize,
    mut visit: impl FnMut(&Transcript<S>, &Action<S>) -> Result<()>,
) -> Result<ExploreSummary> {
    let mut summary = ExploreSummary {
        complete: true,
        transcripts: 0,
        max_caps: Caps::new(0, 0),
        max_info_depth: 0,
    };
    let mut stack = vec![Transcript::new()];
    while let Some(t) = stack.pop() {
        let action = strategy.action(&t)?;
        visit(&t, &action)?;
        summary.transcripts += 1;
        summary.max_info_depth = summary.max_info_depth.max(t.info_count());
        match action {
            Action::Stop(_) => {
                summary.max_caps.info = summary.max_caps.info.max(t.info_count());
                summary.max_caps.rand = summary.max_caps.rand.max(t.rand_count());
            }
            _ if t.len() >= max_depth => summary.complete = false,
            Action::AskInfo(q) => match t.recorded_info(&q).cloned() {
                Some(v) => stack.push(t.extended(Entry::info(q, v))),
                None => {
                    for v in answers.iter().rev() {
                        stack.push(t.extended(Entry::info(q.clone(), v.clone())));
                    }
                }
            },
            Action::AskRand(j) => match t.recorded_rand(j) {
                Some(s) => stack.push(t.extended(Entry::rand(j, s))),
                None => {
                    for (s, _) in restriction.support(j).into_iter().rev() {
                        stack.push(t.extended(Entry::rand(j, s)));
                    }
                }
            },
        }
    }
    Ok(summary)
}
