//! Deterministic minimal errors and closed-form bit-budget bounds.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::model::{Norm, Problem, Vector};
use crate::scalar::Scalar;

/// Largest input set the minimax oracle accepts.
pub const MAX_ORACLE_INPUTS: usize = 1 << 16;

/// Consistent inputs after some answers, with the queries still allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MinimaxState {
    /// Sorted indices into the input list.
    pub consistent: Vec<u32>,
    pub budget: usize,
}

struct Oracle<S> {
    /// `answers[f][q]`: index of the answer of query `q` on input `f`.
    answers: Vec<Vec<u16>>,
    solutions: Vec<Vector<S>>,
    norm: Norm,
    memo: HashMap<MinimaxState, S>,
}

impl<S: Scalar> Oracle<S> {
    /// Chebyshev radius of the solutions of `set`, coordinate-wise
    /// `(max − min)/2` maximized over coordinates.
    fn radius(&self, set: &[u32]) -> S {
        let dim = self.solutions[set[0] as usize].dim();
        let mut r = S::zero();
        for c in 0..dim {
            let values = set.iter().map(|&f| self.solutions[f as usize].0[c].clone());
            let (lo, hi) = values.fold((None::<S>, None::<S>), |(lo, hi), v| {
                (
                    Some(lo.map_or(v.clone(), |l| S::min_of(l, v.clone()))),
                    Some(hi.map_or(v.clone(), |h| S::max_of(h, v))),
                )
            });
            let spread = (hi.expect("nonempty") - lo.expect("nonempty")) / S::from_int(2);
            r = S::max_of(r, spread);
        }
        debug_assert!(self.norm == Norm::Max || dim == 1);
        r
    }

    fn value(&mut self, state: MinimaxState) -> S {
        if let Some(v) = self.memo.get(&state) {
            return v.clone();
        }
        let stop = self.radius(&state.consistent);
        let mut best = stop.clone();
        if state.budget > 0 && !best.is_zero() {
            let queries = self.answers[0].len();
            for q in 0..queries {
                let mut classes: Vec<(u16, Vec<u32>)> = Vec::new();
                for &f in &state.consistent {
                    let a = self.answers[f as usize][q];
                    match classes.iter_mut().find(|(k, _)| *k == a) {
                        Some((_, members)) => members.push(f),
                        None => classes.push((a, vec![f])),
                    }
                }
                if classes.len() < 2 {
                    continue;
                }
                let mut worst = S::zero();
                for (_, members) in classes {
                    let v = self.value(MinimaxState {
                        consistent: members,
                        budget: state.budget - 1,
                    });
                    worst = S::max_of(worst, v);
                    if worst >= best {
                        break;
                    }
                }
                best = S::min_of(best, worst);
                if best.is_zero() {
                    break;
                }
            }
        }
        self.memo.insert(state, best.clone());
        best
    }
}

/// Exact `n`-th minimal error over adaptive deterministic algorithms.
///
/// Minimax over query trees of depth at most `n`: each node either stops
/// at the Chebyshev center of the still-consistent solutions or asks a
/// query and faces the worst answer.
pub fn brute_force_det_minimal_error<S: Scalar, P: Problem<S>>(problem: &P, n: usize) -> Result<S> {
    if !problem.exhaustive() {
        return Err(Error::BadParams("the oracle needs the full input set".into()));
    }
    let inputs = problem.test_inputs()?;
    if inputs.len() > MAX_ORACLE_INPUTS {
        return Err(Error::SizeTooLarge(format!(
            "{} inputs exceed the oracle limit {MAX_ORACLE_INPUTS}",
            inputs.len()
        )));
    }
    if inputs.is_empty() {
        return Err(Error::BadParams("empty input set".into()));
    }
    let queries = problem
        .queries()
        .ok_or_else(|| Error::BadParams("the oracle needs a finite query set".into()))?;
    let alphabet = problem
        .answer_alphabet()
        .ok_or_else(|| Error::BadParams("the oracle needs a finite answer alphabet".into()))?;
    let mut answers = Vec::with_capacity(inputs.len());
    for f in &inputs {
        let row = queries
            .iter()
            .map(|q| {
                let v = problem.evaluate(f, q)?;
                alphabet
                    .iter()
                    .position(|a| a.approx_eq(&v))
                    .map(|i| i as u16)
                    .ok_or_else(|| Error::BadParams(format!("answer {v} outside the declared alphabet")))
            })
            .collect::<Result<Vec<u16>>>()?;
        answers.push(row);
    }
    let mut oracle = Oracle {
        answers,
        solutions: inputs.iter().map(|f| problem.solution(f)).collect(),
        norm: problem.norm(),
        memo: HashMap::new(),
    };
    let budget = n.min(queries.len());
    Ok(oracle.value(MinimaxState {
        consistent: (0..inputs.len() as u32).collect(),
        budget,
    }))
}

/// `max(0, (m − n)/m)` for the grid-average problem.
pub fn det_minimal_error_grid<S: Scalar>(m: usize, n: usize) -> S {
    assert!(m >= 1, "grid size must be at least 1");
    if n >= m {
        S::zero()
    } else {
        S::ratio((m - n) as i64, m as i64)
    }
}

/// `3 n q^{3k}`.
pub fn theorem1_inflated_cardinality(n: usize, k: usize, alphabet_size: usize) -> Result<usize> {
    if alphabet_size < 2 {
        return Err(Error::BadParams("alphabet size must be at least 2".into()));
    }
    let overflow = || Error::Overflow(format!("3·{n}·{alphabet_size}^(3·{k})"));
    let exp = k
        .checked_mul(3)
        .and_then(|e| u32::try_from(e).ok())
        .ok_or_else(overflow)?;
    alphabet_size
        .checked_pow(exp)
        .and_then(|p| p.checked_mul(n))
        .and_then(|p| p.checked_mul(3))
        .ok_or_else(overflow)
}

/// `(1/3) · det_error(3 n q^{3k})`, after probing `det_error` for monotonicity.
pub fn theorem1_lower_bound<S: Scalar>(
    det_error: impl Fn(usize) -> Result<S>,
    n: usize,
    k: usize,
    alphabet_size: usize,
) -> Result<S> {
    let card = theorem1_inflated_cardinality(n, k, alphabet_size)?;
    let mut probes = vec![0, card / 2, card.saturating_sub(1), card, card.saturating_add(1)];
    probes.sort_unstable();
    probes.dedup();
    let values = probes.iter().map(|&c| det_error(c)).collect::<Result<Vec<S>>>()?;
    if values.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::BadParams("deterministic error is not nonincreasing".into()));
    }
    Ok(det_error(card)? / S::from_int(3))
}

fn default_one() -> f64 {
    1.0
}
fn default_sigma() -> f64 {
    0.5
}
fn default_p() -> f64 {
    2.0
}
fn default_q() -> u64 {
    2
}

/// Constants of the bit-budget bounds; all user-chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    #[serde(default = "default_one")]
    pub c0: f64,
    #[serde(default = "default_one")]
    pub c1: f64,
    #[serde(default = "default_one")]
    pub c2: f64,
    #[serde(default = "default_one")]
    pub c3: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_one")]
    pub d: f64,
    #[serde(default = "default_one")]
    pub r: f64,
    /// Integrability exponent; `σ` may not exceed `1 − 1/min(p, 2)`.
    #[serde(default = "default_p")]
    pub p: f64,
    #[serde(default = "default_q")]
    pub alphabet_size: u64,
}

impl Default for BoundParams {
    fn default() -> Self {
        BoundParams {
            c0: 1.0,
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            sigma: 0.5,
            alpha: 0.0,
            d: 1.0,
            r: 1.0,
            p: 2.0,
            alphabet_size: 2,
        }
    }
}

impl BoundParams {
    fn check_common(&self, n: f64) -> Result<()> {
        if self.alphabet_size < 2 {
            return Err(Error::BadParams("alphabet size must be at least 2".into()));
        }
        if !(n >= 2.0) || !n.is_finite() {
            return Err(Error::BadParams(format!("n = {n} must be at least 2")));
        }
        if !(self.c0 > 0.0) || !(self.c3 > 0.0) {
            return Err(Error::BadParams("c0 and c3 must be positive".into()));
        }
        Ok(())
    }

    fn log_q(&self) -> f64 {
        (self.alphabet_size as f64).log2()
    }
}

/// A raw bound value together with its display form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub raw: f64,
    /// `max(raw, 0)`.
    pub clamped: f64,
    pub negative: bool,
}

impl BoundValue {
    pub fn new(raw: f64) -> Self {
        BoundValue {
            raw,
            clamped: raw.max(0.0),
            negative: raw < 0.0,
        }
    }
}

/// `d/(3 r log₂q) · (σ log₂ n − log₂ c₀ + log₂(c₃/3))`.
pub fn cor2_bit_lower_bound(params: &BoundParams, n: f64) -> Result<BoundValue> {
    params.check_common(n)?;
    if !(params.d > 0.0) || !(params.r > 0.0) {
        return Err(Error::BadParams("d and r must be positive".into()));
    }
    let sigma_max = 1.0 - 1.0 / params.p.min(2.0);
    if !(params.sigma > 0.0) || params.sigma > sigma_max + 1e-12 {
        return Err(Error::BadParams(format!(
            "sigma = {} outside (0, {sigma_max}]",
            params.sigma
        )));
    }
    let bracket = params.sigma * n.log2() - params.c0.log2() + (params.c3 / 3.0).log2();
    Ok(BoundValue::new(params.d / (3.0 * params.r * params.log_q()) * bracket))
}

/// `(3 log₂q)^{-1} · (c₃²/(9c₀²) · n (log₂ n)^{−2α} − log₂(3n))`.
pub fn cor3_bit_lower_bound(params: &BoundParams, n: f64) -> Result<BoundValue> {
    params.check_common(n)?;
    if !params.alpha.is_finite() {
        return Err(Error::BadParams("alpha must be finite".into()));
    }
    let lead = params.c3 * params.c3 / (9.0 * params.c0 * params.c0) * n * n.log2().powf(-2.0 * params.alpha);
    Ok(BoundValue::new((lead - (3.0 * n).log2()) / (3.0 * params.log_q())))
}

/// `c₂ ⌈n log₂(log₂ n) / log₂ n⌉`.
pub fn kappa(n: u64, c2: u64) -> Result<u64> {
    if n < 3 {
        return Err(Error::BadParams(format!("kappa needs n >= 3, got {n}")));
    }
    if c2 < 1 {
        return Err(Error::BadParams("c2 must be at least 1".into()));
    }
    let nf = n as f64;
    let x = nf * nf.log2().log2() / nf.log2();
    let nearest = x.round();
    let ceil = if (x - nearest).abs() <= 1e-9 * nearest.abs().max(1.0) {
        nearest
    } else {
        x.ceil()
    };
    (ceil as u64)
        .checked_mul(c2)
        .ok_or_else(|| Error::Overflow(format!("kappa({n}, {c2})")))
}

/// Evaluates a `{bound: "thm1"|"cor2"|"cor3"|"kappa", params…}` request.
pub fn evaluate_request(request: &serde_json::Value) -> Result<serde_json::Value> {
    let bound = request
        .get("bound")
        .and_then(serde_json::Value::as_str)
        .ok_or_else(|| Error::BadParams("request needs a `bound` name".into()))?;
    let uint = |key: &str| -> Result<u64> {
        request
            .get(key)
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::BadParams(format!("`{key}` must be a nonnegative integer")))
    };
    let params = || -> Result<BoundParams> {
        let mut obj = request.clone();
        if let Some(map) = obj.as_object_mut() {
            map.remove("bound");
            map.remove("n");
            if let Some(q) = map.remove("q") {
                map.insert("alphabet_size".into(), q);
            }
        }
        serde_json::from_value(obj).map_err(|e| Error::BadParams(e.to_string()))
    };
    let value = match bound {
        "thm1" => {
            let n = uint("n")? as usize;
            let k = uint("k")? as usize;
            let q = request.get("q").and_then(serde_json::Value::as_u64).unwrap_or(2) as usize;
            let card = theorem1_inflated_cardinality(n, k, q)?;
            json!({"bound": "thm1", "inputs": {"n": n, "k": k, "q": q}, "value": card, "raw": card, "clamped": false})
        }
        "kappa" => {
            let n = uint("n")?;
            let c2 = request.get("c2").and_then(serde_json::Value::as_u64).unwrap_or(1);
            let v = kappa(n, c2)?;
            json!({"bound": "kappa", "inputs": {"n": n, "c2": c2}, "value": v, "raw": v, "clamped": false})
        }
        "cor2" | "cor3" => {
            let n = request
                .get("n")
                .and_then(serde_json::Value::as_f64)
                .ok_or_else(|| Error::BadParams("`n` must be a number".into()))?;
            let p = params()?;
            let v = if bound == "cor2" {
                cor2_bit_lower_bound(&p, n)?
            } else {
                cor3_bit_lower_bound(&p, n)?
            };
            json!({
                "bound": bound,
                "inputs": {"n": n, "params": p},
                "value": v.clamped,
                "raw": v.raw,
                "clamped": v.negative,
            })
        }
        other => return Err(Error::BadParams(format!("unknown bound `{other}`"))),
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::grid::make_grid_problem;
    use crate::scalar::Rational;

    type Q = Rational;

    #[test]
    fn oracle_small_grids() {
        let p2 = make_grid_problem(2).unwrap();
        assert_eq!(brute_force_det_minimal_error::<Q, _>(&p2, 0).unwrap(), Q::one());
        let p3 = make_grid_problem(3).unwrap();
        assert_eq!(brute_force_det_minimal_error::<Q, _>(&p3, 1).unwrap(), Q::ratio(2, 3));
        assert_eq!(brute_force_det_minimal_error::<Q, _>(&p3, 3).unwrap(), Q::zero());
        assert_eq!(brute_force_det_minimal_error::<Q, _>(&p3, 10).unwrap(), Q::zero());
    }

    #[test]
    fn grid_closed_form() {
        assert_eq!(det_minimal_error_grid::<Q>(6, 3), Q::ratio(1, 2));
        assert_eq!(det_minimal_error_grid::<Q>(5, 5), Q::zero());
        assert_eq!(det_minimal_error_grid::<Q>(4, 1), Q::ratio(3, 4));
        assert_eq!(det_minimal_error_grid::<Q>(4, 9), Q::zero());
    }

    #[test]
    fn inflated_cardinality() {
        assert_eq!(theorem1_inflated_cardinality(2, 1, 2).unwrap(), 48);
        assert_eq!(theorem1_inflated_cardinality(7, 0, 3).unwrap(), 21);
        assert_eq!(theorem1_inflated_cardinality(1, 2, 2).unwrap(), 192);
        assert!(matches!(theorem1_inflated_cardinality(1, 40, 2), Err(Error::Overflow(_))));
        assert!(theorem1_inflated_cardinality(1, 1, 1).is_err());
    }

    #[test]
    fn lower_bound_on_grids() {
        let g32 = |c: usize| Ok(det_minimal_error_grid::<Q>(32, c));
        assert_eq!(theorem1_lower_bound(g32, 1, 1, 2).unwrap(), Q::ratio(1, 12));
        assert_eq!(theorem1_lower_bound(g32, 2, 1, 2).unwrap(), Q::zero());
        let g8 = |c: usize| Ok(det_minimal_error_grid::<Q>(8, c));
        assert_eq!(theorem1_lower_bound(g8, 1, 0, 2).unwrap(), Q::ratio(5, 24));
        let increasing = |c: usize| Ok(Q::from_usize(c));
        assert!(theorem1_lower_bound(increasing, 1, 1, 2).is_err());
    }

    #[test]
    fn cor2_values() {
        let p = BoundParams {
            c3: 3.0,
            ..BoundParams::default()
        };
        assert!((cor2_bit_lower_bound(&p, 4096.0).unwrap().raw - 2.0).abs() <= 1e-9);
        assert!((cor2_bit_lower_bound(&p, 4.0).unwrap().raw - 1.0 / 3.0).abs() <= 1e-9);
        let tiny = BoundParams {
            sigma: 1e-12,
            ..p.clone()
        };
        assert!(cor2_bit_lower_bound(&tiny, 2.0).unwrap().raw.abs() <= 1e-9);
        let bad = BoundParams {
            sigma: 0.75,
            ..p
        };
        assert!(cor2_bit_lower_bound(&bad, 16.0).is_err());
    }

    #[test]
    fn cor3_values() {
        let p = BoundParams::default();
        let v = cor3_bit_lower_bound(&p, 1024.0).unwrap();
        let expected = (1024.0 / 9.0 - 3072f64.log2()) / 3.0;
        assert!((v.raw - expected).abs() <= 1e-9);
        let heavy = BoundParams {
            alpha: 3.0,
            ..BoundParams::default()
        };
        let neg = cor3_bit_lower_bound(&heavy, 1024.0).unwrap();
        assert!(neg.negative && neg.clamped == 0.0 && neg.raw < 0.0);
        let quaternary = BoundParams {
            alphabet_size: 4,
            ..BoundParams::default()
        };
        assert!((cor3_bit_lower_bound(&quaternary, 1024.0).unwrap().raw - v.raw / 2.0).abs() <= 1e-9);
        assert!(cor3_bit_lower_bound(&p, 1.0).is_err());
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(16, 1).unwrap(), 8);
        assert_eq!(kappa(4, 1).unwrap(), 2);
        assert_eq!(kappa(16, 3).unwrap(), 24);
        assert_eq!(kappa(256, 1).unwrap(), 96);
        assert!(kappa(2, 1).is_err());
    }

    #[test]
    fn requests() {
        let v = evaluate_request(&json!({"bound": "thm1", "n": 2, "k": 1, "q": 2})).unwrap();
        assert_eq!(v["value"], 48);
        let v = evaluate_request(&json!({"bound": "kappa", "n": 16, "c2": 1})).unwrap();
        assert_eq!(v["value"], 8);
        let v = evaluate_request(&json!({"bound": "cor3", "n": 1024})).unwrap();
        assert!((v["raw"].as_f64().unwrap() - 34.0646).abs() < 1e-3);
        assert!(evaluate_request(&json!({"bound": "cor9"})).is_err());
    }
}
