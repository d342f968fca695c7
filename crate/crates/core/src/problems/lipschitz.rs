//! Integration of 1-Lipschitz functions on `[0, 1]`.
//!
//! Every family member is piecewise linear with knots in `[0, 1]`, so point
//! values and integrals are exact in rational mode.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{InfoQuery, Norm, Problem, Vector};
use crate::scalar::Scalar;

/// Continuous piecewise-linear function given by its knots.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear<S> {
    label: String,
    knots: Vec<(S, S)>,
}

impl<S: Scalar> PiecewiseLinear<S> {
    /// Knots must be strictly increasing in `x` and span exactly `[0, 1]`.
    pub fn new(label: impl Into<String>, knots: Vec<(S, S)>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::BadParams("need at least two knots".into()));
        }
        if !knots[0].0.is_zero() || knots[knots.len() - 1].0 != S::one() {
            return Err(Error::BadParams("knots must span [0, 1]".into()));
        }
        if knots.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::BadParams("knots must be strictly increasing".into()));
        }
        Ok(PiecewiseLinear {
            label: label.into(),
            knots,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn knots(&self) -> &[(S, S)] {
        &self.knots
    }

    pub fn eval(&self, x: &S) -> S {
        let k = &self.knots;
        let idx = k.partition_point(|(kx, _)| kx <= x);
        if idx == 0 {
            return k[0].1.clone();
        }
        if idx == k.len() {
            return k[k.len() - 1].1.clone();
        }
        let (x0, y0) = &k[idx - 1];
        let (x1, y1) = &k[idx];
        y0.clone() + (y1.clone() - y0.clone()) * (x.clone() - x0.clone()) / (x1.clone() - x0.clone())
    }

    /// Exact integral over `[0, 1]` (trapezoids on the knots).
    pub fn integral(&self) -> S {
        self.knots.windows(2).fold(S::zero(), |acc, w| {
            let (x0, y0) = &w[0];
            let (x1, y1) = &w[1];
            acc + (x1.clone() - x0.clone()) * (y0.clone() + y1.clone()) / S::from_int(2)
        })
    }

    /// Largest absolute slope between consecutive knots.
    pub fn lipschitz_constant(&self) -> S {
        self.knots.windows(2).fold(S::zero(), |acc, w| {
            let slope = ((w[1].1.clone() - w[0].1.clone()) / (w[1].0.clone() - w[0].0.clone())).abs();
            S::max_of(acc, slope)
        })
    }

    pub fn negated(&self) -> Self {
        PiecewiseLinear {
            label: format!("-{}", self.label),
            knots: self.knots.iter().map(|(x, y)| (x.clone(), -y.clone())).collect(),
        }
    }
}

fn from_points<S: Scalar>(label: String, mut xs: Vec<S>, f: impl Fn(&S) -> S) -> Result<PiecewiseLinear<S>> {
    xs.push(S::zero());
    xs.push(S::one());
    xs.retain(|x| *x >= S::zero() && *x <= S::one());
    xs.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
    xs.dedup();
    let knots = xs.into_iter().map(|x| {
        let y = f(&x);
        (x, y)
    });
    PiecewiseLinear::new(label, knots.collect())
}

/// Distance to the nearest zero `(i + phase)/teeth`, optionally shifted to
/// mean zero and negated.
pub fn sawtooth<S: Scalar>(teeth: usize, phase: S, negative: bool, centered: bool) -> Result<PiecewiseLinear<S>> {
    if teeth == 0 {
        return Err(Error::BadParams("sawtooth needs at least one tooth".into()));
    }
    if phase < S::zero() || phase >= S::one() {
        return Err(Error::BadParams(format!("sawtooth phase {phase} outside [0, 1)")));
    }
    let t = S::from_usize(teeth);
    let half = S::ratio(1, 2);
    let mut xs = Vec::with_capacity(2 * teeth + 4);
    for i in -1..=(teeth as i64 + 1) {
        let z = (S::from_int(i) + phase.clone()) / t.clone();
        xs.push(z.clone());
        xs.push(z + half.clone() / t.clone());
    }
    let shift = if centered {
        S::one() / (S::from_int(4) * t.clone())
    } else {
        S::zero()
    };
    let sign = if negative { -S::one() } else { S::one() };
    let label = format!(
        "{}sawtooth(teeth={teeth}, phase={phase}{})",
        if negative { "-" } else { "" },
        if centered { ", centered" } else { "" }
    );
    let tt = t.clone();
    from_points(label, xs, move |x| {
        let y = x.clone() * tt.clone() - phase.clone();
        let frac = y.clone() - S::from_int(y.floor_to_i64());
        let d = S::min_of(frac.clone(), S::one() - frac) / tt.clone();
        sign.clone() * (d - shift.clone())
    })
}

/// `max(0, width − |x − center|)`.
pub fn hat<S: Scalar>(center: S, width: S) -> Result<PiecewiseLinear<S>> {
    if width <= S::zero() {
        return Err(Error::BadParams("hat width must be positive".into()));
    }
    let label = format!("hat(center={center}, width={width})");
    let xs = vec![center.clone() - width.clone(), center.clone(), center.clone() + width.clone()];
    from_points(label, xs, move |x| {
        S::max_of(S::zero(), width.clone() - (x.clone() - center.clone()).abs())
    })
}

/// `slope · x + intercept` with `|slope| <= 1`.
pub fn linear<S: Scalar>(slope: S, intercept: S) -> Result<PiecewiseLinear<S>> {
    if slope.abs() > S::one() {
        return Err(Error::BadParams(format!("slope {slope} is not 1-Lipschitz")));
    }
    let label = format!("linear(slope={slope}, intercept={intercept})");
    PiecewiseLinear::new(
        label,
        vec![(S::zero(), intercept.clone()), (S::one(), slope + intercept)],
    )
}

/// Seeded random walk on `pieces` equal pieces, slopes in `[−1, 1]` on a
/// 1/1024 grid.
pub fn random_pwl<S: Scalar>(pieces: usize, seed: u64) -> Result<PiecewiseLinear<S>> {
    if pieces == 0 {
        return Err(Error::BadParams("random_pwl needs at least one piece".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut y = S::ratio(rng.gen_range(-512..=512), 1024);
    let mut knots = vec![(S::zero(), y.clone())];
    for i in 1..=pieces {
        let slope = S::ratio(rng.gen_range(-1024..=1024), 1024);
        y = y + slope / S::from_usize(pieces);
        knots.push((S::ratio(i as i64, pieces as i64), y.clone()));
    }
    PiecewiseLinear::new(format!("random_pwl(pieces={pieces}, seed={seed})"), knots)
}

/// One family member as described in a JSON family spec.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec<S> {
    Sawtooth { teeth: usize, phase: S, negative: bool, centered: bool },
    Hat { center: S, width: S },
    Linear { slope: S, intercept: S },
    RandomPwl { pieces: usize, seed: u64 },
}

fn field<S: Scalar>(obj: &serde_json::Map<String, Value>, key: &str, default: S) -> Result<S> {
    obj.get(key).map(S::from_json).unwrap_or(Ok(default))
}

fn count(obj: &serde_json::Map<String, Value>, key: &str, default: u64) -> Result<u64> {
    match obj.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_u64()
            .ok_or_else(|| Error::Parse(format!("`{key}` must be a nonnegative integer"))),
    }
}

fn flag(obj: &serde_json::Map<String, Value>, key: &str) -> Result<bool> {
    match obj.get(key) {
        None => Ok(false),
        Some(v) => v.as_bool().ok_or_else(|| Error::Parse(format!("`{key}` must be a boolean"))),
    }
}

impl<S: Scalar> FamilySpec<S> {
    /// Parses `{family: "sawtooth"|"hat"|"linear"|"random_pwl", params…, seed?}`.
    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("family spec must be an object".into()))?;
        let family = obj
            .get("family")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("family spec needs a `family` name".into()))?;
        match family {
            "sawtooth" => Ok(FamilySpec::Sawtooth {
                teeth: count(obj, "teeth", 1)? as usize,
                phase: field(obj, "phase", S::ratio(1, 2))?,
                negative: flag(obj, "negative")?,
                centered: flag(obj, "centered")?,
            }),
            "hat" => Ok(FamilySpec::Hat {
                center: field(obj, "center", S::ratio(1, 2))?,
                width: field(obj, "width", S::ratio(1, 2))?,
            }),
            "linear" => Ok(FamilySpec::Linear {
                slope: field(obj, "slope", S::one())?,
                intercept: field(obj, "intercept", S::zero())?,
            }),
            "random_pwl" => Ok(FamilySpec::RandomPwl {
                pieces: count(obj, "pieces", 16)? as usize,
                seed: count(obj, "seed", 0)?,
            }),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }

    /// Accepts a single spec object or an array of them.
    pub fn list_from_json(value: &Value) -> Result<Vec<Self>> {
        match value {
            Value::Array(items) => items.iter().map(Self::from_json).collect(),
            other => Ok(vec![Self::from_json(other)?]),
        }
    }

    pub fn build(&self) -> Result<PiecewiseLinear<S>> {
        match self {
            FamilySpec::Sawtooth { teeth, phase, negative, centered } => {
                sawtooth(*teeth, phase.clone(), *negative, *centered)
            }
            FamilySpec::Hat { center, width } => hat(center.clone(), width.clone()),
            FamilySpec::Linear { slope, intercept } => linear(slope.clone(), intercept.clone()),
            FamilySpec::RandomPwl { pieces, seed } => random_pwl(*pieces, *seed),
        }
    }
}

/// Integration over a test family of 1-Lipschitz functions.
#[derive(Debug, Clone)]
pub struct LipschitzProblem<S> {
    members: Vec<PiecewiseLinear<S>>,
}

/// Builds the problem from family specs; every member is Lipschitz-checked.
pub fn make_lipschitz_problem<S: Scalar>(specs: &[FamilySpec<S>]) -> Result<LipschitzProblem<S>> {
    let members = specs.iter().map(FamilySpec::build).collect::<Result<Vec<_>>>()?;
    LipschitzProblem::new(members)
}

impl<S: Scalar> LipschitzProblem<S> {
    pub fn new(members: Vec<PiecewiseLinear<S>>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::BadParams("empty test family".into()));
        }
        for f in &members {
            if !f.lipschitz_constant().le_tol(&S::one()) {
                return Err(Error::BadParams(format!("{} is not 1-Lipschitz", f.label())));
            }
        }
        Ok(LipschitzProblem { members })
    }

    pub fn members(&self) -> &[PiecewiseLinear<S>] {
        &self.members
    }
}

impl<S: Scalar> Problem<S> for LipschitzProblem<S> {
    type Input = PiecewiseLinear<S>;

    fn name(&self) -> String {
        format!("lipschitz({} members)", self.members.len())
    }

    fn evaluate(&self, input: &PiecewiseLinear<S>, query: &InfoQuery<S>) -> Result<S> {
        self.validate_query(query)?;
        match query {
            InfoQuery::Point(x) => Ok(input.eval(x)),
            InfoQuery::Coord(_) => unreachable!(),
        }
    }

    fn solution(&self, input: &PiecewiseLinear<S>) -> Vector<S> {
        Vector::scalar(input.integral())
    }

    fn norm(&self) -> Norm {
        Norm::Abs
    }

    fn test_inputs(&self) -> Result<Vec<PiecewiseLinear<S>>> {
        Ok(self.members.clone())
    }

    fn exhaustive(&self) -> bool {
        false
    }

    fn validate_query(&self, query: &InfoQuery<S>) -> Result<()> {
        match query {
            InfoQuery::Point(x) if *x >= S::zero() && *x <= S::one() => Ok(()),
            other => Err(Error::InvalidQuery(format!("{other} is not a point of [0, 1]"))),
        }
    }

    fn describe_input(&self, input: &PiecewiseLinear<S>) -> String {
        input.label().to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use serde_json::json;

    type Q = Rational;

    /// Checks `|f(x) − f(y)| <= |x − y|` on consecutive points of a 10⁴ grid.
    fn lipschitz_on_probe_grid(f: &PiecewiseLinear<f64>) -> bool {
        let n = 10_000;
        (0..n).all(|i| {
            let x = i as f64 / n as f64;
            let y = (i + 1) as f64 / n as f64;
            (f.eval(&x) - f.eval(&y)).abs() <= (y - x) + 1e-12
        })
    }

    #[test]
    fn closed_form_integrals() {
        assert_eq!(linear::<Q>(Q::one(), Q::zero()).unwrap().integral(), Q::ratio(1, 2));
        assert_eq!(
            sawtooth::<Q>(2, Q::ratio(1, 2), false, true).unwrap().integral(),
            Q::zero()
        );
        assert_eq!(hat::<Q>(Q::ratio(1, 2), Q::ratio(1, 2)).unwrap().integral(), Q::ratio(1, 4));
        for teeth in [1, 2, 3, 5, 8] {
            for phase in [Q::zero(), Q::ratio(1, 3), Q::ratio(1, 2)] {
                let f = sawtooth::<Q>(teeth, phase, false, false).unwrap();
                assert_eq!(f.integral(), Q::ratio(1, 4 * teeth as i64));
            }
        }
    }

    #[test]
    fn sawtooth_vanishes_at_its_nodes() {
        let f = sawtooth::<Q>(2, Q::ratio(1, 2), false, false).unwrap();
        assert_eq!(f.eval(&Q::ratio(1, 4)), Q::zero());
        assert_eq!(f.eval(&Q::ratio(3, 4)), Q::zero());
        assert_eq!(f.eval(&Q::ratio(1, 2)), Q::ratio(1, 4));
        assert_eq!(f.eval(&Q::zero()), Q::ratio(1, 4));
    }

    #[test]
    fn clipped_hat_integral() {
        // Triangle of height 1/2 centred at 0: only the right half lies in [0, 1].
        let f = hat::<Q>(Q::zero(), Q::ratio(1, 2)).unwrap();
        assert_eq!(f.integral(), Q::ratio(1, 8));
    }

    #[test]
    fn every_shipped_member_is_lipschitz_on_the_probe_grid() {
        let mut members = vec![
            linear::<f64>(1.0, 0.0).unwrap(),
            linear::<f64>(-0.5, 0.25).unwrap(),
            hat::<f64>(0.5, 0.5).unwrap(),
            hat::<f64>(0.1, 0.3).unwrap(),
        ];
        for teeth in [1, 2, 4, 7, 64] {
            members.push(sawtooth::<f64>(teeth, 0.5, false, false).unwrap());
            members.push(sawtooth::<f64>(teeth, 0.25, true, true).unwrap());
        }
        for seed in 0..5 {
            members.push(random_pwl::<f64>(37, seed).unwrap());
        }
        for f in &members {
            assert!(lipschitz_on_probe_grid(f), "{}", f.label());
            assert!(f.lipschitz_constant().le_tol(&1.0));
        }
    }

    #[test]
    fn family_specs_parse_and_reject_unknown_names() {
        let specs = FamilySpec::<Q>::list_from_json(&json!([
            {"family": "sawtooth", "teeth": 4, "phase": "1/2"},
            {"family": "hat", "center": 0.5},
            {"family": "linear", "slope": 1},
            {"family": "random_pwl", "pieces": 8, "seed": 3}
        ]))
        .unwrap();
        assert_eq!(specs.len(), 4);
        let p = make_lipschitz_problem(&specs).unwrap();
        assert_eq!(p.members().len(), 4);
        let err = FamilySpec::<Q>::from_json(&json!({"family": "gaussian"}));
        assert!(matches!(err, Err(Error::UnknownFamily(name)) if name == "gaussian"));
        assert!(linear::<Q>(Q::from_int(2), Q::zero()).is_err());
    }

    #[test]
    fn random_pwl_is_reproducible() {
        let a = random_pwl::<Q>(10, 42).unwrap();
        let b = random_pwl::<Q>(10, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_pwl::<Q>(10, 43).unwrap());
    }

    #[test]
    fn out_of_range_points_are_invalid() {
        let p = LipschitzProblem::new(vec![linear::<Q>(Q::one(), Q::zero()).unwrap()]).unwrap();
        assert!(p.validate_query(&InfoQuery::Point(Q::ratio(3, 2))).is_err());
        assert!(p.validate_query(&InfoQuery::Coord(1)).is_err());
        assert!(p.validate_query(&InfoQuery::Point(Q::one())).is_ok());
    }
}
