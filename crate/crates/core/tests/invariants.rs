use std::sync::Arc;

use proptest::prelude::*;
use restricted_mc::bounds::kappa;
use restricted_mc::engine::{enumerate_branches, expected_output, prob_within_caps, DEFAULT_MAX_STEPS};
use restricted_mc::model::{Caps, FiniteRestriction, Norm, Strategy, Vector};
use restricted_mc::problems::lipschitz::{random_pwl, sawtooth};
use restricted_mc::problems::{make_bit_restriction, make_grid_problem, GridInput};
use restricted_mc::suite::{random_tree, TreeSpec};
use restricted_mc::transforms::{compose_sequential, derandomize, lemma2_cost_bound, DeterministicTree};
use restricted_mc::{Rational, Scalar};

type Q = Rational;

fn restriction(q: usize) -> FiniteRestriction<Q> {
    if q == 2 {
        make_bit_restriction()
    } else {
        FiniteRestriction::uniform((0..q).map(|i| format!("s{i}")).collect()).unwrap()
    }
}

prop_compose! {
    fn tree_case()(m in 1usize..=4, q in 2usize..=3, ci in 0usize..=3, cr in 0usize..=2,
                   stop in 0.0f64..0.5, seed in any::<u64>(), bits in any::<u64>())
        -> (usize, usize, Caps, f64, u64, GridInput) {
        (m, q, Caps::new(ci, cr), stop, seed, GridInput(bits & ((1 << m) - 1)))
    }
}

fn build(m: usize, q: usize, caps: Caps, stop: f64, seed: u64) -> (Arc<dyn Strategy<Q>>, FiniteRestriction<Q>) {
    let r = restriction(q);
    let spec = TreeSpec {
        m,
        coords: (1..=m).collect(),
        alphabet: r.alphabet().to_vec(),
        caps,
        stop_probability: stop,
    };
    (Arc::new(random_tree(&spec, seed)), r)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn branch_probabilities_sum_to_one((m, q, caps, stop, seed, f) in tree_case()) {
        let (a, r) = build(m, q, caps, stop, seed);
        let p = make_grid_problem(m).unwrap();
        let branches = enumerate_branches(a.as_ref(), &p, &f, &r, DEFAULT_MAX_STEPS).unwrap();
        let total = branches.iter().fold(Q::zero(), |acc, b| acc + b.probability.clone());
        prop_assert_eq!(total, Q::one());
        for b in &branches {
            prop_assert!(caps.admits(b.run.card_info, b.run.card_rand));
        }
    }

    #[test]
    fn derandomization_is_exact_and_within_cost((m, q, caps, stop, seed, f) in tree_case()) {
        let (a, r) = build(m, q, caps, stop, seed);
        let p = make_grid_problem(m).unwrap();
        let tree = derandomize(a.clone(), &r, &p).unwrap();
        let (out, cost) = tree.run(&p, &f).unwrap();
        prop_assert_eq!(out, expected_output(a.as_ref(), &p, &f, &r).unwrap());
        prop_assert!(cost <= lemma2_cost_bound(caps, q).unwrap());
    }

    #[test]
    fn within_caps_mass_is_monotone((m, q, caps, stop, seed, f) in tree_case(), ci in 0usize..=3, cr in 0usize..=2) {
        let (a, r) = build(m, q, caps, stop, seed);
        let p = make_grid_problem(m).unwrap();
        let small = prob_within_caps(a.as_ref(), &p, &f, &r, ci, cr).unwrap();
        let large = prob_within_caps(a.as_ref(), &p, &f, &r, ci + 1, cr + 1).unwrap();
        prop_assert!(small <= large && large <= Q::one());
        prop_assert_eq!(prob_within_caps(a.as_ref(), &p, &f, &r, caps.info, caps.rand).unwrap(), Q::one());
    }

    #[test]
    fn composition_averages_constants(values in prop::collection::vec(-20i64..=20, 1..5), w in prop::collection::vec(1i64..=5, 5)) {
        let w = &w[..values.len()];
        let total: i64 = w.iter().sum();
        let weights: Vec<Q> = w.iter().map(|x| Q::ratio(*x, total)).collect();
        let trees = values.iter().map(|v| DeterministicTree::constant(Vector::scalar(Q::from_int(*v)))).collect();
        let composed = compose_sequential(trees, weights).unwrap();
        let p = make_grid_problem(1).unwrap();
        let (out, cost) = composed.run(&p, &GridInput(0)).unwrap();
        let expected = values.iter().zip(w).fold(Q::zero(), |acc, (v, x)| acc + Q::ratio(v * x, total));
        prop_assert_eq!(out, Vector::scalar(expected));
        prop_assert_eq!(cost, 0);
    }

    #[test]
    fn max_norm_triangle_inequality(a in prop::collection::vec(-100i64..100, 3), b in prop::collection::vec(-100i64..100, 3), c in prop::collection::vec(-100i64..100, 3)) {
        let v = |x: &[i64]| Vector(x.iter().map(|y| Q::ratio(*y, 7)).collect::<Vec<_>>());
        let (a, b, c) = (v(&a), v(&b), v(&c));
        prop_assert!(Norm::Max.distance(&a, &c) <= Norm::Max.distance(&a, &b) + Norm::Max.distance(&b, &c));
    }

    #[test]
    fn random_members_are_lipschitz_with_exact_integral(pieces in 1usize..40, seed in any::<u64>()) {
        let f = random_pwl::<Q>(pieces, seed).unwrap();
        prop_assert!(f.lipschitz_constant() <= Q::one());
        let n = 8 * pieces as i64;
        let mid = (0..n).fold(Q::zero(), |acc, i| acc + f.eval(&Q::ratio(2 * i + 1, 2 * n))) / Q::ratio(n, 1);
        // Midpoints on a refinement of the knots integrate linear pieces exactly.
        prop_assert_eq!(mid, f.integral());
    }

    #[test]
    fn centered_sawtooth_has_mean_zero(teeth in 1usize..64, phase in 0i64..8) {
        let f = sawtooth::<Q>(teeth, Q::ratio(phase, 8), false, true).unwrap();
        prop_assert_eq!(f.integral(), Q::zero());
        prop_assert_eq!(sawtooth::<Q>(teeth, Q::ratio(phase, 8), false, false).unwrap().integral(), Q::ratio(1, 4 * teeth as i64));
    }

    #[test]
    fn kappa_is_nondecreasing(n in 16u64..1_000_000, c2 in 1u64..4) {
        prop_assert!(kappa(n, c2).unwrap() <= kappa(n + 1, c2).unwrap());
        prop_assert_eq!(kappa(n, c2).unwrap(), c2 * kappa(n, 1).unwrap());
    }
}
