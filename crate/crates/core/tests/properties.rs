mod common;

use g2min::arith::{prime_power, rat, Rational, Valuation};
use g2min::linalg::{wedge2, Mat4Q};
use g2min::minimise::{apply_weight, minimise_step};
use g2min::model::{QuadForm6, Transform};
use g2min::weights::{dominates, dual_weight, weight_admissible, Weight, TWELVE_WEIGHTS};
use proptest::prelude::*;

fn weight() -> impl Strategy<Value = Weight> {
    prop::array::uniform4(-3i64..=5).prop_map(Weight)
}

fn form(max: i64) -> impl Strategy<Value = QuadForm6> {
    prop::array::uniform21(-max..=max).prop_map(|c| QuadForm6::from_i64(&c))
}

fn matrix() -> impl Strategy<Value = Mat4Q> {
    prop::array::uniform4(prop::array::uniform4(-4i64..=4))
        .prop_map(Mat4Q::from_i64)
        .prop_filter("invertible", |m| !num_traits::Zero::is_zero(&m.det()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dominance_is_reflexive_and_transitive(a in weight(), b in weight(), c in weight()) {
        prop_assert!(dominates(&a, &a));
        if dominates(&a, &b) && dominates(&b, &c) {
            prop_assert!(dominates(&a, &c));
        }
    }

    #[test]
    fn dual_weight_is_an_involution(w in weight()) {
        let c = w.canonical();
        prop_assert_eq!(dual_weight(&dual_weight(&c)), c);
        prop_assert_eq!(dual_weight(&w), dual_weight(&c));
    }

    #[test]
    fn canonical_form_ignores_shifts(w in weight(), shift in -3i64..=3) {
        let shifted = Weight(w.0.map(|x| x + shift));
        prop_assert_eq!(shifted.canonical(), w.canonical());
    }

    #[test]
    fn action_composes_and_inverts(h in form(9), p in matrix(), q in matrix(), c in 1i64..20) {
        let t1 = Transform::new(rat(c), p.clone()).unwrap();
        let t2 = Transform::new(rat(1), q.clone()).unwrap();
        let lhs = h.act(&p).act(&q);
        prop_assert_eq!(&lhs, &h.act(&(&p * &q)));
        let both = t1.then(&t2);
        let back = h.act(&both.p).act(&both.inverse().p);
        prop_assert_eq!(back, h.clone());
        prop_assert_eq!(wedge2(&(&p * &q)), &wedge2(&p) * &wedge2(&q));
    }

    #[test]
    fn apply_weight_matches_the_diagonal_action(h in form(9), w in weight(), p in prop::sample::select(vec![2u64, 3, 5])) {
        prop_assert_eq!(apply_weight(&h, &w, p), h.act(&w.diagonal_matrix(p)));
        let neg = Weight(w.0.map(|x| -x));
        prop_assert_eq!(apply_weight(&apply_weight(&h, &w, p), &neg, p), h);
    }

    #[test]
    fn dual_intertwines_the_action(h in form(9), p in matrix()) {
        let adj_t = g2min::linalg::adjugate(&p).transpose();
        prop_assert_eq!(h.dual().act(&adj_t), h.act(&p).dual());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn certificates_are_exact(seed in any::<u64>(), p in prop::sample::select(vec![2u64, 3, 5, 7])) {
        let mut r = common::rng(seed);
        let w = common::random_weight(&mut r);
        let near = seed % 3 == 0;
        let h = common::floor_form(&mut r, p, &w, near);
        let out = minimise_step(&h, p).unwrap();
        prop_assert_eq!(out.reducible, out.transform.is_some());
        prop_assert!(out.iterations <= 4);
        if let Some(t) = out.transform {
            prop_assert!(h.act(&t.p).valuation(p).unwrap() > Valuation::Finite(0));
            // only p-power determinants
            let det = t.p.det();
            let v = g2min::arith::valuation(&det, p).unwrap().finite().unwrap();
            prop_assert_eq!(det / prime_power(p, v), Rational::from_integer(det_sign(&t.p)));
        }
        if !near {
            prop_assert!(out.reducible);
        }
    }
}

fn det_sign(m: &Mat4Q) -> num_bigint::BigInt {
    use num_traits::Signed;
    m.det().numer().signum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Admissibility passes down the dominance order, checked exhaustively at p = 2.
    #[test]
    fn domination_transfers_admissibility(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let w = common::random_weight(&mut r);
        let h = common::floor_form(&mut r, 2, &w, seed % 2 == 0);
        for a in TWELVE_WEIGHTS.iter().filter(|a| weight_admissible(&h, a, 2).unwrap()) {
            for b in TWELVE_WEIGHTS.iter().filter(|b| dominates(a, b)) {
                prop_assert!(weight_admissible(&h, b, 2).unwrap(), "{} admissible, {} not", a, b);
            }
        }
    }
}

#[test]
fn floor_forms_are_admissible_for_their_weight() {
    let mut r = common::rng(11);
    for w in &TWELVE_WEIGHTS[1..] {
        let h = common::floor_form(&mut r, 2, w, false);
        assert!(weight_admissible(&h, w, 2).unwrap(), "{w}");
    }
    let unit = QuadForm6::from_terms(&(0..6).map(|i| (i, i, rat(1))).collect::<Vec<_>>());
    assert!(!weight_admissible(&unit, &Weight([0, 1, 2, 4]), 2).unwrap());
    assert!(weight_admissible(&unit, &Weight([0, 0, 0, 0]), 5).is_err());
}
