//! Property tests for the expression layer: differentiation rules, printing
//! round trips and purity, over randomly generated trees.

use dualmetric::equiv::{equiv, SamplePlan};
use dualmetric::expr::{Chart, Expr, Ratio};
use dualmetric::parse::parse;
use proptest::prelude::*;

fn chart2() -> Chart {
    Chart::new(&["x", "y"], &[(0.2, 1.4), (0.2, 1.4)]).unwrap()
}

/// Random smooth expressions over the positive box; log/sqrt arguments are
/// shifted positive so evaluation failures stay rare.
fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-2.0..2.0f64).prop_map(Expr::constant),
        Just(Expr::coord(0)),
        Just(Expr::coord(1)),
    ];
    leaf.prop_recursive(3, 24, 4, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| Expr::div(a, b.clone() * b + Expr::one())),
            inner.clone().prop_map(|e| e.sin()),
            inner.clone().prop_map(|e| e.cos()),
            inner.clone().prop_map(|e| (Expr::constant(0.2) * e).exp()),
            inner.clone().prop_map(|e| (e.clone() * e + Expr::one()).log()),
            inner
                .clone()
                .prop_map(|e| Expr::pow(e.clone() * e + Expr::one(), Ratio::new(1, 2))),
            (inner, 1..4i64).prop_map(|(e, k)| Expr::pow_int(e, k)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn product_rule_holds(a in arb_expr(), b in arb_expr()) {
        let chart = chart2();
        let plan = SamplePlan::default().with_samples(40);
        for k in 0..2 {
            let lhs = (a.clone() * b.clone()).diff(k);
            let rhs = a.diff(k) * b.clone() + a.clone() * b.diff(k);
            prop_assert!(equiv(&lhs, &rhs, &chart, &plan).is_agree());
        }
    }

    #[test]
    fn partials_commute(e in arb_expr()) {
        let chart = chart2();
        let plan = SamplePlan::default().with_samples(40);
        let dxy = e.diff(0).diff(1);
        let dyx = e.diff(1).diff(0);
        prop_assert!(equiv(&dxy, &dyx, &chart, &plan).is_agree());
    }

    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let chart = chart2();
        let text = e.display(&chart).to_string();
        let back = parse(&text, &chart);
        prop_assert!(back.is_ok(), "failed to reparse `{text}`");
        prop_assert_eq!(back.unwrap(), e, "round trip changed `{}`", text);
    }

    #[test]
    fn evaluation_is_bit_pure(e in arb_expr(), x in 0.25..1.3f64, y in 0.25..1.3f64) {
        let p = [x, y];
        if let Ok(v) = e.eval(&p) {
            for _ in 0..3 {
                prop_assert_eq!(e.eval(&p).unwrap().to_bits(), v.to_bits());
            }
            // the shared-subtree evaluator agrees bit for bit
            prop_assert_eq!(e.eval_shared(&p).unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn sum_rule_is_structural(a in arb_expr(), b in arb_expr()) {
        // linearity after normalization: the trees themselves agree
        let lhs = (a.clone() + b.clone()).diff(0);
        let rhs_terms = Expr::sum(vec![a.diff(0), b.diff(0)]);
        let chart = chart2();
        let plan = SamplePlan::default().with_samples(30);
        prop_assert!(equiv(&lhs, &rhs_terms, &chart, &plan).is_agree());
    }
}
