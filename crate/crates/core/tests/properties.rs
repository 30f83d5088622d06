mod common;

use bitensor_core::linalg;
use bitensor_core::manifold::{ChartedManifold, Interval, SymTensorField};
use bitensor_core::{parse, Expr};
use common::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn derivative_matches_finite_difference(e in arb_expr(), p in arb_point(), k in 0usize..3) {
        let exact = e.differentiate(VARS[k]).eval(&bind(&p)).unwrap();
        let fd = finite_difference(&e, &p, k);
        let scale = exact.abs().max(e.eval(&bind(&p)).unwrap().abs()).max(1.0);
        prop_assert!((exact - fd).abs() <= 1e-6 * scale, "{e}: exact {exact}, fd {fd}");
    }

    #[test]
    fn mixed_partials_commute(e in arb_expr(), p in arb_point(), i in 0usize..3, j in 0usize..3) {
        let a = e.differentiate(VARS[i]).differentiate(VARS[j]).eval(&bind(&p)).unwrap();
        let b = e.differentiate(VARS[j]).differentiate(VARS[i]).eval(&bind(&p)).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{e}: {a} vs {b}");
    }

    #[test]
    fn print_parse_round_trip(e in arb_expr(), p in arb_point()) {
        let text = e.to_string();
        let back = parse(&text, &VARS).unwrap();
        prop_assert_eq!(back.to_string(), text.clone());
        let (a, b) = (e.eval(&bind(&p)).unwrap(), back.eval(&bind(&p)).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{text}: {a} vs {b}");
    }

    #[test]
    fn differentiation_is_linear(a in arb_expr(), b in arb_expr(), c in -3.0f64..3.0, p in arb_point()) {
        let lhs = a.scale(c).add(&b).differentiate("x").eval(&bind(&p)).unwrap();
        let rhs = c * a.differentiate("x").eval(&bind(&p)).unwrap() + b.differentiate("x").eval(&bind(&p)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn conformally_flat_metrics_have_symmetric_curvature(
        rho in arb_expr(),
        p in [-0.8f64..0.8, -0.8f64..0.8],
    ) {
        // g = e^{2ρ(x, y, 0)} δ on a square
        let rho = rho.substitute(&[("z", Expr::zero())]).scale(0.3);
        let w = rho.scale(2.0).exp();
        let g = SymTensorField::from_upper(2, &[w.clone(), Expr::zero(), w]).unwrap();
        let m = ChartedManifold::new("conf", vec!["x".into(), "y".into()], vec![Interval::open(-1.0, 1.0); 2], g).unwrap();
        let e = m.point_eval(&p).unwrap();
        let id = linalg::matmul(&e.g_inv, &e.g);
        prop_assert!((id[0][0] - 1.0).abs() < 1e-12 && id[0][1].abs() < 1e-12);
        prop_assert!((e.ricci[0][1] - e.ricci[1][0]).abs() < 1e-9);
        prop_assert!(e.first_bianchi_residual() < 1e-9);
        // in two dimensions Ric = (r/2) g
        for i in 0..2 {
            for j in 0..2 {
                let want = 0.5 * e.scalar * e.g[i][j];
                prop_assert!((e.ricci[i][j] - want).abs() <= 1e-8 * want.abs().max(1.0));
            }
        }
    }
}

#[test]
fn corpus_expressions_round_trip() {
    let exprs = corpus_exprs();
    assert!(exprs.len() > 100);
    for e in exprs {
        let vars = e.variables();
        let refs: Vec<&str> = vars.iter().map(String::as_str).collect();
        let text = e.to_string();
        let back = parse(&text, &refs).unwrap_or_else(|err| panic!("{text}: {err}"));
        assert_eq!(back.to_string(), text);
        let bindings: Vec<(&str, f64)> = refs.iter().map(|v| (*v, 0.37)).collect();
        assert_eq!(e.eval(&bindings).ok(), back.eval(&bindings).ok(), "{text}");
    }
}
