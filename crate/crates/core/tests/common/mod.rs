#![allow(dead_code)]

use std::sync::Arc;

use bitensor_core::corpus;
use bitensor_core::manifold::ChartedManifold;
use bitensor_core::map::SmoothMap;
use bitensor_core::scenario::builtin::BUILTINS;
use bitensor_core::submanifold::Immersion;
use bitensor_core::Expr;
use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::{Config, TestRng, TestRunner, RngAlgorithm};

pub const VARS: [&str; 3] = ["x", "y", "z"];

/// Smooth expressions in x, y, z that stay well conditioned on [−1, 1]³.
pub fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0usize..3).prop_map(|i| Expr::var(VARS[i])),
        (-2.0f64..2.0).prop_map(|c| Expr::constant((c * 100.0).round() / 100.0)),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.add(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.sub(&b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a.mul(&b)),
            // denominators bounded away from zero
            (inner.clone(), inner.clone())
                .prop_map(|(a, b)| a.div(&Expr::constant(1.5).add(&b.sin()))),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.clone().prop_map(|a| a.sin().exp()),
            inner.clone().prop_map(|a| Expr::one().add(&a.powf(2.0)).sqrt()),
            inner.clone().prop_map(|a| Expr::constant(2.0).add(&a.cos()).ln()),
            (inner, 2u32..4).prop_map(|(a, k)| a.sin().powf(k as f64)),
        ]
    })
}

pub fn arb_point() -> impl Strategy<Value = [f64; 3]> {
    [-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0]
}

/// Deterministic draws from a strategy.
pub fn draw<S: Strategy>(strategy: S, count: usize, seed: u8) -> Vec<S::Value> {
    let rng = TestRng::from_seed(RngAlgorithm::ChaCha, &[seed; 32]);
    let mut runner = TestRunner::new_with_rng(Config::default(), rng);
    (0..count)
        .map(|_| strategy.new_tree(&mut runner).expect("strategy").current())
        .collect()
}

pub fn bind(p: &[f64]) -> Vec<(&'static str, f64)> {
    VARS.iter().copied().zip(p.iter().copied()).collect()
}

/// Central difference with one Richardson step.
pub fn finite_difference(e: &Expr, p: &[f64; 3], k: usize) -> f64 {
    let at = |h: f64| {
        let mut q = *p;
        q[k] += h;
        e.eval(&bind(&q)).unwrap()
    };
    let d = |h: f64| (at(h) - at(-h)) / (2.0 * h);
    let h = 1e-3;
    (4.0 * d(h / 2.0) - d(h)) / 3.0
}

pub fn corpus_immersions() -> Vec<Immersion> {
    vec![
        corpus::sphere_immersion(2, 1.0),
        corpus::sphere_immersion(3, 1.0),
        corpus::clifford_torus(),
        corpus::cylinder(),
        corpus::torus_of_revolution(2.0, 1.0),
        corpus::paraboloid(),
        corpus::random_graph_surface(3),
    ]
}

pub fn corpus_maps() -> Vec<SmoothMap> {
    let mut maps = vec![
        corpus::small_sphere_inclusion(),
        corpus::warped_product_projection(0.7),
        corpus::cubic_curve(),
    ];
    for m in 2..=4 {
        maps.push(corpus::sphere_inclusion(m, 1.0));
    }
    maps.extend(corpus_immersions().iter().map(|i| {
        SmoothMap::new(
            i.name(),
            i.source().clone(),
            Arc::new(ChartedManifold::standard_euclidean(i.ambient_dim())),
            i.embedding().to_vec(),
        )
        .unwrap()
    }));
    maps
}

/// Every expression that appears in the corpus and in the builtin scenarios.
pub fn corpus_exprs() -> Vec<Expr> {
    let mut out = Vec::new();
    for m in corpus_maps() {
        out.extend(m.components().iter().cloned());
        for row in m.source().metric().components() {
            out.extend(row.iter().cloned());
        }
    }
    for i in corpus_immersions() {
        out.extend(i.embedding().iter().cloned());
    }
    for b in BUILTINS {
        let cfg = b.config().unwrap();
        let ws = &cfg.workspace;
        for m in ws.maps.values() {
            out.extend(m.components().iter().cloned());
        }
        for m in ws.manifolds.values() {
            for row in m.metric().components() {
                out.extend(row.iter().cloned());
            }
        }
        for i in ws.immersions.values() {
            out.extend(i.embedding().iter().cloned());
        }
    }
    out
}
