//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use bitensor_core::corpus;
use bitensor_core::linalg;
use bitensor_core::map::SmoothMap;
use bitensor_core::quadrature::{self, Grid};
use bitensor_core::sampling::{halton, sample_points};
use bitensor_core::stress;
use bitensor_core::submanifold::Immersion;
use bitensor_core::Expr;
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn max_of<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    it.into_iter().fold(0.0, |m, x| if x.is_nan() { f64::NAN } else { m.max(x) })
}

fn div_residual(phi: &SmoothMap, points: usize, seed: u64) -> f64 {
    let pts = sample_points(phi.source(), points, seed);
    let r = stress::check_div_identities(phi, &pts).unwrap_or_else(|e| panic!("{}: {e}", phi.name()));
    r.max()
}

fn c1_divergence_identities() -> Verdict {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        worst = worst.max(div_residual(&corpus::random_polynomial_map(seed), 200, seed));
    }
    let corpus = corpus_maps();
    for (i, phi) in corpus.iter().enumerate() {
        worst = worst.max(div_residual(phi, 200, 100 + i as u64));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-8 && secs <= 60.0,
        format!("50 random + {} corpus maps x 200 points, max residual {worst:.3e}, {secs:.1} s", corpus.len()),
    )
}

fn c2_small_sphere() -> Verdict {
    let phi = corpus::small_sphere_inclusion();
    let (mut tau, mut tau2) = (0.0f64, 0.0f64);
    for p in sample_points(phi.source(), 100, 2) {
        let d = phi.point_data(&p).map_err(|e| e.to_string())?;
        tau = tau.max((d.tau_norm() - 2.0).abs());
        tau2 = tau2.max(d.tau2_norm());
    }
    check(
        tau <= 1e-9 && tau2 <= 1e-8,
        format!("max ||tau| - 2| {tau:.3e}, max |tau2| {tau2:.3e}"),
    )
}

fn c3_warped_product() -> Verdict {
    let c = 0.7;
    let phi = corpus::warped_product_projection(c);
    let (mut tau, mut tau2) = (0.0f64, 0.0f64);
    for p in sample_points(phi.source(), 100, 3) {
        let d = phi.point_data(&p).map_err(|e| e.to_string())?;
        tau = tau.max((d.tau_norm() - 2.0 * c).abs());
        tau2 = tau2.max(d.tau2_norm());
    }
    let base = phi.target();
    let killing = max_of(
        sample_points(base, 20, 3)
            .iter()
            .map(|p| linalg::max_abs(&base.lie_derivative_metric(&[Expr::constant(c)], p).unwrap())),
    );
    check(
        tau <= 1e-10 && tau2 <= 1e-8 && killing <= 1e-12,
        format!("max ||tau| - 1.4| {tau:.3e}, max |tau2| {tau2:.3e}, Killing residual {killing:.3e}"),
    )
}

fn c4_cubic_curve() -> Verdict {
    let phi = corpus::cubic_curve();
    let mut s2: f64 = 0.0;
    for u in halton(1, 50, 4) {
        let t = 0.5 + 1.5 * u[0];
        let (d, st) = phi.point_data_and_stress(&[t]).map_err(|e| e.to_string())?;
        s2 = s2.max(linalg::tensor_norm(&d.source_metric_inv, &st.s2));
    }
    let at_one = (phi.point_data(&[1.0]).map_err(|e| e.to_string())?.tau_norm() - 6.0).abs();
    check(
        s2 <= 1e-9 && at_one <= 1e-10,
        format!("max |S2| on [0.5, 2] {s2:.3e}, ||tau(1)| - 6| {at_one:.3e}"),
    )
}

fn c5_sphere_family() -> Verdict {
    let mut worst_fit: f64 = 0.0;
    let mut worst_lambda: f64 = 0.0;
    let mut worst_half: f64 = 0.0;
    for m in 2..=4 {
        for r in [1.0, 2.0] {
            let phi = corpus::sphere_inclusion(m, r);
            let want = (m * (4 - m)) as f64 / (2.0 * r * r);
            for p in sample_points(phi.source(), 20, 5) {
                let (d, st) = phi.point_data_and_stress(&p).map_err(|e| e.to_string())?;
                let fit = stress::lambda_fit(&st.s2, &d.source_metric, &d.source_metric_inv);
                worst_fit = worst_fit.max(fit.residual);
                worst_lambda = worst_lambda.max((fit.lambda - want).abs());
                if m == 2 {
                    worst_half = worst_half.max((fit.lambda - 0.5 * d.tau_norm().powi(2)).abs());
                }
            }
        }
    }
    check(
        worst_fit <= 1e-9 && worst_lambda <= 1e-9 && worst_half <= 1e-9,
        format!(
            "max |S2 - lambda g| {worst_fit:.3e}, max |lambda - m(4-m)/(2R^2)| {worst_lambda:.3e}, m = 2 half-tau {worst_half:.3e}"
        ),
    )
}

fn c6_transformation_laws() -> Verdict {
    let mut homothety: f64 = 0.0;
    for phi in [corpus::sphere_inclusion(2, 1.0), corpus::random_polynomial_map(6)] {
        let pts = sample_points(phi.source(), 20, 6);
        for t in [0.5, 2.0, 4.0] {
            for (a, b) in stress::homothety_transform(&phi, t, &pts).map_err(|e| e.to_string())? {
                homothety = homothety.max(max_of(
                    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (y - x / t).abs()),
                ));
            }
        }
    }
    let sphere = corpus::sphere_inclusion(2, 1.0);
    let rho = Expr::var("t1").cos().scale(0.3);
    let pts = sample_points(sphere.source(), 50, 6);
    let outcomes = stress::conformal_surface_transform(&sphere, &rho, &pts).map_err(|e| e.to_string())?;
    let conformal = max_of(outcomes.iter().map(|o| o.law_residual()));
    let hypothesis = outcomes.iter().all(|o| o.hypothesis_violation.is_none());
    check(
        homothety <= 1e-10 && conformal <= 1e-8 && hypothesis,
        format!("homothety residual {homothety:.3e}, conformal residual {conformal:.3e}"),
    )
}

fn c7_gauss_oracle() -> Verdict {
    let mut worst: f64 = 0.0;
    let imms = [
        corpus::sphere_immersion(2, 1.0),
        corpus::clifford_torus(),
        corpus::cylinder(),
        corpus::random_graph_surface(7),
    ];
    for imm in &imms {
        for p in sample_points(imm.source(), 100, 7) {
            let d = imm.point_data(&p).map_err(|e| e.to_string())?;
            let oracle = imm.gauss_pluecker_oracle(&p).map_err(|e| e.to_string())?;
            worst = worst.max(max_of(
                d.gauss_pullback.iter().flatten().zip(oracle.iter().flatten()).map(|(a, b)| (a - b).abs()),
            ));
        }
    }
    check(worst <= 1e-7, format!("4 immersions x 100 points, max deviation {worst:.3e}"))
}

fn c8_divergence_relation() -> Verdict {
    let mut imms = corpus_immersions();
    imms.push(corpus::sphere_immersion(4, 1.0));
    let mut worst: f64 = 0.0;
    for imm in &imms {
        let count = if imm.dim() > 2 { 10 } else { 30 };
        for p in sample_points(imm.source(), count, 8) {
            worst = worst.max(imm.divergence_relation_residual(&p).map_err(|e| format!("{}: {e}", imm.name()))?);
        }
    }
    check(worst <= 1e-7, format!("{} immersions, max residual {worst:.3e}", imms.len()))
}

fn chain(imm: &Immersion, seed: u64) -> Result<Vec<[f64; 4]>, String> {
    sample_points(imm.source(), 30, seed)
        .iter()
        .map(|p| imm.equivalence_chain(p).map(|c| c.as_array()).map_err(|e| e.to_string()))
        .collect()
}

fn c9_equivalence_chain() -> Verdict {
    let holds = max_of(
        [corpus::sphere_immersion(2, 1.0), corpus::clifford_torus()]
            .iter()
            .map(|imm| chain(imm, 9))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .flatten()
            .flatten(),
    );
    let cyl = chain(&corpus::cylinder(), 9)?;
    let fails = cyl.iter().flatten().fold(f64::INFINITY, |m, x| m.min(*x));
    check(
        holds <= 1e-8 && fails >= 1e-3,
        format!("sphere and Clifford max residual {holds:.3e}; cylinder min residual {fails:.3e}"),
    )
}

fn c10_integral_identity() -> Verdict {
    let mut worst: f64 = 0.0;
    for (imm, chi) in [
        (corpus::sphere_immersion(2, 1.0), 2),
        (corpus::torus_of_revolution(2.0, 1.0), 0),
        (corpus::clifford_torus(), 0),
    ] {
        let sizes = Grid::default_sizes(imm.source().domain());
        let g = quadrature::gauss_bonnet_identity(&imm, chi, &sizes).map_err(|e| e.to_string())?;
        worst = worst.max(g.residual);
    }
    let cliff = corpus::clifford_torus();
    let sizes = Grid::default_sizes(cliff.source().domain());
    let w = quadrature::integrate_immersion(&cliff, |d| d.h_norm_sq(), &sizes).map_err(|e| e.to_string())?;
    let dev = (w.value - 2.0 * PI * PI).abs();
    check(
        worst <= 1e-5 && dev <= 1e-8,
        format!("max identity residual {worst:.3e}; Clifford Willmore energy - 2 pi^2 = {dev:.3e}"),
    )
}

fn random_normal_fields(imm: &Immersion, count: usize, seed: u64) -> Vec<Vec<Expr>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let w: Vec<Expr> = (0..imm.ambient_dim())
                .map(|_| {
                    imm.source().coords().iter().fold(Expr::constant(rng.gen_range(-1.0..=1.0)), |e, c| {
                        e.add(&Expr::var(c).cos().scale(rng.gen_range(-1.0..=1.0)))
                    })
                })
                .collect();
            imm.normal_part(&w).unwrap()
        })
        .collect()
}

fn c11_willmore() -> Verdict {
    let sphere = corpus::sphere_immersion(2, 1.0);
    let clifford = corpus::clifford_torus();
    let cylinder = corpus::cylinder();
    let grad = |imm: &Immersion, p: &[f64]| linalg::norm(&imm.willmore_gradient(p).unwrap());
    let mut zero: f64 = 0.0;
    for imm in [&sphere, &clifford] {
        for p in sample_points(imm.source(), 50, 11) {
            zero = zero.max(grad(imm, &p));
        }
    }
    let nonzero = sample_points(cylinder.source(), 50, 11)
        .iter()
        .map(|p| grad(&cylinder, p))
        .fold(f64::INFINITY, f64::min);
    let mut omega: f64 = 0.0;
    let mut weiner: f64 = 0.0;
    let torus = corpus::torus_of_revolution(2.0, 1.0);
    for (k, imm) in [&sphere, &clifford, &cylinder, &torus].into_iter().enumerate() {
        let fields = random_normal_fields(imm, 20, 110 + k as u64);
        let pts = sample_points(imm.source(), 10, 11);
        for v in &fields {
            for p in &pts {
                omega = omega.max(imm.variation_omega_check(v, p).map_err(|e| e.to_string())?.residual());
                let (r1, r2) = imm.weiner_algebra_check(v, p).map_err(|e| e.to_string())?;
                weiner = weiner.max(r1).max(r2);
            }
        }
    }
    check(
        zero <= 1e-10 && nonzero >= 1e-2 && omega <= 1e-6 && weiner <= 1e-9,
        format!(
            "sphere/Clifford gradient {zero:.3e}, cylinder min gradient {nonzero:.3e}, omega fd residual {omega:.3e}, Weiner residual {weiner:.3e} (20 fields)"
        ),
    )
}

fn c12_symbolic_soundness() -> Verdict {
    let exprs = draw(arb_expr(), 1000, 12);
    let points = draw(arb_point(), 1000, 13);
    let mut worst: f64 = 0.0;
    for (e, p) in exprs.iter().zip(&points) {
        for (k, v) in VARS.iter().enumerate() {
            let exact = e.differentiate(v).eval(&bind(p)).map_err(|err| err.to_string())?;
            let fd = finite_difference(e, p, k);
            let scale = exact.abs().max(e.eval(&bind(p)).unwrap().abs()).max(1.0);
            worst = worst.max((exact - fd).abs() / scale);
        }
    }
    let corpus = corpus_exprs();
    let mut mismatches = 0;
    for e in &corpus {
        let vars = e.variables();
        let refs: Vec<&str> = vars.iter().map(String::as_str).collect();
        let text = e.to_string();
        match bitensor_core::parse(&text, &refs) {
            Ok(back) if back.to_string() == text => {}
            _ => mismatches += 1,
        }
    }
    check(
        worst <= 1e-6 && mismatches == 0,
        format!(
            "1000 random expressions, max relative derivative error {worst:.3e}; {} corpus expressions, {mismatches} round-trip mismatches",
            corpus.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("divergence identities", c1_divergence_identities),
        ("proper biharmonic small sphere", c2_small_sphere),
        ("warped-product projection", c3_warped_product),
        ("cubic curve S2 = 0", c4_cubic_curve),
        ("sphere family S2 = lambda g", c5_sphere_family),
        ("transformation laws", c6_transformation_laws),
        ("Gauss-map oracle", c7_gauss_oracle),
        ("divergence relation", c8_divergence_relation),
        ("surface equivalence chain", c9_equivalence_chain),
        ("integral identity", c10_integral_identity),
        ("Willmore criticality", c11_willmore),
        ("symbolic-calculus soundness", c12_symbolic_soundness),
    ];
    let total = Instant::now();
    let mut failed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {:>2} PASS [{title}] {detail} ({secs:.2} s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL [{title}] {detail} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        total.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
