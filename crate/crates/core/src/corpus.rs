//! Standard witnesses: round spheres, the Clifford torus, the cylinder,
//! graph surfaces, the small-sphere inclusion, the warped-product
//! projection and seeded random maps.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::Expr;
use crate::manifold::{ChartedManifold, Interval, SymTensorField};
use crate::map::SmoothMap;
use crate::submanifold::Immersion;

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn diag(entries: Vec<Expr>) -> SymTensorField {
    let m = entries.len();
    SymTensorField::from_matrix(
        (0..m)
            .map(|i| (0..m).map(|j| if i == j { entries[i].clone() } else { Expr::zero() }).collect())
            .collect(),
    )
}

fn var(s: &str) -> Expr {
    Expr::var(s)
}

/// Coordinate names `t1..tm` of the hyperspherical chart.
pub fn sphere_coords(m: usize) -> Vec<String> {
    (1..=m).map(|k| format!("t{k}")).collect()
}

/// S^m(R) in hyperspherical coordinates with its explicit round metric.
pub fn round_sphere(m: usize, r: f64) -> ChartedManifold {
    let coords = sphere_coords(m);
    let mut domain = vec![Interval::open(0.0, PI); m - 1];
    domain.push(Interval::periodic(0.0, 2.0 * PI));
    let r2 = Expr::constant(r * r);
    let mut prod = r2.clone();
    let mut entries = Vec::with_capacity(m);
    for k in 0..m {
        if k > 0 {
            prod = prod.mul(&var(&coords[k - 1]).sin().powf(2.0));
        }
        entries.push(prod.clone());
    }
    ChartedManifold::new(format!("S{m}({r})"), coords, domain, diag(entries)).expect("round sphere")
}

/// `x_1 = R cos t1, …, x_m = R sin t1…sin t_{m−1} cos t_m, x_{m+1} = R sin t1…sin t_m`.
pub fn sphere_embedding(m: usize, r: f64) -> Vec<Expr> {
    let coords = sphere_coords(m);
    let mut out = Vec::with_capacity(m + 1);
    let mut prod = Expr::constant(r);
    for c in &coords {
        out.push(prod.mul(&var(c).cos()));
        prod = prod.mul(&var(c).sin());
    }
    out.push(prod);
    out
}

pub fn sphere_immersion(m: usize, r: f64) -> Immersion {
    Immersion::with_metric(
        format!("sphere{m}"),
        Arc::new(round_sphere(m, r)),
        sphere_embedding(m, r),
    )
    .expect("round sphere embedding is isometric")
}

/// The inclusion S^m(R) → R^{m+1}.
pub fn sphere_inclusion(m: usize, r: f64) -> SmoothMap {
    SmoothMap::new(
        format!("sphere{m}"),
        Arc::new(round_sphere(m, r)),
        Arc::new(ChartedManifold::standard_euclidean(m + 1)),
        sphere_embedding(m, r),
    )
    .expect("sphere inclusion")
}

/// Inward unit normal −X/R of S²(R) in the chart (t1, t2).
pub fn sphere_inward_normal(r: f64) -> Vec<Expr> {
    sphere_embedding(2, r).iter().map(|x| x.scale(-1.0 / r)).collect()
}

/// (cos u, sin u, cos v, sin v)/√2 in R⁴.
pub fn clifford_torus() -> Immersion {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (u, v) = (var("u"), var("v"));
    let src = ChartedManifold::new(
        "clifford",
        names(&["u", "v"]),
        vec![Interval::periodic(0.0, 2.0 * PI); 2],
        diag(vec![Expr::constant(0.5), Expr::constant(0.5)]),
    )
    .expect("flat torus");
    let emb = vec![u.cos().scale(s), u.sin().scale(s), v.cos().scale(s), v.sin().scale(s)];
    Immersion::with_metric("clifford", Arc::new(src), emb).expect("Clifford torus")
}

/// The two unit normals (cos u, sin u, 0, 0) and (0, 0, cos v, sin v).
pub fn clifford_normals() -> [Vec<Expr>; 2] {
    let (u, v) = (var("u"), var("v"));
    [
        vec![u.cos(), u.sin(), Expr::zero(), Expr::zero()],
        vec![Expr::zero(), Expr::zero(), v.cos(), v.sin()],
    ]
}

/// (cos u, sin u, v) in R³.
pub fn cylinder() -> Immersion {
    let (u, v) = (var("u"), var("v"));
    let src = ChartedManifold::new(
        "cylinder",
        names(&["u", "v"]),
        vec![Interval::periodic(0.0, 2.0 * PI), Interval::open(-2.0, 2.0)],
        diag(vec![Expr::one(), Expr::one()]),
    )
    .expect("flat cylinder");
    Immersion::with_metric("cylinder", Arc::new(src), vec![u.cos(), u.sin(), v]).expect("cylinder")
}

/// Outward unit normal (cos u, sin u, 0) of the cylinder.
pub fn cylinder_normal() -> Vec<Expr> {
    let u = var("u");
    vec![u.cos(), u.sin(), Expr::zero()]
}

/// Torus of revolution with radii `a > b`.
pub fn torus_of_revolution(a: f64, b: f64) -> Immersion {
    let (u, v) = (var("u"), var("v"));
    let ring = Expr::constant(a).add(&v.cos().scale(b));
    let src = ChartedManifold::new(
        "torus",
        names(&["u", "v"]),
        vec![Interval::periodic(0.0, 2.0 * PI); 2],
        diag(vec![ring.powf(2.0), Expr::constant(b * b)]),
    )
    .expect("torus of revolution");
    let emb = vec![ring.mul(&u.cos()), ring.mul(&u.sin()), v.sin().scale(b)];
    Immersion::with_metric("torus", Arc::new(src), emb).expect("torus of revolution")
}

fn graph(name: &str, height: Expr) -> Immersion {
    Immersion::new(
        name,
        names(&["x", "y"]),
        vec![Interval::open(-1.0, 1.0); 2],
        vec![var("x"), var("y"), height],
    )
    .expect("graph surface")
}

/// The graph z = x² + y².
pub fn paraboloid() -> Immersion {
    let (x, y) = (var("x"), var("y"));
    graph("paraboloid", x.powf(2.0).add(&y.powf(2.0)))
}

/// Monomials x^a y^b with a + b ≤ 3.
fn cubic_monomials() -> Vec<Expr> {
    let (x, y) = (var("x"), var("y"));
    let mut out = Vec::new();
    for deg in 0..=3 {
        for a in (0..=deg).rev() {
            let b = deg - a;
            out.push(x.powf(a as f64).mul(&y.powf(b as f64)));
        }
    }
    out
}

fn random_cubic(rng: &mut ChaCha8Rng, scale: f64) -> Expr {
    Expr::sum(cubic_monomials().into_iter().map(|mono| mono.scale(scale * rng.gen_range(-1.0..=1.0))))
}

/// Graph of a seeded random cubic with coefficients in [−½, ½].
pub fn random_graph_surface(seed: u64) -> Immersion {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    graph(&format!("graph{seed}"), random_cubic(&mut rng, 0.5))
}

/// Seeded random polynomial map [−1,1]² → R³, degree ≤ 3, coefficients in [−1, 1].
pub fn random_polynomial_map(seed: u64) -> SmoothMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let src = ChartedManifold::euclidean("R2", names(&["x", "y"]), vec![Interval::open(-1.0, 1.0); 2])
        .expect("plane");
    let comps = (0..3).map(|_| random_cubic(&mut rng, 1.0)).collect();
    SmoothMap::new(
        format!("poly{seed}"),
        Arc::new(src),
        Arc::new(ChartedManifold::standard_euclidean(3)),
        comps,
    )
    .expect("polynomial map")
}

/// (R, dt²) over (lo, hi).
pub fn line(lo: f64, hi: f64) -> ChartedManifold {
    ChartedManifold::new("R", names(&["t"]), vec![Interval::open(lo, hi)], diag(vec![Expr::one()]))
        .expect("line")
}

/// γ(t) = t³(1, 0) into flat R².
pub fn cubic_curve() -> SmoothMap {
    let t = var("t");
    SmoothMap::new(
        "cubic",
        Arc::new(line(-3.0, 3.0)),
        Arc::new(ChartedManifold::standard_euclidean(2)),
        vec![t.powf(3.0), Expr::zero()],
    )
    .expect("cubic curve")
}

/// S²(1/√2) → S³ at the latitude π/4.
pub fn small_sphere_inclusion() -> SmoothMap {
    let (b, c) = (var("b"), var("c"));
    let small = ChartedManifold::new(
        "S2(1/sqrt2)",
        names(&["b", "c"]),
        vec![Interval::open(0.0, PI), Interval::periodic(0.0, 2.0 * PI)],
        diag(vec![Expr::constant(0.5), b.sin().powf(2.0).scale(0.5)]),
    )
    .expect("small sphere");
    let a = var("a");
    let s3 = ChartedManifold::new(
        "S3",
        names(&["a", "b", "c"]),
        vec![
            Interval::open(0.0, PI),
            Interval::open(0.0, PI),
            Interval::periodic(0.0, 2.0 * PI),
        ],
        diag(vec![
            Expr::one(),
            a.sin().powf(2.0),
            a.sin().powf(2.0).mul(&b.sin().powf(2.0)),
        ]),
    )
    .expect("unit 3-sphere");
    SmoothMap::new(
        "small-sphere",
        Arc::new(small),
        Arc::new(s3),
        vec![Expr::constant(PI / 4.0), b, c],
    )
    .expect("small-sphere inclusion")
}

/// Total space of dt² + e^{2ct}(dx² + dy²) on (−1, 1)³.
pub fn warped_product(c: f64) -> ChartedManifold {
    let w = var("t").scale(2.0 * c).exp();
    ChartedManifold::new(
        "warped",
        names(&["t", "x", "y"]),
        vec![Interval::open(-1.0, 1.0); 3],
        diag(vec![Expr::one(), w.clone(), w]),
    )
    .expect("warped product")
}

/// Projection (t, x, y) ↦ t onto (R, dt²).
pub fn warped_product_projection(c: f64) -> SmoothMap {
    SmoothMap::new(
        "projection",
        Arc::new(warped_product(c)),
        Arc::new(line(-2.0, 2.0)),
        vec![var("t")],
    )
    .expect("warped projection")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_metric_is_induced() {
        for m in 2..=4 {
            let s = sphere_immersion(m, 1.3);
            assert_eq!(s.ambient_dim(), m + 1);
        }
    }

    #[test]
    fn random_maps_are_reproducible() {
        let a = random_polynomial_map(7);
        let b = random_polynomial_map(7);
        let c = random_polynomial_map(8);
        let p = [0.3, -0.2];
        assert_eq!(a.image(&p).unwrap(), b.image(&p).unwrap());
        assert_ne!(a.image(&p).unwrap(), c.image(&p).unwrap());
    }

    #[test]
    fn clifford_normals_are_normal() {
        let t = clifford_torus();
        for nu in clifford_normals() {
            let om = t.variation_omega_check(&nu, &[0.4, 1.3]).unwrap();
            assert!(om.tangential < 1e-14);
            assert!(om.residual() < 1e-6);
        }
    }
}
