//! Deterministic low-discrepancy sample points.
//!
//! Halton sequences in the first primes, shifted modulo 1 by a seeded random
//! vector (Cranley–Patterson rotation) and mapped onto the sampling ranges
//! of a chart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::manifold::ChartedManifold;

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// `count` points of the shifted Halton sequence in [0, 1)^dim.
pub fn halton(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim <= PRIMES.len(), "Halton sampling supports up to {} dimensions", PRIMES.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            (0..dim)
                .map(|d| (radical_inverse(i, PRIMES[d]) + shift[d]).fract())
                .collect()
        })
        .collect()
}

/// Sample points inside a chart; non-periodic ends keep the boundary margin
/// and unbounded directions use [−1, 1].
pub fn sample_points(m: &ChartedManifold, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let ranges: Vec<(f64, f64)> = m
        .domain()
        .iter()
        .map(|iv| {
            let (lo, hi) = iv.sampling_range();
            if lo.is_finite() && hi.is_finite() {
                (lo, hi)
            } else {
                (-1.0, 1.0)
            }
        })
        .collect();
    halton(m.dim(), count, seed)
        .into_iter()
        .map(|u| u.iter().zip(&ranges).map(|(t, (lo, hi))| lo + t * (hi - lo)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::fixtures::sphere;

    #[test]
    fn radical_inverse_base_two() {
        let got: Vec<f64> = (1..=4).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(got, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn seeded_and_reproducible() {
        assert_eq!(halton(3, 10, 42), halton(3, 10, 42));
        assert_ne!(halton(3, 10, 42), halton(3, 10, 43));
    }

    #[test]
    fn points_respect_the_margin() {
        let s = sphere(1.0);
        for p in sample_points(&s, 200, 1) {
            assert!(p[0] >= 1e-3 && p[0] <= std::f64::consts::PI - 1e-3);
            assert!(s.contains(&p));
        }
    }

    #[test]
    fn low_discrepancy_mean() {
        let pts = halton(2, 1024, 0);
        for d in 0..2 {
            let mean = pts.iter().map(|p| p[d]).sum::<f64>() / 1024.0;
            assert!((mean - 0.5).abs() < 0.01);
        }
    }
}
