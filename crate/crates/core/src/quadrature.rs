//! Integration of scalar fields against the Riemannian volume form.
//!
//! Periodic coordinates use the trapezoid rule, which is spectrally accurate
//! for smooth periodic integrands. Other coordinates use Gauss–Legendre over
//! the declared interval; its nodes are interior, so coordinate
//! singularities at the ends (sphere poles) are never evaluated.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GeometryError, Result};
use crate::manifold::{ChartedManifold, Interval};
use crate::submanifold::{Immersion, SubmanifoldPointData};

pub const DEFAULT_PERIODIC_NODES: usize = 64;
pub const DEFAULT_GL_NODES: usize = 48;

/// Largest allowed distance of ∫K/2π from an integer.
pub const EULER_GAP_MAX: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    PeriodicTrapezoid,
    GaussLegendre,
}

#[derive(Debug, Clone, Serialize)]
pub struct Axis {
    pub rule: Rule,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Axis {
    pub fn trapezoid(lo: f64, hi: f64, n: usize) -> Self {
        let h = (hi - lo) / n as f64;
        Self {
            rule: Rule::PeriodicTrapezoid,
            nodes: (0..n).map(|k| lo + h * k as f64).collect(),
            weights: vec![h; n],
        }
    }

    pub fn gauss_legendre(lo: f64, hi: f64, n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        Self {
            rule: Rule::GaussLegendre,
            nodes: x.iter().map(|t| mid + half * t).collect(),
            weights: w.iter().map(|v| half * v).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // P_n(z) and P_n'(z) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Tensor-product quadrature grid over a chart.
#[derive(Debug, Clone, Serialize)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

impl Grid {
    /// One node count per coordinate.
    pub fn new(domain: &[Interval], sizes: &[usize]) -> Result<Self> {
        if domain.len() != sizes.len() {
            return Err(GeometryError::Dimension {
                what: "grid sizes".into(),
                expected: domain.len(),
                found: sizes.len(),
            });
        }
        let axes = domain
            .iter()
            .zip(sizes)
            .map(|(iv, &n)| {
                if n == 0 {
                    return Err(GeometryError::Invalid("grid axis with zero nodes".into()));
                }
                if !(iv.lo.is_finite() && iv.hi.is_finite()) {
                    return Err(GeometryError::Invalid(format!(
                        "cannot integrate over the unbounded interval [{}, {}]",
                        iv.lo, iv.hi
                    )));
                }
                Ok(if iv.periodic {
                    Axis::trapezoid(iv.lo, iv.hi, n)
                } else {
                    Axis::gauss_legendre(iv.lo, iv.hi, n)
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { axes })
    }

    /// Default node counts for a domain.
    pub fn default_sizes(domain: &[Interval]) -> Vec<usize> {
        domain
            .iter()
            .map(|iv| if iv.periodic { DEFAULT_PERIODIC_NODES } else { DEFAULT_GL_NODES })
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.axes.iter().map(Axis::len).collect()
    }

    pub fn total_nodes(&self) -> usize {
        self.axes.iter().map(Axis::len).product()
    }

    /// Node and product weight for a flat index, last axis fastest.
    pub fn node(&self, mut idx: usize) -> (Vec<f64>, f64) {
        let mut p = vec![0.0; self.axes.len()];
        let mut w = 1.0;
        for (d, axis) in self.axes.iter().enumerate().rev() {
            let k = idx % axis.len();
            idx /= axis.len();
            p[d] = axis.nodes[k];
            w *= axis.weights[k];
        }
        (p, w)
    }
}

/// Fixed-order pairwise summation.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 8 => v.iter().sum(),
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Σ w_p f(p) over a grid; `f` already includes the volume density.
pub fn sum_over_grid<F>(grid: &Grid, f: F) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let terms: Vec<f64> = (0..grid.total_nodes())
        .into_par_iter()
        .map(|i| {
            let (p, w) = grid.node(i);
            let v = f(&p)?;
            if !v.is_finite() {
                return Err(GeometryError::NonFiniteIntegrand { point: p });
            }
            Ok(w * v)
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms))
}

/// An integral together with its grid-doubling check.
#[derive(Debug, Clone, Serialize)]
pub struct Integral {
    pub value: f64,
    pub doubled: f64,
    /// |doubled − value|
    pub change: f64,
    pub sizes: Vec<usize>,
}

/// ∫_M f v_g with the given node counts, re-evaluated on the doubled grid.
pub fn integrate<F>(m: &ChartedManifold, f: F, sizes: &[usize]) -> Result<Integral>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    let integrand = |p: &[f64]| -> Result<f64> { Ok(f(p)? * m.volume_density(p)?) };
    let coarse = sum_over_grid(&Grid::new(m.domain(), sizes)?, integrand)?;
    let fine_sizes: Vec<usize> = sizes.iter().map(|n| 2 * n).collect();
    let fine = sum_over_grid(&Grid::new(m.domain(), &fine_sizes)?, integrand)?;
    Ok(Integral {
        value: coarse,
        doubled: fine,
        change: (fine - coarse).abs(),
        sizes: sizes.to_vec(),
    })
}

/// Integral of a quantity of an immersion's pointwise data.
pub fn integrate_immersion<F>(imm: &Immersion, f: F, sizes: &[usize]) -> Result<Integral>
where
    F: Fn(&SubmanifoldPointData) -> f64 + Sync,
{
    integrate(imm.source(), |p| Ok(f(&imm.point_data(p)?)), sizes)
}

#[derive(Debug, Clone, Serialize)]
pub struct EulerEstimate {
    pub chi: i64,
    /// (1/2π) ∫K v_g before rounding
    pub value: f64,
    pub gap: f64,
    pub integral: Integral,
}

/// χ(M) = round((1/2π) ∫K v_g) for a closed surface chart.
pub fn euler_characteristic(imm: &Immersion, sizes: &[usize]) -> Result<EulerEstimate> {
    if imm.dim() != 2 {
        return Err(GeometryError::Dimension {
            what: "Euler characteristic source dimension".into(),
            expected: 2,
            found: imm.dim(),
        });
    }
    let integral = integrate_immersion(imm, |d| d.gaussian_curvature(), sizes)?;
    let value = integral.value / (2.0 * PI);
    let chi = value.round();
    let gap = (value - chi).abs();
    if gap >= EULER_GAP_MAX {
        return Err(GeometryError::EulerGap { value, gap });
    }
    Ok(EulerEstimate {
        chi: chi as i64,
        value,
        gap,
        integral,
    })
}

/// Terms of ∫e(G) v_g − 2∫|H|² v_g + 2πχ for a closed surface.
#[derive(Debug, Clone, Serialize)]
pub struct GaussBonnetIdentity {
    pub energy: Integral,
    pub willmore: Integral,
    pub chi: i64,
    pub residual: f64,
}

pub fn gauss_bonnet_identity(imm: &Immersion, chi: i64, sizes: &[usize]) -> Result<GaussBonnetIdentity> {
    let energy = integrate_immersion(imm, |d| d.gauss_energy, sizes)?;
    let willmore = integrate_immersion(imm, |d| d.h_norm_sq(), sizes)?;
    let residual = (energy.value - 2.0 * willmore.value + 2.0 * PI * chi as f64).abs();
    Ok(GaussBonnetIdentity {
        energy,
        willmore,
        chi,
        residual,
    })
}
