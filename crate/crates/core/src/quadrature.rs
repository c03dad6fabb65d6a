//! Collapsed-coordinate Gauss–Jacobi quadrature on reference simplices.
//!
//! One-dimensional Gauss–Jacobi rules are built with the Golub–Welsch
//! construction: nodes are eigenvalues of the symmetric tridiagonal Jacobi
//! matrix of the weight `(1 - x)^a`, weights are `mu_0` times the squared
//! first eigenvector components. Simplex rules are tensor products mapped by
//! the Duffy collapse, with the Jacobi exponents absorbing the collapse
//! Jacobian.

use nalgebra::{DMatrix, SymmetricEigen};
use thiserror::Error;

use crate::cell::{PointSet, ReferenceCell};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadratureError {
    #[error("a Gauss–Jacobi rule needs at least one point")]
    NoPoints,
    #[error("unsupported Jacobi exponent {0} (expected 0, 1 or 2)")]
    UnsupportedExponent(u32),
    #[error("eigenvalue iteration for the {n}-point Jacobi matrix (a = {alpha}) did not converge")]
    NoConvergence { n: usize, alpha: u32 },
}

/// A Gauss–Jacobi rule on `[-1, 1]` for the weight `(1 - x)^alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussJacobiRule {
    pub alpha: u32,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn gauss_jacobi(n: usize, alpha: u32) -> Result<GaussJacobiRule, QuadratureError> {
    if n == 0 {
        return Err(QuadratureError::NoPoints);
    }
    if alpha > 2 {
        return Err(QuadratureError::UnsupportedExponent(alpha));
    }
    let a = alpha as f64;
    let b = 0.0;
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    jacobi[(0, 0)] = (b - a) / (a + b + 2.0);
    for k in 1..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        jacobi[(k, k)] = (b * b - a * a) / (s * (s + 2.0));
        let off = (4.0 * kf * (kf + a) * (kf + b) * (kf + a + b) / (s * s * (s + 1.0) * (s - 1.0))).sqrt();
        jacobi[(k - 1, k)] = off;
        jacobi[(k, k - 1)] = off;
    }
    let eigen = SymmetricEigen::try_new(jacobi, f64::EPSILON, 0)
        .ok_or(QuadratureError::NoConvergence { n, alpha })?;
    let mu0 = 2f64.powi(alpha as i32 + 1) / (a + 1.0);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eigen.eigenvectors[(0, k)];
            (eigen.eigenvalues[k], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(GaussJacobiRule {
        alpha,
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    })
}

/// A quadrature rule on a reference cell.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub cell: ReferenceCell,
    /// Polynomial degree integrated exactly.
    pub degree: usize,
    pub points: PointSet,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `sum_k w_k f(x_k)`.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(x, w)| w * f(x)).sum()
    }
}

/// Points per direction for exactness degree `degree`.
pub fn points_per_direction(degree: usize) -> usize {
    (degree + 2) / 2
}

/// Collapsed-coordinate rule on `cell` exact for polynomials of total degree `degree`.
pub fn simplex_rule(cell: ReferenceCell, degree: usize) -> Result<QuadratureRule, QuadratureError> {
    let n = points_per_direction(degree);
    let g0 = gauss_jacobi(n, 0)?;
    let mut coords = Vec::new();
    let mut weights = Vec::new();
    match cell {
        ReferenceCell::Interval => {
            for (x, w) in g0.nodes.iter().zip(&g0.weights) {
                coords.push((1.0 + x) / 2.0);
                weights.push(w / 2.0);
            }
        }
        ReferenceCell::Triangle => {
            let g1 = gauss_jacobi(n, 1)?;
            for (eta, we) in g1.nodes.iter().zip(&g1.weights) {
                for (xi, wx) in g0.nodes.iter().zip(&g0.weights) {
                    coords.push((1.0 + xi) * (1.0 - eta) / 4.0);
                    coords.push((1.0 + eta) / 2.0);
                    weights.push(wx * we / 8.0);
                }
            }
        }
        ReferenceCell::Tetrahedron => {
            let g1 = gauss_jacobi(n, 1)?;
            let g2 = gauss_jacobi(n, 2)?;
            for (zeta, wz) in g2.nodes.iter().zip(&g2.weights) {
                for (eta, we) in g1.nodes.iter().zip(&g1.weights) {
                    for (xi, wx) in g0.nodes.iter().zip(&g0.weights) {
                        coords.push((1.0 + xi) * (1.0 - eta) * (1.0 - zeta) / 8.0);
                        coords.push((1.0 + eta) * (1.0 - zeta) / 4.0);
                        coords.push((1.0 + zeta) / 2.0);
                        weights.push(wx * we * wz / 64.0);
                    }
                }
            }
        }
    }
    Ok(QuadratureRule {
        cell,
        degree,
        points: PointSet::new(cell.dim(), coords),
        weights,
    })
}

/// Total polynomial degree of a product of basis functions: `sum_j (q_j - |delta_j|)`,
/// each term clamped at zero. Items are `(element degree, derivative order)`.
pub fn required_degree<I: IntoIterator<Item = (usize, usize)>>(factors: I) -> usize {
    factors.into_iter().map(|(q, d)| q.saturating_sub(d)).sum()
}

/// Exact integral of `X^e` over the unit simplex: `prod e_i! / (sum e_i + d)!`.
pub fn monomial_integral(exponents: &[u32]) -> f64 {
    let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
    let num: f64 = exponents.iter().map(|&e| fact(e)).product();
    num / fact(exponents.iter().sum::<u32>() + exponents.len() as u32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_legendre_rules() {
        let r = gauss_jacobi(1, 0).unwrap();
        assert!(r.nodes[0].abs() < 1e-15);
        assert!((r.weights[0] - 2.0).abs() < 1e-15);
        let r = gauss_jacobi(2, 0).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + s).abs() < 1e-15 && (r.nodes[1] - s).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-14 && (r.weights[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn one_point_jacobi_rule() {
        let r = gauss_jacobi(1, 1).unwrap();
        assert!((r.nodes[0] + 1.0 / 3.0).abs() < 1e-15);
        assert!((r.weights[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn jacobi_rules_integrate_weighted_moments() {
        for alpha in 0..=2u32 {
            for n in 1..=8 {
                let r = gauss_jacobi(n, alpha).unwrap();
                for k in 0..(2 * n) as i32 {
                    // int_{-1}^{1} (1-x)^a x^k dx via substitution t = (1+x)/2 and Beta integrals
                    let exact = weighted_moment(alpha, k as u32);
                    let got: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k)).sum();
                    assert!((got - exact).abs() < 1e-12, "a={alpha} n={n} k={k}: {got} vs {exact}");
                }
            }
        }
    }

    fn weighted_moment(alpha: u32, k: u32) -> f64 {
        // expand (1-x)^a binomially; int x^m over [-1, 1] is 2/(m+1) for even m
        let binom = [[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [1.0, 2.0, 1.0]];
        (0..=alpha)
            .map(|j| {
                let m = k + j;
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                let even = if m % 2 == 0 { 2.0 / (m as f64 + 1.0) } else { 0.0 };
                binom[alpha as usize][j as usize] * sign * even
            })
            .sum()
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(gauss_jacobi(0, 0), Err(QuadratureError::NoPoints));
        assert_eq!(gauss_jacobi(2, 3), Err(QuadratureError::UnsupportedExponent(3)));
    }

    #[test]
    fn triangle_examples() {
        let r = simplex_rule(ReferenceCell::Triangle, 0).unwrap();
        assert!((r.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
        let r = simplex_rule(ReferenceCell::Triangle, 3).unwrap();
        let v = r.integrate(|x| x[0] * x[0] * x[1]);
        assert!((v - 1.0 / 60.0).abs() < 1e-13);
        let r = simplex_rule(ReferenceCell::Tetrahedron, 2).unwrap();
        let v = r.integrate(|x| x[0] * x[1]);
        assert!((v - 1.0 / 120.0).abs() < 1e-13);
    }

    #[test]
    fn points_inside_and_weights_positive() {
        for cell in [ReferenceCell::Interval, ReferenceCell::Triangle, ReferenceCell::Tetrahedron] {
            for p in 0..=12 {
                let r = simplex_rule(cell, p).unwrap();
                assert!(r.weights.iter().all(|&w| w > 0.0));
                assert!(r.points.iter().all(|x| cell.contains(x, 1e-14)));
            }
        }
    }

    #[test]
    fn required_degree_examples() {
        assert_eq!(required_degree([(1, 0), (1, 0)]), 2);
        assert_eq!(required_degree([(2, 1), (2, 1)]), 2);
        assert_eq!(required_degree([(1, 0), (1, 0), (1, 1)]), 2);
        assert_eq!(required_degree([(1, 2)]), 0);
    }
}
