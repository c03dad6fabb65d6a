//! Lagrange finite elements on reference simplices.
//!
//! Nodal basis functions are expressed in an orthonormal polynomial basis:
//! with `V[j][k] = psi_k(node_j)` the generalized Vandermonde matrix, the
//! nodal functions are `phi_i = sum_k (V^-1)[k][i] psi_k`. Derivatives of
//! `psi_k` come from evaluating the recurrences on truncated Taylor jets.
//!
//! Degrees of freedom are numbered component-major for vector elements:
//! dof `c * n + s` is scalar basis function `s` placed in component `c`,
//! where `n` is the scalar space dimension.

mod expansion;
mod jet;

use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

pub use self::expansion::polynomial_count;
use self::jet::JetLayout;
use crate::cell::{PointSet, ReferenceCell};

pub const MAX_DEGREE: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ElementError {
    #[error("unsupported polynomial degree {0} (expected 1..={MAX_DEGREE})")]
    UnsupportedDegree(usize),
    #[error("vector size {size} is not valid on a {cell} (expected 1 or {dim})", dim = cell.dim())]
    InvalidVectorSize { size: usize, cell: ReferenceCell },
    #[error("derivative direction {direction} out of range for dimension {dim}")]
    DerivativeDirection { direction: usize, dim: usize },
    #[error("point has {got} coordinates, expected {expected}")]
    PointDimension { got: usize, expected: usize },
    #[error("Vandermonde matrix of {0} is singular")]
    SingularVandermonde(ElementSpec),
}

/// Family, degree, cell and value shape of a Lagrange element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementSpec {
    pub degree: usize,
    pub cell: ReferenceCell,
    pub vector_size: usize,
}

impl ElementSpec {
    pub fn new(degree: usize, cell: ReferenceCell, vector_size: usize) -> Result<Self, ElementError> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(ElementError::UnsupportedDegree(degree));
        }
        if vector_size != 1 && vector_size != cell.dim() {
            return Err(ElementError::InvalidVectorSize {
                size: vector_size,
                cell,
            });
        }
        Ok(Self {
            degree,
            cell,
            vector_size,
        })
    }

    pub fn scalar(degree: usize, cell: ReferenceCell) -> Result<Self, ElementError> {
        Self::new(degree, cell, 1)
    }

    pub fn vector(degree: usize, cell: ReferenceCell) -> Result<Self, ElementError> {
        Self::new(degree, cell, cell.dim())
    }

    pub fn dim(&self) -> usize {
        self.cell.dim()
    }

    pub fn is_vector(&self) -> bool {
        self.vector_size > 1
    }

    pub fn scalar_dimension(&self) -> usize {
        polynomial_count(self.cell.dim(), self.degree)
    }

    pub fn space_dimension(&self) -> usize {
        self.vector_size * self.scalar_dimension()
    }

    /// Component carried by `dof`.
    pub fn component_of(&self, dof: usize) -> usize {
        dof / self.scalar_dimension()
    }

    /// Human-readable description, as used in signatures.
    pub fn description(&self) -> String {
        let article = if self.cell == ReferenceCell::Interval { "an" } else { "a" };
        let prefix = if self.is_vector() { "Vector Lagrange" } else { "Lagrange" };
        format!(
            "{prefix} finite element of degree {} on {article} {}",
            self.degree, self.cell
        )
    }
}

impl fmt::Display for ElementSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lagrange({}, {}, {})", self.degree, self.cell, self.vector_size)
    }
}

/// Equispaced lattice of degree `degree` on `cell`, ordered with the last
/// coordinate varying slowest: `(0,0), (1/q,0), ..., (1,0), (0,1/q), ...`.
pub fn lagrange_nodes(cell: ReferenceCell, degree: usize) -> PointSet {
    let q = degree as f64;
    let n = degree;
    let mut points: Vec<Vec<f64>> = Vec::new();
    match cell {
        ReferenceCell::Interval => {
            for a in 0..=n {
                points.push(vec![a as f64 / q]);
            }
        }
        ReferenceCell::Triangle => {
            for b in 0..=n {
                for a in 0..=(n - b) {
                    points.push(vec![a as f64 / q, b as f64 / q]);
                }
            }
        }
        ReferenceCell::Tetrahedron => {
            for c in 0..=n {
                for b in 0..=(n - c) {
                    for a in 0..=(n - b - c) {
                        points.push(vec![a as f64 / q, b as f64 / q, c as f64 / q]);
                    }
                }
            }
        }
    }
    PointSet::from_points(cell.dim(), &points)
}

/// Converts a derivative given as a list of directions into per-axis counts.
pub fn derivative_counts(directions: &[usize], dim: usize) -> Result<Vec<usize>, ElementError> {
    let mut counts = vec![0; dim];
    for &direction in directions {
        if direction >= dim {
            return Err(ElementError::DerivativeDirection { direction, dim });
        }
        counts[direction] += 1;
    }
    Ok(counts)
}

/// A Lagrange element with its inverted Vandermonde matrix.
#[derive(Debug, Clone)]
pub struct FiniteElement {
    spec: ElementSpec,
    nodes: PointSet,
    /// `(V^-1)[k][i]`: coefficient of orthonormal function `k` in nodal function `i`.
    expansion: DMatrix<f64>,
}

impl FiniteElement {
    pub fn new(spec: ElementSpec) -> Result<Self, ElementError> {
        let spec = ElementSpec::new(spec.degree, spec.cell, spec.vector_size)?;
        let nodes = lagrange_nodes(spec.cell, spec.degree);
        let n = spec.scalar_dimension();
        let layout = JetLayout::new(spec.dim(), 0);
        let mut vandermonde = DMatrix::zeros(n, n);
        for (j, node) in nodes.iter().enumerate() {
            let psi = expansion::orthonormal_jets(spec.cell, spec.degree, node, &layout);
            for (k, jet) in psi.iter().enumerate() {
                vandermonde[(j, k)] = jet.c[0];
            }
        }
        let expansion = vandermonde
            .try_inverse()
            .ok_or(ElementError::SingularVandermonde(spec))?;
        Ok(Self {
            spec,
            nodes,
            expansion,
        })
    }

    pub fn spec(&self) -> ElementSpec {
        self.spec
    }

    pub fn nodes(&self) -> &PointSet {
        &self.nodes
    }

    pub fn space_dimension(&self) -> usize {
        self.spec.space_dimension()
    }

    /// Values of `D^derivative` of every basis function at `point`; `derivative`
    /// lists differentiation directions (`[0, 0]` is the second derivative in
    /// `X_0`). For vector elements entry `dof` is the value of the single
    /// nonzero component of that basis function.
    pub fn eval_basis(&self, point: &[f64], derivative: &[usize]) -> Result<Vec<f64>, ElementError> {
        let counts = derivative_counts(derivative, self.spec.dim())?;
        let mut out = vec![0.0; self.space_dimension()];
        self.eval_counts_into(point, &counts, &JetLayout::new(self.spec.dim(), derivative.len()), &mut out)?;
        Ok(out)
    }

    fn eval_counts_into(
        &self,
        point: &[f64],
        counts: &[usize],
        layout: &JetLayout,
        out: &mut [f64],
    ) -> Result<(), ElementError> {
        let d = self.spec.dim();
        if point.len() != d {
            return Err(ElementError::PointDimension {
                got: point.len(),
                expected: d,
            });
        }
        let psi = expansion::orthonormal_jets(self.spec.cell, self.spec.degree, point, layout);
        let dpsi: Vec<f64> = psi.iter().map(|j| layout.derivative(j, counts)).collect();
        let n = self.spec.scalar_dimension();
        for i in 0..n {
            let mut v = 0.0;
            for (k, dk) in dpsi.iter().enumerate() {
                v += self.expansion[(k, i)] * dk;
            }
            for c in 0..self.spec.vector_size {
                out[c * n + i] = v;
            }
        }
        Ok(())
    }

    /// Row-wise [`eval_basis`](Self::eval_basis) over a point set.
    pub fn tabulate(&self, points: &PointSet, derivative: &[usize]) -> Result<TabulatedBasis, ElementError> {
        let counts = derivative_counts(derivative, self.spec.dim())?;
        self.tabulate_counts(points, &counts)
    }

    /// Tabulation keyed by per-axis derivative counts.
    pub fn tabulate_counts(&self, points: &PointSet, counts: &[usize]) -> Result<TabulatedBasis, ElementError> {
        let d = self.spec.dim();
        if counts.len() != d {
            return Err(ElementError::DerivativeDirection {
                direction: counts.len(),
                dim: d,
            });
        }
        let order: usize = counts.iter().sum();
        let layout = JetLayout::new(d, order);
        let nb = self.space_dimension();
        let mut values = vec![0.0; points.len() * nb];
        for (k, point) in points.iter().enumerate() {
            self.eval_counts_into(point, counts, &layout, &mut values[k * nb..(k + 1) * nb])?;
        }
        Ok(TabulatedBasis {
            spec: self.spec,
            derivative: counts.to_vec(),
            num_points: points.len(),
            num_basis: nb,
            values,
        })
    }
}

/// Basis values (or derivatives) at a set of points, `values[point][basis]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedBasis {
    pub spec: ElementSpec,
    /// Derivative counts per reference axis.
    pub derivative: Vec<usize>,
    pub num_points: usize,
    pub num_basis: usize,
    pub values: Vec<f64>,
}

impl TabulatedBasis {
    pub fn row(&self, point: usize) -> &[f64] {
        &self.values[point * self.num_basis..(point + 1) * self.num_basis]
    }

    pub fn value(&self, point: usize, basis: usize) -> f64 {
        self.values[point * self.num_basis + basis]
    }

    /// Component `component` of basis function `basis` at `point`.
    pub fn component_value(&self, point: usize, basis: usize, component: usize) -> f64 {
        if self.spec.component_of(basis) == component {
            self.value(point, basis)
        } else {
            0.0
        }
    }
}
