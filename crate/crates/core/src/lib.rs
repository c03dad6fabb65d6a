//! A small compiler for multilinear variational forms.
//!
//! Forms written in a tiny DSL are expanded into monomials, each monomial is
//! lowered to a reference tensor `A0` (integrated once on the reference
//! cell) and a geometry tensor expression `G_K` (evaluated per cell), and
//! the element tensor is their contraction `A^K_i = sum_a A0[i, a] G_K[a]`.

pub mod assembly;
pub mod bench;
pub mod cell;
pub mod cli;
pub mod codegen;
pub mod compile;
pub mod corpus;
pub mod element;
pub mod form;
pub mod geometry;
pub mod lowering;
pub mod quadrature;
pub mod reference_tensor;
pub mod signature;
pub mod verify;

pub use cell::{PointSet, ReferenceCell};
pub use element::{ElementError, ElementSpec, FiniteElement, TabulatedBasis};
pub use quadrature::{gauss_jacobi, simplex_rule, QuadratureError, QuadratureRule};
