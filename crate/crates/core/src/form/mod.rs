//! Canonical monomial representation of multilinear forms.
//!
//! A [`Form`] is a sum of [`Monomial`]s. Each monomial is a rational constant
//! times a product of [`Factor`]s, integrated over the cell; a factor is a
//! (possibly differentiated, possibly component-selected) basis function of an
//! argument or of a coefficient's finite-element expansion. Every index a
//! monomial uses is listed in [`Monomial::indices`]:
//!
//! * one primary index per argument, enumerating the element tensor's entries;
//! * one coefficient-basis index per coefficient factor, summed against the
//!   coefficient's expansion vector;
//! * summation indices, the letters of the source (`i` in `v.dx(i)*u.dx(i)`),
//!   summed over `0..d`.
//!
//! Fixed component and derivative selections (`v[0]`, `.dx(1)`) use
//! [`IndexSlot::Fixed`]. All indices are 0-based.

mod parse;
mod print;
mod simplify;

use num_rational::Rational64;

pub use self::parse::{parse_expression, parse_form_file, FormFile, ParseError};
pub use self::simplify::{canonical_key, simplify};
use crate::cell::ReferenceCell;
use crate::element::ElementSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexKind {
    /// Enumerates the basis functions of argument `argument`.
    Primary { argument: usize },
    /// Enumerates the expansion basis of the coefficient factor it belongs to.
    CoefficientBasis { coefficient: usize },
    /// A summation letter of the source expression.
    Summation,
    /// A reference-cell derivative direction introduced by the chain rule.
    ReferenceDirection,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Index {
    pub name: String,
    pub kind: IndexKind,
    pub range: usize,
}

/// Where an index-valued position of a factor takes its value from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexSlot {
    /// Position in [`Monomial::indices`].
    Index(usize),
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FunctionRef {
    Argument(usize),
    Coefficient(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Factor {
    pub function: FunctionRef,
    /// Position of the basis index in [`Monomial::indices`].
    pub basis: usize,
    /// Selected component; present exactly for vector-valued elements.
    pub component: Option<IndexSlot>,
    /// Physical derivative directions, outermost last (`v.dx(i).dx(j)` is `[i, j]`).
    pub derivatives: Vec<IndexSlot>,
}

impl Factor {
    pub fn is_coefficient(&self) -> bool {
        matches!(self.function, FunctionRef::Coefficient(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub constant: Rational64,
    pub factors: Vec<Factor>,
    pub indices: Vec<Index>,
}

impl Monomial {
    /// Number of coefficient factors.
    pub fn coefficient_count(&self) -> usize {
        self.factors.iter().filter(|f| f.is_coefficient()).count()
    }

    /// Total number of derivatives over all factors.
    pub fn derivative_count(&self) -> usize {
        self.factors.iter().map(|f| f.derivatives.len()).sum()
    }

    /// Position of the factor holding argument `k`.
    pub fn argument_factor(&self, k: usize) -> Option<usize> {
        self.factors
            .iter()
            .position(|f| f.function == FunctionRef::Argument(k))
    }

    /// Every slot of a factor that refers to `index`, for consistency checks.
    pub fn uses_of(&self, index: usize) -> usize {
        self.factors
            .iter()
            .map(|f| {
                usize::from(f.basis == index)
                    + usize::from(f.component == Some(IndexSlot::Index(index)))
                    + f.derivatives
                        .iter()
                        .filter(|s| **s == IndexSlot::Index(index))
                        .count()
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FunctionDecl {
    pub name: String,
    pub element: ElementSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    pub arguments: Vec<FunctionDecl>,
    pub coefficients: Vec<FunctionDecl>,
    pub monomials: Vec<Monomial>,
}

impl Form {
    pub fn arity(&self) -> usize {
        self.arguments.len()
    }

    pub fn cell(&self) -> ReferenceCell {
        self.arguments
            .iter()
            .chain(&self.coefficients)
            .map(|d| d.element.cell)
            .next()
            .unwrap_or(ReferenceCell::Triangle)
    }

    pub fn element_of(&self, function: FunctionRef) -> ElementSpec {
        match function {
            FunctionRef::Argument(k) => self.arguments[k].element,
            FunctionRef::Coefficient(k) => self.coefficients[k].element,
        }
    }

    /// Shape of the element tensor: one axis per argument.
    pub fn tensor_shape(&self) -> Vec<usize> {
        self.arguments
            .iter()
            .map(|a| a.element.space_dimension())
            .collect()
    }

    /// Checks the structural invariants every monomial must satisfy.
    pub fn validate(&self) -> Result<(), String> {
        let d = self.cell().dim();
        for decl in self.arguments.iter().chain(&self.coefficients) {
            if decl.element.cell != self.cell() {
                return Err(format!("function {} lives on a different cell", decl.name));
            }
        }
        for (m, mono) in self.monomials.iter().enumerate() {
            for k in 0..self.arity() {
                let count = mono
                    .factors
                    .iter()
                    .filter(|f| f.function == FunctionRef::Argument(k))
                    .count();
                if count != 1 {
                    return Err(format!(
                        "monomial {m}: argument {} appears {count} times",
                        self.arguments[k].name
                    ));
                }
            }
            for (id, index) in mono.indices.iter().enumerate() {
                if index.range == 0 {
                    return Err(format!("monomial {m}: index {} has empty range", index.name));
                }
                let uses = mono.uses_of(id);
                if uses == 0 {
                    return Err(format!("monomial {m}: index {} is unused", index.name));
                }
                if index.kind != IndexKind::Summation && uses != 1 {
                    return Err(format!("monomial {m}: basis index {} used {uses} times", index.name));
                }
            }
            for f in &mono.factors {
                let element = self.element_of(f.function);
                let basis = &mono.indices[f.basis];
                let expected_kind = match f.function {
                    FunctionRef::Argument(k) => IndexKind::Primary { argument: k },
                    FunctionRef::Coefficient(k) => IndexKind::CoefficientBasis { coefficient: k },
                };
                if basis.kind != expected_kind || basis.range != element.space_dimension() {
                    return Err(format!("monomial {m}: malformed basis index {}", basis.name));
                }
                if f.component.is_some() != element.is_vector() {
                    return Err(format!("monomial {m}: component selection does not match element shape"));
                }
                let check = |slot: &IndexSlot, range: usize| match *slot {
                    IndexSlot::Fixed(v) if v >= range => Err(format!("monomial {m}: fixed index {v} out of range {range}")),
                    IndexSlot::Index(i) if mono.indices[i].kind != IndexKind::Summation || mono.indices[i].range != range => {
                        Err(format!("monomial {m}: index {} used with range {range}", mono.indices[i].name))
                    }
                    _ => Ok(()),
                };
                if let Some(c) = &f.component {
                    check(c, element.vector_size)?;
                }
                for s in &f.derivatives {
                    check(s, d)?;
                }
            }
        }
        Ok(())
    }
}
