//! Generated element-tensor code as an executable contraction program.
//!
//! A [`ContractionProgram`] holds, per reference-tensor group, a recipe for
//! every geometry tensor entry (a sum of products of [`Token`]s) and a
//! schedule listing, for every element tensor entry, the nonzero reference
//! tensor values to multiply them with. [`interpret`] runs a program;
//! [`render_c_like`] prints it as straight-line code; [`ContractionProgram::to_text`]
//! and [`ContractionProgram::from_text`] store it.

mod render;
mod serialize;

use std::fmt;

use num_traits::{One, ToPrimitive};
use thiserror::Error;

pub use self::render::render_c_like;
pub use self::serialize::ProgramParseError;
use crate::compile::{CompiledForm, CompiledGroup};
use crate::geometry::{next_multiindex, AffineMap, ElementTensor};
use crate::lowering::PhysSlot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Token {
    /// `|det F'|`.
    DetF,
    /// `dX_r / dx_c`.
    Jinv(usize, usize),
    /// Expansion value `dof` of coefficient `which`.
    Coeff(usize, usize),
    Const(f64),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Token::DetF => write!(f, "DETF"),
            Token::Jinv(r, c) => write!(f, "JINV({r},{c})"),
            Token::Coeff(w, n) => write!(f, "COEFF({w},{n})"),
            Token::Const(v) => write!(f, "CONST({v:.16e})"),
        }
    }
}

/// A product of tokens.
pub type Term = Vec<Token>;

#[derive(Debug, Clone, PartialEq)]
pub struct ProgramGroup {
    /// `|I|`.
    pub rows: usize,
    /// `|A|`.
    pub cols: usize,
    /// `G[a]` is the sum of the products in `recipe[a]`.
    pub recipe: Vec<Vec<Term>>,
    /// `schedule[i]` lists `(a, A0[i, a])` for the entries kept.
    pub schedule: Vec<Vec<(usize, f64)>>,
}

impl ProgramGroup {
    pub fn scheduled_multiplies(&self) -> usize {
        self.schedule.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionProgram {
    pub name: String,
    /// Element tensor shape.
    pub shape: Vec<usize>,
    /// Expansion length of every coefficient.
    pub coefficient_sizes: Vec<usize>,
    pub dim: usize,
    pub zero_tolerance: f64,
    pub groups: Vec<ProgramGroup>,
}

impl ContractionProgram {
    pub fn entries(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn scheduled_multiplies(&self) -> usize {
        self.groups.iter().map(ProgramGroup::scheduled_multiplies).sum()
    }

    /// `sum |I| x |A|` over groups: the dense multiply count.
    pub fn dense_multiplies(&self) -> usize {
        self.groups.iter().map(|g| g.rows * g.cols).sum()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpretError {
    #[error("program reads coefficient {which}, dof {dof}, which was not supplied")]
    MissingCoefficient { which: usize, dof: usize },
    #[error("program is for dimension {program}, the cell has dimension {cell}")]
    Dimension { program: usize, cell: usize },
}

fn group_recipe(group: &CompiledGroup) -> Vec<Vec<Term>> {
    let cols = group.a0.cols();
    let ranges = &group.a0.shape[group.a0.primary_rank..];
    let mut recipe = vec![Vec::new(); cols];
    for member in &group.members {
        let g = &member.geometry;
        let constant = (!g.constant.is_one()).then(|| Token::Const(g.constant.to_f64().expect("finite rational")));
        let mut alpha = vec![0; ranges.len()];
        for column in recipe.iter_mut() {
            let mut beta = vec![0; g.external_ranges.len()];
            loop {
                let mut term: Term = constant.into_iter().collect();
                term.extend(g.coefficients.iter().map(|&(w, p)| Token::Coeff(w, alpha[p])));
                term.push(Token::DetF);
                for &(r, phys) in &g.jacobian {
                    let c = match phys {
                        PhysSlot::Secondary(p) => alpha[p],
                        PhysSlot::External(b) => beta[b],
                        PhysSlot::Fixed(v) => v,
                    };
                    term.push(Token::Jinv(alpha[r], c));
                }
                column.push(term);
                if !next_multiindex(&mut beta, &g.external_ranges) {
                    break;
                }
            }
            next_multiindex(&mut alpha, ranges);
        }
    }
    recipe
}

/// Builds the program for a compiled form, dropping reference tensor
/// entries with `|A0| <= zero_tolerance * max |A0|`.
pub fn generate(name: &str, compiled: &CompiledForm, zero_tolerance: f64) -> ContractionProgram {
    let groups = compiled
        .groups
        .iter()
        .map(|group| {
            let (rows, cols) = (group.a0.rows(), group.a0.cols());
            let cutoff = zero_tolerance * group.a0.max_abs();
            let schedule = (0..rows)
                .map(|i| {
                    group.a0.values[i * cols..(i + 1) * cols]
                        .iter()
                        .enumerate()
                        .filter(|(_, v)| v.abs() > cutoff)
                        .map(|(a, &v)| (a, v))
                        .collect()
                })
                .collect();
            ProgramGroup {
                rows,
                cols,
                recipe: group_recipe(group),
                schedule,
            }
        })
        .collect();
    ContractionProgram {
        name: name.to_string(),
        shape: compiled.tensor_shape(),
        coefficient_sizes: compiled.form.coefficients.iter().map(|c| c.element.space_dimension()).collect(),
        dim: compiled.form.cell().dim(),
        zero_tolerance,
        groups,
    }
}

fn eval_token(token: Token, map: &AffineMap, coeffs: &[Vec<f64>]) -> Result<f64, InterpretError> {
    Ok(match token {
        Token::DetF => map.abs_det(),
        Token::Jinv(r, c) => map.jinv(r, c),
        Token::Coeff(which, dof) => *coeffs
            .get(which)
            .and_then(|w| w.get(dof))
            .ok_or(InterpretError::MissingCoefficient { which, dof })?,
        Token::Const(v) => v,
    })
}

/// Evaluates the geometry tensors from the recipe, then runs the schedule.
pub fn interpret(program: &ContractionProgram, map: &AffineMap, coeffs: &[Vec<f64>]) -> Result<ElementTensor, InterpretError> {
    if map.dim() != program.dim {
        return Err(InterpretError::Dimension {
            program: program.dim,
            cell: map.dim(),
        });
    }
    let mut out = ElementTensor::zeros(program.shape.clone());
    for group in &program.groups {
        let mut g = Vec::with_capacity(group.cols);
        for column in &group.recipe {
            let mut sum = 0.0;
            for term in column {
                let mut product = 1.0;
                for &t in term {
                    product *= eval_token(t, map, coeffs)?;
                }
                sum += product;
            }
            g.push(sum);
        }
        for (entry, row) in out.values.iter_mut().zip(&group.schedule) {
            *entry += row.iter().fold(0.0, |s, &(a, v)| s + v * g[a]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::ReferenceCell;
    use crate::compile::{compile, CompileOptions};
    use crate::corpus::{TestCase, LAPLACIAN_SPLIT};
    use crate::form::parse_form_file;

    fn program(case: TestCase, dim: usize, q: usize) -> (CompiledForm, ContractionProgram) {
        let c = compile(&case.form_for(dim, q), &CompileOptions::default()).unwrap();
        let p = generate(case.name(), &c, 1e-12);
        (c, p)
    }

    #[test]
    fn mass_is_one_term_per_entry() {
        let (c, p) = program(TestCase::Mass, 2, 1);
        assert_eq!(p.entries(), 9);
        assert_eq!(p.groups[0].recipe, vec![vec![vec![Token::DetF]]]);
        assert!(p.groups[0].schedule.iter().all(|r| r.len() == 1));
        let id = AffineMap::reference(ReferenceCell::Triangle);
        let a = interpret(&p, &id, &[]).unwrap();
        assert_eq!(a.values, c.groups[0].a0.values);
    }

    #[test]
    fn poisson_skips_zeros() {
        let (_, p) = program(TestCase::Poisson, 2, 1);
        assert!(p.scheduled_multiplies() < p.dense_multiplies());
        assert_eq!(p.dense_multiplies(), 36);
        // A0[i, a] = int dphi_i/dX_a0 dphi_j/dX_a1; phi_1 and phi_2 each
        // have one vanishing reference gradient component
        assert_eq!(p.scheduled_multiplies(), 16);
    }

    #[test]
    fn interpreter_matches_contraction() {
        let map = AffineMap::new(ReferenceCell::Triangle, &[vec![0.2, 0.1], vec![1.3, -0.2], vec![0.4, 0.9]]).unwrap();
        for case in [TestCase::Poisson, TestCase::NavierStokes, TestCase::Elasticity] {
            let (c, p) = program(case, 2, 2);
            let coeffs: Vec<Vec<f64>> = p
                .coefficient_sizes
                .iter()
                .map(|&n| (0..n).map(|i| (i as f64 * 0.71).cos()).collect())
                .collect();
            let a = interpret(&p, &map, &coeffs).unwrap();
            let b = c.element_tensor(&map, &coeffs).unwrap();
            assert!(a.relative_difference(&b) < 1e-12, "{case}");
        }
    }

    #[test]
    fn zero_coefficient_gives_zero_tensor() {
        let (_, p) = program(TestCase::NavierStokes, 3, 1);
        let map = AffineMap::reference(ReferenceCell::Tetrahedron);
        let a = interpret(&p, &map, &[vec![0.0; 12]]).unwrap();
        assert_eq!(a.max_abs(), 0.0);
        assert_eq!(
            interpret(&p, &map, &[]),
            Err(InterpretError::MissingCoefficient { which: 0, dof: 0 })
        );
    }

    #[test]
    fn split_laplacian_sums_member_recipes() {
        let c = compile(&parse_form_file(LAPLACIAN_SPLIT).unwrap().1, &CompileOptions::default()).unwrap();
        let p = generate("split", &c, 1e-12);
        assert_eq!(p.groups.len(), 1);
        assert!(p.groups[0].recipe.iter().all(|col| col.len() == 2));
    }
}
