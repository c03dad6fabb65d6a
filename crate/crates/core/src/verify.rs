//! Seeded cross-checks of generated programs against the quadrature oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assembly::Mesh;
use crate::cell::ReferenceCell;
use crate::codegen::{interpret, ContractionProgram, InterpretError};
use crate::form::Form;
use crate::geometry::{oracle_degree, oracle_element_tensor, AffineMap, GeometryError};
use crate::quadrature::simplex_rule;

/// Tolerance for agreement between a program and the oracle.
pub const VERIFY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("program computes a tensor of shape {program:?}, the form has shape {form:?}")]
    Shape { program: Vec<usize>, form: Vec<usize> },
    #[error("mesh dimension {mesh} does not match the form's cell ({cell})")]
    Dimension { mesh: usize, cell: ReferenceCell },
    #[error(transparent)]
    Interpret(#[from] InterpretError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyReport {
    pub cells: usize,
    pub max_relative_error: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.max_relative_error <= VERIFY_TOLERANCE
    }
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random, reasonably shaped affine cell: a perturbed and scaled copy of
/// the reference cell at a random offset.
pub fn random_affine_map<R: Rng>(cell: ReferenceCell, rng: &mut R) -> AffineMap {
    let d = cell.dim();
    loop {
        let scale = rng.gen_range(0.3..3.0);
        let origin: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut vertices = vec![origin.clone()];
        for c in 0..d {
            let v = (0..d)
                .map(|r| origin[r] + scale * (f64::from(u8::from(r == c)) + rng.gen_range(-0.45..0.45)))
                .collect();
            vertices.push(v);
        }
        if rng.gen_bool(0.5) {
            vertices.swap(0, d);
        }
        if let Ok(map) = AffineMap::new(cell, &vertices) {
            // keep cells away from degeneracy
            if map.abs_det() > 0.1 * scale.powi(d as i32) {
                return map;
            }
        }
    }
}

/// Uniform values in `[-1, 1]` for every coefficient's local expansion.
pub fn random_coefficients<R: Rng>(form: &Form, rng: &mut R) -> Vec<Vec<f64>> {
    form.coefficients
        .iter()
        .map(|c| (0..c.element.space_dimension()).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect()
}

fn check_shape(program: &ContractionProgram, form: &Form) -> Result<(), VerifyError> {
    if program.shape != form.tensor_shape() {
        return Err(VerifyError::Shape {
            program: program.shape.clone(),
            form: form.tensor_shape(),
        });
    }
    Ok(())
}

/// Largest relative difference between `interpret(program)` and the oracle
/// over the given cells, each with fresh random coefficients.
pub fn compare_on_maps<R: Rng>(
    program: &ContractionProgram,
    form: &Form,
    maps: &[AffineMap],
    rng: &mut R,
) -> Result<VerifyReport, VerifyError> {
    check_shape(program, form)?;
    let rule = simplex_rule(form.cell(), oracle_degree(form)).map_err(GeometryError::from)?;
    let mut worst = 0.0f64;
    for map in maps {
        let coeffs = random_coefficients(form, rng);
        let oracle = oracle_element_tensor(form, map, &coeffs, &rule)?;
        let generated = interpret(program, map, &coeffs)?;
        let err = generated.relative_difference(&oracle);
        worst = if err.is_nan() { f64::INFINITY } else { worst.max(err) };
    }
    Ok(VerifyReport {
        cells: maps.len(),
        max_relative_error: worst,
    })
}

/// Checks `program` on `count` random cells drawn from `seed`.
pub fn verify_random(program: &ContractionProgram, form: &Form, count: usize, seed: u64) -> Result<VerifyReport, VerifyError> {
    let mut rng = seeded_rng(seed);
    let maps: Vec<AffineMap> = (0..count).map(|_| random_affine_map(form.cell(), &mut rng)).collect();
    compare_on_maps(program, form, &maps, &mut rng)
}

/// Checks `program` on every cell of `mesh`.
pub fn verify_mesh(program: &ContractionProgram, form: &Form, mesh: &Mesh, seed: u64) -> Result<VerifyReport, VerifyError> {
    if mesh.dim != form.cell().dim() {
        return Err(VerifyError::Dimension {
            mesh: mesh.dim,
            cell: form.cell(),
        });
    }
    let maps = (0..mesh.cells.len())
        .map(|c| mesh.cell_map(c))
        .collect::<Result<Vec<_>, _>>()?;
    compare_on_maps(program, form, &maps, &mut seeded_rng(seed))
}
