//! The compilation pipeline: simplify, lower, factor, compute `A0` per group.

use thiserror::Error;

use crate::form::{simplify, Form};
use crate::geometry::{check_coefficients, contract, eval_geometry_tensor, AffineMap, ElementTensor, GeometryError};
use crate::lowering::{lower_form, LoweredMonomial, LoweringError};
use crate::reference_tensor::{
    compute_reference_tensor, Algorithm, ComputeStats, ReferenceTensor, ReferenceTensorError, TensorBudget,
};
use crate::signature::{factorize, GroupMember, Signature};

/// Entries with `|A0| <= ZERO_TOLERANCE * max |A0|` are left out of generated code.
pub const ZERO_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error(transparent)]
    Lowering(#[from] LoweringError),
    #[error(transparent)]
    ReferenceTensor(#[from] ReferenceTensorError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompileOptions {
    pub algorithm: Algorithm,
    /// Overrides the exact quadrature degree.
    pub quad_degree: Option<usize>,
    pub budget: TensorBudget,
    pub zero_tolerance: f64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Assembled,
            quad_degree: None,
            budget: TensorBudget::default(),
            zero_tolerance: ZERO_TOLERANCE,
        }
    }
}

/// One reference tensor and the monomials that use it.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledGroup {
    pub signature: Signature,
    pub representative: usize,
    pub a0: ReferenceTensor,
    pub stats: ComputeStats,
    pub members: Vec<GroupMember>,
}

impl CompiledGroup {
    /// Sum of the members' geometry tensors, on the representative's axes.
    pub fn geometry_tensor(&self, map: &AffineMap, coeffs: &[Vec<f64>]) -> Result<Vec<f64>, GeometryError> {
        let mut g = vec![0.0; self.a0.cols()];
        for m in &self.members {
            for (a, b) in g.iter_mut().zip(eval_geometry_tensor(&m.geometry, map, coeffs)?) {
                *a += b;
            }
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledForm {
    /// The simplified form.
    pub form: Form,
    pub lowered: Vec<LoweredMonomial>,
    pub groups: Vec<CompiledGroup>,
}

impl CompiledForm {
    pub fn tensor_shape(&self) -> Vec<usize> {
        self.form.tensor_shape()
    }

    /// `A^K = sum_groups A0_group : (sum_members G_member)`.
    pub fn element_tensor(&self, map: &AffineMap, coeffs: &[Vec<f64>]) -> Result<ElementTensor, GeometryError> {
        check_coefficients(&self.form, coeffs)?;
        let mut out = ElementTensor::zeros(self.tensor_shape());
        for group in &self.groups {
            let g = group.geometry_tensor(map, coeffs)?;
            out.add_assign(&contract(&group.a0, &g)?);
        }
        Ok(out)
    }

    /// Total multiplications spent computing reference tensors.
    pub fn multiplies(&self) -> u64 {
        self.groups.iter().map(|g| g.stats.multiplies).sum()
    }

    /// Total number of reference tensor entries.
    pub fn reference_entries(&self) -> usize {
        self.groups.iter().map(|g| g.a0.len()).sum()
    }
}

/// Simplifies and lowers `form`, then factors and computes the reference tensors.
pub fn compile(form: &Form, options: &CompileOptions) -> Result<CompiledForm, CompileError> {
    let form = simplify(form);
    let lowered = lower_form(&form)?;
    let factored = factorize(&lowered);
    // refuse before any work if one of the tensors is too large
    for g in &factored {
        options.budget.check(lowered[g.representative].reference.entry_count())?;
    }
    let groups = factored
        .into_iter()
        .map(|g| {
            let (a0, stats) = compute_reference_tensor(
                &lowered[g.representative].reference,
                options.algorithm,
                options.quad_degree,
                options.budget,
            )?;
            Ok(CompiledGroup {
                signature: g.signature,
                representative: g.representative,
                a0,
                stats,
                members: g.members,
            })
        })
        .collect::<Result<Vec<_>, CompileError>>()?;
    Ok(CompiledForm { form, lowered, groups })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::ReferenceCell;
    use crate::corpus::{TestCase, LAPLACIAN_SPLIT};
    use crate::form::parse_form_file;
    use crate::geometry::oracle_with_exact_rule;

    #[test]
    fn split_laplacian_compiles_to_poisson() {
        let split = parse_form_file(LAPLACIAN_SPLIT).unwrap().1;
        let c = compile(&split, &CompileOptions::default()).unwrap();
        assert_eq!(c.groups.len(), 1);
        assert_eq!(c.groups[0].members.len(), 2);
        let poisson = compile(&TestCase::Poisson.form(), &CompileOptions::default()).unwrap();
        let map = AffineMap::new(ReferenceCell::Triangle, &[vec![0.1, 0.0], vec![1.0, 0.3], vec![0.2, 0.8]]).unwrap();
        let a = c.element_tensor(&map, &[]).unwrap();
        let b = poisson.element_tensor(&map, &[]).unwrap();
        assert!(a.relative_difference(&b) < 1e-13);
    }

    #[test]
    fn navier_stokes_matches_oracle() {
        let f = TestCase::NavierStokes.form_for(3, 1);
        let c = compile(&f, &CompileOptions::default()).unwrap();
        let map = AffineMap::new(
            ReferenceCell::Tetrahedron,
            &[vec![0.0, 0.1, 0.0], vec![1.0, 0.2, 0.1], vec![0.1, 0.9, 0.0], vec![0.2, 0.3, 1.2]],
        )
        .unwrap();
        let w: Vec<f64> = (0..12).map(|i| ((i * 7 % 5) as f64) - 1.5).collect();
        let a = c.element_tensor(&map, &[w.clone()]).unwrap();
        let b = oracle_with_exact_rule(&c.form, &map, &[w]).unwrap();
        assert!(a.relative_difference(&b) < 1e-12);
    }

    #[test]
    fn memory_guard_refuses_before_computing() {
        let options = CompileOptions {
            budget: TensorBudget { max_entries: 1_000_000 },
            ..CompileOptions::default()
        };
        match compile(&TestCase::Stabilization.form(), &options) {
            Err(CompileError::ReferenceTensor(ReferenceTensorError::MemoryGuard { required, .. })) => {
                assert_eq!(required, 1_679_616)
            }
            other => panic!("{other:?}"),
        }
    }
}
