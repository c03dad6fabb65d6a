//! Per-cell run time: affine maps, geometry tensors, contraction, and an
//! independent quadrature oracle for the element tensor.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::cell::{PointSet, ReferenceCell};
use crate::element::{ElementError, ElementSpec, FiniteElement, TabulatedBasis};
use crate::form::{Form, FunctionRef, IndexKind, IndexSlot};
use crate::lowering::{GeometryTensorExpr, PhysSlot};
use crate::quadrature::{required_degree, simplex_rule, QuadratureError, QuadratureRule};
use crate::reference_tensor::ReferenceTensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("expected {expected} vertices of dimension {dim}, got {got}")]
    VertexCount { expected: usize, dim: usize, got: usize },
    #[error("degenerate cell: |det F'| = {det:e}")]
    Degenerate { det: f64 },
    #[error("no data for coefficient {0}")]
    MissingCoefficient(usize),
    #[error("coefficient {which} has {got} values, its element has {expected}")]
    CoefficientLength { which: usize, expected: usize, got: usize },
    #[error("geometry tensor has {got} entries, reference tensor expects {expected}")]
    AxisMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// `x = F(X) = v0 + J X` with `J = [v1 - v0 | ... | vd - v0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub cell: ReferenceCell,
    pub vertices: Vec<Vec<f64>>,
    /// `dx/dX`.
    pub jacobian: DMatrix<f64>,
    /// `dX/dx`.
    pub jinv: DMatrix<f64>,
    /// Signed determinant of `jacobian`.
    pub det: f64,
}

impl AffineMap {
    pub fn new(cell: ReferenceCell, vertices: &[Vec<f64>]) -> Result<Self, GeometryError> {
        let d = cell.dim();
        if vertices.len() != d + 1 || vertices.iter().any(|v| v.len() != d) {
            return Err(GeometryError::VertexCount {
                expected: d + 1,
                dim: d,
                got: vertices.len(),
            });
        }
        let jacobian = DMatrix::from_fn(d, d, |r, c| vertices[c + 1][r] - vertices[0][r]);
        let det = jacobian.determinant();
        let scale = (0..d)
            .map(|c| jacobian.column(c).norm())
            .fold(0.0f64, f64::max);
        if !(det.abs() >= 1e-14 * scale.powi(d as i32)) || scale == 0.0 {
            return Err(GeometryError::Degenerate { det });
        }
        let jinv = jacobian
            .clone()
            .try_inverse()
            .ok_or(GeometryError::Degenerate { det })?;
        Ok(Self {
            cell,
            vertices: vertices.to_vec(),
            jacobian,
            jinv,
            det,
        })
    }

    /// The identity map of the reference cell.
    pub fn reference(cell: ReferenceCell) -> Self {
        Self::new(cell, &cell.vertices()).expect("reference cell is not degenerate")
    }

    pub fn dim(&self) -> usize {
        self.cell.dim()
    }

    pub fn abs_det(&self) -> f64 {
        self.det.abs()
    }

    /// `dX_r / dx_c`.
    pub fn jinv(&self, r: usize, c: usize) -> f64 {
        self.jinv[(r, c)]
    }

    pub fn map_point(&self, x_ref: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|r| self.vertices[0][r] + (0..self.dim()).map(|c| self.jacobian[(r, c)] * x_ref[c]).sum::<f64>())
            .collect()
    }

    pub fn pull_back(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|r| (0..self.dim()).map(|c| self.jinv[(r, c)] * (x[c] - self.vertices[0][c])).sum())
            .collect()
    }
}

/// Dense element tensor, row-major over the argument axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementTensor {
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl ElementTensor {
    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            values: vec![0.0; n],
        }
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        let mut flat = 0;
        for (i, n) in index.iter().zip(&self.shape) {
            flat = flat * n + i;
        }
        self.values[flat]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |self - other| / max |other|` (absolute when `other` vanishes).
    pub fn relative_difference(&self, other: &ElementTensor) -> f64 {
        assert_eq!(self.shape, other.shape, "shape mismatch");
        let diff = self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = other.max_abs();
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    }

    pub fn add_assign(&mut self, other: &ElementTensor) {
        assert_eq!(self.shape, other.shape, "shape mismatch");
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
    }
}

/// Checks that every coefficient of `form` has data of the right length.
pub fn check_coefficients(form: &Form, coeffs: &[Vec<f64>]) -> Result<(), GeometryError> {
    for (which, decl) in form.coefficients.iter().enumerate() {
        let data = coeffs.get(which).ok_or(GeometryError::MissingCoefficient(which))?;
        let expected = decl.element.space_dimension();
        if data.len() != expected {
            return Err(GeometryError::CoefficientLength {
                which,
                expected,
                got: data.len(),
            });
        }
    }
    Ok(())
}

/// Advances a row-major multiindex; returns `false` after the last one.
pub(crate) fn next_multiindex(index: &mut [usize], shape: &[usize]) -> bool {
    for a in (0..index.len()).rev() {
        index[a] += 1;
        if index[a] < shape[a] {
            return true;
        }
        index[a] = 0;
    }
    false
}

/// `G[a] = c * prod w[a] * |det F'| * sum_b' prod dX_r/dx_c`, row-major over
/// the secondary axes.
pub fn eval_geometry_tensor(
    expr: &GeometryTensorExpr,
    map: &AffineMap,
    coeffs: &[Vec<f64>],
) -> Result<Vec<f64>, GeometryError> {
    for &(which, _) in &expr.coefficients {
        if coeffs.get(which).is_none() {
            return Err(GeometryError::MissingCoefficient(which));
        }
    }
    let scale = expr.constant.to_f64().expect("finite rational") * map.abs_det();
    let size: usize = expr.secondary_ranges.iter().product();
    let mut g = Vec::with_capacity(size);
    let mut alpha = vec![0; expr.secondary_ranges.len()];
    let mut beta = vec![0; expr.external_ranges.len()];
    loop {
        let mut value = scale;
        for &(which, p) in &expr.coefficients {
            value *= coeffs[which][alpha[p]];
        }
        let mut sum = 0.0;
        loop {
            let mut term = 1.0;
            for &(r, phys) in &expr.jacobian {
                let c = match phys {
                    PhysSlot::Secondary(p) => alpha[p],
                    PhysSlot::External(b) => beta[b],
                    PhysSlot::Fixed(v) => v,
                };
                term *= map.jinv(alpha[r], c);
            }
            sum += term;
            if !next_multiindex(&mut beta, &expr.external_ranges) {
                break;
            }
        }
        g.push(value * sum);
        if !next_multiindex(&mut alpha, &expr.secondary_ranges) {
            break;
        }
    }
    Ok(g)
}

/// `A[i] = sum_a A0[i, a] G[a]` on the flattened `|I| x |A|` matrix.
pub fn contract(a0: &ReferenceTensor, g: &[f64]) -> Result<ElementTensor, GeometryError> {
    let (rows, cols) = (a0.rows(), a0.cols());
    if g.len() != cols {
        return Err(GeometryError::AxisMismatch {
            expected: cols,
            got: g.len(),
        });
    }
    let values = a0
        .values
        .chunks_exact(cols.max(1))
        .take(rows)
        .map(|row| row.iter().zip(g).fold(0.0, |s, (a, b)| s + a * b))
        .collect();
    Ok(ElementTensor {
        shape: a0.shape[..a0.primary_rank].to_vec(),
        values,
    })
}

/// The same contraction written over the multiindices themselves; sums in
/// the same order as [`contract`], so both agree bitwise.
pub fn contract_axes(a0: &ReferenceTensor, g: &[f64]) -> Result<ElementTensor, GeometryError> {
    let cols = a0.cols();
    if g.len() != cols {
        return Err(GeometryError::AxisMismatch {
            expected: cols,
            got: g.len(),
        });
    }
    let r = a0.primary_rank;
    let primary_shape = &a0.shape[..r];
    let secondary_shape = &a0.shape[r..];
    let mut out = ElementTensor::zeros(primary_shape.to_vec());
    let mut i = vec![0; r];
    let mut flat_i = 0;
    loop {
        let mut full: Vec<usize> = i.clone();
        full.extend(std::iter::repeat_n(0, secondary_shape.len()));
        let mut sum = 0.0;
        let mut flat_a = 0;
        loop {
            sum += a0.get(&full) * g[flat_a];
            flat_a += 1;
            if !next_multiindex(&mut full[r..], secondary_shape) {
                break;
            }
        }
        out.values[flat_i] = sum;
        flat_i += 1;
        if !next_multiindex(&mut i, primary_shape) {
            break;
        }
    }
    Ok(out)
}

/// Quadrature degree integrating every monomial of `form` exactly on affine cells.
pub fn oracle_degree(form: &Form) -> usize {
    form.monomials
        .iter()
        .map(|m| {
            required_degree(
                m.factors
                    .iter()
                    .map(|f| (form.element_of(f.function).degree, f.derivatives.len())),
            )
        })
        .max()
        .unwrap_or(0)
}

/// Reference-direction tabulations, computed on demand.
struct DerivativeTables<'a> {
    points: &'a PointSet,
    elements: HashMap<ElementSpec, FiniteElement>,
    tables: HashMap<(ElementSpec, Vec<usize>), TabulatedBasis>,
}

impl<'a> DerivativeTables<'a> {
    fn get(&mut self, spec: ElementSpec, dirs: &[usize]) -> Result<&TabulatedBasis, GeometryError> {
        let key = (spec, dirs.to_vec());
        if !self.tables.contains_key(&key) {
            if !self.elements.contains_key(&spec) {
                self.elements.insert(spec, FiniteElement::new(spec)?);
            }
            let table = self.elements[&spec].tabulate(self.points, dirs)?;
            self.tables.insert(key.clone(), table);
        }
        Ok(&self.tables[&key])
    }

    /// Physical derivative `d^n phi / dx_{c_1} ... dx_{c_n}` of every basis
    /// function in component `comp` at point `k`, by summing over all
    /// reference direction tuples.
    fn physical(
        &mut self,
        spec: ElementSpec,
        map: &AffineMap,
        k: usize,
        comp: usize,
        phys: &[usize],
    ) -> Result<Vec<f64>, GeometryError> {
        let d = map.dim();
        let n = spec.space_dimension();
        let mut out = vec![0.0; n];
        let mut dirs = vec![0; phys.len()];
        let shape = vec![d; phys.len()];
        loop {
            let weight: f64 = dirs.iter().zip(phys).map(|(&r, &c)| map.jinv(r, c)).product();
            if weight != 0.0 {
                let table = self.get(spec, &dirs)?;
                for (b, o) in out.iter_mut().enumerate() {
                    *o += weight * table.component_value(k, b, comp);
                }
            }
            if !next_multiindex(&mut dirs, &shape) {
                break;
            }
        }
        Ok(out)
    }
}

/// Element tensor by direct quadrature on the physical cell: basis
/// derivatives are pulled back through `J^{-1}`, coefficients are evaluated
/// as `sum_g w_g phi_g`, and every letter is summed explicitly.
pub fn oracle_element_tensor(
    form: &Form,
    map: &AffineMap,
    coeffs: &[Vec<f64>],
    rule: &QuadratureRule,
) -> Result<ElementTensor, GeometryError> {
    check_coefficients(form, coeffs)?;
    // quadrature points on K, pulled back to the reference cell
    let physical: Vec<Vec<f64>> = rule.points.iter().map(|x| map.map_point(x)).collect();
    let reference: Vec<Vec<f64>> = physical.iter().map(|x| map.pull_back(x)).collect();
    let points = PointSet::from_points(map.dim(), &reference);
    let mut tables = DerivativeTables {
        points: &points,
        elements: HashMap::new(),
        tables: HashMap::new(),
    };
    let shape = form.tensor_shape();
    let mut out = ElementTensor::zeros(shape.clone());
    let strides = {
        let mut s = vec![1; shape.len()];
        for a in (0..shape.len().saturating_sub(1)).rev() {
            s[a] = s[a + 1] * shape[a + 1];
        }
        s
    };
    for mono in &form.monomials {
        let constant = mono.constant.to_f64().expect("finite rational");
        let letters: Vec<usize> = (0..mono.indices.len())
            .filter(|&i| mono.indices[i].kind == IndexKind::Summation)
            .collect();
        let letter_ranges: Vec<usize> = letters.iter().map(|&i| mono.indices[i].range).collect();
        for k in 0..rule.len() {
            let dx = rule.weights[k] * map.abs_det() * constant;
            let mut assignment = vec![0; letters.len()];
            loop {
                let value_of = |slot: &IndexSlot| match *slot {
                    IndexSlot::Fixed(v) => v,
                    IndexSlot::Index(i) => assignment[letters.iter().position(|&l| l == i).expect("letter")],
                };
                let mut scalar = dx;
                let mut argument_values: Vec<(usize, Vec<f64>)> = Vec::new();
                for f in &mono.factors {
                    let spec = form.element_of(f.function);
                    let comp = f.component.as_ref().map(value_of).unwrap_or(0);
                    let phys: Vec<usize> = f.derivatives.iter().map(value_of).collect();
                    let values = tables.physical(spec, map, k, comp, &phys)?;
                    match f.function {
                        FunctionRef::Coefficient(c) => {
                            scalar *= values.iter().zip(&coeffs[c]).map(|(p, w)| p * w).sum::<f64>();
                        }
                        FunctionRef::Argument(a) => argument_values.push((a, values)),
                    }
                }
                argument_values.sort_by_key(|(a, _)| *a);
                if scalar != 0.0 {
                    let mut index = vec![0; shape.len()];
                    loop {
                        let mut v = scalar;
                        for (a, values) in &argument_values {
                            v *= values[index[*a]];
                        }
                        let flat: usize = index.iter().zip(&strides).map(|(i, s)| i * s).sum();
                        out.values[flat] += v;
                        if !next_multiindex(&mut index, &shape) {
                            break;
                        }
                    }
                }
                if !next_multiindex(&mut assignment, &letter_ranges) {
                    break;
                }
            }
        }
    }
    Ok(out)
}

/// [`oracle_element_tensor`] with a rule exact for `form`.
pub fn oracle_with_exact_rule(form: &Form, map: &AffineMap, coeffs: &[Vec<f64>]) -> Result<ElementTensor, GeometryError> {
    let rule = simplex_rule(form.cell(), oracle_degree(form))?;
    oracle_element_tensor(form, map, coeffs, &rule)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::{parse_form_file, simplify};
    use crate::lowering::lower_form;
    use crate::reference_tensor::{compute_reference_tensor, Algorithm, TensorBudget};

    fn form(header: &str, expr: &str) -> Form {
        parse_form_file(&format!("{header}\na = {expr}\n")).unwrap().1
    }

    const TRI: &str = "element = Lagrange(1, triangle, 1)\narguments = v, u";

    fn big_triangle() -> AffineMap {
        AffineMap::new(ReferenceCell::Triangle, &[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap()
    }

    fn per_monomial(form: &Form, map: &AffineMap, coeffs: &[Vec<f64>]) -> ElementTensor {
        let mut out = ElementTensor::zeros(form.tensor_shape());
        for l in lower_form(&simplify(form)).unwrap() {
            let (a0, _) = compute_reference_tensor(&l.reference, Algorithm::Assembled, None, TensorBudget::default()).unwrap();
            let g = eval_geometry_tensor(&l.geometry, map, coeffs).unwrap();
            out.add_assign(&contract(&a0, &g).unwrap());
        }
        out
    }

    #[test]
    fn affine_maps() {
        let id = AffineMap::reference(ReferenceCell::Triangle);
        assert_eq!(id.det, 1.0);
        let m = big_triangle();
        assert!((m.det - 4.0).abs() < 1e-15);
        assert!((m.jinv(0, 0) - 0.5).abs() < 1e-15 && m.jinv(0, 1).abs() < 1e-15);
        let flipped = AffineMap::new(ReferenceCell::Triangle, &[vec![0.0, 0.0], vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        assert!((flipped.det + 4.0).abs() < 1e-15);
        let product = &m.jacobian * &m.jinv;
        assert!((product - DMatrix::identity(2, 2)).abs().max() < 1e-12);
        assert!(matches!(
            AffineMap::new(ReferenceCell::Triangle, &[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]]),
            Err(GeometryError::Degenerate { .. })
        ));
        let x = m.map_point(&[0.25, 0.5]);
        assert_eq!(m.pull_back(&x), vec![0.25, 0.5]);
    }

    #[test]
    fn poisson_geometry_tensor_and_stiffness() {
        let f = form(TRI, "v.dx(i)*u.dx(i)*dx");
        let l = lower_form(&f).unwrap();
        let g = eval_geometry_tensor(&l[0].geometry, &big_triangle(), &[]).unwrap();
        for (a, b) in g.iter().zip([1.0, 0.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let a = per_monomial(&f, &big_triangle(), &[]);
        let expected = [1.0, -0.5, -0.5, -0.5, 0.5, 0.0, -0.5, 0.0, 0.5];
        for (x, y) in a.values.iter().zip(expected) {
            assert!((x - y).abs() < 1e-12, "{:?}", a.values);
        }
        let (a0, _) = compute_reference_tensor(&l[0].reference, Algorithm::Naive, None, TensorBudget::default()).unwrap();
        assert_eq!(contract(&a0, &g).unwrap(), contract_axes(&a0, &g).unwrap());
    }

    #[test]
    fn mass_oracle_matches_closed_form() {
        let f = form(TRI, "v*u*dx");
        let a = oracle_with_exact_rule(&f, &AffineMap::reference(ReferenceCell::Triangle), &[]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 2.0 } else { 1.0 } / 24.0;
                assert!((a.get(&[i, j]) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn contraction_matches_oracle_for_coefficient_forms() {
        let f = form(
            "element = Lagrange(2, triangle, 2)\narguments = v, u\ncoefficients = w",
            "v[i]*w[j]*u[i].dx(j)*dx + 0.5*v[i].dx(j)*u[i].dx(j)*w[0]*dx",
        );
        let map = AffineMap::new(ReferenceCell::Triangle, &[vec![0.3, -0.2], vec![1.7, 0.4], vec![0.1, 1.1]]).unwrap();
        let w: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
        let oracle = oracle_with_exact_rule(&f, &map, &[w.clone()]).unwrap();
        let tensor = per_monomial(&f, &map, &[w]);
        assert!(tensor.relative_difference(&oracle) < 1e-12);
    }

    #[test]
    fn orientation_does_not_matter() {
        let f = form("element = Lagrange(2, triangle, 1)\narguments = v, u", "v.dx(i)*u.dx(i)*dx");
        let a = AffineMap::new(ReferenceCell::Triangle, &[vec![0.0, 0.0], vec![1.0, 0.2], vec![0.3, 0.9]]).unwrap();
        let b = AffineMap::new(ReferenceCell::Triangle, &[vec![0.0, 0.0], vec![0.3, 0.9], vec![1.0, 0.2]]).unwrap();
        let ta = per_monomial(&f, &a, &[]);
        let tb = per_monomial(&f, &b, &[]);
        // swapping the last two vertices swaps the corresponding dofs
        assert!(ta.max_abs() > 0.0);
        let trace_a: f64 = (0..6).map(|i| ta.get(&[i, i])).sum();
        let trace_b: f64 = (0..6).map(|i| tb.get(&[i, i])).sum();
        assert!((trace_a - trace_b).abs() < 1e-12);
        assert!(trace_a > 0.0);
    }

    #[test]
    fn missing_coefficient_is_reported() {
        let f = form(
            "element = Lagrange(1, triangle, 1)\narguments = v, u\ncoefficients = w",
            "w*v*u*dx",
        );
        let l = lower_form(&f).unwrap();
        let map = big_triangle();
        assert_eq!(
            eval_geometry_tensor(&l[0].geometry, &map, &[]),
            Err(GeometryError::MissingCoefficient(0))
        );
        assert!(matches!(
            oracle_with_exact_rule(&f, &map, &[vec![1.0; 2]]),
            Err(GeometryError::CoefficientLength { .. })
        ));
    }
}
