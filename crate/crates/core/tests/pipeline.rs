//! Property tests across the whole pipeline.

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use tensorform::codegen::{generate, interpret, ContractionProgram};
use tensorform::compile::{compile, CompileOptions};
use tensorform::corpus::TestCase;
use tensorform::element::lagrange_nodes;
use tensorform::form::{parse_form_file, simplify};
use tensorform::geometry::{
    contract, contract_axes, eval_geometry_tensor, oracle_with_exact_rule, AffineMap, ElementTensor,
};
use tensorform::lowering::lower_form;
use tensorform::reference_tensor::{compute_reference_tensor, Algorithm, TensorBudget};
use tensorform::signature::factorize;
use tensorform::verify::{random_affine_map, random_coefficients, seeded_rng};
use tensorform::{simplex_rule, ElementSpec, FiniteElement, PointSet, ReferenceCell};

fn cell_strategy() -> impl Strategy<Value = ReferenceCell> {
    prop_oneof![
        Just(ReferenceCell::Interval),
        Just(ReferenceCell::Triangle),
        Just(ReferenceCell::Tetrahedron)
    ]
}

/// A point inside `cell` from barycentric weights.
fn point_in(cell: ReferenceCell, raw: &[f64]) -> Vec<f64> {
    let d = cell.dim();
    let weights: Vec<f64> = raw[..=d].iter().map(|w| w + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    weights[1..].iter().map(|w| w / total).collect()
}

fn case_strategy() -> impl Strategy<Value = TestCase> {
    prop::sample::select(TestCase::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn basis_partitions_unity(cell in cell_strategy(), q in 1usize..=6, raw in prop::collection::vec(0.0f64..1.0, 4)) {
        let element = FiniteElement::new(ElementSpec::scalar(q, cell).unwrap()).unwrap();
        let x = point_in(cell, &raw);
        let values = element.eval_basis(&x, &[]).unwrap();
        prop_assert!((values.iter().sum::<f64>() - 1.0).abs() < 1e-11);
        for dir in 0..cell.dim() {
            let dv = element.eval_basis(&x, &[dir]).unwrap();
            prop_assert!(dv.iter().sum::<f64>().abs() < 1e-9);
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials(
        cell in cell_strategy(),
        q in 1usize..=5,
        coeffs in prop::collection::vec(-1.0f64..1.0, 4),
        raw in prop::collection::vec(0.0f64..1.0, 4),
    ) {
        // p(x) = c0 + c1 x0 + c2 x_last^q + c3 x0 x_last^(q-1), degree q
        let d = cell.dim();
        let p = |x: &[f64]| {
            coeffs[0] + coeffs[1] * x[0] + coeffs[2] * x[d - 1].powi(q as i32) + coeffs[3] * x[0] * x[d - 1].powi(q as i32 - 1)
        };
        let element = FiniteElement::new(ElementSpec::scalar(q, cell).unwrap()).unwrap();
        let nodal: Vec<f64> = lagrange_nodes(cell, q).iter().map(p).collect();
        let x = point_in(cell, &raw);
        let phi = element.eval_basis(&x, &[]).unwrap();
        let interpolated: f64 = phi.iter().zip(&nodal).map(|(a, b)| a * b).sum();
        prop_assert!((interpolated - p(&x)).abs() < 1e-10);
    }

    #[test]
    fn derivatives_match_finite_differences(
        cell in cell_strategy(),
        q in 1usize..=5,
        raw in prop::collection::vec(0.0f64..1.0, 4),
        dir in 0usize..3,
    ) {
        let dir = dir % cell.dim();
        let element = FiniteElement::new(ElementSpec::scalar(q, cell).unwrap()).unwrap();
        let x = point_in(cell, &raw);
        let h = 1e-5;
        let mut plus = x.clone();
        plus[dir] += h;
        let mut minus = x.clone();
        minus[dir] -= h;
        let exact = element.eval_basis(&x, &[dir]).unwrap();
        let fp = element.eval_basis(&plus, &[]).unwrap();
        let fm = element.eval_basis(&minus, &[]).unwrap();
        for j in 0..exact.len() {
            let fd = (fp[j] - fm[j]) / (2.0 * h);
            prop_assert!((fd - exact[j]).abs() < 1e-5 * (1.0 + exact[j].abs()), "basis {j}: {fd} vs {}", exact[j]);
        }
    }

    #[test]
    fn quadrature_integrates_products_of_basis_functions(cell in cell_strategy(), q in 1usize..=4) {
        // int phi_i phi_j summed over all i, j is the cell volume
        let element = FiniteElement::new(ElementSpec::scalar(q, cell).unwrap()).unwrap();
        let rule = simplex_rule(cell, 2 * q).unwrap();
        let t = element.tabulate(&rule.points, &[]).unwrap();
        let mut total = 0.0;
        for k in 0..rule.len() {
            let s: f64 = t.row(k).iter().sum();
            total += rule.weights[k] * s * s;
        }
        prop_assert!((total - cell.volume()).abs() < 1e-13);
    }

    #[test]
    fn algorithms_agree_and_assembled_is_cheaper(case in case_strategy(), q in 1usize..=2) {
        for l in lower_form(&simplify(&case.form_for(2, q))).unwrap() {
            let budget = TensorBudget::default();
            let (a, sa) = compute_reference_tensor(&l.reference, Algorithm::Naive, None, budget).unwrap();
            let (b, sb) = compute_reference_tensor(&l.reference, Algorithm::Assembled, None, budget).unwrap();
            prop_assert!(b.relative_difference(&a) < 1e-12);
            prop_assert!(sb.multiplies <= sa.multiplies);
        }
    }

    #[test]
    fn generated_code_matches_oracle(case in case_strategy(), dim in 2usize..=3, seed in any::<u64>()) {
        let compiled = compile(&case.form_for(dim, 1), &CompileOptions::default()).unwrap();
        let program = generate(case.name(), &compiled, 1e-12);
        let mut rng = seeded_rng(seed);
        let map = random_affine_map(compiled.form.cell(), &mut rng);
        let coeffs = random_coefficients(&compiled.form, &mut rng);
        let oracle = oracle_with_exact_rule(&compiled.form, &map, &coeffs).unwrap();
        let generated = interpret(&program, &map, &coeffs).unwrap();
        prop_assert!(generated.relative_difference(&oracle) < 1e-10);
        // zero skipping changes nothing beyond roundoff
        let exact = interpret(&generate(case.name(), &compiled, 0.0), &map, &coeffs).unwrap();
        prop_assert!(generated.relative_difference(&exact) < 1e-11);
        prop_assert!(program.scheduled_multiplies() <= program.dense_multiplies());
    }

    #[test]
    fn factoring_preserves_element_tensors(
        constants in prop::collection::vec(1i32..=4, 3),
        seed in any::<u64>(),
    ) {
        let source = format!(
            "element = Lagrange(2, triangle, 1)\narguments = v, u\na = {}*v.dx(0)*u.dx(0)*dx + {}*v.dx(1)*u.dx(1)*dx + {}*u.dx(0)*v.dx(1)*dx + v.dx(0)*u.dx(1)*dx\n",
            constants[0], constants[1], constants[2]
        );
        let form = parse_form_file(&source).unwrap().1;
        let compiled = compile(&form, &CompileOptions::default()).unwrap();
        let map = random_affine_map(ReferenceCell::Triangle, &mut seeded_rng(seed));
        let grouped = compiled.element_tensor(&map, &[]).unwrap();
        let mut direct = ElementTensor::zeros(grouped.shape.clone());
        for l in &compiled.lowered {
            let (a0, _) = compute_reference_tensor(&l.reference, Algorithm::Assembled, None, TensorBudget::default()).unwrap();
            let g = eval_geometry_tensor(&l.geometry, &map, &[]).unwrap();
            direct.add_assign(&contract(&a0, &g).unwrap());
        }
        let scale = direct.max_abs().max(1.0);
        let diff = grouped.values.iter().zip(&direct.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(diff / scale < 1e-12);
        prop_assert!(factorize(&compiled.lowered).len() <= 1);
    }

    #[test]
    fn reference_tensor_is_reused_across_cells(seeds in prop::collection::vec(any::<u64>(), 5)) {
        let compiled = compile(&TestCase::Poisson.form_for(2, 2), &CompileOptions::default()).unwrap();
        for seed in seeds {
            let map = random_affine_map(ReferenceCell::Triangle, &mut seeded_rng(seed));
            let a = compiled.element_tensor(&map, &[]).unwrap();
            let b = oracle_with_exact_rule(&compiled.form, &map, &[]).unwrap();
            prop_assert!(a.relative_difference(&b) < 1e-10);
        }
    }

    #[test]
    fn poisson_is_positive_semidefinite_with_constant_nullspace(q in 1usize..=3, seed in any::<u64>()) {
        let compiled = compile(&TestCase::Poisson.form_for(2, q), &CompileOptions::default()).unwrap();
        let map = random_affine_map(ReferenceCell::Triangle, &mut seeded_rng(seed));
        let a = compiled.element_tensor(&map, &[]).unwrap();
        let n = a.shape[0];
        let m = DMatrix::from_row_slice(n, n, &a.values);
        prop_assert!((&m - m.transpose()).abs().max() < 1e-12 * m.abs().max());
        let eig = SymmetricEigen::new(m.clone());
        prop_assert!(eig.eigenvalues.iter().all(|&l| l >= -1e-10));
        let row_sums = m * nalgebra::DVector::from_element(n, 1.0);
        prop_assert!(row_sums.abs().max() < 1e-10);
        prop_assert_eq!(eig.eigenvalues.iter().filter(|l| l.abs() < 1e-9).count(), 1);
    }

    #[test]
    fn vertex_order_only_permutes_p1_tensors(seed in any::<u64>(), case in prop::sample::select(vec![TestCase::Mass, TestCase::Poisson])) {
        let compiled = compile(&case.form(), &CompileOptions::default()).unwrap();
        let map = random_affine_map(ReferenceCell::Triangle, &mut seeded_rng(seed));
        let sigma = [2usize, 0, 1];
        let permuted: Vec<Vec<f64>> = sigma.iter().map(|&v| map.vertices[v].clone()).collect();
        let other = AffineMap::new(ReferenceCell::Triangle, &permuted).unwrap();
        let a = compiled.element_tensor(&map, &[]).unwrap();
        let b = compiled.element_tensor(&other, &[]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((b.get(&[i, j]) - a.get(&[sigma[i], sigma[j]])).abs() < 1e-12 * a.max_abs());
            }
        }
    }

    #[test]
    fn flattened_and_axis_contractions_agree_bitwise(case in case_strategy(), seed in any::<u64>()) {
        let form = case.form_for(2, 1);
        let mut rng = seeded_rng(seed);
        let map = random_affine_map(ReferenceCell::Triangle, &mut rng);
        let coeffs = random_coefficients(&form, &mut rng);
        for l in lower_form(&simplify(&form)).unwrap() {
            let (a0, _) = compute_reference_tensor(&l.reference, Algorithm::Assembled, None, TensorBudget::default()).unwrap();
            let g = eval_geometry_tensor(&l.geometry, &map, &coeffs).unwrap();
            prop_assert_eq!(contract(&a0, &g).unwrap(), contract_axes(&a0, &g).unwrap());
        }
    }

    #[test]
    fn printing_round_trips_and_simplify_is_idempotent(case in case_strategy(), scale in 1i32..=5) {
        let form = case.form();
        let scaled = format!(
            "element = {}\narguments = v, u\ncoefficients = {}\na = {scale}*({})\n",
            form.arguments[0].element,
            form.coefficients.iter().map(|c| c.name.clone()).collect::<Vec<_>>().join(", "),
            form.expression_string()
        );
        let reparsed = parse_form_file(&scaled).unwrap().1;
        prop_assert_eq!(reparsed.monomials.len(), form.monomials.len());
        let again = parse_form_file(&reparsed.to_source()).unwrap().1;
        prop_assert_eq!(&again, &reparsed);
        let once = simplify(&reparsed);
        prop_assert_eq!(simplify(&once), once);
    }

    #[test]
    fn programs_survive_serialization(case in case_strategy(), q in 1usize..=2) {
        let compiled = compile(&case.form_for(2, q), &CompileOptions::default()).unwrap();
        let program = generate(case.name(), &compiled, 1e-12);
        let text = program.to_text();
        prop_assert_eq!(ContractionProgram::from_text(&text).unwrap(), program);
    }
}

#[test]
fn equal_hard_signatures_give_bitwise_equal_tensors() {
    let form = parse_form_file(
        "element = Lagrange(2, triangle, 1)\narguments = v, u\na = 3*v.dx(0)*u.dx(0)*dx + v.dx(1)*u.dx(1)*dx\n",
    )
    .unwrap()
    .1;
    let lowered = lower_form(&form).unwrap();
    let groups = factorize(&lowered);
    assert_eq!(groups.len(), 1);
    let budget = TensorBudget::default();
    let (a, _) = compute_reference_tensor(&lowered[0].reference, Algorithm::Assembled, None, budget).unwrap();
    let (b, _) = compute_reference_tensor(&lowered[1].reference, Algorithm::Assembled, None, budget).unwrap();
    assert_eq!(a.values, b.values);
}

#[test]
fn quadrature_points_stay_inside() {
    for cell in [ReferenceCell::Triangle, ReferenceCell::Tetrahedron] {
        let rule = simplex_rule(cell, 9).unwrap();
        let points: &PointSet = &rule.points;
        assert!(points.iter().all(|x| cell.contains(x, 0.0)));
    }
}
