//! Element tensors on a physical cell: contraction of the reference tensor
//! with the geometry tensor, checked against direct quadrature.
//!
//! Run with `cargo run --release --example element_tensor`.

use tensorform::compile::{compile, CompileOptions};
use tensorform::corpus::TestCase;
use tensorform::geometry::{oracle_with_exact_rule, AffineMap};
use tensorform::ReferenceCell;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let map = AffineMap::new(ReferenceCell::Triangle, &[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0]])?;
    let poisson = compile(&TestCase::Poisson.form(), &CompileOptions::default())?;
    let a = poisson.element_tensor(&map, &[])?;
    println!("P1 stiffness on (0,0),(2,0),(0,2):");
    for row in a.values.chunks(3) {
        println!("  {row:?}");
    }

    let map = AffineMap::new(
        ReferenceCell::Tetrahedron,
        &[vec![0.1, 0.0, 0.2], vec![1.2, 0.1, 0.0], vec![0.0, 0.9, 0.3], vec![0.2, 0.2, 1.1]],
    )?;
    for case in TestCase::ALL {
        let compiled = compile(&case.form(), &CompileOptions::default())?;
        let coeffs: Vec<Vec<f64>> = compiled
            .form
            .coefficients
            .iter()
            .map(|c| (0..c.element.space_dimension()).map(|i| (0.3 * i as f64).sin()).collect())
            .collect();
        let map = if compiled.form.cell() == ReferenceCell::Triangle {
            AffineMap::new(ReferenceCell::Triangle, &[vec![0.3, 0.1], vec![1.4, 0.2], vec![0.5, 1.3]])?
        } else {
            map.clone()
        };
        let contracted = compiled.element_tensor(&map, &coeffs)?;
        let oracle = oracle_with_exact_rule(&compiled.form, &map, &coeffs)?;
        println!(
            "{case:<14} shape {:?}: contraction vs quadrature {:.1e}",
            contracted.shape,
            contracted.relative_difference(&oracle)
        );
    }
    Ok(())
}
