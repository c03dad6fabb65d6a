//! Tabulates Lagrange basis functions and their derivatives.
//!
//! Run with `cargo run --example lagrange_basis`.

use tensorform::element::lagrange_nodes;
use tensorform::{ElementSpec, FiniteElement, PointSet, ReferenceCell};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ElementSpec::scalar(2, ReferenceCell::Triangle)?;
    println!("{}", spec.description());
    let element = FiniteElement::new(spec)?;
    for (k, x) in lagrange_nodes(ReferenceCell::Triangle, 2).iter().enumerate() {
        println!("  node {k}: {x:?}");
    }

    // nodal basis: phi_j(x_i) = delta_ij
    let values = element.tabulate(element.nodes(), &[])?;
    for k in 0..values.num_points {
        let row: Vec<String> = values.row(k).iter().map(|v| format!("{v:5.2}")).collect();
        println!("  phi(x_{k}) = [{}]", row.join(", "));
    }

    // derivatives along X_0 at the centroid; they sum to zero
    let centroid = PointSet::from_points(2, &[[1.0 / 3.0, 1.0 / 3.0]]);
    let dx = element.tabulate(&centroid, &[0])?;
    println!("d/dX0 at the centroid: {:?}", dx.row(0));
    println!("sum: {:.1e}", dx.row(0).iter().sum::<f64>());

    // vector elements repeat the scalar basis once per component
    let vector = FiniteElement::new(ElementSpec::vector(1, ReferenceCell::Tetrahedron)?)?;
    let v = vector.tabulate(&PointSet::from_points(3, &[[0.25, 0.25, 0.25]]), &[])?;
    for dof in [0, 4, 8] {
        let comps: Vec<f64> = (0..3).map(|c| v.component_value(0, dof, c)).collect();
        println!("vector dof {dof} at the centroid: {comps:?}");
    }
    Ok(())
}
