//! Collapsed-coordinate Gauss-Jacobi quadrature on simplices.
//!
//! Run with `cargo run --example simplex_quadrature`.

use tensorform::quadrature::monomial_integral;
use tensorform::{gauss_jacobi, simplex_rule, ReferenceCell};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rule = gauss_jacobi(3, 1)?;
    println!("Gauss-Jacobi n=3, weight (1-x):");
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        println!("  x = {x:+.15}  w = {w:.15}");
    }

    for cell in [ReferenceCell::Interval, ReferenceCell::Triangle, ReferenceCell::Tetrahedron] {
        let rule = simplex_rule(cell, 6)?;
        let volume: f64 = rule.weights.iter().sum();
        println!("{cell}: {} points, weights sum to {volume:.16} (volume {})", rule.len(), cell.volume());
    }

    // x^2 y^3 z on the tetrahedron, exactly: 2! 3! 1! / (2+3+1+3)!
    let rule = simplex_rule(ReferenceCell::Tetrahedron, 6)?;
    let approx = rule.integrate(|x| x[0].powi(2) * x[1].powi(3) * x[2]);
    let exact = monomial_integral(&[2, 3, 1]);
    println!("int x^2 y^3 z = {approx:.17e} (exact {exact:.17e})");
    Ok(())
}
