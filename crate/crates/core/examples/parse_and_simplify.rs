//! Parses a form, expands it into monomials, and merges equal terms.
//!
//! Run with `cargo run --example parse_and_simplify`.

use tensorform::corpus::TestCase;
use tensorform::form::{canonical_key, parse_form_file, simplify};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = TestCase::Elasticity.source();
    println!("{source}");
    let (_, form) = parse_form_file(source)?;
    println!("expanded into {} monomials:\n  {form}", form.monomials.len());

    let simple = simplify(&form);
    println!("simplified into {} monomials:\n  {simple}", simple.monomials.len());
    for m in &simple.monomials {
        println!("  key {}", canonical_key(m));
    }

    // errors carry a location
    let bad = "element = Lagrange(1, triangle, 1)\narguments = v, u\na = v*u*u*dx\n";
    if let Err(e) = parse_form_file(bad) {
        println!("error: {e}");
    }
    Ok(())
}
