//! Signatures and the factoring of shared reference tensors.
//!
//! Run with `cargo run --example signatures`.

use tensorform::corpus::{TestCase, LAPLACIAN_SPLIT};
use tensorform::form::{parse_form_file, simplify};
use tensorform::lowering::lower_form;
use tensorform::signature::{factorize, Signature};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let poisson = lower_form(&TestCase::Poisson.form())?;
    let s = Signature::of(&poisson[0].reference);
    println!("Poisson\n  hard: {}\n  soft: {}", s.hard, s.soft);

    for (name, source) in [("split Laplacian", LAPLACIAN_SPLIT), ("elasticity", TestCase::Elasticity.source())] {
        let form = simplify(&parse_form_file(source)?.1);
        let lowered = lower_form(&form)?;
        let groups = factorize(&lowered);
        println!("{name}: {} monomials, {} reference tensors", lowered.len(), groups.len());
        for g in &groups {
            let members: Vec<String> = g.members.iter().map(|m| format!("{} {:?}", m.monomial, m.map)).collect();
            println!("  representative {}: members [{}]", g.representative, members.join(", "));
            println!("    {}", g.signature.soft);
        }
    }

    // a secondary-axis swap: the second term is the first with the
    // reference directions exchanged
    let swapped = "element = Lagrange(1, triangle, 1)\narguments = v, u\na = v.dx(0)*u.dx(1)*dx + u.dx(0)*v.dx(1)*dx\n";
    let lowered = lower_form(&parse_form_file(swapped)?.1)?;
    let groups = factorize(&lowered);
    println!("swapped derivatives: {} group(s), member maps {:?}", groups.len(), groups[0].members.iter().map(|m| &m.map).collect::<Vec<_>>());
    Ok(())
}
