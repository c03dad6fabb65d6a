//! Dense assembly of mass and stiffness matrices on the unit square.
//!
//! Run with `cargo run --example assemble_unit_square`.

use tensorform::assembly::{assemble, Mesh};
use tensorform::compile::{compile, CompileOptions};
use tensorform::corpus::TestCase;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = Mesh::unit_square();
    print!("{}", mesh.to_text());
    for (case, q) in [(TestCase::Mass, 1), (TestCase::Poisson, 1), (TestCase::Poisson, 2)] {
        let compiled = compile(&case.form_for(2, q), &CompileOptions::default())?;
        let a = assemble(&mesh, &compiled, &[])?;
        let n = a.shape[0];
        println!("{case} P{q}: {n}x{n}, total {:.15}", a.values.iter().sum::<f64>());
        for row in a.values.chunks(n) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:7.4}")).collect();
            println!("  [{}]  row sum {:+.1e}", cells.join(" "), row.iter().sum::<f64>());
        }
    }
    Ok(())
}
