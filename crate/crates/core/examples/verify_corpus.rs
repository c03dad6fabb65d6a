//! Checks generated programs for the whole corpus against direct quadrature
//! on seeded random cells.
//!
//! Run with `cargo run --release --example verify_corpus`.

use tensorform::codegen::generate;
use tensorform::compile::{compile, CompileOptions};
use tensorform::corpus::TestCase;
use tensorform::verify::verify_random;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for case in TestCase::ALL {
        for (dim, q) in [(2, 1), (2, 2), (3, 1)] {
            let compiled = compile(&case.form_for(dim, q), &CompileOptions::default())?;
            let program = generate(case.name(), &compiled, 1e-12);
            let report = verify_random(&program, &compiled.form, 10, 7)?;
            println!(
                "{case:<14} dim {dim} q {q}: max relative error {:.1e} over {} cells",
                report.max_relative_error, report.cells
            );
        }
    }
    Ok(())
}
