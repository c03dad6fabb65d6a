//! Generates, stores, renders and runs contraction programs.
//!
//! Run with `cargo run --example codegen`.

use tensorform::codegen::{generate, interpret, render_c_like, ContractionProgram};
use tensorform::compile::{compile, CompileOptions};
use tensorform::corpus::TestCase;
use tensorform::geometry::AffineMap;
use tensorform::ReferenceCell;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let compiled = compile(&TestCase::Poisson.form(), &CompileOptions::default())?;
    let program = generate("poisson", &compiled, 1e-12);
    println!(
        "{} of {} multiply-adds kept after dropping zeros\n",
        program.scheduled_multiplies(),
        program.dense_multiplies()
    );
    print!("{}", render_c_like(&program));

    let text = program.to_text();
    println!("\n{text}");
    let loaded = ContractionProgram::from_text(&text)?;
    assert_eq!(loaded, program);

    let map = AffineMap::new(ReferenceCell::Triangle, &[vec![0.0, 0.0], vec![1.0, 0.2], vec![0.1, 0.7]])?;
    let a = interpret(&loaded, &map, &[])?;
    let b = compiled.element_tensor(&map, &[])?;
    println!("interpreted vs contracted: {:.1e}", a.relative_difference(&b));
    Ok(())
}
