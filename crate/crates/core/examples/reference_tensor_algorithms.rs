//! Computes reference tensors with the per-entry and the assembled
//! algorithm and compares results and multiplication counts.
//!
//! Run with `cargo run --release --example reference_tensor_algorithms`.

use std::time::Instant;

use tensorform::corpus::TestCase;
use tensorform::form::simplify;
use tensorform::lowering::lower_form;
use tensorform::reference_tensor::{compute_reference_tensor, Algorithm, TensorBudget};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:<14} {:>3} {:>2} {:>10} {:>14} {:>14} {:>10}", "form", "dim", "q", "entries", "naive mults", "assembled", "rel diff");
    for case in TestCase::ALL {
        for (dim, q) in [(2, 1), (2, 2), (3, 1)] {
            let form = simplify(&case.form_for(dim, q));
            for lowered in lower_form(&form)? {
                let rm = &lowered.reference;
                let start = Instant::now();
                let (naive, n) = compute_reference_tensor(rm, Algorithm::Naive, None, TensorBudget::default())?;
                let t_naive = start.elapsed();
                let start = Instant::now();
                let (assembled, a) = compute_reference_tensor(rm, Algorithm::Assembled, None, TensorBudget::default())?;
                let t_assembled = start.elapsed();
                println!(
                    "{:<14} {:>3} {:>2} {:>10} {:>14} {:>14} {:>10.1e}   {:.1?} vs {:.1?}",
                    case.name(),
                    dim,
                    q,
                    naive.len(),
                    n.multiplies,
                    a.multiplies,
                    assembled.relative_difference(&naive),
                    t_naive,
                    t_assembled
                );
            }
        }
    }
    Ok(())
}
