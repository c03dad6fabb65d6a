//! Lowers the corpus forms to reference and geometry tensors and reports
//! their ranks and sizes.
//!
//! Run with `cargo run --example lower_forms`.

use tensorform::corpus::TestCase;
use tensorform::form::simplify;
use tensorform::lowering::lower_form;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for case in TestCase::ALL {
        let form = simplify(&case.form());
        println!("== {case}: {form}");
        for lowered in lower_form(&form)? {
            println!("{lowered}");
            println!(
                "   rank {} (r + n_C + n_D = {}), {} entries\n",
                lowered.rank(),
                lowered.rank_rule(),
                lowered.reference.entry_count()
            );
        }
    }
    Ok(())
}
