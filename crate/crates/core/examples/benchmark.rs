//! A short benchmark of both reference tensor algorithms, as CSV.
//!
//! Run with `cargo run --release --example benchmark`; the `tensorform
//! bench` command runs the full plan.

use tensorform::bench::{run_bench, write_csv, BenchPlan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plan = BenchPlan {
        max_degree: Some(2),
        runs: 3,
        ..BenchPlan::default()
    };
    let outcome = run_bench(&plan)?;
    write_csv(&outcome.records, std::io::stdout())?;
    Ok(())
}
