//! Timing of the two reference tensor algorithms over the corpus.

use std::io;
use std::time::Instant;

use serde::Serialize;

use crate::compile::{compile, CompileError, CompileOptions};
use crate::corpus::TestCase;
use crate::reference_tensor::{Algorithm, ReferenceTensorError, TensorBudget};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub form: String,
    pub dim: usize,
    pub q: usize,
    pub algorithm: String,
    /// Median wall time of the reference tensor computation.
    pub seconds: f64,
    pub multiplies: u64,
    pub entries: usize,
    /// Naive time over this record's time.
    pub speedup: f64,
}

/// What to run: every listed form in every listed dimension, for degrees
/// up to the form's cap (optionally lowered further).
#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub cases: Vec<TestCase>,
    pub dims: Vec<usize>,
    pub max_degree: Option<usize>,
    pub runs: usize,
    pub budget: TensorBudget,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self {
            cases: TestCase::ALL.to_vec(),
            dims: vec![2, 3],
            max_degree: None,
            runs: 3,
            budget: TensorBudget::default(),
        }
    }
}

impl BenchPlan {
    pub fn points(&self) -> Vec<(TestCase, usize, usize)> {
        let mut out = Vec::new();
        for &case in &self.cases {
            for &dim in &self.dims {
                let cap = self.max_degree.map_or(case.max_degree(), |m| m.min(case.max_degree()));
                out.extend((1..=cap).map(|q| (case, dim, q)));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchOutcome {
    pub records: Vec<BenchRecord>,
    /// Points refused by the memory guard, with the entry count they needed.
    pub skipped: Vec<(TestCase, usize, usize, u128)>,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

/// Compiles `(case, dim, q)` `runs` times with each algorithm.
pub fn bench_point(case: TestCase, dim: usize, q: usize, runs: usize, budget: TensorBudget) -> Result<[BenchRecord; 2], CompileError> {
    let form = case.form_for(dim, q);
    let mut results = Vec::new();
    for algorithm in [Algorithm::Naive, Algorithm::Assembled] {
        let options = CompileOptions {
            algorithm,
            budget,
            ..CompileOptions::default()
        };
        let mut times = Vec::new();
        let mut last = None;
        for _ in 0..runs.max(1) {
            let start = Instant::now();
            let compiled = compile(&form, &options)?;
            times.push(start.elapsed().as_secs_f64());
            last = Some(compiled);
        }
        let compiled = last.expect("at least one run");
        results.push((algorithm, median(times), compiled.multiplies(), compiled.reference_entries()));
    }
    let naive_time = results[0].1;
    let record = |(algorithm, seconds, multiplies, entries): (Algorithm, f64, u64, usize)| BenchRecord {
        form: case.name().to_string(),
        dim,
        q,
        algorithm: algorithm.name().to_string(),
        seconds,
        multiplies,
        entries,
        speedup: if seconds > 0.0 { naive_time / seconds } else { 1.0 },
    };
    Ok([record(results[0]), record(results[1])])
}

pub fn run_bench(plan: &BenchPlan) -> Result<BenchOutcome, CompileError> {
    let mut outcome = BenchOutcome::default();
    for (case, dim, q) in plan.points() {
        match bench_point(case, dim, q, plan.runs, plan.budget) {
            Ok(records) => outcome.records.extend(records),
            Err(CompileError::ReferenceTensor(ReferenceTensorError::MemoryGuard { required, .. })) => {
                outcome.skipped.push((case, dim, q, required))
            }
            Err(e) => return Err(e),
        }
    }
    Ok(outcome)
}

/// Writes records as CSV with the header
/// `form,dim,q,algorithm,seconds,multiplies,entries,speedup`.
pub fn write_csv<W: io::Write>(records: &[BenchRecord], out: W) -> Result<(), csv::Error> {
    let mut writer = csv::Writer::from_writer(out);
    for r in records {
        writer.serialize(r)?;
    }
    writer.flush()?;
    Ok(())
}
