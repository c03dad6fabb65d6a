//! The `tensorform` command line.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 form parse error,
//! 3 verification failure, 4 memory guard refusal.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::assembly::Mesh;
use crate::bench::{run_bench, write_csv, BenchPlan};
use crate::codegen::{generate, render_c_like, ContractionProgram};
use crate::compile::{compile, CompileError, CompileOptions, CompiledForm, ZERO_TOLERANCE};
use crate::corpus::TestCase;
use crate::form::{parse_form_file, Form};
use crate::reference_tensor::{Algorithm, ReferenceTensorError, TensorBudget, DEFAULT_MAX_ENTRIES};
use crate::verify::{verify_mesh, VERIFY_TOLERANCE};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;
pub const EXIT_MEMORY: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "tensorform", version, about = "Compile multilinear forms to reference/geometry tensor contractions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct CompileArgs {
    /// Reference tensor algorithm.
    #[arg(long, default_value = "assembled")]
    algorithm: Algorithm,
    /// Quadrature degree (defaults to the exact degree).
    #[arg(long)]
    quad_degree: Option<usize>,
    /// Refuse reference tensors with more entries than this.
    #[arg(long, default_value_t = DEFAULT_MAX_ENTRIES as u64)]
    max_entries: u64,
}

impl CompileArgs {
    fn options(&self) -> CompileOptions {
        CompileOptions {
            algorithm: self.algorithm,
            quad_degree: self.quad_degree,
            budget: TensorBudget {
                max_entries: u128::from(self.max_entries),
            },
            zero_tolerance: ZERO_TOLERANCE,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write `<name>.prog` and `<name>.c.txt` for a `.form` file.
    Compile {
        form: PathBuf,
        #[command(flatten)]
        args: CompileArgs,
        /// Print the hard and soft signature of every reference tensor group.
        #[arg(long)]
        dump_signatures: bool,
        /// Print every reference tensor.
        #[arg(long)]
        dump_a0: bool,
        /// Output directory.
        #[arg(short = 'o', long = "output", default_value = ".")]
        output: PathBuf,
    },
    /// Compare generated code with direct quadrature on every cell of a mesh.
    Verify {
        form: PathBuf,
        mesh: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Check this `.prog` file instead of freshly generated code.
        #[arg(long)]
        program: Option<PathBuf>,
        #[command(flatten)]
        args: CompileArgs,
    },
    /// Time both reference tensor algorithms over the bundled forms; CSV on stdout.
    Bench {
        /// Comma-separated form names (default: all five).
        #[arg(long, value_delimiter = ',')]
        forms: Vec<TestCase>,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3])]
        dims: Vec<usize>,
        /// Lower every form's degree cap to this.
        #[arg(long)]
        max_degree: Option<usize>,
        #[arg(long, default_value_t = 3)]
        runs: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_ENTRIES as u64)]
        max_entries: u64,
        /// Write the CSV here instead of stdout.
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))
}

fn load_form(path: &Path) -> Result<Form, Failure> {
    let source = read(path)?;
    parse_form_file(&source)
        .map(|(_, form)| form)
        .map_err(|e| fail(EXIT_PARSE, format!("{}:{e}", path.display())))
}

fn compile_form(form: &Form, args: &CompileArgs) -> Result<CompiledForm, Failure> {
    compile(form, &args.options()).map_err(|e| match e {
        CompileError::ReferenceTensor(ReferenceTensorError::MemoryGuard { required, limit }) => fail(
            EXIT_MEMORY,
            format!("refusing to build a reference tensor with {required} entries (limit {limit}); raise --max-entries"),
        ),
        other => fail(EXIT_PARSE, other.to_string()),
    })
}

/// A C-friendly program name from a file name.
fn program_name(path: &Path) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("form");
    let name: String = stem
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    if name.starts_with(|c: char| c.is_ascii_digit()) || name.is_empty() {
        format!("form_{name}")
    } else {
        name
    }
}

fn cmd_compile(
    path: &Path,
    args: &CompileArgs,
    dump_signatures: bool,
    dump_a0: bool,
    output: &Path,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let form = load_form(path)?;
    let compiled = compile_form(&form, args)?;
    let name = program_name(path);
    let program = generate(&name, &compiled, ZERO_TOLERANCE);
    let io = |e: std::io::Error| fail(EXIT_USAGE, e.to_string());
    if dump_signatures {
        for (k, g) in compiled.groups.iter().enumerate() {
            let members: Vec<String> = g.members.iter().map(|m| m.monomial.to_string()).collect();
            writeln!(out, "group {k}: monomials [{}]", members.join(", ")).map_err(io)?;
            writeln!(out, "  hard: {}", g.signature.hard).map_err(io)?;
            writeln!(out, "  soft: {}", g.signature.soft).map_err(io)?;
        }
    }
    if dump_a0 {
        for (k, g) in compiled.groups.iter().enumerate() {
            writeln!(out, "A0 group {k}: shape {:?} ({} algorithm)", g.a0.shape, g.a0.algorithm).map_err(io)?;
            for row in g.a0.values.chunks(g.a0.cols().max(1)) {
                let values: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                writeln!(out, "  {}", values.join(" ")).map_err(io)?;
            }
        }
    }
    fs::create_dir_all(output).map_err(io)?;
    let prog_path = output.join(format!("{name}.prog"));
    let text_path = output.join(format!("{name}.c.txt"));
    fs::write(&prog_path, program.to_text()).map_err(io)?;
    fs::write(&text_path, render_c_like(&program)).map_err(io)?;
    writeln!(
        out,
        "wrote {} and {} ({} groups, {} scheduled multiply-adds)",
        prog_path.display(),
        text_path.display(),
        program.groups.len(),
        program.scheduled_multiplies()
    )
    .map_err(io)?;
    Ok(())
}

fn cmd_verify(
    form_path: &Path,
    mesh_path: &Path,
    seed: u64,
    program_path: Option<&Path>,
    args: &CompileArgs,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let form = load_form(form_path)?;
    let mesh = Mesh::parse(&read(mesh_path)?).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", mesh_path.display())))?;
    let compiled = compile_form(&form, args)?;
    let program = match program_path {
        Some(p) => ContractionProgram::from_text(&read(p)?)
            .map_err(|e| fail(EXIT_VERIFY, format!("{}: {e}", p.display())))?,
        None => generate(&program_name(form_path), &compiled, ZERO_TOLERANCE),
    };
    let report = verify_mesh(&program, &compiled.form, &mesh, seed).map_err(|e| fail(EXIT_VERIFY, e.to_string()))?;
    let io = |e: std::io::Error| fail(EXIT_USAGE, e.to_string());
    writeln!(
        out,
        "max relative error {:.3e} over {} cells (tolerance {VERIFY_TOLERANCE:e})",
        report.max_relative_error, report.cells
    )
    .map_err(io)?;
    if report.passed() {
        Ok(())
    } else {
        Err(fail(EXIT_VERIFY, "verification failed"))
    }
}

fn cmd_bench(plan: &BenchPlan, output: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    let outcome = run_bench(plan).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
    for (case, dim, q, required) in &outcome.skipped {
        eprintln!("skipped {case} dim {dim} q {q}: needs {required} entries");
    }
    let csv_error = |e: csv::Error| fail(EXIT_USAGE, e.to_string());
    match output {
        Some(path) => {
            let file = fs::File::create(path).map_err(|e| fail(EXIT_USAGE, format!("{}: {e}", path.display())))?;
            write_csv(&outcome.records, file).map_err(csv_error)
        }
        None => write_csv(&outcome.records, out).map_err(csv_error),
    }
}

/// Runs the command line with `args` (including the program name), writing
/// normal output to `out`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Compile {
            form,
            args,
            dump_signatures,
            dump_a0,
            output,
        } => cmd_compile(form, args, *dump_signatures, *dump_a0, output, out),
        Command::Verify {
            form,
            mesh,
            seed,
            program,
            args,
        } => cmd_verify(form, mesh, *seed, program.as_deref(), args, out),
        Command::Bench {
            forms,
            dims,
            max_degree,
            runs,
            max_entries,
            output,
        } => {
            let plan = BenchPlan {
                cases: if forms.is_empty() { TestCase::ALL.to_vec() } else { forms.clone() },
                dims: dims.clone(),
                max_degree: *max_degree,
                runs: *runs,
                budget: TensorBudget {
                    max_entries: u128::from(*max_entries),
                },
            };
            cmd_bench(&plan, output.as_deref(), out)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

pub fn run() -> ExitCode {
    run_with(std::env::args_os(), &mut std::io::stdout().lock())
}
