//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits with a failure status if any criterion fails.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::Instant;

use tensorform::assembly::{assemble, Mesh};
use tensorform::bench::{bench_point, write_csv, BenchPlan};
use tensorform::codegen::generate;
use tensorform::compile::{compile, CompileOptions, ZERO_TOLERANCE};
use tensorform::corpus::{TestCase, LAPLACIAN_SPLIT};
use tensorform::form::{parse_form_file, simplify, Form};
use tensorform::geometry::AffineMap;
use tensorform::lowering::{lower_form, LoweredMonomial};
use tensorform::reference_tensor::{compute_reference_tensor, Algorithm, ReferenceTensorError, TensorBudget};
use tensorform::signature::{factorize, Signature};
use tensorform::verify::verify_random;
use tensorform::{simplex_rule, ReferenceCell};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn lowered(form: &Form) -> Vec<LoweredMonomial> {
    lower_form(&simplify(form)).expect("corpus forms lower")
}

fn sweep() -> Vec<(TestCase, usize, usize)> {
    let mut points = Vec::new();
    for case in TestCase::ALL {
        points.extend((1..=3).map(|q| (case, 2, q)));
        points.extend((1..=2).map(|q| (case, 3, q)));
    }
    points
}

fn cross_algorithm_equality() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut tensors = 0;
    for (case, dim, q) in sweep() {
        for l in lowered(&case.form_for(dim, q)) {
            let budget = TensorBudget::default();
            let (naive, _) = compute_reference_tensor(&l.reference, Algorithm::Naive, None, budget).unwrap();
            let (assembled, _) = compute_reference_tensor(&l.reference, Algorithm::Assembled, None, budget).unwrap();
            let d = assembled.relative_difference(&naive);
            if d > 1e-12 {
                println!("    {case} dim {dim} q {q}: relative difference {d:.2e}");
            }
            worst = worst.max(d);
            tensors += 1;
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-12 && seconds < 300.0,
        format!("max relative difference {worst:.2e} over {tensors} tensors, 2D q<=3 and 3D q<=2, {seconds:.1} s"),
    )
}

fn oracle_agreement() -> Outcome {
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut run = |form: &Form, seed: u64| {
        let compiled = compile(form, &CompileOptions::default()).unwrap();
        let program = generate("check", &compiled, ZERO_TOLERANCE);
        let report = verify_random(&program, &compiled.form, 20, seed).unwrap();
        worst = worst.max(report.max_relative_error);
        checked += 1;
    };
    for (k, case) in TestCase::ALL.into_iter().enumerate() {
        run(&case.form(), k as u64);
    }
    for (k, (case, dim, q)) in sweep().into_iter().enumerate() {
        run(&case.form_for(dim, q), 100 + k as u64);
    }
    outcome(
        worst <= 1e-10,
        format!("max relative error {worst:.2e}, {checked} form configurations x 20 random cells"),
    )
}

fn golden_values() -> Outcome {
    let options = CompileOptions::default();
    let mass = compile(&TestCase::Mass.form(), &options).unwrap();
    let a0 = &mass.groups[0].a0;
    let mut mass_err = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let exact = if i == j { 2.0 } else { 1.0 } / 24.0;
            mass_err = mass_err.max((a0.get(&[i, j]) - exact).abs());
        }
    }

    // P1 hat functions on (0,0),(2,0),(0,2): 1 - x/2 - y/2, x/2, y/2
    let gradients = [[-0.5, -0.5], [0.5, 0.0], [0.0, 0.5]];
    let area = 2.0;
    let map = AffineMap::new(ReferenceCell::Triangle, &[vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
    let stiffness = compile(&TestCase::Poisson.form(), &options)
        .unwrap()
        .element_tensor(&map, &[])
        .unwrap();
    let mut poisson_err = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let exact = area * (gradients[i][0] * gradients[j][0] + gradients[i][1] * gradients[j][1]);
            poisson_err = poisson_err.max((stiffness.get(&[i, j]) - exact).abs());
        }
    }
    outcome(
        mass_err <= 1e-13 && poisson_err <= 1e-12,
        format!("mass A0 error {mass_err:.1e}, Poisson stiffness error {poisson_err:.1e}"),
    )
}

fn shape_claims() -> Outcome {
    let ns = lowered(&TestCase::NavierStokes.form());
    let ns_entries = ns[0].reference.entry_count();
    let stab = lowered(&TestCase::Stabilization.form());
    let stab_entries = stab[0].reference.entry_count();
    let ranks: Vec<usize> = TestCase::ALL.iter().map(|c| lowered(&c.form())[0].rank()).collect();
    outcome(
        ns_entries == 15_552 && stab_entries == 1_679_616 && ranks == [2, 4, 5, 4, 8],
        format!("Navier-Stokes {ns_entries} entries, stabilization {stab_entries} entries, leading ranks {ranks:?}"),
    )
}

fn rank_rule() -> Outcome {
    let mut mismatches = Vec::new();
    let mut total = 0;
    for case in TestCase::ALL {
        for (m, l) in lowered(&case.form()).iter().enumerate() {
            total += 1;
            if l.rank() != l.rank_rule() {
                mismatches.push(format!("{case}[{m}]: rank {} vs r + n_C + n_D = {}", l.rank(), l.rank_rule()));
            }
        }
    }
    let detail = if mismatches.is_empty() {
        format!("{total} monomials agree")
    } else {
        format!("{} of {total} monomials differ: {}", mismatches.len(), mismatches.join("; "))
    };
    outcome(mismatches.is_empty(), detail)
}

fn signature_factoring() -> Outcome {
    let split = lowered(&parse_form_file(LAPLACIAN_SPLIT).unwrap().1);
    let split_groups = factorize(&split);
    let split_ok = split_groups.len() == 1 && split_groups[0].members.len() == 2;

    let elasticity = lowered(&TestCase::Elasticity.form());
    let elasticity_groups = factorize(&elasticity);
    let elasticity_ok = elasticity_groups.len() == 1 && elasticity_groups[0].members.len() == 2;

    // permuted representatives against direct computation, including a
    // form whose terms differ by a swap of secondary axes
    let swapped = "element = Lagrange(2, triangle, 1)\narguments = v, u\na = v.dx(0)*u.dx(1)*dx + u.dx(0)*v.dx(1)*dx\n";
    let mut forms: Vec<Vec<LoweredMonomial>> = TestCase::ALL.iter().map(|c| lowered(&c.form())).collect();
    forms.push(split);
    forms.push(lowered(&parse_form_file(swapped).unwrap().1));
    let mut worst = 0.0f64;
    let mut permuted = 0;
    for lowered in &forms {
        for g in factorize(lowered) {
            let budget = TensorBudget::default();
            let (rep, _) =
                compute_reference_tensor(&lowered[g.representative].reference, Algorithm::Assembled, None, budget).unwrap();
            for m in &g.members {
                let (direct, _) =
                    compute_reference_tensor(&lowered[m.monomial].reference, Algorithm::Assembled, None, budget).unwrap();
                worst = worst.max(rep.permute_secondary(&m.map).relative_difference(&direct));
                permuted += usize::from(!m.is_identity());
            }
        }
    }

    let poisson = Signature::of(&lowered(&TestCase::Poisson.form())[0].reference);
    let element = "Lagrange finite element of degree 1 on a triangle";
    let hard = format!("{{{element};i0;[];[(d/dXa0)]}}*{{{element};i1;[];[(d/dXa1)]}}*dX");
    let soft = format!("{{{element};i0;[];[(d/dXa)]}}*{{{element};i1;[];[(d/dXa)]}}*dX");
    let strings_ok = poisson.hard == hard && poisson.soft == soft;

    outcome(
        split_ok && elasticity_ok && worst <= 1e-13 && permuted > 0 && strings_ok,
        format!(
            "split Laplacian {} group(s); elasticity {} group(s) of sizes {:?}; permuted A0 difference {worst:.1e} ({permuted} non-identity); Poisson signature strings {}",
            split_groups.len(),
            elasticity_groups.len(),
            elasticity_groups.iter().map(|g| g.members.len()).collect::<Vec<_>>(),
            if strings_ok { "match" } else { "differ" }
        ),
    )
}

/// `int_T x^a = prod a_i! / (|a| + d)!`, in exact integer arithmetic.
fn exact_monomial(exponents: &[u32]) -> f64 {
    let fact = |n: u32| (1..=u128::from(n)).product::<u128>();
    let num: u128 = exponents.iter().map(|&e| fact(e)).product();
    let den = fact(exponents.iter().sum::<u32>() + exponents.len() as u32);
    num as f64 / den as f64
}

fn quadrature_exactness() -> Outcome {
    let mut worst = 0.0f64;
    let mut volume_err = 0.0f64;
    for cell in [ReferenceCell::Interval, ReferenceCell::Triangle, ReferenceCell::Tetrahedron] {
        let d = cell.dim();
        for p in 0..=12u32 {
            let rule = simplex_rule(cell, p as usize).unwrap();
            volume_err = volume_err.max((rule.weights.iter().sum::<f64>() - cell.volume()).abs());
            let mut exps = vec![0u32; d];
            loop {
                if exps.iter().sum::<u32>() <= p {
                    let approx = rule.integrate(|x| x.iter().zip(&exps).map(|(x, &e)| x.powi(e as i32)).product());
                    let exact = exact_monomial(&exps);
                    worst = worst.max((approx - exact).abs() / exact);
                }
                // next exponent tuple in [0, p]^d
                let mut a = 0;
                while a < d {
                    exps[a] += 1;
                    if exps[a] <= p {
                        break;
                    }
                    exps[a] = 0;
                    a += 1;
                }
                if a == d {
                    break;
                }
            }
        }
    }
    outcome(
        worst <= 1e-12 && volume_err <= 1e-13,
        format!("max relative monomial error {worst:.1e}, max volume error {volume_err:.1e}"),
    )
}

fn cost_property() -> Outcome {
    let plan = BenchPlan {
        runs: 1,
        ..BenchPlan::default()
    };
    let mut records = Vec::new();
    let mut violations = Vec::new();
    let mut skipped = 0;
    let mut stabilization_ratio = f64::NAN;
    for (case, dim, q) in plan.points() {
        match bench_point(case, dim, q, 1, plan.budget) {
            Ok([naive, assembled]) => {
                if assembled.multiplies > naive.multiplies {
                    violations.push(format!("{case} dim {dim} q {q}"));
                }
                if case == TestCase::Stabilization && dim == 2 && q == 1 {
                    stabilization_ratio = assembled.multiplies as f64 / naive.multiplies as f64;
                }
                records.push(naive);
                records.push(assembled);
            }
            Err(tensorform::compile::CompileError::ReferenceTensor(ReferenceTensorError::MemoryGuard { .. })) => skipped += 1,
            Err(e) => panic!("{e}"),
        }
    }
    let csv_path = std::env::temp_dir().join("tensorform_bench.csv");
    write_csv(&records, fs::File::create(&csv_path).unwrap()).unwrap();
    let csv = fs::read_to_string(&csv_path).unwrap();
    let header_ok = csv.starts_with("form,dim,q,algorithm,seconds,multiplies,entries,speedup\n");
    outcome(
        violations.is_empty() && stabilization_ratio <= 0.2 && header_ok,
        format!(
            "assembled <= naive on {} points ({} over the memory guard){}; stabilization 2D q=1 ratio {stabilization_ratio:.4}; timings in {}",
            records.len() / 2,
            skipped,
            if violations.is_empty() { String::new() } else { format!(", violated at {}", violations.join(", ")) },
            csv_path.display()
        ),
    )
}

fn assembly_sanity() -> Outcome {
    let mesh = Mesh::unit_square();
    let options = CompileOptions::default();
    let m = assemble(&mesh, &compile(&TestCase::Mass.form(), &options).unwrap(), &[]).unwrap();
    let total = m.values.iter().sum::<f64>();
    let k = assemble(&mesh, &compile(&TestCase::Poisson.form(), &options).unwrap(), &[]).unwrap();
    let worst_row = k
        .values
        .chunks(k.shape[1])
        .map(|row| row.iter().sum::<f64>().abs())
        .fold(0.0, f64::max);
    outcome(
        (total - 1.0).abs() <= 1e-12 && worst_row <= 1e-12,
        format!("mass matrix sum {total:.15}, largest Poisson row sum {worst_row:.1e}"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    fs::create_dir_all(&corpus).unwrap();
    let mut differing = Vec::new();
    for case in TestCase::ALL {
        let form = corpus.join(format!("{}.form", case.name()));
        fs::write(&form, case.source()).unwrap();
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("run{run}"));
            let status = Command::new(env!("CARGO_BIN_EXE_tensorform"))
                .arg("compile")
                .arg(&form)
                .arg("-o")
                .arg(&out)
                .output()
                .unwrap();
            assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
            let prog = fs::read(out.join(format!("{}.prog", case.name()))).unwrap();
            let text = fs::read(out.join(format!("{}.c.txt", case.name()))).unwrap();
            outputs.push((prog, text));
        }
        if outputs[0] != outputs[1] {
            differing.push(case.name());
        }
    }
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            "two compile runs produce identical .prog and .c.txt for all five forms".to_string()
        } else {
            format!("outputs differ for {}", differing.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("cross-algorithm equality", cross_algorithm_equality),
        ("contraction reproduces quadrature", oracle_agreement),
        ("golden values", golden_values),
        ("reference tensor sizes and ranks", shape_claims),
        ("rank rule r + n_C + n_D", rank_rule),
        ("signature factoring", signature_factoring),
        ("quadrature exactness", quadrature_exactness),
        ("multiply counts", cost_property),
        ("assembly sanity", assembly_sanity),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let result = check();
        println!("{} {name}: {}", if result.pass { "PASS" } else { "FAIL" }, result.detail);
        failures += usize::from(!result.pass);
    }
    println!("{} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
