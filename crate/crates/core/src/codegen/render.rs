//! Straight-line C-like rendering of a contraction program.

use std::fmt::Write;

use super::{ContractionProgram, Token};

fn token(t: &Token) -> String {
    match *t {
        Token::DetF => "detF".to_string(),
        Token::Jinv(r, c) => format!("Jinv[{r}][{c}]"),
        Token::Coeff(w, n) => format!("w[{w}][{n}]"),
        Token::Const(v) => format!("{v:.16e}"),
    }
}

/// Renders `program` as one function: geometry tensor entries first, then
/// one multiply-add statement per element tensor entry. The output depends
/// only on the program, so equal programs render byte-identically.
pub fn render_c_like(program: &ContractionProgram) -> String {
    let mut s = String::new();
    let shape: Vec<String> = program.shape.iter().map(ToString::to_string).collect();
    writeln!(s, "// {}: element tensor of shape [{}]", program.name, shape.join(", ")).unwrap();
    writeln!(
        s,
        "// {} scheduled multiply-adds ({} dense)",
        program.scheduled_multiplies(),
        program.dense_multiplies()
    )
    .unwrap();
    writeln!(
        s,
        "void tabulate_tensor_{}(double* A, double detF, const double Jinv[{d}][{d}], const double* const* w)",
        program.name,
        d = program.dim
    )
    .unwrap();
    s.push_str("{\n");
    for (k, group) in program.groups.iter().enumerate() {
        writeln!(s, "  // geometry tensor {k}").unwrap();
        for (a, column) in group.recipe.iter().enumerate() {
            let terms: Vec<String> = column
                .iter()
                .map(|term| term.iter().map(token).collect::<Vec<_>>().join("*"))
                .collect();
            let rhs = if terms.is_empty() { "0.0".to_string() } else { terms.join(" + ") };
            writeln!(s, "  const double G{k}_{a} = {rhs};").unwrap();
        }
    }
    s.push_str("  // element tensor\n");
    for i in 0..program.entries() {
        let terms: Vec<String> = program
            .groups
            .iter()
            .enumerate()
            .flat_map(|(k, g)| g.schedule[i].iter().map(move |&(a, v)| format!("{v:.16e}*G{k}_{a}")))
            .collect();
        let rhs = if terms.is_empty() { "0.0".to_string() } else { terms.join(" + ") };
        writeln!(s, "  A[{i}] = {rhs};").unwrap();
    }
    s.push_str("}\n");
    s
}
