//! Printing forms back into the DSL.

use std::fmt::{self, Write};

use num_rational::Rational64;
use num_traits::{One, Signed};

use super::{Form, FunctionRef, IndexSlot, Monomial};

impl Form {
    fn function_name(&self, f: FunctionRef) -> &str {
        match f {
            FunctionRef::Argument(k) => &self.arguments[k].name,
            FunctionRef::Coefficient(k) => &self.coefficients[k].name,
        }
    }

    /// The DSL text of one monomial, with its sign.
    pub fn monomial_string(&self, m: &Monomial) -> String {
        let mut out = String::new();
        if m.constant.is_negative() {
            out.push('-');
        }
        let magnitude = m.constant.abs();
        if magnitude != Rational64::one() {
            write!(out, "{magnitude}*").unwrap();
        }
        let slot = |s: &IndexSlot| match s {
            IndexSlot::Index(i) => m.indices[*i].name.clone(),
            IndexSlot::Fixed(v) => v.to_string(),
        };
        for f in &m.factors {
            out.push_str(self.function_name(f.function));
            if let Some(c) = &f.component {
                write!(out, "[{}]", slot(c)).unwrap();
            }
            for d in &f.derivatives {
                write!(out, ".dx({})", slot(d)).unwrap();
            }
            out.push('*');
        }
        out.push_str("dx");
        out
    }

    /// The right-hand side of `a = ...`.
    pub fn expression_string(&self) -> String {
        let mut out = String::new();
        for (n, m) in self.monomials.iter().enumerate() {
            let text = self.monomial_string(m);
            match (n, text.strip_prefix('-')) {
                (0, _) => out.push_str(&text),
                (_, Some(rest)) => write!(out, " - {rest}").unwrap(),
                (_, None) => write!(out, " + {text}").unwrap(),
            }
        }
        out
    }

    /// A complete `.form` file describing this form.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        let all: Vec<_> = self.arguments.iter().chain(&self.coefficients).collect();
        let default = all[0].element;
        writeln!(out, "element = {default}").unwrap();
        for d in &all {
            if d.element != default {
                writeln!(out, "element {} = {}", d.name, d.element).unwrap();
            }
        }
        let names = |ds: &[super::FunctionDecl]| ds.iter().map(|d| d.name.as_str()).collect::<Vec<_>>().join(", ");
        writeln!(out, "arguments = {}", names(&self.arguments)).unwrap();
        if !self.coefficients.is_empty() {
            writeln!(out, "coefficients = {}", names(&self.coefficients)).unwrap();
        }
        writeln!(out, "a = {}", self.expression_string()).unwrap();
        out
    }
}

impl fmt::Display for Form {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a = {}", self.expression_string())
    }
}

#[cfg(test)]
mod tests {
    use crate::form::parse_form_file;

    #[test]
    fn round_trip() {
        let src = "element = Lagrange(1, tetrahedron, 3)\narguments = v, u\ncoefficients = w\n\
                   a = -0.5*v[i]*w[j]*u[i].dx(j)*dx + 3*v[0].dx(1).dx(2)*u[k]*w[k]*dx - v[i]*u[i]*w[2]/4*dx\n";
        let (_, form) = parse_form_file(src).unwrap();
        let printed = form.to_source();
        let (_, again) = parse_form_file(&printed).unwrap();
        assert_eq!(form, again);
        assert_eq!(
            form.expression_string(),
            "-1/2*v[i]*w[j]*u[i].dx(j)*dx + 3*v[0].dx(1).dx(2)*u[k]*w[k]*dx - 1/4*v[i]*u[i]*w[2]*dx"
        );
    }
}
