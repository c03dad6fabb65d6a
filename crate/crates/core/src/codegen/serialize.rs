//! The `.prog` text format.
//!
//! ```text
//! tensorform-program 1
//! name poisson
//! dim 2
//! shape 3 3
//! coefficients                     # expansion length per coefficient
//! zero_tolerance 1.0000000000000000e-12
//! groups 1
//! group 9 4                        # rows, columns
//! g 0 DETF*JINV(0,0)*JINV(1,0) DETF*JINV(0,1)*JINV(1,1)
//! ...                              # one line per column: its products
//! i 0 0:5.0000000000000000e-01 1:...
//! ...                              # one line per row: kept (column, A0) pairs
//! end
//! ```
//!
//! Floats are written with 17 significant digits so values round-trip exactly.

use std::fmt::Write;

use thiserror::Error;

use super::{ContractionProgram, ProgramGroup, Term, Token};

const MAGIC: &str = "tensorform-program 1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ProgramParseError {
    pub line: usize,
    pub message: String,
}

fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

impl ContractionProgram {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{MAGIC}").unwrap();
        writeln!(s, "name {}", self.name).unwrap();
        writeln!(s, "dim {}", self.dim).unwrap();
        writeln!(s, "shape {}", join(&self.shape)).unwrap();
        writeln!(s, "{}", format!("coefficients {}", join(&self.coefficient_sizes)).trim_end()).unwrap();
        writeln!(s, "zero_tolerance {}", float(self.zero_tolerance)).unwrap();
        writeln!(s, "groups {}", self.groups.len()).unwrap();
        for group in &self.groups {
            writeln!(s, "group {} {}", group.rows, group.cols).unwrap();
            for (a, column) in group.recipe.iter().enumerate() {
                write!(s, "g {a}").unwrap();
                for term in column {
                    let tokens: Vec<String> = term.iter().map(Token::to_string).collect();
                    write!(s, " {}", tokens.join("*")).unwrap();
                }
                s.push('\n');
            }
            for (i, row) in group.schedule.iter().enumerate() {
                write!(s, "i {i}").unwrap();
                for &(a, v) in row {
                    write!(s, " {a}:{}", float(v)).unwrap();
                }
                s.push('\n');
            }
        }
        writeln!(s, "end").unwrap();
        s
    }

    pub fn from_text(text: &str) -> Result<Self, ProgramParseError> {
        let mut lines = Lines {
            inner: text.lines().enumerate(),
            line: 0,
        };
        if lines.next_line()? != MAGIC {
            return Err(lines.error("not a contraction program"));
        }
        let name = lines.field("name")?.to_string();
        let dim = lines.number_field("dim")?;
        let shape = lines.numbers_field("shape")?;
        let coefficient_sizes = lines.numbers_field("coefficients")?;
        let zero_tolerance = lines.float_field("zero_tolerance")?;
        let count = lines.number_field("groups")?;
        let entries: usize = shape.iter().product();
        let mut groups = Vec::with_capacity(count);
        for _ in 0..count {
            let dims = lines.numbers_field("group")?;
            let [rows, cols] = dims[..] else {
                return Err(lines.error("expected 'group <rows> <cols>'"));
            };
            if rows != entries {
                return Err(lines.error(format!("group has {rows} rows, the tensor has {entries} entries")));
            }
            let mut recipe = Vec::with_capacity(cols);
            for a in 0..cols {
                let rest = lines.field("g")?;
                let mut parts = rest.split_whitespace();
                if lines.number(parts.next().unwrap_or(""))? != a {
                    return Err(lines.error(format!("expected column {a}")));
                }
                let column = parts
                    .map(|t| lines.term(t, dim, &coefficient_sizes))
                    .collect::<Result<Vec<Term>, _>>()?;
                recipe.push(column);
            }
            let mut schedule = Vec::with_capacity(rows);
            for i in 0..rows {
                let rest = lines.field("i")?;
                let mut parts = rest.split_whitespace();
                if lines.number(parts.next().unwrap_or(""))? != i {
                    return Err(lines.error(format!("expected row {i}")));
                }
                let row = parts
                    .map(|p| {
                        let (a, v) = p.split_once(':').ok_or_else(|| lines.error("expected column:value"))?;
                        let a = lines.number(a)?;
                        if a >= cols {
                            return Err(lines.error(format!("column {a} out of range")));
                        }
                        Ok((a, lines.float(v)?))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                schedule.push(row);
            }
            groups.push(ProgramGroup {
                rows,
                cols,
                recipe,
                schedule,
            });
        }
        if lines.next_line()? != "end" {
            return Err(lines.error("expected 'end'"));
        }
        Ok(ContractionProgram {
            name,
            shape,
            coefficient_sizes,
            dim,
            zero_tolerance,
            groups,
        })
    }
}

struct Lines<'a, I: Iterator<Item = (usize, &'a str)>> {
    inner: I,
    line: usize,
}

impl<'a, I: Iterator<Item = (usize, &'a str)>> Lines<'a, I> {
    fn error(&self, message: impl Into<String>) -> ProgramParseError {
        ProgramParseError {
            line: self.line,
            message: message.into(),
        }
    }

    fn next_line(&mut self) -> Result<&'a str, ProgramParseError> {
        let (n, l) = self.inner.next().ok_or_else(|| self.error("unexpected end of file"))?;
        self.line = n + 1;
        Ok(l.trim_end())
    }

    /// The rest of the next line, which must start with `key`.
    fn field(&mut self, key: &str) -> Result<&'a str, ProgramParseError> {
        let line = self.next_line()?;
        match line.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest),
            None if line == key => Ok(""),
            _ => Err(self.error(format!("expected '{key}'"))),
        }
    }

    fn number_field(&mut self, key: &str) -> Result<usize, ProgramParseError> {
        let s = self.field(key)?;
        self.number(s)
    }

    fn numbers_field(&mut self, key: &str) -> Result<Vec<usize>, ProgramParseError> {
        let s = self.field(key)?;
        self.numbers(s)
    }

    fn float_field(&mut self, key: &str) -> Result<f64, ProgramParseError> {
        let s = self.field(key)?;
        self.float(s)
    }

    fn number(&self, s: &str) -> Result<usize, ProgramParseError> {
        s.parse().map_err(|_| self.error(format!("bad integer '{s}'")))
    }

    fn numbers(&self, s: &str) -> Result<Vec<usize>, ProgramParseError> {
        s.split_whitespace().map(|t| self.number(t)).collect()
    }

    fn float(&self, s: &str) -> Result<f64, ProgramParseError> {
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.error(format!("bad number '{s}'"))),
        }
    }

    fn term(&self, s: &str, dim: usize, coefficient_sizes: &[usize]) -> Result<Term, ProgramParseError> {
        s.split('*').map(|t| self.token(t, dim, coefficient_sizes)).collect()
    }

    fn token(&self, s: &str, dim: usize, coefficient_sizes: &[usize]) -> Result<Token, ProgramParseError> {
        if s == "DETF" {
            return Ok(Token::DetF);
        }
        let bad = || self.error(format!("bad token '{s}'"));
        let (head, args) = s.strip_suffix(')').and_then(|t| t.split_once('(')).ok_or_else(bad)?;
        let pair = || -> Result<(usize, usize), ProgramParseError> {
            let (a, b) = args.split_once(',').ok_or_else(bad)?;
            Ok((self.number(a)?, self.number(b)?))
        };
        match head {
            "CONST" => Ok(Token::Const(self.float(args)?)),
            "JINV" => {
                let (r, c) = pair()?;
                if r >= dim || c >= dim {
                    return Err(bad());
                }
                Ok(Token::Jinv(r, c))
            }
            "COEFF" => {
                let (w, n) = pair()?;
                if coefficient_sizes.get(w).is_none_or(|&size| n >= size) {
                    return Err(bad());
                }
                Ok(Token::Coeff(w, n))
            }
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::generate;
    use crate::compile::{compile, CompileOptions};
    use crate::corpus::TestCase;

    #[test]
    fn round_trip() {
        for case in [TestCase::Mass, TestCase::Poisson, TestCase::NavierStokes, TestCase::Elasticity] {
            let c = compile(&case.form_for(2, 2), &CompileOptions::default()).unwrap();
            let p = generate(case.name(), &c, 1e-12);
            let text = p.to_text();
            let back = ContractionProgram::from_text(&text).unwrap();
            assert_eq!(back, p);
            assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn rejects_corruption() {
        let c = compile(&TestCase::Poisson.form(), &CompileOptions::default()).unwrap();
        let text = generate("poisson", &c, 1e-12).to_text();
        let broken = text.replace("JINV(1,", "JINV(7,");
        assert!(ContractionProgram::from_text(&broken).is_err());
        let truncated: String = text.lines().take(9).map(|l| format!("{l}\n")).collect();
        let err = ContractionProgram::from_text(&truncated).unwrap_err();
        assert_eq!(err.line, 9);
        assert!(ContractionProgram::from_text("hello").is_err());
    }
}
