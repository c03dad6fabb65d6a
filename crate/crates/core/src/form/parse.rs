//! Parser for `.form` files and form expressions.
//!
//! A `.form` file is line oriented:
//!
//! ```text
//! # comment
//! element = Lagrange(1, tetrahedron, 3)
//! element w = Lagrange(2, tetrahedron, 3)   # optional per-function override
//! arguments = v, u
//! coefficients = w
//! a = v[i]*w[j]*u[i].dx(j)*dx
//! ```
//!
//! Everything after `a =` (including following lines) is the expression:
//!
//! ```text
//! sum     := ['+' | '-'] product (('+' | '-') product)*
//! product := atom (('*' atom) | ('/' number))*
//! atom    := number | '(' sum ')' | 'dx' | name ['[' index ']'] ('.dx(' index ')')*
//! index   := letter-identifier | non-negative integer (0-based)
//! ```
//!
//! Products are distributed over sums, so the result is a flat list of
//! monomials. Every monomial must contain the measure `dx` exactly once and
//! every argument exactly once. Index letters are scoped per monomial and
//! summed over their range.

use std::collections::HashMap;

use num_rational::Rational64;
use num_traits::{CheckedMul, One, Zero};
use thiserror::Error;

use super::{Factor, Form, FunctionDecl, FunctionRef, Index, IndexKind, IndexSlot, Monomial};
use crate::cell::ReferenceCell;
use crate::element::ElementSpec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn at(pos: Pos, message: impl Into<String>) -> Self {
        Self {
            line: pos.line,
            column: pos.column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(Rational64),
    Ident(String),
    Sym(char),
    End,
}

fn lex(text: &str, start: Pos) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut pos = start;
    let mut i = 0;
    let advance = |pos: &mut Pos, c: char| {
        if c == '\n' {
            pos.line += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let here = pos;
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut pos, chars[i]);
                i += 1;
            }
        } else if c.is_whitespace() {
            advance(&mut pos, c);
            i += 1;
        } else if c.is_ascii_digit() {
            let begin = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            let literal: String = chars[begin..i].iter().collect();
            for _ in begin..i {
                pos.column += 1;
            }
            let value = decimal(&literal).ok_or_else(|| ParseError::at(here, format!("number {literal} is too large")))?;
            out.push((Tok::Number(value), here));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let begin = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            pos.column += i - begin;
            out.push((Tok::Ident(chars[begin..i].iter().collect()), here));
        } else if "[]().*/+-".contains(c) {
            out.push((Tok::Sym(c), here));
            advance(&mut pos, c);
            i += 1;
        } else {
            return Err(ParseError::at(here, format!("unexpected character '{c}'")));
        }
    }
    out.push((Tok::End, pos));
    Ok(out)
}

/// Exact value of a decimal literal such as `0.25`.
fn decimal(literal: &str) -> Option<Rational64> {
    let (int, frac) = literal.split_once('.').unwrap_or((literal, ""));
    let mut numer: i64 = 0;
    let mut denom: i64 = 1;
    for ch in int.chars().chain(frac.chars()) {
        numer = numer.checked_mul(10)?.checked_add(ch.to_digit(10)? as i64)?;
    }
    for _ in 0..frac.len() {
        denom = denom.checked_mul(10)?;
    }
    Some(Rational64::new(numer, denom))
}

#[derive(Debug, Clone)]
enum IndexAst {
    Letter(String, Pos),
    Literal(usize, Pos),
}

#[derive(Debug, Clone)]
struct FactorAst {
    name: String,
    pos: Pos,
    component: Option<IndexAst>,
    derivatives: Vec<IndexAst>,
}

#[derive(Debug, Clone)]
enum Expr {
    Number(Rational64),
    Measure,
    Function(FactorAst),
    Sum(Vec<Expr>),
    Product(Vec<Expr>),
}

/// One term of the expanded expression.
#[derive(Debug, Clone)]
struct Term {
    constant: Rational64,
    factors: Vec<FactorAst>,
    measures: usize,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        match self.bump() {
            (Tok::Sym(s), _) if s == c => Ok(()),
            (t, p) => Err(ParseError::at(p, format!("expected '{c}', found {}", describe(&t)))),
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut terms = Vec::new();
        let mut negate = false;
        match self.peek() {
            Tok::Sym('+') => {
                self.bump();
            }
            Tok::Sym('-') => {
                self.bump();
                negate = true;
            }
            _ => {}
        }
        loop {
            let p = self.product()?;
            terms.push(if negate {
                Expr::Product(vec![Expr::Number(-Rational64::one()), p])
            } else {
                p
            });
            match self.peek() {
                Tok::Sym('+') => negate = false,
                Tok::Sym('-') => negate = true,
                _ => break,
            }
            self.bump();
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::Sum(terms) })
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut items = vec![self.atom()?];
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.bump();
                    items.push(self.atom()?);
                }
                Tok::Sym('/') => {
                    self.bump();
                    match self.bump() {
                        (Tok::Number(n), p) => {
                            if n.is_zero() {
                                return Err(ParseError::at(p, "division by zero"));
                            }
                            items.push(Expr::Number(n.recip()));
                        }
                        (t, p) => {
                            return Err(ParseError::at(p, format!("expected a number after '/', found {}", describe(&t))))
                        }
                    }
                }
                _ => break,
            }
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::Product(items) })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.bump() {
            (Tok::Number(n), _) => Ok(Expr::Number(n)),
            (Tok::Sym('('), _) => {
                let inner = self.sum()?;
                self.expect(')')?;
                Ok(inner)
            }
            (Tok::Ident(name), _) if name == "dx" => Ok(Expr::Measure),
            (Tok::Ident(name), pos) => {
                let mut factor = FactorAst {
                    name,
                    pos,
                    component: None,
                    derivatives: Vec::new(),
                };
                if self.peek() == &Tok::Sym('[') {
                    self.bump();
                    factor.component = Some(self.index()?);
                    self.expect(']')?;
                }
                while self.peek() == &Tok::Sym('.') {
                    self.bump();
                    match self.bump() {
                        (Tok::Ident(d), _) if d == "dx" => {}
                        (t, p) => return Err(ParseError::at(p, format!("expected 'dx' after '.', found {}", describe(&t)))),
                    }
                    self.expect('(')?;
                    factor.derivatives.push(self.index()?);
                    self.expect(')')?;
                }
                Ok(Expr::Function(factor))
            }
            (t, p) => Err(ParseError::at(p, format!("expected a number, '(' or a name, found {}", describe(&t)))),
        }
    }

    fn index(&mut self) -> Result<IndexAst, ParseError> {
        match self.bump() {
            (Tok::Ident(name), p) => Ok(IndexAst::Letter(name, p)),
            (Tok::Number(n), p) if n.is_integer() && n.to_integer() >= 0 => Ok(IndexAst::Literal(n.to_integer() as usize, p)),
            (t, p) => Err(ParseError::at(p, format!("expected an index letter or integer, found {}", describe(&t)))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Number(n) => format!("number {n}"),
        Tok::Ident(s) => format!("'{s}'"),
        Tok::Sym(c) => format!("'{c}'"),
        Tok::End => "end of input".to_string(),
    }
}

fn expand(expr: &Expr, pos: Pos) -> Result<Vec<Term>, ParseError> {
    let overflow = || ParseError::at(pos, "constant overflows a 64-bit rational");
    Ok(match expr {
        Expr::Number(n) => vec![Term {
            constant: *n,
            factors: Vec::new(),
            measures: 0,
        }],
        Expr::Measure => vec![Term {
            constant: Rational64::one(),
            factors: Vec::new(),
            measures: 1,
        }],
        Expr::Function(f) => vec![Term {
            constant: Rational64::one(),
            factors: vec![f.clone()],
            measures: 0,
        }],
        Expr::Sum(items) => {
            let mut out = Vec::new();
            for item in items {
                out.extend(expand(item, pos)?);
            }
            out
        }
        Expr::Product(items) => {
            let mut acc = vec![Term {
                constant: Rational64::one(),
                factors: Vec::new(),
                measures: 0,
            }];
            for item in items {
                let rhs = expand(item, pos)?;
                let mut next = Vec::with_capacity(acc.len() * rhs.len());
                for a in &acc {
                    for b in &rhs {
                        let mut factors = a.factors.clone();
                        factors.extend(b.factors.iter().cloned());
                        next.push(Term {
                            constant: a.constant.checked_mul(&b.constant).ok_or_else(overflow)?,
                            factors,
                            measures: a.measures + b.measures,
                        });
                    }
                }
                acc = next;
            }
            acc
        }
    })
}

/// Parses a form expression (the right-hand side of `a = ...`) given the
/// declared arguments and coefficients.
pub fn parse_expression(
    source: &str,
    arguments: &[FunctionDecl],
    coefficients: &[FunctionDecl],
) -> Result<Form, ParseError> {
    parse_expression_at(source, Pos { line: 1, column: 1 }, arguments, coefficients)
}

fn parse_expression_at(
    source: &str,
    start: Pos,
    arguments: &[FunctionDecl],
    coefficients: &[FunctionDecl],
) -> Result<Form, ParseError> {
    let mut parser = Parser {
        toks: lex(source, start)?,
        at: 0,
    };
    let begin = parser.pos();
    if parser.peek() == &Tok::End {
        return Err(ParseError::at(begin, "empty expression"));
    }
    let expr = parser.sum()?;
    if parser.peek() != &Tok::End {
        let (t, p) = parser.bump();
        return Err(ParseError::at(p, format!("unexpected {}", describe(&t))));
    }
    let terms = expand(&expr, begin)?;

    let mut functions: HashMap<&str, (FunctionRef, ElementSpec)> = HashMap::new();
    for (k, a) in arguments.iter().enumerate() {
        functions.insert(a.name.as_str(), (FunctionRef::Argument(k), a.element));
    }
    for (k, c) in coefficients.iter().enumerate() {
        functions.insert(c.name.as_str(), (FunctionRef::Coefficient(k), c.element));
    }
    let cell = arguments
        .iter()
        .chain(coefficients)
        .map(|d| d.element.cell)
        .next()
        .ok_or_else(|| ParseError::at(begin, "no arguments declared"))?;

    let mut monomials = Vec::new();
    for term in terms {
        if term.factors.is_empty() && term.measures == 0 && term.constant.is_zero() {
            continue;
        }
        monomials.push(build_monomial(term, begin, &functions, arguments, coefficients, cell)?);
    }
    if monomials.is_empty() {
        return Err(ParseError::at(begin, "the form has no terms"));
    }
    Ok(Form {
        arguments: arguments.to_vec(),
        coefficients: coefficients.to_vec(),
        monomials,
    })
}

fn build_monomial(
    term: Term,
    pos: Pos,
    functions: &HashMap<&str, (FunctionRef, ElementSpec)>,
    arguments: &[FunctionDecl],
    coefficients: &[FunctionDecl],
    cell: ReferenceCell,
) -> Result<Monomial, ParseError> {
    let term_pos = term.factors.first().map(|f| f.pos).unwrap_or(pos);
    match term.measures {
        0 => return Err(ParseError::at(term_pos, "term is missing the measure 'dx'")),
        1 => {}
        n => return Err(ParseError::at(term_pos, format!("term contains the measure {n} times"))),
    }
    let mut resolved = Vec::with_capacity(term.factors.len());
    for f in &term.factors {
        let (function, element) = *functions
            .get(f.name.as_str())
            .ok_or_else(|| ParseError::at(f.pos, format!("unknown identifier '{}'", f.name)))?;
        if element.cell != cell {
            return Err(ParseError::at(f.pos, format!("'{}' is defined on a different cell", f.name)));
        }
        resolved.push((function, element));
    }
    for (k, a) in arguments.iter().enumerate() {
        let count = resolved.iter().filter(|(f, _)| *f == FunctionRef::Argument(k)).count();
        if count != 1 {
            return Err(ParseError::at(
                term_pos,
                format!("argument '{}' appears {count} times in a term; forms must be multilinear", a.name),
            ));
        }
    }

    let mut indices: Vec<Index> = arguments
        .iter()
        .enumerate()
        .map(|(k, a)| Index {
            name: a.name.clone(),
            kind: IndexKind::Primary { argument: k },
            range: a.element.space_dimension(),
        })
        .collect();
    let mut factors = Vec::with_capacity(term.factors.len());
    let mut letters: HashMap<String, usize> = HashMap::new();
    let mut letter_slot = |idx: &IndexAst, range: usize, indices: &mut Vec<Index>| -> Result<IndexSlot, ParseError> {
        match idx {
            IndexAst::Literal(v, p) => {
                if *v >= range {
                    Err(ParseError::at(*p, format!("index {v} out of range 0..{range}")))
                } else {
                    Ok(IndexSlot::Fixed(*v))
                }
            }
            IndexAst::Letter(name, p) => {
                if let Some(&id) = letters.get(name) {
                    if indices[id].range != range {
                        return Err(ParseError::at(
                            *p,
                            format!("index '{name}' used with ranges {} and {range}", indices[id].range),
                        ));
                    }
                    Ok(IndexSlot::Index(id))
                } else {
                    indices.push(Index {
                        name: name.clone(),
                        kind: IndexKind::Summation,
                        range,
                    });
                    letters.insert(name.clone(), indices.len() - 1);
                    Ok(IndexSlot::Index(indices.len() - 1))
                }
            }
        }
    };
    // coefficient basis indices precede letters so that the index list reads
    // primaries, coefficient bases, letters
    let coefficient_basis: Vec<usize> = resolved
        .iter()
        .filter_map(|(function, element)| match function {
            FunctionRef::Coefficient(k) => {
                indices.push(Index {
                    name: coefficients[*k].name.clone(),
                    kind: IndexKind::CoefficientBasis { coefficient: *k },
                    range: element.space_dimension(),
                });
                Some(indices.len() - 1)
            }
            FunctionRef::Argument(_) => None,
        })
        .collect();
    let mut next_coefficient = coefficient_basis.into_iter();
    for (f, (function, element)) in term.factors.iter().zip(&resolved) {
        let basis = match function {
            FunctionRef::Argument(k) => *k,
            FunctionRef::Coefficient(_) => next_coefficient.next().expect("one basis index per coefficient factor"),
        };
        let component = match (&f.component, element.is_vector()) {
            (Some(c), true) => Some(letter_slot(c, element.vector_size, &mut indices)?),
            (None, false) => None,
            (Some(_), false) => {
                return Err(ParseError::at(f.pos, format!("'{}' is scalar-valued and takes no component", f.name)))
            }
            (None, true) => {
                return Err(ParseError::at(f.pos, format!("'{}' is vector-valued; select a component", f.name)))
            }
        };
        let mut derivatives = Vec::with_capacity(f.derivatives.len());
        for d in &f.derivatives {
            derivatives.push(letter_slot(d, cell.dim(), &mut indices)?);
        }
        factors.push(Factor {
            function: *function,
            basis,
            component,
            derivatives,
        });
    }
    Ok(Monomial {
        constant: term.constant,
        factors,
        indices,
    })
}

/// A parsed `.form` file: declarations plus the expression source, which
/// can be re-elaborated for other elements.
#[derive(Debug, Clone, PartialEq)]
pub struct FormFile {
    pub default_element: ElementSpec,
    pub overrides: Vec<(String, ElementSpec)>,
    pub argument_names: Vec<String>,
    pub coefficient_names: Vec<String>,
    pub expression: String,
    expression_start: (usize, usize),
}

impl FormFile {
    fn element_for(&self, name: &str) -> ElementSpec {
        self.overrides
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, e)| *e)
            .unwrap_or(self.default_element)
    }

    pub fn declarations(&self) -> (Vec<FunctionDecl>, Vec<FunctionDecl>) {
        let decl = |name: &String| FunctionDecl {
            name: name.clone(),
            element: self.element_for(name),
        };
        (
            self.argument_names.iter().map(decl).collect(),
            self.coefficient_names.iter().map(decl).collect(),
        )
    }

    /// Elaborates the expression against the declared elements.
    pub fn form(&self) -> Result<Form, ParseError> {
        let (arguments, coefficients) = self.declarations();
        let (line, column) = self.expression_start;
        parse_expression_at(&self.expression, Pos { line, column }, &arguments, &coefficients)
    }

    /// The same form with every element moved to degree `degree` on `cell`;
    /// vector-valued elements keep one component per space dimension.
    pub fn retarget(&self, degree: usize, cell: ReferenceCell) -> Result<FormFile, crate::element::ElementError> {
        let move_spec = |e: ElementSpec| {
            let v = if e.is_vector() { cell.dim() } else { 1 };
            ElementSpec::new(degree, cell, v)
        };
        let mut out = self.clone();
        out.default_element = move_spec(self.default_element)?;
        for (_, e) in &mut out.overrides {
            *e = move_spec(*e)?;
        }
        Ok(out)
    }
}

fn parse_element(text: &str, pos: Pos) -> Result<ElementSpec, ParseError> {
    let err = |m: &str| ParseError::at(pos, format!("{m}; expected Lagrange(degree, cell, vector_size)"));
    let inner = text
        .trim()
        .strip_prefix("Lagrange")
        .map(str::trim)
        .and_then(|s| s.strip_prefix('('))
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| err("malformed element"))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(err("wrong number of element parameters"));
    }
    let degree: usize = parts[0].parse().map_err(|_| err("bad degree"))?;
    let cell = ReferenceCell::from_name(parts[1]).ok_or_else(|| err("unknown cell"))?;
    let size: usize = parts[2].parse().map_err(|_| err("bad vector size"))?;
    ElementSpec::new(degree, cell, size).map_err(|e| ParseError::at(pos, e.to_string()))
}

fn parse_names(text: &str, pos: Pos) -> Result<Vec<String>, ParseError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|n| {
            let n = n.trim();
            let valid = n.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                && n != "dx";
            if valid {
                Ok(n.to_string())
            } else {
                Err(ParseError::at(pos, format!("invalid function name '{n}'")))
            }
        })
        .collect()
}

/// Parses a `.form` file and elaborates it.
pub fn parse_form_file(source: &str) -> Result<(FormFile, Form), ParseError> {
    let mut default_element = None;
    let mut overrides = Vec::new();
    let mut argument_names = None;
    let mut coefficient_names = Vec::new();
    let mut expression = None;
    let mut offset = 0;
    for (n, raw) in source.split_inclusive('\n').enumerate() {
        let line_no = n + 1;
        let line_start = offset;
        offset += raw.len();
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let pos = Pos {
            line: line_no,
            column: content.len() - content.trim_start().len() + 1,
        };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ParseError::at(pos, "expected 'key = value'"))?;
        let key = key.trim();
        let words: Vec<&str> = key.split_whitespace().collect();
        match words.as_slice() {
            ["element"] => default_element = Some(parse_element(value, pos)?),
            ["element", name] => overrides.push((name.to_string(), parse_element(value, pos)?)),
            ["arguments"] => argument_names = Some(parse_names(value, pos)?),
            ["coefficients"] => coefficient_names = parse_names(value, pos)?,
            ["a"] => {
                let eq = raw.find('=').expect("split above found '='");
                let text = &source[line_start + eq + 1..];
                expression = Some((text.to_string(), (line_no, eq + 2)));
                break;
            }
            _ => return Err(ParseError::at(pos, format!("unknown declaration '{key}'"))),
        }
    }
    let end = Pos {
        line: source.lines().count().max(1),
        column: 1,
    };
    let default_element = default_element.ok_or_else(|| ParseError::at(end, "missing 'element = ...' declaration"))?;
    let argument_names = argument_names.ok_or_else(|| ParseError::at(end, "missing 'arguments = ...' declaration"))?;
    let (expression, expression_start) = expression.ok_or_else(|| ParseError::at(end, "missing 'a = ...' expression"))?;
    let mut seen = std::collections::HashSet::new();
    for name in argument_names.iter().chain(&coefficient_names) {
        if !seen.insert(name) {
            return Err(ParseError::at(end, format!("function '{name}' declared twice")));
        }
    }
    for (name, _) in &overrides {
        if !seen.contains(name) {
            return Err(ParseError::at(end, format!("element given for undeclared function '{name}'")));
        }
    }
    let file = FormFile {
        default_element,
        overrides,
        argument_names,
        coefficient_names,
        expression,
        expression_start,
    };
    let form = file.form()?;
    Ok((file, form))
}
