//! Merging monomials that agree up to index renaming and factor order.

use std::collections::HashMap;
use std::fmt::Write;

use num_traits::{CheckedAdd, Zero};

use super::{Form, FunctionRef, IndexSlot, Monomial};

/// All orderings of `items`, in lexicographic order of positions.
fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (k, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// A string that is equal for two monomials exactly when they differ only by
/// a renaming of summation letters and a reordering of factors (the constant
/// is not part of the key).
pub fn canonical_key(m: &Monomial) -> String {
    // factors sorted by function; only factors of the same coefficient can tie
    let mut order: Vec<usize> = (0..m.factors.len()).collect();
    order.sort_by_key(|&j| m.factors[j].function);
    let mut runs: Vec<Vec<usize>> = Vec::new();
    for &j in &order {
        match runs.last_mut() {
            Some(run) if m.factors[run[0]].function == m.factors[j].function => run.push(j),
            _ => runs.push(vec![j]),
        }
    }
    let mut candidates: Vec<Vec<usize>> = vec![Vec::new()];
    for run in &runs {
        let perms = permutations(run);
        let mut next = Vec::with_capacity(candidates.len() * perms.len());
        for c in &candidates {
            for p in &perms {
                let mut v = c.clone();
                v.extend_from_slice(p);
                next.push(v);
            }
        }
        candidates = next;
    }
    candidates
        .iter()
        .map(|order| key_for_order(m, order))
        .min()
        .expect("at least one ordering")
}

fn key_for_order(m: &Monomial, order: &[usize]) -> String {
    let mut names: HashMap<usize, usize> = HashMap::new();
    let mut out = String::new();
    let mut slot = |s: &IndexSlot, out: &mut String| match s {
        IndexSlot::Fixed(v) => write!(out, "#{v}").unwrap(),
        IndexSlot::Index(i) => {
            let n = names.len();
            let n = *names.entry(*i).or_insert(n);
            write!(out, "L{n}:{}", m.indices[*i].range).unwrap();
        }
    };
    for &j in order {
        let f = &m.factors[j];
        match f.function {
            FunctionRef::Argument(k) => write!(out, "A{k}").unwrap(),
            FunctionRef::Coefficient(k) => write!(out, "C{k}").unwrap(),
        }
        out.push('[');
        if let Some(c) = &f.component {
            slot(c, &mut out);
        }
        out.push_str("](");
        for d in &f.derivatives {
            slot(d, &mut out);
            out.push(',');
        }
        out.push_str(")*");
    }
    out
}

/// Merges monomials with equal [`canonical_key`]s by summing their constants
/// and drops monomials whose constant is zero. The first monomial of each
/// class is kept as its representative, so the result is in first-occurrence
/// order and `simplify` is idempotent.
pub fn simplify(form: &Form) -> Form {
    let mut merged: Vec<(String, Monomial)> = Vec::new();
    for m in &form.monomials {
        let key = canonical_key(m);
        let target = merged.iter_mut().find(|(k, _)| *k == key);
        match target {
            Some((_, rep)) => match rep.constant.checked_add(&m.constant) {
                Some(sum) => rep.constant = sum,
                None => merged.push((format!("{key}!overflow{}", merged.len()), m.clone())),
            },
            None => merged.push((key, m.clone())),
        }
    }
    Form {
        arguments: form.arguments.clone(),
        coefficients: form.coefficients.clone(),
        monomials: merged
            .into_iter()
            .map(|(_, m)| m)
            .filter(|m| !m.constant.is_zero())
            .collect(),
    }
}
