//! Orthonormal polynomial bases on the reference simplices.
//!
//! The recurrences run in collapsed-coordinate form on the biunit simplex
//! `{x_i >= -1, sum x_i <= 2 - d}` and are evaluated on jets, so derivatives
//! of every order come out of the same code path. Functions are orthonormal
//! on the biunit simplex, i.e. `2^-d δ_ij` on the unit simplex.

use super::jet::{Jet, JetLayout};
use crate::cell::ReferenceCell;

/// Number of polynomials of total degree `<= degree` in `dim` variables.
pub fn polynomial_count(dim: usize, degree: usize) -> usize {
    match dim {
        1 => degree + 1,
        2 => (degree + 1) * (degree + 2) / 2,
        3 => (degree + 1) * (degree + 2) * (degree + 3) / 6,
        _ => panic!("unsupported dimension {dim}"),
    }
}

fn tri_index(p: usize, q: usize) -> usize {
    (p + q) * (p + q + 1) / 2 + q
}

fn tet_index(p: usize, q: usize, r: usize) -> usize {
    (p + q + r) * (p + q + r + 1) * (p + q + r + 2) / 6 + (q + r) * (q + r + 1) / 2 + r
}

/// Three-term recurrence coefficients for Jacobi polynomials `P^{(a,b)}`.
fn jacobi_recurrence(a: f64, b: f64, n: f64) -> (f64, f64, f64) {
    let an = (2.0 * n + 1.0 + a + b) * (2.0 * n + 2.0 + a + b) / (2.0 * (n + 1.0) * (n + 1.0 + a + b));
    let bn = (a * a - b * b) * (2.0 * n + 1.0 + a + b)
        / (2.0 * (n + 1.0) * (2.0 * n + a + b) * (n + 1.0 + a + b));
    let cn = (n + a) * (n + b) * (2.0 * n + 2.0 + a + b)
        / ((n + 1.0) * (n + 1.0 + a + b) * (2.0 * n + a + b));
    (an, bn, cn)
}

/// Evaluates every orthonormal basis polynomial of degree `<= degree` as a jet
/// about `point` (unit-simplex coordinates).
pub(crate) fn orthonormal_jets(
    cell: ReferenceCell,
    degree: usize,
    point: &[f64],
    layout: &JetLayout,
) -> Vec<Jet> {
    // biunit coordinates: x = 2X - 1, so d/dX = 2 d/dx
    let coord = |axis: usize| layout.variable(axis, point[axis]) * 2.0 + (-1.0);
    match cell {
        ReferenceCell::Interval => line(degree, coord(0), layout),
        ReferenceCell::Triangle => triangle(degree, coord(0), coord(1), layout),
        ReferenceCell::Tetrahedron => tetrahedron(degree, coord(0), coord(1), coord(2), layout),
    }
}

fn line(n: usize, x: Jet, layout: &JetLayout) -> Vec<Jet> {
    let mut out = vec![layout.constant(1.0)];
    if n >= 1 {
        out.push(x.clone());
    }
    for p in 1..n {
        let pf = p as f64;
        let next = layout.mul(&x, &out[p]) * ((2.0 * pf + 1.0) / (pf + 1.0))
            - &out[p - 1] * (pf / (pf + 1.0));
        out.push(next);
    }
    for (p, f) in out.iter_mut().enumerate() {
        *f = &*f * (p as f64 + 0.5).sqrt();
    }
    out
}

fn triangle(n: usize, x: Jet, y: Jet, layout: &JetLayout) -> Vec<Jet> {
    let count = polynomial_count(2, n);
    let mut r: Vec<Option<Jet>> = vec![None; count];
    let f1 = (x * 2.0 + y.clone() + 1.0) * 0.5;
    let f2 = (y.clone() * -1.0 + 1.0) * 0.5;
    let f3 = layout.mul(&f2, &f2);

    r[tri_index(0, 0)] = Some(layout.constant(1.0));
    if n >= 1 {
        r[tri_index(1, 0)] = Some(f1.clone());
    }
    for p in 1..n {
        let pf = p as f64;
        let a = (2.0 * pf + 1.0) / (pf + 1.0);
        let b = pf / (pf + 1.0);
        let rp = r[tri_index(p, 0)].as_ref().unwrap();
        let rm = r[tri_index(p - 1, 0)].as_ref().unwrap();
        let next = layout.mul(&f1, rp) * a - layout.mul(&f3, rm) * b;
        r[tri_index(p + 1, 0)] = Some(next);
    }
    for p in 0..n {
        let pf = p as f64;
        let factor = (y.clone() * (3.0 + 2.0 * pf) + (1.0 + 2.0 * pf)) * 0.5;
        let next = layout.mul(r[tri_index(p, 0)].as_ref().unwrap(), &factor);
        r[tri_index(p, 1)] = Some(next);
    }
    for p in 0..n.saturating_sub(1) {
        for q in 1..(n - p) {
            let (a1, a2, a3) = jacobi_recurrence(2.0 * p as f64 + 1.0, 0.0, q as f64);
            let factor = y.clone() * a1 + a2;
            let next = layout.mul(&factor, r[tri_index(p, q)].as_ref().unwrap())
                - r[tri_index(p, q - 1)].as_ref().unwrap() * a3;
            r[tri_index(p, q + 1)] = Some(next);
        }
    }
    let mut out: Vec<Jet> = r.into_iter().map(|j| j.expect("recurrence covers every index")).collect();
    for p in 0..=n {
        for q in 0..=(n - p) {
            let k = tri_index(p, q);
            out[k] = &out[k] * ((p as f64 + 0.5) * ((p + q) as f64 + 1.0)).sqrt();
        }
    }
    out
}

fn tetrahedron(n: usize, x: Jet, y: Jet, z: Jet, layout: &JetLayout) -> Vec<Jet> {
    let count = polynomial_count(3, n);
    let mut r: Vec<Option<Jet>> = vec![None; count];
    let f1 = (x * 2.0 + y.clone() + z.clone() + 2.0) * 0.5;
    let half_yz = (y.clone() + z.clone()) * 0.5;
    let f2 = layout.mul(&half_yz, &half_yz);
    let f3 = (y.clone() * 2.0 + z.clone() + 1.0) * 0.5;
    let f4 = (z.clone() * -1.0 + 1.0) * 0.5;
    let f5 = layout.mul(&f4, &f4);

    let get = |r: &Vec<Option<Jet>>, p, q, s| r[tet_index(p, q, s)].clone().expect("recurrence order");

    r[tet_index(0, 0, 0)] = Some(layout.constant(1.0));
    if n >= 1 {
        r[tet_index(1, 0, 0)] = Some(f1.clone());
    }
    for p in 1..n {
        let pf = p as f64;
        let a1 = (2.0 * pf + 1.0) / (pf + 1.0);
        let a2 = pf / (pf + 1.0);
        let next = layout.mul(&f1, &get(&r, p, 0, 0)) * a1 - layout.mul(&f2, &get(&r, p - 1, 0, 0)) * a2;
        r[tet_index(p + 1, 0, 0)] = Some(next);
    }
    for p in 0..n {
        let pf = p as f64;
        let factor = (y.clone() + 1.0) * pf + (y.clone() * 3.0 + z.clone() + 2.0) * 0.5;
        r[tet_index(p, 1, 0)] = Some(layout.mul(&get(&r, p, 0, 0), &factor));
    }
    for p in 0..n.saturating_sub(1) {
        for q in 1..(n - p) {
            let (aq, bq, cq) = jacobi_recurrence(2.0 * p as f64 + 1.0, 0.0, q as f64);
            let qm = f3.clone() * aq + f4.clone() * bq;
            let qm1 = &f5 * cq;
            let next = layout.mul(&qm, &get(&r, p, q, 0)) - layout.mul(&qm1, &get(&r, p, q - 1, 0));
            r[tet_index(p, q + 1, 0)] = Some(next);
        }
    }
    for p in 0..n {
        for q in 0..(n - p) {
            let s = (p + q) as f64;
            let factor = z.clone() * (2.0 + s) + (1.0 + s);
            r[tet_index(p, q, 1)] = Some(layout.mul(&get(&r, p, q, 0), &factor));
        }
    }
    for p in 0..n.saturating_sub(1) {
        for q in 0..(n - p - 1) {
            for s in 1..(n - p - q) {
                let (ar, br, cr) = jacobi_recurrence(2.0 * (p + q) as f64 + 2.0, 0.0, s as f64);
                let factor = z.clone() * ar + br;
                let next = layout.mul(&factor, &get(&r, p, q, s)) - &get(&r, p, q, s - 1) * cr;
                r[tet_index(p, q, s + 1)] = Some(next);
            }
        }
    }
    let mut out: Vec<Jet> = r.into_iter().map(|j| j.expect("recurrence covers every index")).collect();
    for p in 0..=n {
        for q in 0..=(n - p) {
            for s in 0..=(n - p - q) {
                let k = tet_index(p, q, s);
                let norm = ((p as f64 + 0.5) * ((p + q) as f64 + 1.0) * ((p + q + s) as f64 + 1.5)).sqrt();
                out[k] = &out[k] * norm;
            }
        }
    }
    out
}
