//! Truncated multivariate Taylor expansions.
//!
//! A [`Jet`] holds the Taylor coefficients of a function about a fixed point,
//! for every exponent of total order at most `order`. Sums and products of
//! jets are exact up to truncation, so running a polynomial recurrence on
//! jets yields every partial derivative of the result at that point.

use std::ops::{Add, Mul, Sub};

#[derive(Debug, Clone)]
pub(crate) struct JetLayout {
    dim: usize,
    exponents: Vec<[u8; 3]>,
    /// `(i, j, k)` with `exponents[i] + exponents[j] == exponents[k]`.
    products: Vec<(u16, u16, u16)>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Jet {
    pub(crate) c: Vec<f64>,
}

impl JetLayout {
    pub(crate) fn new(dim: usize, order: usize) -> Self {
        assert!((1..=3).contains(&dim));
        let mut exponents = Vec::new();
        for total in 0..=order {
            let mut level = Vec::new();
            for a in 0..=total {
                for b in 0..=(total - a) {
                    let c = total - a - b;
                    let e = [a as u8, b as u8, c as u8];
                    let used = match dim {
                        1 => b == 0 && c == 0,
                        2 => c == 0,
                        _ => true,
                    };
                    if used {
                        level.push(e);
                    }
                }
            }
            // unit exponents must land at positions 1..=dim in axis order
            level.sort_by(|x, y| y.cmp(x));
            exponents.extend(level);
        }
        let mut products = Vec::new();
        for (i, ei) in exponents.iter().enumerate() {
            for (j, ej) in exponents.iter().enumerate() {
                let sum = [ei[0] + ej[0], ei[1] + ej[1], ei[2] + ej[2]];
                if let Some(k) = exponents.iter().position(|e| *e == sum) {
                    products.push((i as u16, j as u16, k as u16));
                }
            }
        }
        Self {
            dim,
            exponents,
            products,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.exponents.len()
    }

    pub(crate) fn constant(&self, value: f64) -> Jet {
        let mut c = vec![0.0; self.len()];
        c[0] = value;
        Jet { c }
    }

    /// The coordinate function `x_axis` expanded about a point where it takes `value`.
    pub(crate) fn variable(&self, axis: usize, value: f64) -> Jet {
        let mut jet = self.constant(value);
        if self.len() > 1 {
            jet.c[1 + axis] = 1.0;
        }
        jet
    }

    pub(crate) fn mul(&self, a: &Jet, b: &Jet) -> Jet {
        let mut c = vec![0.0; self.len()];
        for &(i, j, k) in &self.products {
            c[k as usize] += a.c[i as usize] * b.c[j as usize];
        }
        Jet { c }
    }

    /// The partial derivative `D^counts` of the expanded function at the expansion point.
    /// Returns zero for derivatives beyond the truncation order.
    pub(crate) fn derivative(&self, jet: &Jet, counts: &[usize]) -> f64 {
        let mut e = [0u8; 3];
        for (slot, &n) in e.iter_mut().zip(counts) {
            *slot = n as u8;
        }
        match self.exponents.iter().position(|x| *x == e) {
            Some(k) => {
                let factorial: f64 = counts[..self.dim]
                    .iter()
                    .map(|&n| (1..=n).product::<usize>() as f64)
                    .product();
                jet.c[k] * factorial
            }
            None => 0.0,
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a += b;
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        for (a, b) in self.c.iter_mut().zip(rhs.c) {
            *a -= b;
        }
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        for a in &mut self.c {
            *a *= rhs;
        }
        self
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.clone() * rhs
    }
}
