//! The bundled test forms.

use std::fmt;
use std::str::FromStr;

use crate::cell::ReferenceCell;
use crate::form::{parse_form_file, Form, FormFile};

/// Source of the two-term Laplacian, whose terms share one reference tensor.
pub const LAPLACIAN_SPLIT: &str = include_str!("../corpus/laplacian_split.form");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TestCase {
    Mass,
    Poisson,
    NavierStokes,
    Elasticity,
    Stabilization,
}

impl TestCase {
    pub const ALL: [TestCase; 5] = [
        TestCase::Mass,
        TestCase::Poisson,
        TestCase::NavierStokes,
        TestCase::Elasticity,
        TestCase::Stabilization,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TestCase::Mass => "mass",
            TestCase::Poisson => "poisson",
            TestCase::NavierStokes => "navier_stokes",
            TestCase::Elasticity => "elasticity",
            TestCase::Stabilization => "stabilization",
        }
    }

    /// 1-based position in the corpus.
    pub fn number(self) -> usize {
        Self::ALL.iter().position(|&c| c == self).expect("listed") + 1
    }

    pub fn source(self) -> &'static str {
        match self {
            TestCase::Mass => include_str!("../corpus/mass.form"),
            TestCase::Poisson => include_str!("../corpus/poisson.form"),
            TestCase::NavierStokes => include_str!("../corpus/navier_stokes.form"),
            TestCase::Elasticity => include_str!("../corpus/elasticity.form"),
            TestCase::Stabilization => include_str!("../corpus/stabilization.form"),
        }
    }

    pub fn form_file(self) -> FormFile {
        parse_form_file(self.source()).expect("bundled forms parse").0
    }

    /// The form as bundled.
    pub fn form(self) -> Form {
        parse_form_file(self.source()).expect("bundled forms parse").1
    }

    /// The form with every element moved to degree `q` in dimension `dim`.
    pub fn form_for(self, dim: usize, q: usize) -> Form {
        let cell = ReferenceCell::from_dim(dim).expect("dimension 1, 2 or 3");
        self.form_file()
            .retarget(q, cell)
            .expect("supported degree")
            .form()
            .expect("bundled forms elaborate")
    }

    /// Highest benchmarked degree.
    pub fn max_degree(self) -> usize {
        match self {
            TestCase::Mass | TestCase::Poisson => 8,
            TestCase::NavierStokes | TestCase::Elasticity => 3,
            TestCase::Stabilization => 1,
        }
    }
}

impl fmt::Display for TestCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown test case '{s}'"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_parses_and_retargets() {
        for case in TestCase::ALL {
            assert_eq!(case.form().arity(), 2);
            let f = case.form_for(2, 3);
            assert_eq!(f.cell(), ReferenceCell::Triangle);
            assert_eq!(case.name().parse::<TestCase>(), Ok(case));
        }
        assert_eq!(TestCase::NavierStokes.form_for(2, 2).arguments[0].element.vector_size, 2);
        assert!(parse_form_file(LAPLACIAN_SPLIT).is_ok());
    }
}
