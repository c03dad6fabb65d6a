//! Reference simplices and point sets on them.

use std::fmt;

/// A reference simplex with vertices `{0, e_1, ..., e_d}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReferenceCell {
    Interval,
    Triangle,
    Tetrahedron,
}

impl ReferenceCell {
    pub fn from_dim(dim: usize) -> Option<Self> {
        match dim {
            1 => Some(Self::Interval),
            2 => Some(Self::Triangle),
            3 => Some(Self::Tetrahedron),
            _ => None,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "interval" => Some(Self::Interval),
            "triangle" => Some(Self::Triangle),
            "tetrahedron" => Some(Self::Tetrahedron),
            _ => None,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Self::Interval => 1,
            Self::Triangle => 2,
            Self::Tetrahedron => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Interval => "interval",
            Self::Triangle => "triangle",
            Self::Tetrahedron => "tetrahedron",
        }
    }

    /// Vertex coordinates: the origin followed by the unit vectors.
    pub fn vertices(self) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut out = vec![vec![0.0; d]];
        for i in 0..d {
            let mut v = vec![0.0; d];
            v[i] = 1.0;
            out.push(v);
        }
        out
    }

    /// Volume `1/d!`.
    pub fn volume(self) -> f64 {
        match self {
            Self::Interval => 1.0,
            Self::Triangle => 0.5,
            Self::Tetrahedron => 1.0 / 6.0,
        }
    }

    /// True if `x` lies in the closed cell, up to `tol`.
    pub fn contains(self, x: &[f64], tol: f64) -> bool {
        x.iter().all(|&c| c >= -tol) && x.iter().sum::<f64>() <= 1.0 + tol
    }
}

impl fmt::Display for ReferenceCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A list of points in `dim`-dimensional space, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Self {
        assert!(dim > 0 && coords.len().is_multiple_of(dim), "coordinate count must be a multiple of dim");
        Self { dim, coords }
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, points: &[P]) -> Self {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            assert_eq!(p.len(), dim);
            coords.extend_from_slice(p);
        }
        Self { dim, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }
}
