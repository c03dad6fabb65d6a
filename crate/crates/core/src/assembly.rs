//! Small simplicial meshes and dense global assembly.
//!
//! Mesh files are plain text, one entity per line, with 0-based indices:
//!
//! ```text
//! vertex 0 0
//! vertex 1 0
//! vertex 0 1
//! cell 0 1 2
//! ```

use std::collections::BTreeMap;
use std::fmt::Write;

use thiserror::Error;

use crate::cell::ReferenceCell;
use crate::element::{lagrange_nodes, ElementSpec};
use crate::form::Form;
use crate::geometry::{AffineMap, ElementTensor, GeometryError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssemblyError {
    #[error("mesh line {line}: {message}")]
    Mesh { line: usize, message: String },
    #[error("degree {0} elements have no global numbering here (only 1 and 2)")]
    UnsupportedDegree(usize),
    #[error("forms of arity {0} cannot be assembled densely (at most 2)")]
    Arity(usize),
    #[error("element for dimension {element} on a mesh of dimension {mesh}")]
    Dimension { element: usize, mesh: usize },
    #[error("coefficient {which} has {got} global values, expected {expected}")]
    CoefficientLength { which: usize, expected: usize, got: usize },
    #[error("cell {cell}: {source}")]
    Geometry { cell: usize, source: GeometryError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub dim: usize,
    pub vertices: Vec<Vec<f64>>,
    pub cells: Vec<Vec<usize>>,
}

impl Mesh {
    pub fn parse(text: &str) -> Result<Self, AssemblyError> {
        let mut vertices: Vec<Vec<f64>> = Vec::new();
        let mut cells: Vec<(usize, Vec<usize>)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            let err = |message: String| AssemblyError::Mesh { line, message };
            let content = raw.split('#').next().unwrap_or("").trim();
            let mut words = content.split_whitespace();
            match words.next() {
                None => {}
                Some("vertex") => {
                    let coords = words
                        .map(|w| w.parse::<f64>().map_err(|_| err(format!("bad coordinate '{w}'"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    if !(1..=3).contains(&coords.len()) || coords.iter().any(|c| !c.is_finite()) {
                        return Err(err("a vertex has 1 to 3 finite coordinates".into()));
                    }
                    if vertices.first().is_some_and(|v| v.len() != coords.len()) {
                        return Err(err("vertices of different dimensions".into()));
                    }
                    vertices.push(coords);
                }
                Some("cell") => {
                    let ids = words
                        .map(|w| w.parse::<usize>().map_err(|_| err(format!("bad vertex index '{w}'"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    cells.push((line, ids));
                }
                Some(other) => return Err(err(format!("unknown entry '{other}'"))),
            }
        }
        let dim = vertices.first().map(Vec::len).ok_or(AssemblyError::Mesh {
            line: 0,
            message: "no vertices".into(),
        })?;
        for (line, ids) in &cells {
            let err = |message: String| AssemblyError::Mesh { line: *line, message };
            if ids.len() != dim + 1 {
                return Err(err(format!("a cell has {} vertices in dimension {dim}", dim + 1)));
            }
            if let Some(&bad) = ids.iter().find(|&&v| v >= vertices.len()) {
                return Err(err(format!("vertex {bad} does not exist")));
            }
            let mut sorted = ids.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != ids.len() {
                return Err(err("repeated vertex".into()));
            }
        }
        Ok(Self {
            dim,
            vertices,
            cells: cells.into_iter().map(|(_, c)| c).collect(),
        })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let coords: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
            writeln!(s, "vertex {}", coords.join(" ")).unwrap();
        }
        for c in &self.cells {
            let ids: Vec<String> = c.iter().map(ToString::to_string).collect();
            writeln!(s, "cell {}", ids.join(" ")).unwrap();
        }
        s
    }

    /// The unit square split along its diagonal into two triangles.
    pub fn unit_square() -> Self {
        Self {
            dim: 2,
            vertices: vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]],
            cells: vec![vec![0, 1, 2], vec![0, 2, 3]],
        }
    }

    pub fn cell_type(&self) -> ReferenceCell {
        ReferenceCell::from_dim(self.dim).expect("mesh dimension is 1 to 3")
    }

    pub fn cell_map(&self, cell: usize) -> Result<AffineMap, GeometryError> {
        let vertices: Vec<Vec<f64>> = self.cells[cell].iter().map(|&v| self.vertices[v].clone()).collect();
        AffineMap::new(self.cell_type(), &vertices)
    }
}

/// Local-to-global numbering of an element's dofs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofMap {
    pub global_size: usize,
    pub cells: Vec<Vec<usize>>,
}

/// Degree 1: one dof per vertex. Degree 2: vertices, then one dof per edge.
/// Vector elements repeat the scalar numbering once per component.
pub fn dof_map(mesh: &Mesh, spec: ElementSpec) -> Result<DofMap, AssemblyError> {
    if spec.dim() != mesh.dim {
        return Err(AssemblyError::Dimension {
            element: spec.dim(),
            mesh: mesh.dim,
        });
    }
    if !(1..=2).contains(&spec.degree) {
        return Err(AssemblyError::UnsupportedDegree(spec.degree));
    }
    let nodes = lagrange_nodes(spec.cell, spec.degree);
    // each node sits on a vertex or an edge midpoint: find which local vertices
    let supports: Vec<Vec<usize>> = nodes
        .iter()
        .map(|x| {
            let mut bary = vec![1.0 - x.iter().sum::<f64>()];
            bary.extend_from_slice(x);
            (0..bary.len()).filter(|&v| bary[v] > 1e-12).collect()
        })
        .collect();
    let mut edges: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    if spec.degree == 2 {
        for cell in &mesh.cells {
            for a in 0..cell.len() {
                for b in a + 1..cell.len() {
                    let key = (cell[a].min(cell[b]), cell[a].max(cell[b]));
                    let next = edges.len();
                    edges.entry(key).or_insert(next);
                }
            }
        }
    }
    let scalar_size = mesh.vertices.len() + edges.len();
    let scalar_cells: Vec<Vec<usize>> = mesh
        .cells
        .iter()
        .map(|cell| {
            supports
                .iter()
                .map(|s| match s[..] {
                    [v] => cell[v],
                    [a, b] => {
                        let key = (cell[a].min(cell[b]), cell[a].max(cell[b]));
                        mesh.vertices.len() + edges[&key]
                    }
                    _ => unreachable!("degree 1 and 2 nodes lie on vertices and edges"),
                })
                .collect()
        })
        .collect();
    let v = spec.vector_size;
    Ok(DofMap {
        global_size: v * scalar_size,
        cells: scalar_cells
            .into_iter()
            .map(|local| (0..v).flat_map(|c| local.iter().map(move |&g| c * scalar_size + g)).collect())
            .collect(),
    })
}

/// Sums element tensors from `kernel` into a dense global tensor.
/// `coeffs` holds one global vector per coefficient.
pub fn assemble_with<K>(mesh: &Mesh, form: &Form, coeffs: &[Vec<f64>], mut kernel: K) -> Result<ElementTensor, AssemblyError>
where
    K: FnMut(&AffineMap, &[Vec<f64>]) -> Result<ElementTensor, GeometryError>,
{
    if form.arity() > 2 {
        return Err(AssemblyError::Arity(form.arity()));
    }
    let argument_maps = form
        .arguments
        .iter()
        .map(|a| dof_map(mesh, a.element))
        .collect::<Result<Vec<_>, _>>()?;
    let coefficient_maps = form
        .coefficients
        .iter()
        .map(|c| dof_map(mesh, c.element))
        .collect::<Result<Vec<_>, _>>()?;
    for (which, map) in coefficient_maps.iter().enumerate() {
        let got = coeffs.get(which).map_or(0, Vec::len);
        if got != map.global_size {
            return Err(AssemblyError::CoefficientLength {
                which,
                expected: map.global_size,
                got,
            });
        }
    }
    let shape: Vec<usize> = argument_maps.iter().map(|m| m.global_size).collect();
    let mut global = ElementTensor::zeros(shape.clone());
    for cell in 0..mesh.cells.len() {
        let geometry = |source| AssemblyError::Geometry { cell, source };
        let map = mesh.cell_map(cell).map_err(geometry)?;
        let local: Vec<Vec<f64>> = coefficient_maps
            .iter()
            .zip(coeffs)
            .map(|(m, w)| m.cells[cell].iter().map(|&g| w[g]).collect())
            .collect();
        let a = kernel(&map, &local).map_err(geometry)?;
        match argument_maps.len() {
            0 => global.values[0] += a.values[0],
            1 => {
                for (l, &g) in argument_maps[0].cells[cell].iter().enumerate() {
                    global.values[g] += a.values[l];
                }
            }
            _ => {
                let (rows, cols) = (&argument_maps[0].cells[cell], &argument_maps[1].cells[cell]);
                for (li, &gi) in rows.iter().enumerate() {
                    for (lj, &gj) in cols.iter().enumerate() {
                        global.values[gi * shape[1] + gj] += a.values[li * cols.len() + lj];
                    }
                }
            }
        }
    }
    Ok(global)
}

/// Dense assembly of a compiled form.
pub fn assemble(mesh: &Mesh, compiled: &crate::compile::CompiledForm, coeffs: &[Vec<f64>]) -> Result<ElementTensor, AssemblyError> {
    assemble_with(mesh, &compiled.form, coeffs, |map, local| compiled.element_tensor(map, local))
}
