//! Lowering monomials to a reference tensor and a geometry tensor.
//!
//! For an affine map `x = F(X)` every physical derivative of a basis function
//! is a combination of reference derivatives,
//! `d/dx_c = sum_r (dX_r/dx_c) d/dX_r`, with constant coefficients. After
//! this substitution ([`apply_chain_rule`]) the integrand splits into a part
//! integrated on the reference cell and a part that only depends on the cell
//! geometry and the coefficients. [`classify_indices`] sorts every index:
//!
//! * primary: enumerates the element tensor entries;
//! * secondary: shared between both parts and contracted at run time;
//!   coefficient basis indices and reference directions are always secondary,
//!   as is any letter used both in a component and in a physical derivative;
//! * auxiliary (integrand): a letter used only in components, summed inside
//!   the reference tensor;
//! * auxiliary (geometry): a letter used only in physical derivatives, summed
//!   inside the geometry tensor.
//!
//! Secondary axes are ordered: coefficient basis indices in factor order,
//! then shared letters in order of first occurrence, then reference
//! directions in factor and derivative order. Both the reference tensor and
//! the geometry tensor use this order.

use std::collections::HashMap;
use std::fmt;

use num_rational::Rational64;
use thiserror::Error;

use crate::element::ElementSpec;
use crate::form::{Form, FunctionRef, Index, IndexKind, IndexSlot, Monomial};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LoweringError {
    #[error("index {0} does not occur in the monomial")]
    UnusedIndex(String),
    #[error("index {0} has a kind that cannot occur in that position")]
    MisplacedIndex(String),
}

/// A monomial after the chain rule: every derivative is a reference
/// derivative whose direction is a fresh index, paired with a Jacobian
/// inverse entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRuleMonomial {
    pub constant: Rational64,
    pub factors: Vec<ChainFactor>,
    /// `(reference direction index, physical direction)` per `dX_r/dx_c` entry.
    pub jacobian: Vec<(usize, IndexSlot)>,
    pub indices: Vec<Index>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainFactor {
    pub function: FunctionRef,
    pub element: ElementSpec,
    pub basis: usize,
    pub component: Option<IndexSlot>,
    /// Fresh reference-direction indices, one per derivative.
    pub reference_derivatives: Vec<usize>,
}

pub fn apply_chain_rule(form: &Form, monomial: &Monomial) -> ChainRuleMonomial {
    let d = form.cell().dim();
    let mut indices = monomial.indices.clone();
    let mut jacobian = Vec::new();
    let mut factors = Vec::with_capacity(monomial.factors.len());
    for f in &monomial.factors {
        let mut reference_derivatives = Vec::with_capacity(f.derivatives.len());
        for phys in &f.derivatives {
            indices.push(Index {
                name: format!("X{}", jacobian.len()),
                kind: IndexKind::ReferenceDirection,
                range: d,
            });
            let fresh = indices.len() - 1;
            reference_derivatives.push(fresh);
            jacobian.push((fresh, *phys));
        }
        factors.push(ChainFactor {
            function: f.function,
            element: form.element_of(f.function),
            basis: f.basis,
            component: f.component,
            reference_derivatives,
        });
    }
    ChainRuleMonomial {
        constant: monomial.constant,
        factors,
        jacobian,
        indices,
    }
}

/// Index slot in the reference tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    Primary(usize),
    Secondary(usize),
    /// Summed inside the reference tensor.
    Auxiliary(usize),
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReferenceFactor {
    pub function: FunctionRef,
    pub element: ElementSpec,
    /// `Primary` for arguments, `Secondary` for coefficients.
    pub basis: Slot,
    pub component: Option<Slot>,
    /// Reference derivative directions, all `Secondary`.
    pub derivatives: Vec<Slot>,
}

/// The integrand part: `A0[i, a] = sum_b int prod_j D^{d_j} phi_j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReferenceMonomial {
    pub factors: Vec<ReferenceFactor>,
    pub primary_ranges: Vec<usize>,
    pub secondary_ranges: Vec<usize>,
    pub auxiliary_ranges: Vec<usize>,
}

impl ReferenceMonomial {
    pub fn rank(&self) -> usize {
        self.primary_ranges.len() + self.secondary_ranges.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.primary_ranges
            .iter()
            .chain(&self.secondary_ranges)
            .copied()
            .collect()
    }

    pub fn entry_count(&self) -> u128 {
        self.shape().iter().map(|&n| n as u128).product()
    }

    pub fn primary_size(&self) -> usize {
        self.primary_ranges.iter().product()
    }

    pub fn secondary_size(&self) -> usize {
        self.secondary_ranges.iter().product()
    }

    pub fn auxiliary_size(&self) -> usize {
        self.auxiliary_ranges.iter().product()
    }
}

/// Physical slot of a Jacobian inverse entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhysSlot {
    Secondary(usize),
    /// Summed inside the geometry tensor.
    External(usize),
    Fixed(usize),
}

/// The geometry part:
/// `G[a] = c * prod w_k[a] * |det F'| * sum_b' prod dX_r/dx_c`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GeometryTensorExpr {
    pub constant: Rational64,
    /// `(coefficient, secondary position of its basis index)`.
    pub coefficients: Vec<(usize, usize)>,
    /// `(secondary position of the reference direction, physical slot)`.
    pub jacobian: Vec<(usize, PhysSlot)>,
    pub external_ranges: Vec<usize>,
    pub secondary_ranges: Vec<usize>,
}

impl GeometryTensorExpr {
    /// Relabels secondary axes: position `p` becomes `map[p]`.
    pub fn relabel(&self, map: &[usize]) -> GeometryTensorExpr {
        let mut ranges = vec![0; self.secondary_ranges.len()];
        for (p, &q) in map.iter().enumerate() {
            ranges[q] = self.secondary_ranges[p];
        }
        GeometryTensorExpr {
            constant: self.constant,
            coefficients: self.coefficients.iter().map(|&(c, p)| (c, map[p])).collect(),
            jacobian: self
                .jacobian
                .iter()
                .map(|&(r, phys)| {
                    let phys = match phys {
                        PhysSlot::Secondary(p) => PhysSlot::Secondary(map[p]),
                        other => other,
                    };
                    (map[r], phys)
                })
                .collect(),
            external_ranges: self.external_ranges.clone(),
            secondary_ranges: ranges,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoweredMonomial {
    pub reference: ReferenceMonomial,
    pub geometry: GeometryTensorExpr,
    /// Source names of the secondary indices, for printing.
    pub secondary_names: Vec<String>,
    pub coefficient_count: usize,
    pub derivative_count: usize,
}

impl LoweredMonomial {
    pub fn rank(&self) -> usize {
        self.reference.rank()
    }

    /// `r + n_C + n_D`.
    pub fn rank_rule(&self) -> usize {
        self.reference.primary_ranges.len() + self.coefficient_count + self.derivative_count
    }
}

pub fn classify_indices(chain: &ChainRuleMonomial) -> Result<LoweredMonomial, LoweringError> {
    let n = chain.indices.len();
    let mut in_integrand = vec![false; n];
    let mut in_geometry = vec![false; n];
    for f in &chain.factors {
        in_integrand[f.basis] = true;
        if let Some(IndexSlot::Index(i)) = f.component {
            in_integrand[i] = true;
        }
        for &r in &f.reference_derivatives {
            in_integrand[r] = true;
        }
    }
    for &(r, phys) in &chain.jacobian {
        in_geometry[r] = true;
        if let IndexSlot::Index(i) = phys {
            in_geometry[i] = true;
        }
    }
    for (i, index) in chain.indices.iter().enumerate() {
        if !in_integrand[i] && !in_geometry[i] {
            return Err(LoweringError::UnusedIndex(index.name.clone()));
        }
    }

    let mut secondary: Vec<usize> = Vec::new();
    // coefficient basis indices, factor order
    for f in &chain.factors {
        if let FunctionRef::Coefficient(_) = f.function {
            if !matches!(chain.indices[f.basis].kind, IndexKind::CoefficientBasis { .. }) {
                return Err(LoweringError::MisplacedIndex(chain.indices[f.basis].name.clone()));
            }
            secondary.push(f.basis);
        }
    }
    // letters shared between integrand and geometry, first occurrence
    let mut letter_order: Vec<usize> = Vec::new();
    let note = |slot: &IndexSlot, order: &mut Vec<usize>| {
        if let IndexSlot::Index(i) = *slot {
            if chain.indices[i].kind == IndexKind::Summation && !order.contains(&i) {
                order.push(i);
            }
        }
    };
    let mut jac = chain.jacobian.iter();
    for f in &chain.factors {
        if let Some(c) = &f.component {
            note(c, &mut letter_order);
        }
        for _ in &f.reference_derivatives {
            let (_, phys) = jac.next().expect("one Jacobian entry per derivative");
            note(phys, &mut letter_order);
        }
    }
    for &i in &letter_order {
        if in_integrand[i] && in_geometry[i] {
            secondary.push(i);
        }
    }
    for f in &chain.factors {
        secondary.extend_from_slice(&f.reference_derivatives);
    }
    let sec_pos: HashMap<usize, usize> = secondary.iter().enumerate().map(|(p, &i)| (i, p)).collect();

    let mut auxiliary: Vec<usize> = Vec::new();
    let mut external: Vec<usize> = Vec::new();
    for &i in &letter_order {
        match (in_integrand[i], in_geometry[i]) {
            (true, false) => auxiliary.push(i),
            (false, true) => external.push(i),
            _ => {}
        }
    }
    let aux_pos: HashMap<usize, usize> = auxiliary.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let ext_pos: HashMap<usize, usize> = external.iter().enumerate().map(|(p, &i)| (i, p)).collect();

    let slot_of = |s: &IndexSlot| -> Result<Slot, LoweringError> {
        Ok(match *s {
            IndexSlot::Fixed(v) => Slot::Fixed(v),
            IndexSlot::Index(i) => {
                if let Some(&p) = sec_pos.get(&i) {
                    Slot::Secondary(p)
                } else if let Some(&p) = aux_pos.get(&i) {
                    Slot::Auxiliary(p)
                } else {
                    return Err(LoweringError::MisplacedIndex(chain.indices[i].name.clone()));
                }
            }
        })
    };

    let mut primary_ranges = Vec::new();
    let mut factors = Vec::with_capacity(chain.factors.len());
    for f in &chain.factors {
        let basis = match (f.function, chain.indices[f.basis].kind) {
            (FunctionRef::Argument(k), IndexKind::Primary { argument }) if k == argument => Slot::Primary(k),
            (FunctionRef::Coefficient(_), _) => Slot::Secondary(sec_pos[&f.basis]),
            _ => return Err(LoweringError::MisplacedIndex(chain.indices[f.basis].name.clone())),
        };
        if let FunctionRef::Argument(k) = f.function {
            if primary_ranges.len() <= k {
                primary_ranges.resize(k + 1, 0);
            }
            primary_ranges[k] = chain.indices[f.basis].range;
        }
        factors.push(ReferenceFactor {
            function: f.function,
            element: f.element,
            basis,
            component: f.component.as_ref().map(slot_of).transpose()?,
            derivatives: f
                .reference_derivatives
                .iter()
                .map(|&r| Slot::Secondary(sec_pos[&r]))
                .collect(),
        });
    }

    let secondary_ranges: Vec<usize> = secondary.iter().map(|&i| chain.indices[i].range).collect();
    let geometry = GeometryTensorExpr {
        constant: chain.constant,
        coefficients: chain
            .factors
            .iter()
            .filter_map(|f| match f.function {
                FunctionRef::Coefficient(k) => Some((k, sec_pos[&f.basis])),
                FunctionRef::Argument(_) => None,
            })
            .collect(),
        jacobian: chain
            .jacobian
            .iter()
            .map(|&(r, phys)| {
                let phys = match phys {
                    IndexSlot::Fixed(v) => PhysSlot::Fixed(v),
                    IndexSlot::Index(i) => match sec_pos.get(&i) {
                        Some(&p) => PhysSlot::Secondary(p),
                        None => PhysSlot::External(ext_pos[&i]),
                    },
                };
                (sec_pos[&r], phys)
            })
            .collect(),
        external_ranges: external.iter().map(|&i| chain.indices[i].range).collect(),
        secondary_ranges: secondary_ranges.clone(),
    };
    let reference = ReferenceMonomial {
        factors,
        primary_ranges,
        secondary_ranges,
        auxiliary_ranges: auxiliary.iter().map(|&i| chain.indices[i].range).collect(),
    };
    Ok(LoweredMonomial {
        reference,
        geometry,
        secondary_names: secondary.iter().map(|&i| chain.indices[i].name.clone()).collect(),
        coefficient_count: chain.factors.iter().filter(|f| matches!(f.function, FunctionRef::Coefficient(_))).count(),
        derivative_count: chain.jacobian.len(),
    })
}

/// Chain rule followed by index classification.
pub fn lower_monomial(form: &Form, monomial: &Monomial) -> Result<LoweredMonomial, LoweringError> {
    classify_indices(&apply_chain_rule(form, monomial))
}

pub fn lower_form(form: &Form) -> Result<Vec<LoweredMonomial>, LoweringError> {
    form.monomials.iter().map(|m| lower_monomial(form, m)).collect()
}

fn slot_text(s: &Slot) -> String {
    match s {
        Slot::Primary(k) => format!("i{k}"),
        Slot::Secondary(p) => format!("a{p}"),
        Slot::Auxiliary(p) => format!("b{p}"),
        Slot::Fixed(v) => v.to_string(),
    }
}

impl fmt::Display for LoweredMonomial {
    /// Two lines: the reference tensor integral and the geometry tensor.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.reference;
        let prim: Vec<String> = (0..r.primary_ranges.len()).map(|k| format!("i{k}")).collect();
        let sec: Vec<String> = (0..r.secondary_ranges.len()).map(|p| format!("a{p}")).collect();
        write!(f, "A0[{}; {}] = ", prim.join(","), sec.join(","))?;
        if !r.auxiliary_ranges.is_empty() {
            let b: Vec<String> = (0..r.auxiliary_ranges.len()).map(|p| format!("b{p}")).collect();
            write!(f, "sum_{{{}}} ", b.join(","))?;
        }
        write!(f, "int ")?;
        for (j, fac) in r.factors.iter().enumerate() {
            if j > 0 {
                write!(f, " * ")?;
            }
            for d in &fac.derivatives {
                write!(f, "d/dX_{} ", slot_text(d))?;
            }
            let name = match fac.function {
                FunctionRef::Argument(k) => format!("phi{k}"),
                FunctionRef::Coefficient(k) => format!("psi{k}"),
            };
            write!(f, "{name}_{}", slot_text(&fac.basis))?;
            if let Some(c) = &fac.component {
                write!(f, "[{}]", slot_text(c))?;
            }
        }
        writeln!(f, " dX")?;
        let g = &self.geometry;
        write!(f, "G[{}] = {}", sec.join(","), g.constant)?;
        for (c, p) in &g.coefficients {
            write!(f, " * w{c}[a{p}]")?;
        }
        write!(f, " * |det F'|")?;
        if !g.external_ranges.is_empty() {
            let b: Vec<String> = (0..g.external_ranges.len()).map(|p| format!("c{p}")).collect();
            write!(f, " * sum_{{{}}}", b.join(","))?;
        }
        for (rpos, phys) in &g.jacobian {
            let c = match phys {
                PhysSlot::Secondary(p) => format!("a{p}"),
                PhysSlot::External(p) => format!("c{p}"),
                PhysSlot::Fixed(v) => v.to_string(),
            };
            write!(f, " * dX_a{rpos}/dx_{c}")?;
        }
        write!(f, "   [shape {:?}]", r.shape())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::parse_form_file;

    fn lower(header: &str, expr: &str) -> Vec<LoweredMonomial> {
        let (_, form) = parse_form_file(&format!("{header}\na = {expr}\n")).unwrap();
        lower_form(&form).unwrap()
    }

    const TRI: &str = "element = Lagrange(1, triangle, 1)\narguments = v, u";
    const VEC3: &str = "element = Lagrange(1, tetrahedron, 3)\narguments = v, u\ncoefficients = w";

    #[test]
    fn mass_is_unchanged() {
        let l = &lower(TRI, "v*u*dx")[0];
        assert_eq!(l.reference.shape(), vec![3, 3]);
        assert!(l.geometry.jacobian.is_empty());
        assert_eq!(l.rank(), 2);
    }

    #[test]
    fn poisson_moves_the_physical_index_to_the_geometry() {
        let l = &lower(TRI, "v.dx(i)*u.dx(i)*dx")[0];
        assert_eq!(l.reference.secondary_ranges, vec![2, 2]);
        assert!(l.reference.auxiliary_ranges.is_empty());
        assert_eq!(l.geometry.external_ranges, vec![2]);
        assert_eq!(
            l.geometry.jacobian,
            vec![(0, PhysSlot::External(0)), (1, PhysSlot::External(0))]
        );
        assert_eq!(l.reference.factors[0].derivatives, vec![Slot::Secondary(0)]);
        assert_eq!(l.rank(), 4);
    }

    #[test]
    fn fixed_second_derivatives() {
        let l = &lower(TRI, "v*u.dx(0).dx(0)*dx")[0];
        assert_eq!(l.geometry.jacobian, vec![(0, PhysSlot::Fixed(0)), (1, PhysSlot::Fixed(0))]);
        assert_eq!(l.reference.secondary_ranges, vec![2, 2]);
    }

    #[test]
    fn navier_stokes_split() {
        let l = &lower(VEC3, "v[i]*w[j]*u[i].dx(j)*dx")[0];
        assert_eq!(l.reference.primary_ranges, vec![12, 12]);
        assert_eq!(l.reference.secondary_ranges, vec![12, 3, 3]);
        assert_eq!(l.reference.auxiliary_ranges, vec![3]);
        assert!(l.geometry.external_ranges.is_empty());
        assert_eq!(l.geometry.coefficients, vec![(0, 0)]);
        assert_eq!(l.geometry.jacobian, vec![(2, PhysSlot::Secondary(1))]);
        assert_eq!(l.reference.entry_count(), 15_552);
        assert_eq!(l.rank(), 5);
        // r + n_C + n_D does not count the secondary index shared between
        // the coefficient's component and the derivative direction
        assert_eq!(l.rank_rule(), 4);
    }

    #[test]
    fn stabilization_split() {
        let l = &lower(VEC3, "w[j]*v[i].dx(j)*w[k]*u[i].dx(k)*dx")[0];
        assert_eq!(l.reference.secondary_ranges, vec![12, 12, 3, 3, 3, 3]);
        assert_eq!(l.reference.auxiliary_ranges, vec![3]);
        assert_eq!(l.rank(), 8);
        assert_eq!(l.reference.entry_count(), 1_679_616);
        assert_eq!(
            l.geometry.jacobian,
            vec![(4, PhysSlot::Secondary(2)), (5, PhysSlot::Secondary(3))]
        );
    }

    #[test]
    fn elasticity_terms() {
        let l = lower(VEC3, "v[i].dx(j)*u[i].dx(j)*dx + v[i].dx(j)*u[j].dx(i)*dx");
        assert_eq!(l[0].rank(), 4);
        assert_eq!(l[0].reference.auxiliary_ranges, vec![3]);
        assert_eq!(l[0].geometry.external_ranges, vec![3]);
        // the transposed strain term wires both letters through the geometry
        assert_eq!(l[1].rank(), 6);
    }

    #[test]
    fn relabel_permutes_ranges() {
        let l = &lower(VEC3, "v[i]*w[j]*u[i].dx(j)*dx")[0];
        let g = l.geometry.relabel(&[2, 0, 1]);
        assert_eq!(g.secondary_ranges, vec![3, 3, 12]);
        assert_eq!(g.coefficients, vec![(0, 2)]);
        assert_eq!(g.jacobian, vec![(1, PhysSlot::Secondary(0))]);
    }

    #[test]
    fn pretty_print() {
        let l = &lower(TRI, "v.dx(i)*u.dx(i)*dx")[0];
        let text = l.to_string();
        assert!(text.starts_with("A0[i0,i1; a0,a1] = int d/dX_a0 phi0_i0 * d/dX_a1 phi1_i1 dX"), "{text}");
        assert!(text.contains("G[a0,a1] = 1 * |det F'| * sum_{c0} * dX_a0/dx_c0 * dX_a1/dx_c0"), "{text}");
    }
}
