//! Signatures of reference monomials and factoring of common reference tensors.
//!
//! The hard signature spells out a reference monomial: per factor the
//! element, the basis index, the component and the derivative directions.
//! Two monomials with equal hard signatures have identical reference
//! tensors. The soft signature forgets which secondary or auxiliary index
//! sits where; monomials with equal soft signatures may have reference
//! tensors that differ only by a transposition of secondary axes, which
//! [`factorize`] then searches for.
//!
//! Constants are not part of signatures: they live in the geometry tensor.

use std::collections::HashMap;

use crate::lowering::{GeometryTensorExpr, LoweredMonomial, ReferenceFactor, ReferenceMonomial, Slot};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    pub hard: String,
    pub soft: String,
}

impl Signature {
    pub fn of(rm: &ReferenceMonomial) -> Self {
        Self {
            hard: hard_signature(rm),
            soft: soft_signature(rm),
        }
    }
}

fn factor_string(f: &ReferenceFactor, tag: &mut dyn FnMut(&Slot) -> String) -> String {
    let basis = tag(&f.basis);
    #[allow(clippy::redundant_closure)]
    let component = f.component.as_ref().map(|c| tag(c)).unwrap_or_default();
    let derivatives: Vec<String> = f.derivatives.iter().map(|d| format!("(d/dX{})", tag(d))).collect();
    format!(
        "{{{};{basis};[{component}];[{}]}}",
        f.element.description(),
        derivatives.join(", ")
    )
}

pub fn hard_signature(rm: &ReferenceMonomial) -> String {
    // auxiliary indices are renumbered by first appearance
    let mut aux: HashMap<usize, usize> = HashMap::new();
    let mut tag = |s: &Slot| match *s {
        Slot::Primary(k) => format!("i{k}"),
        Slot::Secondary(p) => format!("a{p}"),
        Slot::Auxiliary(b) => {
            let n = aux.len();
            format!("b{}", aux.entry(b).or_insert(n))
        }
        Slot::Fixed(v) => v.to_string(),
    };
    let mut parts: Vec<String> = rm.factors.iter().map(|f| factor_string(f, &mut tag)).collect();
    parts.push("dX".to_string());
    parts.join("*")
}

pub fn soft_signature(rm: &ReferenceMonomial) -> String {
    let mut tag = |s: &Slot| match *s {
        Slot::Primary(k) => format!("i{k}"),
        Slot::Secondary(_) => "a".to_string(),
        Slot::Auxiliary(_) => "b".to_string(),
        Slot::Fixed(v) => v.to_string(),
    };
    let mut parts: Vec<String> = rm.factors.iter().map(|f| factor_string(f, &mut tag)).collect();
    parts.sort();
    parts.push("dX".to_string());
    parts.join("*")
}

/// A monomial whose reference tensor is taken from its group's representative.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMember {
    pub monomial: usize,
    /// Secondary axis `p` of the member is axis `map[p]` of the representative.
    pub map: Vec<usize>,
    /// The member's geometry tensor, relabeled onto the representative's axes.
    pub geometry: GeometryTensorExpr,
}

impl GroupMember {
    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(p, &q)| p == q)
    }
}

/// Monomials sharing one reference tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureGroup {
    pub representative: usize,
    pub signature: Signature,
    pub members: Vec<GroupMember>,
}

/// Relabels `rm` so that factor `j` moves to position `order[j]`, secondary
/// `p` becomes `map[p]` and auxiliary `b` becomes `aux_map[b]`.
fn relabel(rm: &ReferenceMonomial, order: &[usize], map: &[usize], aux_map: &[usize]) -> ReferenceMonomial {
    let slot = |s: &Slot| match *s {
        Slot::Secondary(p) => Slot::Secondary(map[p]),
        Slot::Auxiliary(b) => Slot::Auxiliary(aux_map[b]),
        other => other,
    };
    let mut factors = vec![None; rm.factors.len()];
    for (j, f) in rm.factors.iter().enumerate() {
        factors[order[j]] = Some(ReferenceFactor {
            function: f.function,
            element: f.element,
            basis: slot(&f.basis),
            component: f.component.as_ref().map(slot),
            derivatives: f.derivatives.iter().map(slot).collect(),
        });
    }
    let mut secondary_ranges = vec![0; rm.secondary_ranges.len()];
    for (p, &q) in map.iter().enumerate() {
        secondary_ranges[q] = rm.secondary_ranges[p];
    }
    let mut auxiliary_ranges = vec![0; rm.auxiliary_ranges.len()];
    for (b, &c) in aux_map.iter().enumerate() {
        auxiliary_ranges[c] = rm.auxiliary_ranges[b];
    }
    ReferenceMonomial {
        factors: factors.into_iter().map(|f| f.expect("order is a permutation")).collect(),
        primary_ranges: rm.primary_ranges.clone(),
        secondary_ranges,
        auxiliary_ranges,
    }
}

/// Slot correspondences accumulated while aligning two monomials.
#[derive(Clone)]
struct Alignment {
    sec: Vec<Option<usize>>,
    sec_taken: Vec<bool>,
    aux: Vec<Option<usize>>,
    aux_taken: Vec<bool>,
}

impl Alignment {
    fn pair(&mut self, m: &Slot, r: &Slot) -> bool {
        match (*m, *r) {
            (Slot::Primary(a), Slot::Primary(b)) => a == b,
            (Slot::Fixed(a), Slot::Fixed(b)) => a == b,
            (Slot::Secondary(a), Slot::Secondary(b)) => Self::bind(&mut self.sec, &mut self.sec_taken, a, b),
            (Slot::Auxiliary(a), Slot::Auxiliary(b)) => Self::bind(&mut self.aux, &mut self.aux_taken, a, b),
            _ => false,
        }
    }

    fn bind(map: &mut [Option<usize>], taken: &mut [bool], a: usize, b: usize) -> bool {
        match map[a] {
            Some(x) => x == b,
            None if !taken[b] => {
                map[a] = Some(b);
                taken[b] = true;
                true
            }
            None => false,
        }
    }

    fn align_factor(&mut self, m: &ReferenceFactor, r: &ReferenceFactor) -> bool {
        if m.element != r.element
            || m.derivatives.len() != r.derivatives.len()
            || m.component.is_some() != r.component.is_some()
            || std::mem::discriminant(&m.function) != std::mem::discriminant(&r.function)
        {
            return false;
        }
        if !self.pair(&m.basis, &r.basis) {
            return false;
        }
        if let (Some(a), Some(b)) = (&m.component, &r.component) {
            if !self.pair(a, b) {
                return false;
            }
        }
        m.derivatives
            .iter()
            .zip(&r.derivatives)
            .all(|(a, b)| self.pair(a, b))
    }
}

/// Searches for a factor order and index relabeling turning `member` into
/// `rep`; returns the secondary map on success.
fn find_alignment(member: &ReferenceMonomial, rep: &ReferenceMonomial) -> Option<Vec<usize>> {
    if member.factors.len() != rep.factors.len()
        || member.primary_ranges != rep.primary_ranges
        || member.secondary_ranges.len() != rep.secondary_ranges.len()
        || member.auxiliary_ranges.len() != rep.auxiliary_ranges.len()
    {
        return None;
    }
    let start = Alignment {
        sec: vec![None; member.secondary_ranges.len()],
        sec_taken: vec![false; rep.secondary_ranges.len()],
        aux: vec![None; member.auxiliary_ranges.len()],
        aux_taken: vec![false; rep.auxiliary_ranges.len()],
    };
    let mut used = vec![false; rep.factors.len()];
    let mut order = vec![0; member.factors.len()];
    let target = hard_signature(rep);

    fn search(
        j: usize,
        member: &ReferenceMonomial,
        rep: &ReferenceMonomial,
        state: &Alignment,
        used: &mut [bool],
        order: &mut [usize],
        target: &str,
    ) -> Option<Vec<usize>> {
        if j == member.factors.len() {
            let map: Vec<usize> = state.sec.iter().map(|x| x.expect("all secondaries aligned")).collect();
            let aux: Vec<usize> = state.aux.iter().map(|x| x.expect("all auxiliaries aligned")).collect();
            let relabeled = relabel(member, order, &map, &aux);
            return (relabeled.secondary_ranges == rep.secondary_ranges
                && relabeled.auxiliary_ranges == rep.auxiliary_ranges
                && hard_signature(&relabeled) == target)
                .then_some(map);
        }
        for t in 0..rep.factors.len() {
            if used[t] {
                continue;
            }
            let mut next = state.clone();
            if !next.align_factor(&member.factors[j], &rep.factors[t]) {
                continue;
            }
            used[t] = true;
            order[j] = t;
            let found = search(j + 1, member, rep, &next, used, order, target);
            used[t] = false;
            if found.is_some() {
                return found;
            }
        }
        None
    }
    search(0, member, rep, &start, &mut used, &mut order, &target)
}

/// Groups monomials whose reference tensors coincide, directly (equal hard
/// signatures) or after a transposition of secondary axes (equal soft
/// signatures and a successful alignment).
pub fn factorize(lowered: &[LoweredMonomial]) -> Vec<SignatureGroup> {
    let mut groups: Vec<SignatureGroup> = Vec::new();
    for (m, l) in lowered.iter().enumerate() {
        let signature = Signature::of(&l.reference);
        let identity: Vec<usize> = (0..l.reference.secondary_ranges.len()).collect();
        if let Some(g) = groups.iter_mut().find(|g| g.signature.hard == signature.hard) {
            g.members.push(GroupMember {
                monomial: m,
                map: identity,
                geometry: l.geometry.clone(),
            });
            continue;
        }
        let mut placed = false;
        for g in groups.iter_mut().filter(|g| g.signature.soft == signature.soft) {
            if let Some(map) = find_alignment(&l.reference, &lowered[g.representative].reference) {
                g.members.push(GroupMember {
                    monomial: m,
                    geometry: l.geometry.relabel(&map),
                    map,
                });
                placed = true;
                break;
            }
        }
        if !placed {
            groups.push(SignatureGroup {
                representative: m,
                signature,
                members: vec![GroupMember {
                    monomial: m,
                    map: identity,
                    geometry: l.geometry.clone(),
                }],
            });
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::form::{parse_form_file, simplify};
    use crate::lowering::lower_form;
    use crate::reference_tensor::{compute_reference_tensor, Algorithm, TensorBudget};

    fn lowered(header: &str, expr: &str) -> Vec<LoweredMonomial> {
        let (_, form) = parse_form_file(&format!("{header}\na = {expr}\n")).unwrap();
        lower_form(&simplify(&form)).unwrap()
    }

    const TRI: &str = "element = Lagrange(1, triangle, 1)\narguments = v, u";
    const VEC3: &str = "element = Lagrange(1, tetrahedron, 3)\narguments = v, u\ncoefficients = w";

    #[test]
    fn poisson_signatures() {
        let l = lowered(TRI, "v.dx(i)*u.dx(i)*dx");
        let s = Signature::of(&l[0].reference);
        assert_eq!(
            s.hard,
            "{Lagrange finite element of degree 1 on a triangle;i0;[];[(d/dXa0)]}*\
             {Lagrange finite element of degree 1 on a triangle;i1;[];[(d/dXa1)]}*dX"
        );
        assert_eq!(
            s.soft,
            "{Lagrange finite element of degree 1 on a triangle;i0;[];[(d/dXa)]}*\
             {Lagrange finite element of degree 1 on a triangle;i1;[];[(d/dXa)]}*dX"
        );
        let mass = Signature::of(&lowered(TRI, "v*u*dx")[0].reference);
        assert_ne!(mass.hard, s.hard);
        assert_eq!(mass.hard, mass.soft);
    }

    #[test]
    fn split_laplacian_is_one_group() {
        let l = lowered(TRI, "v.dx(0)*u.dx(0)*dx + v.dx(1)*u.dx(1)*dx");
        let g = factorize(&l);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].members.len(), 2);
        assert!(g[0].members.iter().all(GroupMember::is_identity));
    }

    #[test]
    fn mass_plus_poisson_is_two_groups() {
        let l = lowered(TRI, "v*u*dx + v.dx(i)*u.dx(i)*dx");
        assert_eq!(factorize(&l).len(), 2);
    }

    #[test]
    fn transposed_secondaries_are_found() {
        // same tensor up to swapping the two derivative directions' roles
        let l = lowered(VEC3, "v[i].dx(j)*w[j]*u[i].dx(k)*w[k]*dx + v[i].dx(k)*w[j]*u[i].dx(j)*w[k]*dx");
        assert_eq!(l.len(), 1, "simplify already merges these");
        let l = lowered(VEC3, "v[i]*w[j]*u[i].dx(j)*dx + w[j]*v[i]*u[i].dx(j)*dx");
        assert_eq!(l.len(), 1);

        let l = lowered(TRI, "v.dx(0)*u.dx(1)*dx + u.dx(0)*v.dx(1)*dx");
        let g = factorize(&l);
        assert_eq!(g.len(), 1);
        let member = &g[0].members[1];
        assert_eq!(member.map, vec![1, 0]);
        let budget = TensorBudget::default();
        let (rep, _) = compute_reference_tensor(&l[0].reference, Algorithm::Assembled, None, budget).unwrap();
        let (direct, _) = compute_reference_tensor(&l[1].reference, Algorithm::Assembled, None, budget).unwrap();
        assert!(rep.permute_secondary(&member.map).relative_difference(&direct) < 1e-13);
    }

    #[test]
    fn coefficient_factors_may_be_reordered() {
        let l = lowered(VEC3, "w[j]*v[i].dx(j)*w[k]*u[i].dx(k)*dx");
        let tri = lowered(VEC3, "w[k]*w[j]*v[i].dx(j)*u[i].dx(k)*dx");
        let mut both = l.clone();
        both.extend(tri);
        let g = factorize(&both);
        assert_eq!(g.len(), 1);
        let map = &g[0].members[1].map;
        let budget = TensorBudget::default();
        let (rep, _) = compute_reference_tensor(&both[0].reference, Algorithm::Assembled, None, budget).unwrap();
        let (direct, _) = compute_reference_tensor(&both[1].reference, Algorithm::Assembled, None, budget).unwrap();
        assert!(rep.permute_secondary(map).relative_difference(&direct) < 1e-13);
    }

    #[test]
    fn elasticity_terms_have_distinct_soft_signatures() {
        let l = lowered(VEC3, "0.25*(v[i].dx(j) + v[j].dx(i)) * (u[i].dx(j) + u[j].dx(i)) * dx");
        assert_eq!(l.len(), 2);
        let a = Signature::of(&l[0].reference);
        let b = Signature::of(&l[1].reference);
        assert_ne!(a.soft, b.soft);
        assert_eq!(factorize(&l).len(), 2);
    }
}
