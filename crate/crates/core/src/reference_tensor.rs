//! Reference tensor computation.
//!
//! `A0[i, a] = sum_b sum_k w_k prod_j Psi_j[k, ...]`, where `Psi_j` holds the
//! values of factor `j`'s basis functions (differentiated and component-
//! selected as the monomial demands) at quadrature point `k`.
//!
//! Two algorithms compute the same sum:
//!
//! * [`compute_naive`] visits every entry `(i, a)` and integrates it
//!   separately: for each `b`, for each point, multiply the factor values.
//! * [`compute_assembled`] visits every quadrature point and every `b` once
//!   and adds the outer product `w_k (x) Psi_1 (x) ... (x) Psi_m` into the
//!   tensor. The outer product is built incrementally so each prefix product
//!   is shared by all later factors, and entries of `Psi_j` that are exactly
//!   zero (for example a vector basis function evaluated in a component it
//!   does not carry) are skipped. The accumulation buffer holds the factor
//!   axes in factor order; one final permutation brings it into the canonical
//!   `[primary..., secondary...]` order.
//!
//! Both report the number of floating-point multiplications they perform.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use thiserror::Error;

use crate::element::{derivative_counts, ElementError, ElementSpec, FiniteElement};
use crate::lowering::{ReferenceMonomial, Slot};
use crate::quadrature::{required_degree, simplex_rule, QuadratureError, QuadratureRule};

/// Default memory guard: `2^27` entries, 1 GiB of `f64`.
pub const DEFAULT_MAX_ENTRIES: u128 = 1 << 27;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReferenceTensorError {
    #[error("reference tensor needs {required} entries, above the limit of {limit}")]
    MemoryGuard { required: u128, limit: u128 },
    #[error("could not allocate {entries} entries for the reference tensor")]
    Allocation { entries: u128 },
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Naive,
    Assembled,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Naive => "naive",
            Algorithm::Assembled => "assembled",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "naive" => Ok(Algorithm::Naive),
            "assembled" => Ok(Algorithm::Assembled),
            _ => Err(format!("unknown algorithm '{s}' (expected naive or assembled)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TensorBudget {
    pub max_entries: u128,
}

impl Default for TensorBudget {
    fn default() -> Self {
        Self {
            max_entries: DEFAULT_MAX_ENTRIES,
        }
    }
}

impl TensorBudget {
    pub fn check(&self, entries: u128) -> Result<(), ReferenceTensorError> {
        if entries > self.max_entries {
            Err(ReferenceTensorError::MemoryGuard {
                required: entries,
                limit: self.max_entries,
            })
        } else {
            Ok(())
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ComputeStats {
    pub multiplies: u64,
}

/// Axis of a reference tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Primary(usize),
    Secondary(usize),
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Primary(k) => write!(f, "i{k}"),
            Axis::Secondary(p) => write!(f, "a{p}"),
        }
    }
}

/// Dense `A0`, row-major over `[primary..., secondary...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTensor {
    pub axes: Vec<Axis>,
    pub shape: Vec<usize>,
    pub primary_rank: usize,
    pub values: Vec<f64>,
    pub algorithm: Algorithm,
}

impl ReferenceTensor {
    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `|I|`: number of element-tensor entries (rows of the flattened matrix).
    pub fn rows(&self) -> usize {
        self.shape[..self.primary_rank].iter().product()
    }

    /// `|A|`: number of secondary multiindices (columns).
    pub fn cols(&self) -> usize {
        self.shape[self.primary_rank..].iter().product()
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        let mut flat = 0;
        for (i, n) in index.iter().zip(&self.shape) {
            flat = flat * n + i;
        }
        self.values[flat]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |self - other| / max |self|` (absolute when `self` vanishes).
    pub fn relative_difference(&self, other: &ReferenceTensor) -> f64 {
        assert_eq!(self.shape, other.shape, "shape mismatch");
        let diff = self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = self.max_abs();
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    }

    /// The tensor of a monomial whose secondary axis `p` corresponds to axis
    /// `map[p]` of `self`: `out[i, a] = self[i, b]` with `b[map[p]] = a[p]`.
    pub fn permute_secondary(&self, map: &[usize]) -> ReferenceTensor {
        let r = self.primary_rank;
        assert_eq!(map.len(), self.rank() - r, "one target per secondary axis");
        // source axis for every output axis
        let mut source_axis: Vec<usize> = (0..r).collect();
        source_axis.extend(map.iter().map(|&q| r + q));
        let shape: Vec<usize> = source_axis.iter().map(|&a| self.shape[a]).collect();
        let values = permute(&self.values, &self.shape, &source_axis);
        ReferenceTensor {
            axes: self.axes.clone(),
            shape,
            primary_rank: r,
            values,
            algorithm: self.algorithm,
        }
    }
}

/// Row-major strides of `shape`.
pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * shape[a + 1];
    }
    s
}

/// Transposes `values` (row-major over `shape`): output axis `a` is input axis `source_axis[a]`.
fn permute(values: &[f64], shape: &[usize], source_axis: &[usize]) -> Vec<f64> {
    let in_strides = strides(shape);
    let out_shape: Vec<usize> = source_axis.iter().map(|&a| shape[a]).collect();
    let step: Vec<usize> = source_axis.iter().map(|&a| in_strides[a]).collect();
    let n = values.len();
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    let rank = out_shape.len();
    if rank == 0 {
        out.push(values[0]);
        return out;
    }
    // innermost output axis is walked in a tight loop
    let last = rank - 1;
    let inner = out_shape[last];
    let inner_step = step[last];
    let mut idx = vec![0usize; rank];
    let mut src = 0usize;
    loop {
        for t in 0..inner {
            out.push(values[src + t * inner_step]);
        }
        // advance the outer odometer
        let mut a = last;
        loop {
            if a == 0 {
                return out;
            }
            a -= 1;
            idx[a] += 1;
            src += step[a];
            if idx[a] < out_shape[a] {
                break;
            }
            src -= step[a] * idx[a];
            idx[a] = 0;
        }
    }
}

/// Basis values of one factor at all quadrature points, for every dof,
/// component and combination of derivative directions. Rows are laid out
/// `[dof][component][direction code]`, each a contiguous run over points;
/// a vector basis function evaluated in a component it does not carry gives
/// a row of exact zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiTable {
    pub element: ElementSpec,
    pub derivative_order: usize,
    pub dofs: usize,
    pub components: usize,
    /// `d^derivative_order`; the directions of code `c` are its base-`d` digits.
    pub direction_codes: usize,
    pub points: usize,
    pub values: Vec<f64>,
}

impl PsiTable {
    pub fn row_offset(&self, dof: usize, component: usize, code: usize) -> usize {
        ((dof * self.components + component) * self.direction_codes + code) * self.points
    }

    pub fn row(&self, dof: usize, component: usize, code: usize) -> &[f64] {
        let o = self.row_offset(dof, component, code);
        &self.values[o..o + self.points]
    }
}

/// Caches elements and tabulations for one quadrature rule.
pub struct BasisCache<'r> {
    rule: &'r QuadratureRule,
    elements: HashMap<ElementSpec, Rc<FiniteElement>>,
    tables: HashMap<(ElementSpec, usize), Rc<PsiTable>>,
}

impl<'r> BasisCache<'r> {
    pub fn new(rule: &'r QuadratureRule) -> Self {
        Self {
            rule,
            elements: HashMap::new(),
            tables: HashMap::new(),
        }
    }

    pub fn element(&mut self, spec: ElementSpec) -> Result<Rc<FiniteElement>, ElementError> {
        if let Some(e) = self.elements.get(&spec) {
            return Ok(e.clone());
        }
        let e = Rc::new(FiniteElement::new(spec)?);
        self.elements.insert(spec, e.clone());
        Ok(e)
    }

    /// All derivatives of order `order` of `spec`'s basis at the rule's points.
    pub fn table(&mut self, spec: ElementSpec, order: usize) -> Result<Rc<PsiTable>, ElementError> {
        if let Some(t) = self.tables.get(&(spec, order)) {
            return Ok(t.clone());
        }
        let element = self.element(spec)?;
        let d = spec.dim();
        let codes = d.pow(order as u32);
        let nq = self.rule.len();
        let dofs = spec.space_dimension();
        let ncomp = spec.vector_size;
        let mut values = vec![0.0; dofs * ncomp * codes * nq];
        for code in 0..codes {
            let dirs = code_directions(code, order, d);
            let tab = element.tabulate_counts(&self.rule.points, &derivative_counts(&dirs, d)?)?;
            for dof in 0..dofs {
                let comp = spec.component_of(dof);
                let o = ((dof * ncomp + comp) * codes + code) * nq;
                for k in 0..nq {
                    values[o + k] = tab.value(k, dof);
                }
            }
        }
        let table = Rc::new(PsiTable {
            element: spec,
            derivative_order: order,
            dofs,
            components: ncomp,
            direction_codes: codes,
            points: nq,
            values,
        });
        self.tables.insert((spec, order), table.clone());
        Ok(table)
    }
}

/// Base-`d` digits of `code`, most significant first.
fn code_directions(mut code: usize, order: usize, d: usize) -> Vec<usize> {
    let mut dirs = vec![0; order];
    for t in (0..order).rev() {
        dirs[t] = code % d;
        code /= d;
    }
    dirs
}

/// The exactness degree needed for a reference monomial's integrand.
pub fn quadrature_degree(rm: &ReferenceMonomial) -> usize {
    required_degree(rm.factors.iter().map(|f| (f.element.degree, f.derivatives.len())))
}

/// One table per factor of `rm`; factors with the same element and
/// derivative order share a table.
pub fn tabulate_psi_tables(
    rm: &ReferenceMonomial,
    cache: &mut BasisCache<'_>,
) -> Result<Vec<Rc<PsiTable>>, ElementError> {
    rm.factors
        .iter()
        .map(|f| cache.table(f.element, f.derivatives.len()))
        .collect()
}

/// Linear map from index values to a row offset in a factor's table:
/// `offset = constant + sum coef * index`.
#[derive(Debug, Clone)]
struct RowMap {
    constant: usize,
    /// `(canonical axis, coefficient)`.
    axes: Vec<(usize, usize)>,
    /// `(auxiliary position, coefficient)`.
    aux: Vec<(usize, usize)>,
}

fn row_maps(rm: &ReferenceMonomial, tables: &[Rc<PsiTable>]) -> Vec<RowMap> {
    let r = rm.primary_ranges.len();
    let axis_of = |s: &Slot| match *s {
        Slot::Primary(k) => Some(k),
        Slot::Secondary(p) => Some(r + p),
        _ => None,
    };
    rm.factors
        .iter()
        .zip(tables)
        .map(|(f, t)| {
            let nq = t.points;
            let dof_stride = t.components * t.direction_codes * nq;
            let comp_stride = t.direction_codes * nq;
            let mut map = RowMap {
                constant: 0,
                axes: Vec::new(),
                aux: Vec::new(),
            };
            let add = |s: &Slot, coef: usize, map: &mut RowMap| match *s {
                Slot::Fixed(v) => map.constant += v * coef,
                Slot::Auxiliary(b) => map.aux.push((b, coef)),
                other => map.axes.push((axis_of(&other).expect("primary or secondary"), coef)),
            };
            add(&f.basis, dof_stride, &mut map);
            if let Some(c) = &f.component {
                add(c, comp_stride, &mut map);
            }
            let d = f.element.dim();
            let n = f.derivatives.len();
            for (t_pos, s) in f.derivatives.iter().enumerate() {
                let place = d.pow((n - 1 - t_pos) as u32);
                add(s, place * nq, &mut map);
            }
            map
        })
        .collect()
}

fn allocate(entries: u128) -> Result<Vec<f64>, ReferenceTensorError> {
    let n = usize::try_from(entries).map_err(|_| ReferenceTensorError::Allocation { entries })?;
    let mut v: Vec<f64> = Vec::new();
    v.try_reserve_exact(n)
        .map_err(|_| ReferenceTensorError::Allocation { entries })?;
    v.resize(n, 0.0);
    Ok(v)
}

fn canonical_axes(rm: &ReferenceMonomial) -> Vec<Axis> {
    (0..rm.primary_ranges.len())
        .map(Axis::Primary)
        .chain((0..rm.secondary_ranges.len()).map(Axis::Secondary))
        .collect()
}

/// Odometer over a multiindex of the given ranges, row-major.
fn next_index(idx: &mut [usize], ranges: &[usize]) -> bool {
    for a in (0..idx.len()).rev() {
        idx[a] += 1;
        if idx[a] < ranges[a] {
            return true;
        }
        idx[a] = 0;
    }
    false
}

#[inline]
fn dot2(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let mut s = [0.0f64; 4];
    let n = w.len();
    let mut k = 0;
    while k + 4 <= n {
        for l in 0..4 {
            s[l] += w[k + l] * a[k + l] * b[k + l];
        }
        k += 4;
    }
    while k < n {
        s[0] += w[k] * a[k] * b[k];
        k += 1;
    }
    (s[0] + s[1]) + (s[2] + s[3])
}

#[inline]
fn dot3(w: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let mut s = [0.0f64; 4];
    let n = w.len();
    let mut k = 0;
    while k + 4 <= n {
        for l in 0..4 {
            s[l] += w[k + l] * a[k + l] * b[k + l] * c[k + l];
        }
        k += 4;
    }
    while k < n {
        s[0] += w[k] * a[k] * b[k] * c[k];
        k += 1;
    }
    (s[0] + s[1]) + (s[2] + s[3])
}

#[inline]
fn dot4(w: &[f64], a: &[f64], b: &[f64], c: &[f64], e: &[f64]) -> f64 {
    let mut s = [0.0f64; 4];
    let n = w.len();
    let mut k = 0;
    while k + 4 <= n {
        for l in 0..4 {
            s[l] += w[k + l] * a[k + l] * b[k + l] * c[k + l] * e[k + l];
        }
        k += 4;
    }
    while k < n {
        s[0] += w[k] * a[k] * b[k] * c[k] * e[k];
        k += 1;
    }
    (s[0] + s[1]) + (s[2] + s[3])
}

fn dot_general(w: &[f64], rows: &[&[f64]]) -> f64 {
    let mut s = 0.0;
    for (k, wk) in w.iter().enumerate() {
        let mut p = *wk;
        for r in rows {
            p *= r[k];
        }
        s += p;
    }
    s
}

/// Entry-by-entry integration.
pub fn compute_naive(
    rm: &ReferenceMonomial,
    rule: &QuadratureRule,
    budget: TensorBudget,
) -> Result<(ReferenceTensor, ComputeStats), ReferenceTensorError> {
    let entries = rm.entry_count();
    budget.check(entries)?;
    let mut cache = BasisCache::new(rule);
    let tables = tabulate_psi_tables(rm, &mut cache)?;
    let maps = row_maps(rm, &tables);
    let shape = rm.shape();
    let mut values = allocate(entries)?;
    let nq = rule.len();
    let m = rm.factors.len();
    let w = &rule.weights[..];
    let aux_ranges = &rm.auxiliary_ranges;
    let aux_count = rm.auxiliary_size();

    let mut idx = vec![0usize; shape.len()];
    let mut aux = vec![0usize; aux_ranges.len()];
    let mut base = vec![0usize; m];
    let mut offs = vec![0usize; m];
    let mut rows: Vec<&[f64]> = Vec::with_capacity(m);
    for value in values.iter_mut() {
        for (j, map) in maps.iter().enumerate() {
            base[j] = map.constant + map.axes.iter().map(|&(a, c)| idx[a] * c).sum::<usize>();
        }
        aux.iter_mut().for_each(|b| *b = 0);
        let mut total = 0.0;
        loop {
            for (j, map) in maps.iter().enumerate() {
                offs[j] = base[j] + map.aux.iter().map(|&(b, c)| aux[b] * c).sum::<usize>();
            }
            rows.clear();
            for (j, t) in tables.iter().enumerate() {
                rows.push(&t.values[offs[j]..offs[j] + nq]);
            }
            total += match m {
                1 => rows[0].iter().zip(w).map(|(a, w)| w * a).sum(),
                2 => dot2(w, rows[0], rows[1]),
                3 => dot3(w, rows[0], rows[1], rows[2]),
                4 => dot4(w, rows[0], rows[1], rows[2], rows[3]),
                _ => dot_general(w, &rows),
            };
            if !next_index(&mut aux, aux_ranges) {
                break;
            }
        }
        *value = total;
        next_index(&mut idx, &shape);
    }
    let multiplies = (entries as u64) * (aux_count as u64) * (nq as u64) * (m as u64);
    Ok((
        ReferenceTensor {
            axes: canonical_axes(rm),
            shape,
            primary_rank: rm.primary_ranges.len(),
            values,
            algorithm: Algorithm::Naive,
        },
        ComputeStats { multiplies },
    ))
}

/// Quadrature-point-driven accumulation of outer products.
pub fn compute_assembled(
    rm: &ReferenceMonomial,
    rule: &QuadratureRule,
    budget: TensorBudget,
) -> Result<(ReferenceTensor, ComputeStats), ReferenceTensorError> {
    let entries = rm.entry_count();
    budget.check(entries)?;
    let mut cache = BasisCache::new(rule);
    let tables = tabulate_psi_tables(rm, &mut cache)?;
    let r = rm.primary_ranges.len();
    let canon_shape = rm.shape();
    let nq = rule.len();

    // secondary axes used by more than one factor are looped over like the
    // auxiliary indices; every other axis belongs to exactly one factor
    let mut uses = vec![0usize; canon_shape.len()];
    let axis_of = |s: &Slot| match *s {
        Slot::Primary(k) => Some(k),
        Slot::Secondary(p) => Some(r + p),
        _ => None,
    };
    for f in &rm.factors {
        for s in std::iter::once(&f.basis).chain(f.component.iter()).chain(&f.derivatives) {
            if let Some(a) = axis_of(s) {
                uses[a] += 1;
            }
        }
    }
    let shared: Vec<usize> = (0..canon_shape.len()).filter(|&a| uses[a] > 1).collect();
    let shared_ranges: Vec<usize> = shared.iter().map(|&a| canon_shape[a]).collect();

    // local axes of each factor, and for every local multiindex the row
    // offset contribution; the remainder of the row offset comes from the
    // looped indices (auxiliary, shared, fixed)
    struct Local {
        ranges: Vec<usize>,
        axes: Vec<usize>,
        coefs: Vec<usize>,
        looped: RowMap,
        size: usize,
    }
    let mut locals = Vec::with_capacity(rm.factors.len());
    for (f, t) in rm.factors.iter().zip(&tables) {
        let nq = t.points;
        let dof_stride = t.components * t.direction_codes * nq;
        let comp_stride = t.direction_codes * nq;
        let d = f.element.dim();
        let n = f.derivatives.len();
        let mut slots: Vec<(&Slot, usize)> = vec![(&f.basis, dof_stride)];
        if let Some(c) = &f.component {
            slots.push((c, comp_stride));
        }
        for (t_pos, s) in f.derivatives.iter().enumerate() {
            slots.push((s, d.pow((n - 1 - t_pos) as u32) * nq));
        }
        let mut local = Local {
            ranges: Vec::new(),
            axes: Vec::new(),
            coefs: Vec::new(),
            looped: RowMap {
                constant: 0,
                axes: Vec::new(),
                aux: Vec::new(),
            },
            size: 1,
        };
        for (s, coef) in slots {
            match *s {
                Slot::Fixed(v) => local.looped.constant += v * coef,
                Slot::Auxiliary(b) => local.looped.aux.push((b, coef)),
                other => {
                    let a = axis_of(&other).expect("primary or secondary");
                    if uses[a] > 1 {
                        let pos = shared.iter().position(|&x| x == a).expect("shared axis");
                        local.looped.axes.push((pos, coef));
                    } else {
                        local.ranges.push(canon_shape[a]);
                        local.axes.push(a);
                        local.coefs.push(coef);
                        local.size *= canon_shape[a];
                    }
                }
            }
        }
        locals.push(local);
    }

    // buffer layout: [shared..., factor 1 local..., factor 2 local..., ...]
    let mut buffer_axes: Vec<usize> = shared.clone();
    for l in &locals {
        buffer_axes.extend_from_slice(&l.axes);
    }
    let local_total: usize = locals.iter().map(|l| l.size).product();
    let mut buffer = allocate(entries)?;

    // per-factor local offsets into the table rows, in local row-major order
    let local_offsets: Vec<Vec<usize>> = locals
        .iter()
        .map(|l| {
            let mut out = Vec::with_capacity(l.size);
            let mut idx = vec![0usize; l.ranges.len()];
            loop {
                out.push(idx.iter().zip(&l.coefs).map(|(i, c)| i * c).sum());
                if !next_index(&mut idx, &l.ranges) {
                    break;
                }
            }
            out
        })
        .collect();

    let m = locals.len();
    let mut multiplies: u64 = 0;
    let mut aux = vec![0usize; rm.auxiliary_ranges.len()];
    let mut sh = vec![0usize; shared.len()];
    let mut psi: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
    let mut prefix: Vec<(usize, f64)> = Vec::new();
    let mut next: Vec<(usize, f64)> = Vec::new();
    for k in 0..nq {
        sh.iter_mut().for_each(|x| *x = 0);
        loop {
            let shared_flat = sh.iter().zip(&shared_ranges).fold(0, |acc, (i, n)| acc * n + i);
            aux.iter_mut().for_each(|b| *b = 0);
            loop {
                // nonzero entries of each factor's local tensor at this point
                for (j, l) in locals.iter().enumerate() {
                    let base = l.looped.constant
                        + l.looped.axes.iter().map(|&(p, c)| sh[p] * c).sum::<usize>()
                        + l.looped.aux.iter().map(|&(b, c)| aux[b] * c).sum::<usize>()
                        + k;
                    let vals = &tables[j].values;
                    psi[j].clear();
                    for (loc, &o) in local_offsets[j].iter().enumerate() {
                        let v = vals[base + o];
                        if v != 0.0 {
                            psi[j].push((loc, v));
                        }
                    }
                }
                // cumulative outer product, the last factor fused with the accumulation
                prefix.clear();
                prefix.push((shared_flat, rule.weights[k]));
                for j in 0..m {
                    let size = locals[j].size;
                    if j + 1 == m {
                        for &(off, v) in &prefix {
                            let row = off * size;
                            for &(loc, p) in &psi[j] {
                                buffer[row + loc] += v * p;
                            }
                        }
                        multiplies += (prefix.len() * psi[j].len()) as u64;
                    } else {
                        next.clear();
                        for &(off, v) in &prefix {
                            let row = off * size;
                            for &(loc, p) in &psi[j] {
                                next.push((row + loc, v * p));
                            }
                        }
                        multiplies += next.len() as u64;
                        std::mem::swap(&mut prefix, &mut next);
                    }
                }
                if m == 0 {
                    // a form without factors integrates the constant 1
                    buffer[shared_flat] += rule.weights[k];
                }
                if !next_index(&mut aux, &rm.auxiliary_ranges) {
                    break;
                }
            }
            if !next_index(&mut sh, &shared_ranges) {
                break;
            }
        }
    }
    debug_assert_eq!(local_total * shared_ranges.iter().product::<usize>(), buffer.len());

    // the buffer is a transposition of the canonical layout
    let buffer_shape: Vec<usize> = buffer_axes.iter().map(|&a| canon_shape[a]).collect();
    let source_axis: Vec<usize> = (0..canon_shape.len())
        .map(|a| buffer_axes.iter().position(|&b| b == a).expect("every axis in buffer"))
        .collect();
    let identity = source_axis.iter().enumerate().all(|(a, &b)| a == b);
    let values = if identity {
        buffer
    } else {
        let out = permute(&buffer, &buffer_shape, &source_axis);
        drop(buffer);
        out
    };
    Ok((
        ReferenceTensor {
            axes: canonical_axes(rm),
            shape: canon_shape,
            primary_rank: r,
            values,
            algorithm: Algorithm::Assembled,
        },
        ComputeStats { multiplies },
    ))
}

/// Computes `A0` with the exact-degree rule for `rm`.
pub fn compute_reference_tensor(
    rm: &ReferenceMonomial,
    algorithm: Algorithm,
    quad_degree: Option<usize>,
    budget: TensorBudget,
) -> Result<(ReferenceTensor, ComputeStats), ReferenceTensorError> {
    budget.check(rm.entry_count())?;
    let cell = rm
        .factors
        .first()
        .map(|f| f.element.cell)
        .unwrap_or(crate::cell::ReferenceCell::Triangle);
    let rule = simplex_rule(cell, quad_degree.unwrap_or_else(|| quadrature_degree(rm)))?;
    match algorithm {
        Algorithm::Naive => compute_naive(rm, &rule, budget),
        Algorithm::Assembled => compute_assembled(rm, &rule, budget),
    }
}
