//! Parity-symbol support sets, coefficient assignment, exhaustive MDS
//! verification, and the search for the common repair coefficient.
//!
//! Each parity symbol `(x, f)` is a linear combination over two support sets:
//! `R2`, the `k` message symbols sharing row index `f` (weighted `a[x][u]`,
//! constant across rows), and — for `x != 0` — `R1`, the `m` shifted-index
//! symbols that make single-unknown sequential repair possible (all weighted
//! by one global coefficient `c`). Parity 0 is the plain row sum.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::galois::{Field, FieldElement};
use crate::linalg::Matrix;
use crate::params::{CodeParams, NodeId, SymbolIndex};

/// Support sets of one parity symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParitySupport {
    pub x: u8,
    pub f: SymbolIndex,
    /// `m` entries: for each digit position `i`, the symbol of node
    /// `(i, f_i)` at index `f` with digit `i` shifted to `(f_i + x) mod r`.
    pub r1: Vec<(NodeId, SymbolIndex)>,
    /// `m * r` entries: every systematic node's symbol at index `f`.
    pub r2: Vec<(NodeId, SymbolIndex)>,
}

/// Builds the support sets for parity `x`, row `f`.
pub fn parity_support(x: u8, f: &SymbolIndex, params: &CodeParams) -> Result<ParitySupport> {
    if usize::from(x) >= params.r {
        return Err(Error::BadNode("x must be in 0..r"));
    }
    params.tuple_to_ordinal(f)?;
    let mut r1 = Vec::with_capacity(params.m);
    for i in 1..=params.m {
        let fi = f.digit(i);
        let node = NodeId::systematic(i, fi, params)?;
        let shifted = ((usize::from(fi) + usize::from(x)) % params.r) as u8;
        r1.push((node, f.with_digit(i, shifted)));
    }
    let mut r2 = Vec::with_capacity(params.k);
    for ord in 0..params.k {
        r2.push((NodeId::from_ordinal(ord, params)?, f.clone()));
    }
    Ok(ParitySupport { x, f: f.clone(), r1, r2 })
}

/// A fully specified code instance: parameters, arithmetic tables, the
/// per-parity row coefficients `a[x][u]`, and (once chosen) the common
/// repair coefficient `c`.
#[derive(Debug, Clone)]
pub struct CodeDescription {
    params: CodeParams,
    field: Field,
    seed: u64,
    /// `a[x][u]` for parity `x` in `0..r`, systematic node ordinal `u` in
    /// `0..k`; row 0 is all ones.
    a: Vec<Vec<FieldElement>>,
    c: Option<FieldElement>,
}

impl CodeDescription {
    /// Reassembles a description from stored values (e.g. a manifest),
    /// validating shape and the nonzero invariants. Coefficients are taken
    /// as-is, never re-derived from the seed.
    pub fn from_parts(
        params: CodeParams,
        seed: u64,
        a: Vec<Vec<FieldElement>>,
        c: Option<FieldElement>,
    ) -> Result<CodeDescription> {
        let field = Field::new(params.field)?;
        if a.len() != params.r {
            return Err(Error::DimensionMismatch {
                what: "coefficient rows",
                expected: params.r,
                got: a.len(),
            });
        }
        for row in &a {
            if row.len() != params.k {
                return Err(Error::DimensionMismatch {
                    what: "coefficient columns",
                    expected: params.k,
                    got: row.len(),
                });
            }
        }
        if a[0].iter().any(|&v| v != 1) {
            return Err(Error::InvalidDescription("row-parity coefficients must all be 1"));
        }
        for row in &a {
            for &v in row {
                if v == 0 {
                    return Err(Error::InvalidDescription("zero row coefficient"));
                }
                if v > params.field.max_element() {
                    return Err(Error::ElementOutOfRange {
                        value: u64::from(v),
                        bits: params.field.bits,
                    });
                }
            }
        }
        if let Some(c) = c {
            if c == 0 {
                return Err(Error::InvalidDescription("common coefficient must be nonzero"));
            }
            if c > params.field.max_element() {
                return Err(Error::ElementOutOfRange { value: u64::from(c), bits: params.field.bits });
            }
        }
        Ok(CodeDescription { params, field, seed, a, c })
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Row coefficient `a[x][u]`.
    pub fn coefficient(&self, x: u8, u: usize) -> FieldElement {
        self.a[usize::from(x)][u]
    }

    pub fn coefficients(&self) -> &[Vec<FieldElement>] {
        &self.a
    }

    pub fn c(&self) -> Option<FieldElement> {
        self.c
    }

    /// The common coefficient, or an error if it was never chosen.
    pub fn c_required(&self) -> Result<FieldElement> {
        self.c.ok_or(Error::InvalidDescription("common coefficient not set"))
    }

    pub fn with_c(mut self, c: FieldElement) -> Result<CodeDescription> {
        if c == 0 {
            return Err(Error::InvalidDescription("common coefficient must be nonzero"));
        }
        if c > self.params.field.max_element() {
            return Err(Error::ElementOutOfRange {
                value: u64::from(c),
                bits: self.params.field.bits,
            });
        }
        self.c = Some(c);
        Ok(self)
    }
}

/// How many evaluation-point shifts `assign_coefficients` tries before
/// giving up.
const POINT_BUDGET: usize = 32;

/// Chooses row coefficients from a Cauchy construction and verifies the
/// scalar code `[I; A]` is MDS over all `C(n,k)` minors.
///
/// Column `u` of the raw Cauchy matrix `inv(X_x ^ Y_u)` is scaled by the
/// inverse of its parity-0 entry, which forces `a[0][u] = 1` (the row-sum
/// parity) without disturbing minor nonzeroness. The `seed` offsets the
/// evaluation points; identical `(params, seed)` always yield identical
/// coefficients. The common coefficient is left unset.
pub fn assign_coefficients(params: &CodeParams, seed: u64) -> Result<CodeDescription> {
    let field = Field::new(params.field)?;
    let order = u64::from(field.spec().order());
    for attempt in 0..POINT_BUDGET {
        let offset = seed.wrapping_add(attempt as u64) % order;
        let mut a = vec![vec![0 as FieldElement; params.k]; params.r];
        // Points offset, offset+1, ..., offset+n-1 (mod 2^w) are pairwise
        // distinct because n <= 2^w, so every X ^ Y below is nonzero.
        let point = |i: usize| ((offset + i as u64) % order) as FieldElement;
        for u in 0..params.k {
            let y = point(params.r + u);
            let scale = field.inv(point(0) ^ y)?; // raw a[0][u]
            for (x, row) in a.iter_mut().enumerate() {
                let raw = field.inv(point(x) ^ y)?;
                row[u] = field.div(raw, scale)?;
            }
        }
        if scalar_mds_ok(&field, params, &a) {
            return Ok(CodeDescription { params: *params, field, seed, a, c: None });
        }
    }
    Err(Error::ConstructionFailed { attempts: POINT_BUDGET })
}

/// Checks every `k x k` minor of the scalar generator `[I; A]`.
fn scalar_mds_ok(field: &Field, params: &CodeParams, a: &[Vec<FieldElement>]) -> bool {
    for subset in k_subsets(params.n, params.k) {
        let mut minor = Matrix::zero(params.k, params.k);
        for (row, &node) in subset.iter().enumerate() {
            if node < params.k {
                minor.set(row, node, 1);
            } else {
                for (u, &coeff) in a[node - params.k].iter().enumerate() {
                    minor.set(row, u, coeff);
                }
            }
        }
        if !minor.is_invertible(field) {
            return false;
        }
    }
    true
}

/// The `k * alpha` square system seen by a decoder holding the nodes in
/// `subset`.
#[derive(Debug, Clone)]
pub struct SubsetMatrix {
    /// Node ordinals in ascending order; systematic nodes therefore come
    /// first, mirroring the row layout.
    pub subset: Vec<usize>,
    /// Row `i * alpha + g` expresses symbol `g` of `subset[i]` over the
    /// message symbols; column `u * alpha + g` is symbol `g` of systematic
    /// node `u`.
    pub matrix: Matrix,
}

/// Expresses each stored symbol of the `k` nodes in `D` as a linear
/// combination of the `k * alpha` message symbols. Systematic rows are unit
/// selectors; parity rows carry `a[x][u]` on `R2` columns and, for `x != 0`,
/// add `c` on the `m` shifted `R1` columns.
pub fn build_subset_matrix(
    desc: &CodeDescription,
    subset: &[usize],
    c: FieldElement,
) -> Result<SubsetMatrix> {
    let params = desc.params();
    let field = desc.field();
    if subset.len() != params.k {
        return Err(Error::DimensionMismatch {
            what: "node subset",
            expected: params.k,
            got: subset.len(),
        });
    }
    let mut nodes = subset.to_vec();
    nodes.sort_unstable();
    if nodes.iter().any(|&o| o >= params.n) {
        return Err(Error::BadNode("ordinal out of range"));
    }
    if nodes.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::BadNode("duplicate node in subset"));
    }

    let alpha = params.alpha;
    let mut matrix = Matrix::zero(params.k * alpha, params.k * alpha);
    for (block, &node) in nodes.iter().enumerate() {
        for g in 0..alpha {
            let row = block * alpha + g;
            if node < params.k {
                matrix.set(row, node * alpha + g, 1);
                continue;
            }
            let x = (node - params.k) as u8;
            let f = params.ordinal_to_tuple(g)?;
            let support = parity_support(x, &f, params)?;
            for (u_node, idx) in &support.r2 {
                let u = u_node.ordinal(params);
                let col = u * alpha + params.tuple_to_ordinal(idx)?;
                matrix.set(row, col, field.add(matrix.get(row, col), desc.coefficient(x, u)));
            }
            if x != 0 {
                for (u_node, idx) in &support.r1 {
                    let u = u_node.ordinal(params);
                    let col = u * alpha + params.tuple_to_ordinal(idx)?;
                    matrix.set(row, col, field.add(matrix.get(row, col), c));
                }
            }
        }
    }
    Ok(SubsetMatrix { subset: nodes, matrix })
}

/// Outcome of exhaustive subset verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdsReport {
    pub subsets_checked: usize,
    /// Subsets whose system was singular; empty means the code is MDS.
    pub failing: Vec<Vec<usize>>,
}

impl MdsReport {
    pub fn is_ok(&self) -> bool {
        self.failing.is_empty()
    }
}

/// Certifies every one of the `C(n,k)` subset systems invertible by Gaussian
/// elimination, using the description's chosen `c`.
pub fn verify_mds(desc: &CodeDescription) -> Result<MdsReport> {
    let c = desc.c_required()?;
    let params = desc.params();
    let mut report = MdsReport { subsets_checked: 0, failing: Vec::new() };
    for subset in k_subsets(params.n, params.k) {
        report.subsets_checked += 1;
        if !subset_invertible(desc, &subset, c)? {
            report.failing.push(subset);
        }
    }
    Ok(report)
}

fn subset_invertible(desc: &CodeDescription, subset: &[usize], c: FieldElement) -> Result<bool> {
    // All-systematic subsets give the identity; skip the elimination.
    if subset.iter().all(|&o| o < desc.params().k) {
        return Ok(true);
    }
    let sm = build_subset_matrix(desc, subset, c)?;
    Ok(sm.matrix.is_invertible(desc.field()))
}

/// Result of the common-coefficient search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoefficientSearch {
    /// Smallest nonzero value passing full verification.
    pub c: FieldElement,
    /// Candidates rejected before it. When the field order meets the
    /// existence bound `C(n,k) * r^(m+1)`, this stays strictly below the
    /// bound.
    pub rejected: usize,
}

/// Scans `c = 1, 2, ...` in ascending order and returns the first value for
/// which every subset system is invertible.
///
/// A valid `c` is guaranteed to exist when the field order reaches
/// `C(n,k) * r^(m+1)`: each subset contributes a nonzero determinant
/// polynomial in `c` of degree at most `r^(m+1)`, so the product has fewer
/// roots than the field has nonzero elements. Below the bound the scan may
/// exhaust the field, which is reported together with the bound.
pub fn find_c(desc: &CodeDescription) -> Result<CoefficientSearch> {
    let params = desc.params();
    let order = desc.field().spec().order();
    'candidates: for candidate in 1..order {
        let c = candidate as FieldElement;
        for subset in k_subsets(params.n, params.k) {
            if !subset_invertible(desc, &subset, c)? {
                continue 'candidates;
            }
        }
        return Ok(CoefficientSearch { c, rejected: candidate as usize - 1 });
    }
    Err(Error::CoefficientNotFound { order, bound: params.coefficient_bound() })
}

/// Ascending-ordinal k-subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> KSubsets {
    let next = (k <= n).then(|| (0..k).collect());
    KSubsets { n, k, next }
}

pub struct KSubsets {
    n: usize,
    k: usize,
    next: Option<Vec<usize>>,
}

impl Iterator for KSubsets {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut i = self.k;
        while i > 0 {
            i -= 1;
            if succ[i] < i + self.n - self.k {
                succ[i] += 1;
                for j in i + 1..self.k {
                    succ[j] = succ[j - 1] + 1;
                }
                self.next = Some(succ);
                break;
            }
        }
        Some(current)
    }
}
