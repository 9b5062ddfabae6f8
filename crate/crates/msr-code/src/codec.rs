//! Systematic encoding, sequential single-node repair, and reconstruction
//! from any k nodes.
//!
//! Repairing systematic node `(s, t)` reads from every surviving node only
//! the `beta` symbols whose index satisfies `y_s = t` — the access set.
//! Stage 0 recovers the failed node's access-set symbols from the row
//! parity. Stage `j` (for `j = 1..r-1`) walks the same rows through parity
//! `j`: in each parity symbol every term is already known except the failed
//! node's symbol at digit-`s` value `(t + j) mod r`, so one division by the
//! common coefficient `c` recovers it.

use alloc::vec;
use alloc::vec::Vec;

use crate::construction::{build_subset_matrix, CodeDescription};
use crate::error::{Error, Result};
use crate::galois::FieldElement;
use crate::linalg::Matrix;
use crate::params::{CodeParams, NodeId, SymbolIndex};

/// The full n x alpha symbol grid of one encoded stripe, node-ordinal major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodewordArray {
    params: CodeParams,
    data: Vec<FieldElement>,
}

impl CodewordArray {
    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    /// All alpha symbols of one node.
    pub fn node(&self, ordinal: usize) -> &[FieldElement] {
        let alpha = self.params.alpha;
        &self.data[ordinal * alpha..(ordinal + 1) * alpha]
    }

    pub fn get(&self, node: usize, symbol: usize) -> FieldElement {
        self.data[node * self.params.alpha + symbol]
    }
}

/// Encodes a k x alpha message into the full codeword array.
///
/// Parity `x`, row `f` is `sum_u a[x][u] * msg[u][f]`, plus — for `x != 0` —
/// `c` times the m shifted-index symbols of `R1`. Parity 0 is the plain row
/// sum.
pub fn encode(message: &[Vec<FieldElement>], desc: &CodeDescription) -> Result<CodewordArray> {
    let params = *desc.params();
    let field = desc.field();
    check_message_shape(message, &params)?;
    let c = desc.c_required()?;

    let alpha = params.alpha;
    let mut data = vec![0 as FieldElement; params.n * alpha];
    for (u, row) in message.iter().enumerate() {
        data[u * alpha..(u + 1) * alpha].copy_from_slice(row);
    }
    for x in 0..params.r {
        for f in 0..alpha {
            let mut acc: FieldElement = 0;
            for (u, row) in message.iter().enumerate() {
                acc = field.add(acc, field.mul(desc.coefficient(x as u8, u), row[f]));
            }
            if x != 0 {
                visit_r1(&params, x, f, |node, g| {
                    acc = field.add(acc, field.mul(c, message[node][g]));
                });
            }
            data[(params.k + x) * alpha + f] = acc;
        }
    }
    Ok(CodewordArray { params, data })
}

/// Calls `visit(node_ordinal, symbol_ordinal)` for each of the m members of
/// parity `x`'s shifted support set `R1` at row `f`: digit position `i`
/// contributes node `(i, f_i)` at the index whose digit `i` is
/// `(f_i + x) mod r`. Ordinal arithmetic only; must agree with
/// [`parity_support`].
fn visit_r1(params: &CodeParams, x: usize, f: usize, mut visit: impl FnMut(usize, usize)) {
    let mut weight = params.beta; // r^(m-1), the weight of digit 1
    let mut rest = f;
    for i in 0..params.m {
        let fi = rest / weight;
        rest %= weight;
        let node = i * params.r + fi;
        let shifted = (fi + x) % params.r;
        visit(node, f - fi * weight + shifted * weight);
        weight /= params.r;
    }
}

fn check_message_shape(message: &[Vec<FieldElement>], params: &CodeParams) -> Result<()> {
    if message.len() != params.k {
        return Err(Error::DimensionMismatch {
            what: "message rows",
            expected: params.k,
            got: message.len(),
        });
    }
    for row in message {
        if row.len() != params.alpha {
            return Err(Error::DimensionMismatch {
                what: "message row length",
                expected: params.alpha,
                got: row.len(),
            });
        }
        for &v in row {
            if v > params.field.max_element() {
                return Err(Error::ElementOutOfRange { value: u64::from(v), bits: params.field.bits });
            }
        }
    }
    Ok(())
}

/// Counts symbol reads per node; lives at the helper-extraction boundary so
/// access-optimality is measurable at the interface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadCounter {
    reads: Vec<usize>,
}

impl ReadCounter {
    pub fn new(node_count: usize) -> ReadCounter {
        ReadCounter { reads: vec![0; node_count] }
    }

    pub fn record(&mut self, node: usize) {
        self.reads[node] += 1;
    }

    pub fn reads(&self, node: usize) -> usize {
        self.reads[node]
    }

    pub fn per_node(&self) -> &[usize] {
        &self.reads
    }

    pub fn total(&self) -> usize {
        self.reads.iter().sum()
    }
}

/// The beta access-set symbols one surviving node contributes to a repair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HelperSymbols {
    pub node: NodeId,
    /// Values at `access_set(failed)`, ascending index order.
    pub symbols: Vec<FieldElement>,
}

/// Reads the access-set symbols of every surviving node out of a codeword
/// array, recording one read per symbol per node in `counter`.
pub fn extract_helper_symbols(
    array: &CodewordArray,
    failed: NodeId,
    counter: &mut ReadCounter,
) -> Result<Vec<HelperSymbols>> {
    let params = array.params();
    if counter.reads.len() != params.n {
        return Err(Error::DimensionMismatch {
            what: "read counter size",
            expected: params.n,
            got: counter.reads.len(),
        });
    }
    let access = params.access_ordinals(failed)?;
    let failed_ord = failed.ordinal(params);
    let mut helpers = Vec::with_capacity(params.n - 1);
    for ord in 0..params.n {
        if ord == failed_ord {
            continue;
        }
        let mut symbols = Vec::with_capacity(access.len());
        for &g in &access {
            symbols.push(array.get(ord, g));
            counter.record(ord);
        }
        helpers.push(HelperSymbols { node: NodeId::from_ordinal(ord, params)?, symbols });
    }
    Ok(helpers)
}

/// Where a value consumed during repair came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SymbolSource {
    /// A surviving node's stored symbol (necessarily in the access set).
    Helper { node: NodeId, index: SymbolIndex },
    /// A failed-node symbol recovered in an earlier stage.
    Recovered { stage: usize, index: SymbolIndex },
}

/// One repair stage: the digit shift it resolves and what it read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairStage {
    /// Stage number `j`; recovers the failed node's symbols with digit `s`
    /// equal to `(t + j) mod r`.
    pub shift: usize,
    pub recovered: Vec<(SymbolIndex, FieldElement)>,
    pub consumed: Vec<SymbolSource>,
}

/// Full instrumented record of one node repair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairSession {
    pub failed: NodeId,
    pub stages: Vec<RepairStage>,
    /// The reconstructed node content, all alpha symbols in ordinal order.
    pub symbols: Vec<FieldElement>,
}

/// Repairs a systematic node and returns its alpha symbols.
pub fn repair_systematic(
    failed: NodeId,
    helpers: &[HelperSymbols],
    desc: &CodeDescription,
) -> Result<Vec<FieldElement>> {
    Ok(repair_impl(failed, helpers, desc, false)?.symbols)
}

/// Like [`repair_systematic`] but records per-stage provenance for auditing
/// the sequential structure.
pub fn repair_session(
    failed: NodeId,
    helpers: &[HelperSymbols],
    desc: &CodeDescription,
) -> Result<RepairSession> {
    repair_impl(failed, helpers, desc, true)
}

fn repair_impl(
    failed: NodeId,
    helpers: &[HelperSymbols],
    desc: &CodeDescription,
    record: bool,
) -> Result<RepairSession> {
    let params = desc.params();
    let field = desc.field();
    let NodeId::Systematic { s, t } = failed else {
        return Err(Error::ParityRepairUnsupported);
    };
    let access = params.access_ordinals(failed)?;
    let failed_ord = failed.ordinal(params);
    let c = desc.c_required()?;
    let c_inv = field.inv(c)?;

    // Index helpers by node ordinal; require exactly the n-1 survivors.
    if helpers.len() != params.n - 1 {
        return Err(Error::ProtocolError("expected one helper per surviving node"));
    }
    let mut by_node: Vec<Option<&[FieldElement]>> = vec![None; params.n];
    for h in helpers {
        h.node.validate(params)?;
        let ord = h.node.ordinal(params);
        if ord == failed_ord {
            return Err(Error::ProtocolError("failed node offered as helper"));
        }
        if h.symbols.len() != params.beta {
            return Err(Error::ProtocolError("helper must supply exactly beta symbols"));
        }
        if by_node[ord].replace(&h.symbols).is_some() {
            return Err(Error::ProtocolError("duplicate helper node"));
        }
    }
    let helper = |ord: usize| by_node[ord].expect("validated above");

    // Position of each access-set ordinal within the helper arrays.
    let mut pos_of: Vec<Option<usize>> = vec![None; params.alpha];
    for (pos, &g) in access.iter().enumerate() {
        pos_of[g] = Some(pos);
    }

    let mut symbols = vec![0 as FieldElement; params.alpha];
    let mut stages = Vec::with_capacity(params.r);

    // Stage 0: the row parity gives each access-set symbol directly.
    let parity0 = params.k;
    let mut stage = RepairStage { shift: 0, recovered: Vec::new(), consumed: Vec::new() };
    for (pos, &f) in access.iter().enumerate() {
        let mut acc = helper(parity0)[pos];
        if record {
            stage.consumed.push(SymbolSource::Helper {
                node: NodeId::Parity { x: 0 },
                index: params.ordinal_to_tuple(f)?,
            });
        }
        for u in 0..params.k {
            if u == failed_ord {
                continue;
            }
            acc = field.add(acc, helper(u)[pos]);
            if record {
                stage.consumed.push(SymbolSource::Helper {
                    node: NodeId::from_ordinal(u, params)?,
                    index: params.ordinal_to_tuple(f)?,
                });
            }
        }
        symbols[f] = acc;
        if record {
            stage.recovered.push((params.ordinal_to_tuple(f)?, acc));
        }
    }
    stages.push(stage);

    // Stage j: parity j's symbol at row f has exactly one unknown term, the
    // failed node's symbol at digit-s value (t + j) mod r, weighted c.
    for j in 1..params.r {
        let mut stage = RepairStage { shift: j, recovered: Vec::new(), consumed: Vec::new() };
        for (pos, &f) in access.iter().enumerate() {
            let mut acc = helper(params.k + j)[pos];
            if record {
                stage.consumed.push(SymbolSource::Helper {
                    node: NodeId::Parity { x: j as u8 },
                    index: params.ordinal_to_tuple(f)?,
                });
            }
            for u in 0..params.k {
                let known = if u == failed_ord { symbols[f] } else { helper(u)[pos] };
                acc = field.add(acc, field.mul(desc.coefficient(j as u8, u), known));
                if record {
                    let index = params.ordinal_to_tuple(f)?;
                    stage.consumed.push(if u == failed_ord {
                        SymbolSource::Recovered { stage: 0, index }
                    } else {
                        SymbolSource::Helper { node: NodeId::from_ordinal(u, params)?, index }
                    });
                }
            }
            let mut unknown = None;
            let mut fold = Ok(());
            visit_r1(params, j, f, |node, g| {
                if node == failed_ord {
                    unknown = Some(g);
                    return;
                }
                let Some(pos_g) = pos_of[g] else {
                    fold = Err(Error::ProtocolError("shifted index outside access set"));
                    return;
                };
                acc = field.add(acc, field.mul(c, helper(node)[pos_g]));
                if record {
                    if let Ok(index) = params.ordinal_to_tuple(g) {
                        stage.consumed.push(SymbolSource::Helper {
                            node: NodeId::from_ordinal(node, params)
                                .expect("systematic ordinal"),
                            index,
                        });
                    }
                }
            });
            fold?;
            let g = unknown.ok_or(Error::ProtocolError("row lacks the failed node's term"))?;
            debug_assert_eq!(
                params.ordinal_to_tuple(g)?.digit(s),
                ((usize::from(t) + j) % params.r) as u8
            );
            let value = field.mul(c_inv, acc);
            symbols[g] = value;
            if record {
                stage.recovered.push((params.ordinal_to_tuple(g)?, value));
            }
        }
        stages.push(stage);
    }

    Ok(RepairSession { failed, stages, symbols })
}

/// What a repair of `failed` reads: the per-helper access set and the totals
/// against the naive full-stripe baseline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessReport {
    pub failed: NodeId,
    /// Indices every helper reads; length beta.
    pub helper_indices: Vec<SymbolIndex>,
    pub per_helper: usize,
    pub helpers: usize,
    pub total: usize,
    /// Symbols a naive repair reads: the whole message, k * alpha.
    pub baseline: usize,
}

impl AccessReport {
    /// total / baseline; below 1 means the repair beats naive reconstruction.
    pub fn savings_ratio(&self) -> f64 {
        self.total as f64 / self.baseline as f64
    }
}

pub fn access_report(failed: NodeId, params: &CodeParams) -> Result<AccessReport> {
    let helper_indices = params.access_set(failed)?;
    let per_helper = helper_indices.len();
    let helpers = params.n - 1;
    Ok(AccessReport {
        failed,
        helper_indices,
        per_helper,
        helpers,
        total: per_helper * helpers,
        baseline: params.message_symbols,
    })
}

/// Recovers the k x alpha message from any k distinct nodes' contents by
/// solving the subset system directly.
pub fn reconstruct(
    nodes: &[(NodeId, &[FieldElement])],
    desc: &CodeDescription,
) -> Result<Vec<Vec<FieldElement>>> {
    let params = desc.params();
    let field = desc.field();
    if nodes.len() != params.k {
        return Err(Error::DimensionMismatch {
            what: "reconstruction nodes",
            expected: params.k,
            got: nodes.len(),
        });
    }
    let alpha = params.alpha;
    let mut sorted: Vec<(usize, &[FieldElement])> = Vec::with_capacity(params.k);
    for (id, symbols) in nodes {
        id.validate(params)?;
        if symbols.len() != alpha {
            return Err(Error::DimensionMismatch {
                what: "node symbol count",
                expected: alpha,
                got: symbols.len(),
            });
        }
        sorted.push((id.ordinal(params), symbols));
    }
    sorted.sort_unstable_by_key(|&(ord, _)| ord);

    let ordinals: Vec<usize> = sorted.iter().map(|&(ord, _)| ord).collect();
    let sm = build_subset_matrix(desc, &ordinals, desc.c_required()?)?;
    let mut rhs = Vec::with_capacity(params.k * alpha);
    for &(_, symbols) in &sorted {
        rhs.extend_from_slice(symbols);
    }
    let flat = sm.matrix.solve(field, &rhs)?;
    Ok(flat.chunks_exact(alpha).map(|ch| ch.to_vec()).collect())
}

/// Reusable decoder for one fixed node subset: inverts the subset system once
/// and then recovers each stripe with a single matrix-vector product.
#[derive(Debug, Clone)]
pub struct SubsetDecoder<'a> {
    desc: &'a CodeDescription,
    subset: Vec<usize>,
    inverse: Matrix,
}

impl<'a> SubsetDecoder<'a> {
    pub fn new(desc: &'a CodeDescription, nodes: &[usize]) -> Result<SubsetDecoder<'a>> {
        let sm = build_subset_matrix(desc, nodes, desc.c_required()?)?;
        let inverse = sm.matrix.inverse(desc.field())?;
        Ok(SubsetDecoder { desc, subset: sm.subset, inverse })
    }

    /// Node ordinals in ascending order; `decode` rows must match it.
    pub fn subset(&self) -> &[usize] {
        &self.subset
    }

    /// Recovers one stripe's message (node-major, k * alpha symbols) from the
    /// subset nodes' contents, ordered as [`subset`](Self::subset).
    pub fn decode(&self, rows: &[&[FieldElement]]) -> Result<Vec<FieldElement>> {
        let params = self.desc.params();
        if rows.len() != params.k {
            return Err(Error::DimensionMismatch {
                what: "decoder rows",
                expected: params.k,
                got: rows.len(),
            });
        }
        let mut stacked = Vec::with_capacity(params.k * params.alpha);
        for row in rows {
            if row.len() != params.alpha {
                return Err(Error::DimensionMismatch {
                    what: "decoder row length",
                    expected: params.alpha,
                    got: row.len(),
                });
            }
            stacked.extend_from_slice(row);
        }
        self.inverse.mul_vec(self.desc.field(), &stacked)
    }
}

/// Expands `parity_support` into (node ordinal, symbol ordinal) pairs; used
/// by tests to pin the fast ordinal walk to the structural definition.
#[cfg(test)]
fn r1_pairs_structural(params: &CodeParams, x: usize, f: usize) -> Vec<(usize, usize)> {
    let idx = params.ordinal_to_tuple(f).unwrap();
    let support = crate::construction::parity_support(x as u8, &idx, params).unwrap();
    support
        .r1
        .iter()
        .map(|(node, g)| (node.ordinal(params), params.tuple_to_ordinal(g).unwrap()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{assign_coefficients, find_c, k_subsets};
    use crate::galois::FieldSpec;
    use rand::{Rng, SeedableRng};
    use std::sync::OnceLock;

    fn desc22() -> &'static CodeDescription {
        static DESC: OnceLock<CodeDescription> = OnceLock::new();
        DESC.get_or_init(|| build(CodeParams::validate(2, 2, FieldSpec::W8).unwrap()))
    }

    fn desc23() -> &'static CodeDescription {
        static DESC: OnceLock<CodeDescription> = OnceLock::new();
        DESC.get_or_init(|| build(CodeParams::validate(2, 3, FieldSpec::W16).unwrap()))
    }

    fn desc12() -> &'static CodeDescription {
        static DESC: OnceLock<CodeDescription> = OnceLock::new();
        DESC.get_or_init(|| build(CodeParams::validate(1, 2, FieldSpec::W8).unwrap()))
    }

    fn build(params: CodeParams) -> CodeDescription {
        let desc = assign_coefficients(&params, 0).unwrap();
        let c = find_c(&desc).unwrap().c;
        desc.with_c(c).unwrap()
    }

    fn random_message(params: &CodeParams, rng: &mut impl Rng) -> Vec<Vec<FieldElement>> {
        (0..params.k)
            .map(|_| {
                (0..params.alpha)
                    .map(|_| rng.random_range(0..=params.field.max_element()))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn zero_message_encodes_to_zero() {
        let desc = desc22();
        let p = desc.params();
        let msg = vec![vec![0; p.alpha]; p.k];
        let cw = encode(&msg, desc).unwrap();
        for node in 0..p.n {
            assert!(cw.node(node).iter().all(|&v| v == 0));
        }
    }

    #[test]
    fn parity_zero_is_the_row_sum() {
        let desc = desc22();
        let p = desc.params();
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        let msg = random_message(p, &mut rng);
        let cw = encode(&msg, desc).unwrap();
        for f in 0..p.alpha {
            let sum = msg.iter().fold(0, |acc, row| acc ^ row[f]);
            assert_eq!(cw.get(p.k, f), sum);
        }
    }

    #[test]
    fn systematic_rows_are_verbatim() {
        let desc = desc23();
        let p = desc.params();
        let mut rng = rand::rngs::StdRng::seed_from_u64(2);
        let msg = random_message(p, &mut rng);
        let cw = encode(&msg, desc).unwrap();
        for (u, row) in msg.iter().enumerate() {
            assert_eq!(cw.node(u), row.as_slice());
        }
    }

    #[test]
    fn encoding_is_linear() {
        let desc = desc22();
        let p = desc.params();
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let a = random_message(p, &mut rng);
            let b = random_message(p, &mut rng);
            let sum: Vec<Vec<FieldElement>> = a
                .iter()
                .zip(&b)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x ^ y).collect())
                .collect();
            let ca = encode(&a, desc).unwrap();
            let cb = encode(&b, desc).unwrap();
            let cs = encode(&sum, desc).unwrap();
            for node in 0..p.n {
                for g in 0..p.alpha {
                    assert_eq!(cs.get(node, g), ca.get(node, g) ^ cb.get(node, g));
                }
            }
        }
    }

    #[test]
    fn encode_validates_shape_and_range() {
        let desc = desc22();
        let p = desc.params();
        assert!(matches!(
            encode(&vec![vec![0; p.alpha]; p.k - 1], desc),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut msg = vec![vec![0; p.alpha]; p.k];
        msg[0][0] = 0x100;
        assert!(matches!(encode(&msg, desc), Err(Error::ElementOutOfRange { .. })));
    }

    #[test]
    fn ordinal_walk_matches_structural_support() {
        for desc in [desc22(), desc23()] {
            let p = desc.params();
            for x in 0..p.r {
                for f in 0..p.alpha {
                    let mut fast = Vec::new();
                    visit_r1(p, x, f, |node, g| fast.push((node, g)));
                    assert_eq!(fast, r1_pairs_structural(p, x, f), "x={x} f={f}");
                }
            }
        }
    }

    #[test]
    fn repair_restores_every_systematic_node() {
        for desc in [desc12(), desc22(), desc23()] {
            let p = desc.params();
            let mut rng = rand::rngs::StdRng::seed_from_u64(4);
            for _ in 0..25 {
                let msg = random_message(p, &mut rng);
                let cw = encode(&msg, desc).unwrap();
                for (failed_ord, original) in msg.iter().enumerate() {
                    let failed = NodeId::from_ordinal(failed_ord, p).unwrap();
                    let mut counter = ReadCounter::new(p.n);
                    let helpers = extract_helper_symbols(&cw, failed, &mut counter).unwrap();
                    let repaired = repair_systematic(failed, &helpers, desc).unwrap();
                    assert_eq!(&repaired, original, "node {failed_ord}");
                    assert_eq!(counter.total(), (p.n - 1) * p.beta);
                    assert_eq!(counter.reads(failed_ord), 0);
                    for ord in 0..p.n {
                        if ord != failed_ord {
                            assert_eq!(counter.reads(ord), p.beta);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn repair_stage_structure_small_fixture() {
        // Failing node (1,0): stage 0 recovers rows {0,1} from the row
        // parity; stage 1 recovers rows {2,3} through parity 1's symbols at
        // rows 0 and 1.
        let desc = desc22();
        let p = desc.params();
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let msg = random_message(p, &mut rng);
        let cw = encode(&msg, desc).unwrap();
        let failed = NodeId::systematic(1, 0, p).unwrap();
        let mut counter = ReadCounter::new(p.n);
        let helpers = extract_helper_symbols(&cw, failed, &mut counter).unwrap();
        let session = repair_session(failed, &helpers, desc).unwrap();

        assert_eq!(session.symbols, msg[0]);
        assert_eq!(session.stages.len(), 2);
        let ords = |stage: &RepairStage| -> Vec<usize> {
            stage
                .recovered
                .iter()
                .map(|(idx, _)| p.tuple_to_ordinal(idx).unwrap())
                .collect()
        };
        assert_eq!(ords(&session.stages[0]), vec![0, 1]);
        assert_eq!(ords(&session.stages[1]), vec![2, 3]);
        for (idx, value) in &session.stages[1].recovered {
            assert_eq!(*value, msg[0][p.tuple_to_ordinal(idx).unwrap()]);
        }
        // Stage 1 consults parity 1 at rows 0 and 1 and nothing from parity 0.
        let parity_rows: Vec<usize> = session.stages[1]
            .consumed
            .iter()
            .filter_map(|src| match src {
                SymbolSource::Helper { node: NodeId::Parity { x }, index } => {
                    assert_eq!(*x, 1, "stage 1 must only read parity 1");
                    Some(p.tuple_to_ordinal(index).unwrap())
                }
                _ => None,
            })
            .collect();
        assert_eq!(parity_rows, vec![0, 1]);
    }

    #[test]
    fn stages_consume_only_helpers_access_set_and_stage_zero() {
        for desc in [desc22(), desc23()] {
            let p = desc.params();
            let mut rng = rand::rngs::StdRng::seed_from_u64(6);
            let msg = random_message(p, &mut rng);
            let cw = encode(&msg, desc).unwrap();
            for failed_ord in 0..p.k {
                let failed = NodeId::from_ordinal(failed_ord, p).unwrap();
                let NodeId::Systematic { s, t } = failed else { unreachable!() };
                let mut counter = ReadCounter::new(p.n);
                let helpers = extract_helper_symbols(&cw, failed, &mut counter).unwrap();
                let session = repair_session(failed, &helpers, desc).unwrap();
                assert_eq!(session.stages.len(), p.r);
                for (j, stage) in session.stages.iter().enumerate() {
                    assert_eq!(stage.shift, j);
                    assert_eq!(stage.recovered.len(), p.beta);
                    for (idx, _) in &stage.recovered {
                        assert_eq!(
                            usize::from(idx.digit(s)),
                            (usize::from(t) + j) % p.r,
                            "stage {j} must recover digit shift {j}"
                        );
                    }
                    for src in &stage.consumed {
                        match src {
                            SymbolSource::Helper { node, index } => {
                                assert_ne!(node.ordinal(p), failed_ord);
                                // Help-by-transfer: only access-set symbols.
                                assert_eq!(index.digit(s), t);
                                if let NodeId::Parity { x } = node {
                                    assert_eq!(usize::from(*x), j, "stage {j} read parity {x}");
                                }
                            }
                            SymbolSource::Recovered { stage: src_stage, index } => {
                                assert!(j >= 1, "stage 0 cannot use recovered symbols");
                                assert_eq!(*src_stage, 0, "stage {j} must only reuse stage 0");
                                assert_eq!(index.digit(s), t);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn repair_rejects_protocol_violations() {
        let desc = desc22();
        let p = desc.params();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let msg = random_message(p, &mut rng);
        let cw = encode(&msg, desc).unwrap();
        let failed = NodeId::systematic(1, 0, p).unwrap();
        let mut counter = ReadCounter::new(p.n);
        let helpers = extract_helper_symbols(&cw, failed, &mut counter).unwrap();

        let short = &helpers[..p.n - 2];
        assert!(matches!(
            repair_systematic(failed, short, desc),
            Err(Error::ProtocolError(_))
        ));

        let mut dup = helpers.clone();
        dup[0] = dup[1].clone();
        assert!(matches!(
            repair_systematic(failed, &dup, desc),
            Err(Error::ProtocolError(_))
        ));

        let mut wrong_len = helpers.clone();
        wrong_len[0].symbols.push(0);
        assert!(matches!(
            repair_systematic(failed, &wrong_len, desc),
            Err(Error::ProtocolError(_))
        ));

        let mut includes_failed = helpers.clone();
        includes_failed[0].node = failed;
        assert!(matches!(
            repair_systematic(failed, &includes_failed, desc),
            Err(Error::ProtocolError(_))
        ));

        let parity = NodeId::parity(1, p).unwrap();
        assert!(matches!(
            repair_systematic(parity, &helpers, desc),
            Err(Error::ParityRepairUnsupported)
        ));

        let unset = assign_coefficients(p, 0).unwrap();
        assert!(matches!(
            repair_systematic(failed, &helpers, &unset),
            Err(Error::InvalidDescription(_))
        ));
    }

    #[test]
    fn reconstruct_from_every_subset_small_fixture() {
        let desc = desc22();
        let p = desc.params();
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        let msg = random_message(p, &mut rng);
        let cw = encode(&msg, desc).unwrap();
        let mut subsets = 0;
        for subset in k_subsets(p.n, p.k) {
            let nodes: Vec<(NodeId, &[FieldElement])> = subset
                .iter()
                .map(|&ord| (NodeId::from_ordinal(ord, p).unwrap(), cw.node(ord)))
                .collect();
            assert_eq!(reconstruct(&nodes, desc).unwrap(), msg, "subset {subset:?}");
            subsets += 1;
        }
        assert_eq!(subsets, 15);
    }

    #[test]
    fn reconstruct_from_every_subset_ternary_fixture() {
        let desc = desc23();
        let p = desc.params();
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        let msg = random_message(p, &mut rng);
        let cw = encode(&msg, desc).unwrap();
        let mut subsets = 0;
        for subset in k_subsets(p.n, p.k) {
            let nodes: Vec<(NodeId, &[FieldElement])> = subset
                .iter()
                .map(|&ord| (NodeId::from_ordinal(ord, p).unwrap(), cw.node(ord)))
                .collect();
            assert_eq!(reconstruct(&nodes, desc).unwrap(), msg, "subset {subset:?}");
            subsets += 1;
        }
        assert_eq!(subsets, 84);
    }

    #[test]
    fn subset_decoder_agrees_with_direct_solve() {
        let desc = desc22();
        let p = desc.params();
        let mut rng = rand::rngs::StdRng::seed_from_u64(10);
        for subset in k_subsets(p.n, p.k) {
            let decoder = SubsetDecoder::new(desc, &subset).unwrap();
            assert_eq!(decoder.subset(), subset.as_slice());
            for _ in 0..3 {
                let msg = random_message(p, &mut rng);
                let cw = encode(&msg, desc).unwrap();
                let rows: Vec<&[FieldElement]> =
                    decoder.subset().iter().map(|&ord| cw.node(ord)).collect();
                let flat = decoder.decode(&rows).unwrap();
                let expect: Vec<FieldElement> = msg.iter().flatten().copied().collect();
                assert_eq!(flat, expect);
            }
        }
    }

    #[test]
    fn repair_agrees_with_reconstruction() {
        let desc = desc22();
        let p = desc.params();
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let msg = random_message(p, &mut rng);
        let cw = encode(&msg, desc).unwrap();
        let failed = NodeId::systematic(2, 1, p).unwrap();
        let failed_ord = failed.ordinal(p);

        let mut counter = ReadCounter::new(p.n);
        let helpers = extract_helper_symbols(&cw, failed, &mut counter).unwrap();
        let repaired = repair_systematic(failed, &helpers, desc).unwrap();

        let subset: Vec<usize> = (0..p.n).filter(|&o| o != failed_ord).take(p.k).collect();
        let nodes: Vec<(NodeId, &[FieldElement])> = subset
            .iter()
            .map(|&ord| (NodeId::from_ordinal(ord, p).unwrap(), cw.node(ord)))
            .collect();
        let message = reconstruct(&nodes, desc).unwrap();
        assert_eq!(message[failed_ord], repaired);
    }

    #[test]
    fn reconstruct_validates_input() {
        let desc = desc22();
        let p = desc.params();
        let row = vec![0 as FieldElement; p.alpha];
        let short = vec![(NodeId::from_ordinal(0, p).unwrap(), row.as_slice())];
        assert!(matches!(
            reconstruct(&short, desc),
            Err(Error::DimensionMismatch { .. })
        ));
        let dup: Vec<(NodeId, &[FieldElement])> = (0..p.k)
            .map(|_| (NodeId::from_ordinal(0, p).unwrap(), row.as_slice()))
            .collect();
        assert!(matches!(reconstruct(&dup, desc), Err(Error::BadNode(_))));
    }

    #[test]
    fn access_report_totals() {
        let cases: [(&CodeDescription, usize, usize); 3] =
            [(desc22(), 10, 16), (desc23(), 24, 54), (desc12(), 3, 4)];
        for (desc, total, baseline) in cases {
            let p = desc.params();
            for failed_ord in 0..p.k {
                let failed = NodeId::from_ordinal(failed_ord, p).unwrap();
                let report = access_report(failed, p).unwrap();
                assert_eq!(report.per_helper, p.beta);
                assert_eq!(report.helpers, p.n - 1);
                assert_eq!(report.total, total);
                assert_eq!(report.baseline, baseline);
                assert_eq!(report.helper_indices.len(), p.beta);
            }
        }
        assert!((access_report(NodeId::Systematic { s: 1, t: 0 }, desc22().params())
            .unwrap()
            .savings_ratio()
            - 0.625)
            .abs()
            < 1e-12);
    }
}
