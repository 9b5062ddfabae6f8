//! Code parameters, node identities, m-tuple symbol indexing over Z_r, and
//! the repair access-set rule.
//!
//! A code instance has `k = m * r` systematic nodes and `r` parity nodes.
//! Each node stores `alpha = r^m` field symbols, indexed by m-tuples
//! `(y_1, ..., y_m)` with every digit in `Z_r`. Repairing systematic node
//! `(s, t)` reads, from every other node, exactly the `beta = r^(m-1)`
//! symbols whose index satisfies `y_s = t`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::galois::FieldSpec;

/// Validated parameter set with all derived quantities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeParams {
    /// Systematic nodes per digit position; `k = m * r`.
    pub m: usize,
    /// Parity-node count, digit radix, and repair-stage count.
    pub r: usize,
    /// Systematic node count.
    pub k: usize,
    /// Total node count, `k + r`.
    pub n: usize,
    /// Helper count during repair, always `n - 1`.
    pub d: usize,
    /// Symbols stored per node, `r^m`.
    pub alpha: usize,
    /// Symbols read from each helper during repair, `r^(m-1)`.
    pub beta: usize,
    /// Message symbols per stripe, `k * alpha`.
    pub message_symbols: usize,
    /// Field the symbols live in.
    pub field: FieldSpec,
    /// True when the field order is below `C(n,k) * r^(m+1)`, the bound under
    /// which a common repair coefficient is guaranteed to exist. Smaller
    /// fields may still work empirically; callers should warn, not refuse.
    pub below_bound: bool,
}

impl CodeParams {
    /// Checks `m >= 1`, `r >= 2`, digit and field capacity, and derives the
    /// remaining quantities.
    pub fn validate(m: usize, r: usize, field: FieldSpec) -> Result<CodeParams> {
        if m < 1 {
            return Err(Error::BadParameters("m must be at least 1"));
        }
        if r < 2 {
            return Err(Error::BadParameters("r must be at least 2"));
        }
        if r > 256 {
            return Err(Error::BadParameters("r must be at most 256"));
        }
        if field.bits != 8 && field.bits != 16 {
            return Err(Error::UnsupportedFieldWidth { bits: field.bits });
        }
        let k = m
            .checked_mul(r)
            .ok_or(Error::BadParameters("k = m * r overflows"))?;
        let n = k
            .checked_add(r)
            .ok_or(Error::BadParameters("n = k + r overflows"))?;
        let alpha = checked_pow(r, m).ok_or(Error::BadParameters("alpha = r^m overflows"))?;
        let message_symbols = k
            .checked_mul(alpha)
            .ok_or(Error::BadParameters("k * alpha overflows"))?;
        if n > field.order() as usize {
            // Coefficient assignment needs n distinct evaluation points.
            return Err(Error::FieldTooSmall { needed: n, order: field.order() });
        }
        let mut params = CodeParams {
            m,
            r,
            k,
            n,
            d: n - 1,
            alpha,
            beta: alpha / r,
            message_symbols,
            field,
            below_bound: false,
        };
        params.below_bound = match params.coefficient_bound() {
            Some(bound) => u128::from(field.order()) < bound,
            None => true,
        };
        Ok(params)
    }

    /// Derives `(m, r)` from `(n, k)`. Requires `k` to be a multiple of
    /// `r = n - k`; shortening to other shapes is not supported.
    pub fn from_n_k(n: usize, k: usize, field: FieldSpec) -> Result<CodeParams> {
        if k == 0 || n <= k {
            return Err(Error::BadParameters("need 0 < k < n"));
        }
        let r = n - k;
        if !k.is_multiple_of(r) {
            return Err(Error::BadParameters("k must be a multiple of r = n - k"));
        }
        CodeParams::validate(k / r, r, field)
    }

    /// `C(n,k) * r^(m+1)`, the field-order bound that guarantees a common
    /// repair coefficient exists. `None` when the value overflows u128.
    pub fn coefficient_bound(&self) -> Option<u128> {
        let choose = binomial(self.n as u128, self.k as u128)?;
        let mut pow: u128 = 1;
        for _ in 0..=self.m {
            pow = pow.checked_mul(self.r as u128)?;
        }
        choose.checked_mul(pow)
    }

    /// Big-endian radix-r value of the digit tuple; `y_1` is most significant.
    pub fn tuple_to_ordinal(&self, idx: &SymbolIndex) -> Result<usize> {
        if idx.digits.len() != self.m {
            return Err(Error::WrongTupleLength { expected: self.m, got: idx.digits.len() });
        }
        let mut ord = 0usize;
        for &d in &idx.digits {
            if usize::from(d) >= self.r {
                return Err(Error::DigitOutOfRange { digit: d, radix: self.r });
            }
            ord = ord * self.r + usize::from(d);
        }
        Ok(ord)
    }

    /// Inverse of [`tuple_to_ordinal`](Self::tuple_to_ordinal).
    pub fn ordinal_to_tuple(&self, ordinal: usize) -> Result<SymbolIndex> {
        if ordinal >= self.alpha {
            return Err(Error::OrdinalOutOfRange { ordinal, alpha: self.alpha });
        }
        let mut digits = alloc::vec![0u8; self.m];
        let mut rest = ordinal;
        for slot in digits.iter_mut().rev() {
            *slot = (rest % self.r) as u8;
            rest /= self.r;
        }
        Ok(SymbolIndex { digits })
    }

    /// The `beta` symbol indices every helper reads to repair `failed`:
    /// exactly those with `y_s = t`, in ascending ordinal order. The list is
    /// the same for every helper.
    pub fn access_set(&self, failed: NodeId) -> Result<Vec<SymbolIndex>> {
        let (s, t) = match failed {
            NodeId::Systematic { s, t } => (s, t),
            NodeId::Parity { .. } => return Err(Error::ParityRepairUnsupported),
        };
        self.check_systematic(s, t)?;
        let mut out = Vec::with_capacity(self.beta);
        for ord in 0..self.alpha {
            let idx = self.ordinal_to_tuple(ord)?;
            if idx.digits[s - 1] == t {
                out.push(idx);
            }
        }
        Ok(out)
    }

    /// [`access_set`](Self::access_set) reduced to symbol ordinals.
    pub fn access_ordinals(&self, failed: NodeId) -> Result<Vec<usize>> {
        let set = self.access_set(failed)?;
        set.iter().map(|idx| self.tuple_to_ordinal(idx)).collect()
    }

    /// All node ids in ordinal order: systematic nodes first, then parities.
    pub fn nodes(&self) -> Vec<NodeId> {
        (0..self.n)
            .map(|ord| NodeId::from_ordinal(ord, self).expect("ordinal in range"))
            .collect()
    }

    fn check_systematic(&self, s: usize, t: u8) -> Result<()> {
        if s < 1 || s > self.m {
            return Err(Error::BadNode("s must be in 1..=m"));
        }
        if usize::from(t) >= self.r {
            return Err(Error::BadNode("t must be in 0..r"));
        }
        Ok(())
    }
}

/// One stored symbol's position within a node: digits `(y_1, ..., y_m)`,
/// each in `Z_r`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolIndex {
    digits: Vec<u8>,
}

impl SymbolIndex {
    pub fn new(digits: &[u8], params: &CodeParams) -> Result<SymbolIndex> {
        if digits.len() != params.m {
            return Err(Error::WrongTupleLength { expected: params.m, got: digits.len() });
        }
        for &d in digits {
            if usize::from(d) >= params.r {
                return Err(Error::DigitOutOfRange { digit: d, radix: params.r });
            }
        }
        Ok(SymbolIndex { digits: digits.to_vec() })
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    /// Digit `y_s` (1-based position, matching the node tuple notation).
    pub fn digit(&self, s: usize) -> u8 {
        self.digits[s - 1]
    }

    /// Copy of this index with digit `y_s` replaced.
    pub fn with_digit(&self, s: usize, value: u8) -> SymbolIndex {
        let mut digits = self.digits.clone();
        digits[s - 1] = value;
        SymbolIndex { digits }
    }
}

/// Identity of one of the `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    /// Systematic node `(s, t)`, `s` in `1..=m`, `t` in `Z_r`.
    Systematic { s: usize, t: u8 },
    /// Parity node `x` in `Z_r`; `x = 0` is the row parity.
    Parity { x: u8 },
}

impl NodeId {
    pub fn systematic(s: usize, t: u8, params: &CodeParams) -> Result<NodeId> {
        params.check_systematic(s, t)?;
        Ok(NodeId::Systematic { s, t })
    }

    pub fn parity(x: u8, params: &CodeParams) -> Result<NodeId> {
        if usize::from(x) >= params.r {
            return Err(Error::BadNode("x must be in 0..r"));
        }
        Ok(NodeId::Parity { x })
    }

    pub fn is_systematic(&self) -> bool {
        matches!(self, NodeId::Systematic { .. })
    }

    /// Checks the id's fields against the parameter ranges.
    pub fn validate(&self, params: &CodeParams) -> Result<()> {
        match *self {
            NodeId::Systematic { s, t } => params.check_systematic(s, t),
            NodeId::Parity { x } => {
                if usize::from(x) >= params.r {
                    return Err(Error::BadNode("x must be in 0..r"));
                }
                Ok(())
            }
        }
    }

    /// Position in the codeword array: systematic `(s-1)*r + t`, parity `k + x`.
    pub fn ordinal(&self, params: &CodeParams) -> usize {
        match *self {
            NodeId::Systematic { s, t } => (s - 1) * params.r + usize::from(t),
            NodeId::Parity { x } => params.k + usize::from(x),
        }
    }

    pub fn from_ordinal(ordinal: usize, params: &CodeParams) -> Result<NodeId> {
        if ordinal < params.k {
            Ok(NodeId::Systematic {
                s: ordinal / params.r + 1,
                t: (ordinal % params.r) as u8,
            })
        } else if ordinal < params.n {
            Ok(NodeId::Parity { x: (ordinal - params.k) as u8 })
        } else {
            Err(Error::BadNode("ordinal out of range"))
        }
    }
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc.checked_mul(n - k + i)?;
        acc /= i;
    }
    Some(acc)
}
