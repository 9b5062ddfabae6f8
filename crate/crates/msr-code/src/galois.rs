//! GF(2^w) arithmetic for w = 8 and w = 16, backed by log/antilog tables.
//!
//! Addition is XOR. Multiplication and inversion go through discrete-log
//! tables built from a generator of the multiplicative group, so every hot
//! operation is a couple of array lookups. Table construction validates the
//! reduction polynomial by trial division before searching for a generator.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// A field element of either supported width, stored in the low bits.
pub type FieldElement = u16;

/// Width and reduction polynomial of a binary extension field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    pub bits: u8,
    pub poly: u32,
}

impl FieldSpec {
    /// GF(2^8) with x^8 + x^4 + x^3 + x + 1.
    pub const W8: FieldSpec = FieldSpec { bits: 8, poly: 0x11B };
    /// GF(2^16) with x^16 + x^12 + x^3 + x + 1.
    pub const W16: FieldSpec = FieldSpec { bits: 16, poly: 0x1100B };

    /// The default spec for a supported width.
    pub fn new(bits: u8) -> Result<FieldSpec> {
        match bits {
            8 => Ok(FieldSpec::W8),
            16 => Ok(FieldSpec::W16),
            _ => Err(Error::UnsupportedFieldWidth { bits }),
        }
    }

    /// A spec with a caller-chosen reduction polynomial. The polynomial must
    /// have degree exactly `bits`; irreducibility is checked when the field
    /// tables are built.
    pub fn with_polynomial(bits: u8, poly: u32) -> Result<FieldSpec> {
        if bits != 8 && bits != 16 {
            return Err(Error::UnsupportedFieldWidth { bits });
        }
        if poly_degree(poly) != i32::from(bits) {
            return Err(Error::BadPolynomialDegree { poly, bits });
        }
        Ok(FieldSpec { bits, poly })
    }

    /// Number of field elements, 2^bits.
    pub fn order(self) -> u32 {
        1u32 << self.bits
    }

    /// Largest representable element, 2^bits - 1.
    pub fn max_element(self) -> FieldElement {
        (self.order() - 1) as FieldElement
    }

    /// Bytes needed to serialize one element.
    pub fn element_bytes(self) -> usize {
        usize::from(self.bits) / 8
    }
}

/// Arithmetic tables for one field instance.
#[derive(Clone)]
pub struct Field {
    spec: FieldSpec,
    generator: FieldElement,
    /// log[v] for v in 1..order; log[0] is unused.
    log: Vec<u16>,
    /// exp[i] = generator^i for i in 0..2*(order-1), so products of two logs
    /// index without a modulo.
    exp: Vec<u16>,
}

impl core::fmt::Debug for Field {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Field")
            .field("spec", &self.spec)
            .field("generator", &self.generator)
            .finish_non_exhaustive()
    }
}

impl PartialEq for Field {
    fn eq(&self, other: &Field) -> bool {
        self.spec == other.spec
    }
}

impl Eq for Field {}

impl Field {
    /// Builds the tables, validating the polynomial along the way.
    pub fn new(spec: FieldSpec) -> Result<Field> {
        if spec.bits != 8 && spec.bits != 16 {
            return Err(Error::UnsupportedFieldWidth { bits: spec.bits });
        }
        if poly_degree(spec.poly) != i32::from(spec.bits) {
            return Err(Error::BadPolynomialDegree { poly: spec.poly, bits: spec.bits });
        }
        if !is_irreducible(spec.poly, spec.bits) {
            return Err(Error::ReduciblePolynomial { poly: spec.poly });
        }

        let span = (spec.order() - 1) as usize;
        let (generator, half) = find_generator(spec).ok_or(Error::ReduciblePolynomial {
            poly: spec.poly,
        })?;

        let mut exp = Vec::with_capacity(2 * span);
        exp.extend_from_slice(&half);
        exp.extend_from_slice(&half);

        let mut log = vec![0u16; spec.order() as usize];
        for (i, &v) in half.iter().enumerate() {
            log[v as usize] = i as u16;
        }

        Ok(Field { spec, generator, log, exp })
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    /// Order of the multiplicative group, 2^bits - 1.
    pub fn group_order(&self) -> u32 {
        self.spec.order() - 1
    }

    /// The element whose powers enumerate every nonzero element.
    pub fn generator(&self) -> FieldElement {
        self.generator
    }

    /// Range-checks a raw value into a field element.
    pub fn element(&self, value: u64) -> Result<FieldElement> {
        if value > u64::from(self.spec.max_element()) {
            return Err(Error::ElementOutOfRange { value, bits: self.spec.bits });
        }
        Ok(value as FieldElement)
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        debug_assert!(a <= self.spec.max_element() && b <= self.spec.max_element());
        a ^ b
    }

    /// Subtraction coincides with addition in characteristic 2.
    #[inline]
    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, b)
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        debug_assert!(a <= self.spec.max_element() && b <= self.spec.max_element());
        if a == 0 || b == 0 {
            return 0;
        }
        let idx = usize::from(self.log[a as usize]) + usize::from(self.log[b as usize]);
        self.exp[idx]
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        debug_assert!(a <= self.spec.max_element());
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        let idx = self.group_order() as usize - usize::from(self.log[a as usize]);
        Ok(self.exp[idx])
    }

    pub fn div(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// a^e with the usual conventions: pow(0, 0) = 1, pow(0, e) = 0 for e > 0.
    pub fn pow(&self, a: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let span = u64::from(self.group_order());
        let idx = (u64::from(self.log[a as usize]) * (e % span)) % span;
        self.exp[idx as usize]
    }
}

/// Degree of a GF(2) polynomial, or -1 for zero.
fn poly_degree(p: u32) -> i32 {
    31 - p.leading_zeros() as i32
}

/// Remainder of carry-less division of `a` by `b` over GF(2).
fn poly_rem(mut a: u64, b: u64) -> u64 {
    let db = 63 - b.leading_zeros() as i32;
    loop {
        let da = 63 - (a | 1).leading_zeros() as i32;
        if a == 0 || da < db {
            return a;
        }
        a ^= b << (da - db);
    }
}

/// Trial division by every polynomial of degree 1..=bits/2.
fn is_irreducible(poly: u32, bits: u8) -> bool {
    let half = u32::from(bits) / 2;
    for deg in 1..=half {
        for candidate in (1u64 << deg)..(1u64 << (deg + 1)) {
            if poly_rem(u64::from(poly), candidate) == 0 {
                return false;
            }
        }
    }
    true
}

/// Product in GF(2)[x] reduced by `spec.poly`, used only while building tables.
fn clmul_mod(a: FieldElement, b: FieldElement, spec: FieldSpec) -> FieldElement {
    let mut a = u32::from(a);
    let mut b = u32::from(b);
    let mut acc = 0u32;
    let top = 1u32 << spec.bits;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & top != 0 {
            a ^= spec.poly;
        }
    }
    acc as FieldElement
}

/// Finds the smallest element of full multiplicative order and returns it with
/// the table of its first 2^bits - 1 powers.
fn find_generator(spec: FieldSpec) -> Option<(FieldElement, Vec<u16>)> {
    let span = (spec.order() - 1) as usize;
    'candidates: for g in 2..spec.order() {
        let g = g as FieldElement;
        let mut half = vec![0u16; span];
        let mut v: FieldElement = 1;
        for (i, slot) in half.iter_mut().enumerate() {
            *slot = v;
            v = clmul_mod(v, g, spec);
            if v == 1 && i + 1 < span {
                continue 'candidates;
            }
        }
        if v == 1 {
            return Some((g, half));
        }
    }
    None
}
