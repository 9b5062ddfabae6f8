//! Error type shared by all modules of the crate.

use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Everything that can go wrong when building or using a code instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Field width other than 8 or 16 bits.
    UnsupportedFieldWidth { bits: u8 },
    /// Reduction polynomial has the wrong degree for the requested width.
    BadPolynomialDegree { poly: u32, bits: u8 },
    /// Reduction polynomial failed the irreducibility check.
    ReduciblePolynomial { poly: u32 },
    /// Multiplicative inverse of zero requested.
    ZeroInverse,
    /// Value does not fit in the field.
    ElementOutOfRange { value: u64, bits: u8 },
    /// Code parameters rejected (m < 1, r < 2, overflow, ...).
    BadParameters(&'static str),
    /// A symbol-index digit is outside Z_r.
    DigitOutOfRange { digit: u8, radix: usize },
    /// Symbol tuple has the wrong number of digits.
    WrongTupleLength { expected: usize, got: usize },
    /// Symbol ordinal outside [0, alpha).
    OrdinalOutOfRange { ordinal: usize, alpha: usize },
    /// Node identity outside the code (bad ordinal, s, t or x).
    BadNode(&'static str),
    /// Repair of a parity node was requested; only systematic repair is supported.
    ParityRepairUnsupported,
    /// The field has fewer elements than the code has nodes, so no distinct
    /// evaluation points exist.
    FieldTooSmall { needed: usize, order: u32 },
    /// Coefficient assignment failed the scalar MDS check for every attempted
    /// set of evaluation points.
    ConstructionFailed { attempts: usize },
    /// No common repair coefficient makes the code MDS; reports the field
    /// order against the existence bound C(n,k) * r^(m+1).
    CoefficientNotFound { order: u32, bound: Option<u128> },
    /// Input has the wrong shape.
    DimensionMismatch { what: &'static str, expected: usize, got: usize },
    /// Helper set violates the repair protocol (wrong nodes, counts, lengths).
    ProtocolError(&'static str),
    /// The code description is unusable (missing or zero coefficients).
    InvalidDescription(&'static str),
    /// A subset system that must be invertible was singular; the description
    /// does not match what was verified.
    SingularSystem,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::UnsupportedFieldWidth { bits } => {
                write!(f, "unsupported field width {bits} (expected 8 or 16)")
            }
            Error::BadPolynomialDegree { poly, bits } => {
                write!(f, "polynomial {poly:#x} does not have degree {bits}")
            }
            Error::ReduciblePolynomial { poly } => {
                write!(f, "polynomial {poly:#x} is not irreducible")
            }
            Error::ZeroInverse => write!(f, "zero has no multiplicative inverse"),
            Error::ElementOutOfRange { value, bits } => {
                write!(f, "value {value:#x} is not an element of GF(2^{bits})")
            }
            Error::BadParameters(msg) => write!(f, "invalid code parameters: {msg}"),
            Error::DigitOutOfRange { digit, radix } => {
                write!(f, "index digit {digit} is outside Z_{radix}")
            }
            Error::WrongTupleLength { expected, got } => {
                write!(f, "symbol index has {got} digits, expected {expected}")
            }
            Error::OrdinalOutOfRange { ordinal, alpha } => {
                write!(f, "symbol ordinal {ordinal} is outside [0, {alpha})")
            }
            Error::BadNode(msg) => write!(f, "invalid node id: {msg}"),
            Error::ParityRepairUnsupported => {
                write!(f, "repair of parity nodes is not supported")
            }
            Error::FieldTooSmall { needed, order } => {
                write!(
                    f,
                    "field of order {order} cannot supply {needed} distinct evaluation points"
                )
            }
            Error::ConstructionFailed { attempts } => {
                write!(
                    f,
                    "no scalar-MDS coefficient assignment found after {attempts} attempts \
                     (field too small)"
                )
            }
            Error::CoefficientNotFound { order, bound } => match bound {
                Some(b) => write!(
                    f,
                    "no common repair coefficient makes the code MDS: field order {order} \
                     is below the existence bound C(n,k)*r^(m+1) = {b}"
                ),
                None => write!(
                    f,
                    "no common repair coefficient makes the code MDS: field order {order} \
                     is below the existence bound C(n,k)*r^(m+1) (bound overflows)"
                ),
            },
            Error::DimensionMismatch { what, expected, got } => {
                write!(f, "dimension mismatch in {what}: expected {expected}, got {got}")
            }
            Error::ProtocolError(msg) => write!(f, "repair protocol violation: {msg}"),
            Error::InvalidDescription(msg) => write!(f, "invalid code description: {msg}"),
            Error::SingularSystem => {
                write!(f, "subset system is singular; code description is corrupt")
            }
        }
    }
}

impl core::error::Error for Error {}
