//! Systematic MDS array code with help-by-transfer repair of systematic nodes.
//!
//! An `(n, k, d = n - 1)` code with `k = m * r` systematic nodes and `r` parity
//! nodes stores `alpha = r^m` field symbols per node. A failed systematic node
//! is rebuilt by reading `beta = alpha / r` symbols from each of the `n - 1`
//! survivors, and the symbols read are exactly the symbols transferred: helpers
//! do no arithmetic. Any `k` node columns recover the whole stripe.
//!
//! The crate is split along the pipeline:
//!
//! - [`galois`]: table-driven arithmetic in GF(2^8) / GF(2^16)
//! - [`params`]: parameter validation, symbol indexing, repair access sets
//! - [`linalg`]: dense matrices and Gaussian elimination over the field
//! - [`construction`]: parity supports, coefficient assignment, MDS verification
//! - [`codec`]: encode, sequential single-node repair, k-node reconstruction
//!
//! Everything here is `no_std` + `alloc`; file formats and the command-line
//! front end live in the companion `msr-tool` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod codec;
pub mod construction;
pub mod error;
pub mod galois;
pub mod linalg;
pub mod params;

pub use codec::{
    access_report, encode, extract_helper_symbols, reconstruct, repair_session,
    repair_systematic, AccessReport, CodewordArray, HelperSymbols, ReadCounter, RepairSession,
    RepairStage, SubsetDecoder, SymbolSource,
};
pub use construction::{
    assign_coefficients, build_subset_matrix, find_c, k_subsets, parity_support, verify_mds,
    CodeDescription, CoefficientSearch, KSubsets, MdsReport, ParitySupport, SubsetMatrix,
};
pub use error::{Error, Result};
pub use galois::{Field, FieldElement, FieldSpec};
pub use params::{CodeParams, NodeId, SymbolIndex};
