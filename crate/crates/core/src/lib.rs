// SPDX-License-Identifier: Apache-2.0

//! Biometric authentication with fuzzy commitments stored on a simulated,
//! gas-metered, hash-chained ledger.
//!
//! - [`ecc`]: binary linear codes with syndrome decoding.
//! - [`fcs`]: commit/open over those codes.
//! - [`synthbio`]: synthetic templates, noisy acquisition, analytic FRR/FAR.
//! - [`contract`]: subject and node registries with role checks and elections.
//! - [`ledger`]: blocks, receipts, gas, verification and replay.
//! - [`protocol`]: enrollment, authentication, revocation and election flows.
//! - [`scenario`], [`sweep`], [`report`]: batch runs, error-rate sweeps and gas reports.

pub mod bits;
pub mod contract;
pub mod ecc;
pub mod fcs;
pub mod ledger;
pub mod protocol;
pub mod report;
pub mod scenario;
pub mod sweep;
pub mod synthbio;

pub use bits::Bits;
pub use contract::{Address, ContractCall, ContractError, ContractState, Event, FunctionName, NodeRecord, SubjectRecord};
pub use ecc::{CodeSpec, EccError, LinearCode, Witness};
pub use fcs::{Commitment, Digest, FcsError, FeatureVector};
pub use ledger::{Ledger, LedgerConfig, LedgerError};
