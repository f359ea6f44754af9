//! Optional post-processing for very low SNR: Cascade reconciliation and
//! Toeplitz-hash privacy amplification.

pub mod cascade;
pub mod hashing;

pub use cascade::{
    estimate_initial_block_size, leakage_bits, reconcile, Reconciled, ReconciliationSession,
    Transcript, TranscriptRecord, DEFAULT_PASSES,
};
pub use hashing::{privacy_amplify, HashFunctionFamily};
