//! Angle-of-arrival based secret key generation for low-SNR wireless links.
//!
//! The crate simulates a uniform circular array (UCA) receiving a single
//! narrowband source, estimates the angle of arrival with either MUSIC or a
//! cross-correlation switched-beam system (XSBS), and turns sequences of
//! estimates at two nodes into matching bit streams:
//!
//! * [`array`]: UCA geometry, steering vectors and snapshot synthesis.
//! * [`estimators`]: covariance, eigendecomposition, MUSIC and XSBS spectra,
//!   peak-to-floor ratio and sequential 2-D estimation.
//! * [`pipeline`]: reference alignment, uniform quantization, Gray/MSB
//!   repetition encoding, stream combining and bit mismatch rate.
//! * [`secrecy`]: Cascade reconciliation and Toeplitz privacy amplification.
//! * [`baselines`]: channel amplitude/phase key generators over a reciprocal
//!   Rayleigh channel.
//! * [`experiment`]: configuration, Monte Carlo sweeps and CSV output used by
//!   the `aoa-keygen` binary.

pub mod array;
pub mod baselines;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod pipeline;
pub mod rng;
pub mod secrecy;

pub use error::{Error, Result};
