//! Channel-based physical layer authentication with Slepian-Wolf
//! reconciliation over polar codes.
//!
//! Bob enrolls Alice by quantizing stacked channel measurements and storing
//! the syndrome of the polar-transformed bit vector. At authentication time a
//! fresh measurement is reconciled against that syndrome with a CRC-aided
//! successive cancellation list decoder, and the Hamming distance between the
//! reconciled vectors drives a binomial hypothesis test.
//!
//! Two comparison schemes (a norm test on raw measurements and a key-based
//! challenge-response exchange) and a Monte Carlo harness for ROC and sweep
//! experiments are included.

pub mod baselines;
pub mod bits;
pub mod channel;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod features;
pub mod hypotest;
pub mod polar;
pub mod recon;
pub mod rng;

pub use bits::BitVector;
pub use error::{Error, Result};
