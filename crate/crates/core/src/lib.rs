//! Quantum metrology toolkit for parametrized unitary channels.
//!
//! The crate computes quantum (SLD) and classical Fisher information for
//! unitary channel families, simulates the associated estimation schemes
//! (per-channel maximally entangled probes, multipartite entangled probes,
//! sequential application, and an adaptive staged procedure), and numerically
//! verifies the trace-information optimality bounds by optimizing over input
//! states.

pub mod channels;
pub mod error;
pub mod estimation;
pub mod information;
pub mod optimize;
pub mod quantum;
pub mod rng;
pub mod schemes;
#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
