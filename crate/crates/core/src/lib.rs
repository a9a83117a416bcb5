//! Simulator for four-photon polarization-entangled state generation from
//! cross-Kerr EPR entanglers with homodyne parity detection and classical
//! feed-forward.
//!
//! The signal photons live in a polarization basis; the coherent probe is
//! tracked by an integer phase index, and a truncated-Fock oracle
//! ([`fock`]) certifies that abstraction. The two circuits in [`circuits`]
//! produce the chi and cluster four-photon states; [`experiment`] runs
//! reproducible Monte-Carlo batches over them.

pub mod circuits;
pub mod elements;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod homodyne;
pub mod state;

pub use error::{Result, SimError};
