//! Simulation of a non one-time-pad quantum block cipher.
//!
//! Classical n-bit blocks are encoded as computational basis states and
//! encrypted by a key circuit of real single-qubit unitaries and CNOT gates.
//! The crate is `no_std` (it needs `alloc`); file formats and the
//! command-line front end live in the `qblock` crate.
//!
//! Modules, bottom-up:
//! - [`statevector`]: dense pure-state simulator.
//! - [`keyschedule`]: key generation, the four-step key circuit and its inverse.
//! - [`cipher`]: single-block encryption and decryption.
//! - [`modes`]: measured-IV and entangling-CNOT chaining modes.
//! - [`analysis`]: confusion and diffusion measurements.
//! - [`adversary`]: eavesdropper models and counting bounds.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod adversary;
pub mod analysis;
pub mod bits;
pub mod cipher;
mod error;
pub mod keyschedule;
pub mod modes;
pub mod statevector;
mod util;

pub use bits::BitString;
pub use cipher::{decrypt_block, encrypt_block, CipherBlock, ModeTag, PlainBlock};
pub use error::{Error, Result};
pub use keyschedule::{generate_key, Ablation, CipherKey, GateOp};
pub use statevector::{MeasurementOutcome, StateVector, MAX_QUBITS};
pub use util::log2_biguint;
