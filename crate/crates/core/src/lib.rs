//! Pulsed spin–oscillator numerics.
//!
//! A single pseudospin couples to a harmonic oscillator through
//! `H = g σ_z (a + a†) + ω a†a − f(t)(a + a†)` with instantaneous π pulses
//! flipping the sign of the coupling. The crate evaluates the closed-form
//! dynamics of that model (coherent branches, response kernels, squeezing),
//! entanglement-witness values and force-sensitivity budgets, and carries a
//! truncated Fock-space oracle that checks the closed forms by brute force.
//!
//! Internally everything is in natural oscillator units (ħ = 1, times in
//! seconds, frequencies in rad/s); SI conversion lives in [`core_model`].

pub mod acceptance;
pub mod core_model;
pub mod error;
pub mod fock_oracle;
pub mod magnus_dynamics;
pub mod numerics;
pub mod pulse_kernel;
pub mod sensing;
pub mod witness;

pub use error::{Error, Result};
