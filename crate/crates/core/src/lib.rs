//! Nyquist folding receiver (NYFR) wideband acquisition for UAV swarms.
//!
//! The crate is organised bottom-up:
//!
//! * [`scene`] synthesises emitter waveforms on the Nyquist-rate grid and
//!   combines them through an RIS-assisted array or per-channel delays.
//! * [`nyfr`] holds the receiver grid, the local-oscillator phase law and the
//!   analytic folding measurement.
//! * [`sensing`] assembles the matrix-free sensing operator `H = P·Θ·Ψ` and its
//!   stacked multichannel form.
//! * [`coherence`] computes Gram matrices (dense and closed-form), Gershgorin
//!   RIP certificates and block-coherence diagnostics.
//! * [`recovery`] implements OMP / block-OMP over the operator.
//! * [`eval`] runs seeded trials and the named experiment sweeps.
//! * [`config`] and [`io`] cover the on-disk scenario schema and binary dumps.

pub mod coherence;
pub mod config;
pub mod error;
pub mod eval;
pub mod io;
pub mod linalg;
pub mod nyfr;
pub mod recovery;
pub mod scene;
pub mod sensing;

pub use num_complex::Complex64 as C64;

pub use error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
