//! Open-system dynamics of a three-oscillator chain A–B–C with a quadratic
//! (two-photon) drive and loss on the central oscillator B.
//!
//! The crate covers the full analytical pipeline together with the numerics
//! used to check it:
//!
//! * [`params`] and [`model`]: parameters, derived scalars, the 6×6
//!   first-moment dynamical matrix and its closed-form eigenvalues.
//! * [`dynamics`]: numeric eigenstructure, exceptional-point search, branch
//!   tracked sweeps and first-moment time evolution.
//! * [`moments`]: the second-moment equations, derived mechanically from the
//!   master equation, and their steady state.
//! * [`correlation`] and [`spectrum`]: first-order coherence g¹(τ) and the
//!   optical spectrum S(ω), each by closed form and by numerics.
//! * [`fock`]: a brute-force truncated Fock-space master-equation integrator
//!   used as an independent oracle.

// `!(x < y)` is used deliberately so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlation;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod model;
pub mod moments;
pub mod ode;
pub mod params;
pub mod spectrum;

pub use error::{Error, Result};
pub use params::{ChainParams, DerivedScalars};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
