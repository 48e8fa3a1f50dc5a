//! Hamiltonian identification for closed finite-level quantum systems whose
//! time-trace observables are polluted by classical colored noise.
//!
//! The pipeline is:
//!
//! 1. [`liealg`]: orthogonal su(N) bases, structure constants, operator expansion.
//! 2. [`statespace`]: filtration to the accessible set, reduced coherence-vector
//!    model, augmentation with a noise realization, discretization, simulation.
//! 3. [`noisemodel`]: spectral factorization of a rational PSD, controllable
//!    canonical realization, expectation dynamics, Welch validation.
//! 4. [`sysid`]: Hankel matrices, singular-value order selection, ERA, and the
//!    matrix-logarithm lift to continuous time.
//! 5. [`tfmatch`]: transfer-function coefficients and multistart least squares
//!    for the unknown parameters.
//!
//! [`config`] and [`experiment`] wire the stages to a TOML experiment file, and
//! the `qhid` binary exposes them as subcommands.

pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod liealg;
pub mod linalg;
pub mod noisemodel;
pub mod poly;
pub mod statespace;
pub mod sysid;
pub mod template;
pub mod tfmatch;

pub use error::{Error, Result};
