//! Stochastic N-particle systems and their mean-field limits.
//!
//! The crate simulates three particle models (elastic Kac collisions for
//! Maxwell molecules, McKean-Vlasov drift-diffusion and its deterministic
//! Vlasov specialisation, inelastic collisions driven by a Brownian thermal
//! bath), solves or approximates the corresponding limit equations, and
//! provides the probability metrics and estimators used to measure how fast
//! the particle marginals approach the limit as `N` grows.
//!
//! Module map:
//!
//! * [`rng`], [`state`], [`init`]: reproducible random streams, particle
//!   states, empirical measures and initial laws.
//! * [`kac`]: event-driven elastic collision process.
//! * [`mckean_vlasov`]: Euler-Maruyama interacting SDEs and the Vlasov flow.
//! * [`thermostat`]: inelastic collisions plus thermal bath.
//! * [`limit`]: spectral solver for the granular limit equation, closed
//!   moment oracles, large-N self-oracles.
//! * [`metrics`]: Wasserstein, Fourier-based and histogram distances, plus
//!   the sampling-error estimator for empirical measures.
//! * [`chaos`]: observables, symmetrisation bounds, chaos curves,
//!   contraction checks and rate fitting.
//! * [`cli`]: config parsing, CSV output and the batch driver.

// NaN must fail validation, so range checks are written as `!(x > 0.0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chaos;
pub mod cli;
pub mod error;
pub mod init;
pub mod kac;
pub mod limit;
pub mod mckean_vlasov;
pub mod metrics;
pub mod model;
pub mod parallel;
pub mod rng;
pub mod state;
pub mod thermostat;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use state::{EmpiricalMeasure, MomentVector, ParticleState};
