//! Measurement of propagation of chaos: product observables, the
//! symmetrization gap, chaos error curves against limit oracles,
//! contraction checks and log-log rate fits.

pub mod contraction;
pub mod curve;
pub mod fit;
pub mod observable;
pub mod symmetrization;

pub use contraction::{fourier_contraction_check, tanaka_contraction_check, FourierContraction, TanakaPoint, TanakaResult};
pub use curve::{chaos_error_curve, ChaosConfig, ChaosCurve, ChaosRun, MarginalEstimator, OracleSpec, ReplicaPlan};
pub use fit::{rate_fit, RateFit};
pub use observable::{poly_observable, ObservableProduct, TestFunction};
pub use symmetrization::{injective_tuple_mean, symmetrization_gap, symmetrize_over_permutations, SymmetrizationGap};
