//! Distances between probability measures and the sampling-error estimator
//! `Omega_N`.

pub mod fourier;
pub mod omega;
pub mod transport;
pub mod tv;

pub use fourier::{h_neg_sobolev_norm, toscani_norm, toscani_norm_empirical, SobolevValue, ToscaniValue};
pub use omega::{omega_n_estimator, OmegaEstimator, OmegaPoint, OmegaResult};
pub use transport::{w1_exact_1d, w2_exact_1d, w2_exact_matching, w2_sliced, SlicedEstimate, TransportPlanResult};
pub use tv::tv_histogram;
