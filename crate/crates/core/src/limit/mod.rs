//! Reference solutions of the mean-field limit equations.

pub mod large_n;
pub mod lagrangian;
pub mod spectral;

pub use large_n::{kac_limit_oracle, large_n_means, OracleEstimate};
pub use lagrangian::{ColdSlabLimit, LagrangianSnapshot};
pub use spectral::{char_from_empirical, gaussian_spectrum, GridSpectrum, InvariantLog, SpectralModel};
