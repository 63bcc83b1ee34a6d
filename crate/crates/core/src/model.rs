//! A particle model ready to simulate: one of the four dynamics together
//! with its parameters.

use crate::kac::{simulate_kac, AngularKernel};
use crate::mckean_vlasov::{simulate_mkv, simulate_vlasov, DriftDiffusionSpec, VlasovSpec};
use crate::rng::RngStream;
use crate::state::ParticleState;
use crate::thermostat::{simulate_thermostat, PairConvention, RestitutionParams};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub enum ModelConfig {
    Kac {
        kernel: AngularKernel,
    },
    Thermostat {
        kernel: AngularKernel,
        params: RestitutionParams,
        convention: PairConvention,
    },
    McKeanVlasov {
        spec: DriftDiffusionSpec,
        dt: f64,
    },
    Vlasov {
        spec: VlasovSpec,
        dt: f64,
    },
}

impl ModelConfig {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Kac { .. } => "kac_elastic",
            Self::Thermostat { .. } => "inelastic_thermostat",
            Self::McKeanVlasov { .. } => "mckean_vlasov",
            Self::Vlasov { .. } => "vlasov",
        }
    }

    /// Per-particle phase dimension `m`.
    pub fn phase_dim(&self) -> usize {
        match self {
            Self::Kac { kernel } | Self::Thermostat { kernel, .. } => kernel.dim(),
            Self::McKeanVlasov { spec, .. } => spec.dim,
            Self::Vlasov { spec, .. } => 2 * spec.space_dim,
        }
    }

    /// True when the dynamics use no randomness.
    pub fn is_deterministic(&self) -> bool {
        match self {
            Self::Vlasov { .. } => true,
            Self::McKeanVlasov { spec, .. } => spec.diffusion.iter().all(|&x| x == 0.0),
            _ => false,
        }
    }

    /// Total collision rate convention, for output headers.
    pub fn rate_convention(&self) -> &'static str {
        match self {
            Self::Kac { .. } => "unordered pairs, total rate (N-1)/2",
            Self::Thermostat { convention: PairConvention::Ordered, .. } => "ordered pairs, total rate N-1",
            Self::Thermostat { convention: PairConvention::Unordered, .. } => "unordered pairs, total rate (N-1)/2",
            Self::McKeanVlasov { spec, .. } if spec.mean_over_others => "force scale 1/(N-1)",
            Self::McKeanVlasov { .. } | Self::Vlasov { .. } => "force scale 1/N",
        }
    }

    pub fn simulate(&self, initial: &ParticleState, t_end: f64, snapshots: &[f64], rng: &mut RngStream) -> Result<Vec<ParticleState>> {
        match self {
            Self::Kac { kernel } => simulate_kac(initial, kernel, t_end, snapshots, rng),
            Self::Thermostat { kernel, params, convention } => {
                simulate_thermostat(initial, kernel, *params, *convention, t_end, snapshots, rng)
            }
            Self::McKeanVlasov { spec, dt } => simulate_mkv(initial, spec, t_end, *dt, snapshots, rng),
            Self::Vlasov { spec, dt } => simulate_vlasov(initial, spec, t_end, *dt, snapshots),
        }
    }
}
