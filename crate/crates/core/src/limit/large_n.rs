//! Large-`N` self-oracle: the limit law `f_t` is approximated by the
//! particle system itself at a much larger `N_ref`.

use crate::init::InitialLaw;
use crate::model::ModelConfig;
use crate::parallel::Pool;
use crate::rng::{stream_id, tag, RngStream};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleEstimate {
    pub value: f64,
    pub std_error: f64,
    pub replicas: usize,
}

impl OracleEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let r = samples.len();
        let mean = samples.iter().sum::<f64>() / r as f64;
        let se = if r > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
            (var / r as f64).sqrt()
        } else {
            0.0
        };
        Self { value: mean, std_error: se, replicas: r }
    }
}

pub type Observable<'a> = &'a (dyn Fn(&[f64]) -> f64 + Sync);

/// Empirical averages `<mu^{N_ref}_t, phi_k>` for every replica, time and
/// function: `out[replica][time][k]`. Replica `r` draws its initial state
/// and dynamics from streams of group `group` under the oracle tag.
#[allow(clippy::too_many_arguments)]
pub fn large_n_means(
    law: &InitialLaw,
    model: &ModelConfig,
    times: &[f64],
    functions: &[Observable<'_>],
    n_ref: usize,
    replicas: usize,
    master_seed: u64,
    group: u64,
    pool: &Pool,
) -> Result<Vec<Vec<Vec<f64>>>> {
    if replicas == 0 || n_ref == 0 {
        return Err(Error::invalid("oracle needs at least one replica and one particle"));
    }
    let t_end = times.iter().cloned().fold(0.0, f64::max);
    pool.try_map(replicas, |r| {
        let mut init_rng = RngStream::new(master_seed, stream_id(tag::ORACLE, 2 * group, r as u64));
        let mut dyn_rng = RngStream::new(master_seed, stream_id(tag::ORACLE, 2 * group + 1, r as u64));
        let init = law.sample(n_ref, &mut init_rng)?;
        let snaps = model.simulate(&init, t_end, times, &mut dyn_rng)?;
        Ok(snaps
            .iter()
            .map(|s| {
                let mu = s.empirical();
                functions.iter().map(|f| mu.integrate(|z| f(z))).collect()
            })
            .collect())
    })
}

/// Monte Carlo estimate of `<f_t, phi>` with its standard error across
/// replicas.
#[allow(clippy::too_many_arguments)]
pub fn kac_limit_oracle(
    law: &InitialLaw,
    model: &ModelConfig,
    t: f64,
    phi: Observable<'_>,
    n_ref: usize,
    replicas: usize,
    master_seed: u64,
    pool: &Pool,
) -> Result<OracleEstimate> {
    let m = large_n_means(law, model, &[t], &[phi], n_ref, replicas, master_seed, 0, pool)?;
    let samples: Vec<f64> = m.iter().map(|r| r[0][0]).collect();
    Ok(OracleEstimate::from_samples(&samples))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kac::AngularKernel;

    fn kac3() -> ModelConfig {
        ModelConfig::Kac { kernel: AngularKernel::isotropic(3).unwrap() }
    }

    #[test]
    fn mass_is_exactly_one() {
        let law = InitialLaw::standard_gaussian(3);
        let e = kac_limit_oracle(&law, &kac3(), 0.5, &|_| 1.0, 500, 4, 1, &Pool::default()).unwrap();
        assert_eq!((e.value, e.std_error), (1.0, 0.0));
    }

    #[test]
    fn energy_and_mean_velocity() {
        let law = InitialLaw::SphereShell { dim: 3, radius: 3f64.sqrt() };
        let pool = Pool::new(2).unwrap();
        let e = kac_limit_oracle(&law, &kac3(), 1.0, &|v| v.iter().map(|x| x * x).sum(), 2000, 8, 2, &pool).unwrap();
        // every particle starts with |v|^2 = 3 and collisions conserve energy
        assert!((e.value - 3.0).abs() < 1e-9);
        let m = kac_limit_oracle(&law, &kac3(), 1.0, &|v| v[0], 2000, 16, 3, &pool).unwrap();
        assert!(m.value.abs() < 3.0 * m.std_error.max(1e-12), "{m:?}");
    }
}
