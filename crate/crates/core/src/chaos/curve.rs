//! Chaos error curves: `sup_t |E[phi(Z_1..Z_l)] - prod_j <f_t, phi_j>|` as a
//! function of `N`, with bootstrap standard errors and a rate fit.

use super::fit::{rate_fit, RateFit};
use super::observable::{ObservableProduct, TestFunction};
use super::symmetrization::injective_tuple_mean;
use crate::init::InitialLaw;
use crate::limit::large_n::{large_n_means, Observable};
use crate::limit::ColdSlabLimit;
use crate::model::ModelConfig;
use crate::parallel::Pool;
use crate::rng::{stream_id, tag, RngStream};
use crate::state::ParticleState;
use crate::{Error, Result};

/// How `E[phi(Z_1, .., Z_l)]` is estimated from one replica.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarginalEstimator {
    /// `prod_j phi_j(Z_j)` on the first `l` particles.
    FirstParticles,
    /// Mean over all injective `l`-tuples of particles.
    UStatistic,
}

impl MarginalEstimator {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::FirstParticles => "first_particles",
            Self::UStatistic => "u_statistic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "first_particles" => Ok(Self::FirstParticles),
            "u_statistic" => Ok(Self::UStatistic),
            _ => Err(Error::invalid(format!("unknown estimator `{s}` (first_particles, u_statistic)"))),
        }
    }

    fn eval(self, state: &ParticleState, obs: &ObservableProduct) -> Result<f64> {
        match self {
            Self::FirstParticles => Ok(obs.factors.iter().enumerate().map(|(j, f)| f.eval(state.particle(j))).product()),
            Self::UStatistic => injective_tuple_mean(state, obs),
        }
    }
}

/// Number of independent replicas at each `N`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReplicaPlan {
    Fixed(usize),
    /// `clamp(budget / N, min, max)` replicas, keeping the particle count
    /// per `N` roughly constant.
    ParticleBudget { budget: usize, min: usize, max: usize },
}

impl ReplicaPlan {
    pub fn replicas(&self, n: usize) -> usize {
        match *self {
            Self::Fixed(r) => r,
            Self::ParticleBudget { budget, min, max } => (budget / n).clamp(min, max),
        }
    }
}

/// Where the limit values `<f_t, phi_j>` come from.
#[derive(Clone, Debug, PartialEq)]
pub enum OracleSpec {
    /// The same particle model at `n_ref >= 16 max N`, averaged over
    /// `replicas` independent runs.
    SelfLargeN { n_ref: usize, replicas: usize },
    /// Lagrangian solution of the 1-D Vlasov equation from a cold slab,
    /// with Gauss-Legendre labels.
    ColdSlab { nodes: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChaosConfig {
    pub model: ModelConfig,
    pub law: InitialLaw,
    pub observables: Vec<ObservableProduct>,
    pub n_values: Vec<usize>,
    pub time_grid: Vec<f64>,
    pub replicas: ReplicaPlan,
    pub estimator: MarginalEstimator,
    pub oracle: OracleSpec,
    pub bootstrap: usize,
    pub master_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChaosCurve {
    pub model_tag: String,
    pub observable: String,
    pub ell: usize,
    pub estimator: MarginalEstimator,
    pub n_values: Vec<usize>,
    pub replicas: Vec<usize>,
    pub errors: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub time_of_sup: Vec<f64>,
    /// Largest bootstrap standard error of the oracle product over the grid.
    pub oracle_std_error: f64,
    /// Bootstrap replicates of `errors`, one row per resample.
    pub bootstrap: Vec<Vec<f64>>,
    pub fit: Option<RateFit>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChaosRun {
    pub curves: Vec<ChaosCurve>,
    pub oracle_replicas: usize,
    pub oracle_particles: usize,
    /// Streams opened, by purpose.
    pub streams: Vec<(&'static str, u64)>,
    /// Uniform draws consumed by the system replicas.
    pub system_draws: u64,
}

fn mean(x: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for v in x {
        s += v;
        n += 1;
    }
    s / n as f64
}

fn sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x.iter().copied());
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

fn validate(cfg: &ChaosConfig) -> Result<()> {
    cfg.law.validate()?;
    let m = cfg.model.phase_dim();
    if cfg.law.dim() != m {
        return Err(Error::invalid(format!("initial law has dimension {} but the model needs {m}", cfg.law.dim())));
    }
    if cfg.observables.is_empty() {
        return Err(Error::invalid("no observables given"));
    }
    for o in &cfg.observables {
        o.check_dim(m)?;
    }
    let max_ell = cfg.observables.iter().map(|o| o.ell()).max().unwrap_or(1);
    if cfg.n_values.is_empty() || cfg.n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("N values must be nonempty and strictly increasing"));
    }
    if cfg.n_values[0] < max_ell.max(2) {
        return Err(Error::invalid(format!("smallest N must be at least max(2, l) = {}", max_ell.max(2))));
    }
    if cfg.time_grid.is_empty() || cfg.time_grid.windows(2).any(|w| w[1] <= w[0]) || cfg.time_grid[0] < 0.0 {
        return Err(Error::invalid("time grid must be nonempty, nonnegative and strictly increasing"));
    }
    if cfg.estimator == MarginalEstimator::FirstParticles && cfg.law.is_deterministic() {
        return Err(Error::invalid("first-particle estimates need an exchangeable (random) initial law"));
    }
    let max_n = *cfg.n_values.last().unwrap();
    match &cfg.oracle {
        OracleSpec::SelfLargeN { n_ref, replicas } => {
            if *n_ref < 16 * max_n {
                return Err(Error::invalid(format!("oracle size {n_ref} is below 16 x max N = {}", 16 * max_n)));
            }
            if *replicas == 0 {
                return Err(Error::invalid("oracle needs at least one replica"));
            }
        }
        OracleSpec::ColdSlab { nodes } => {
            if *nodes == 0 {
                return Err(Error::invalid("cold slab oracle needs at least one node"));
            }
            match (&cfg.model, &cfg.law) {
                (ModelConfig::Vlasov { spec, .. }, InitialLaw::ColdSlab { .. }) if spec.space_dim == 1 => {}
                _ => return Err(Error::invalid("the cold slab oracle needs a 1-D Vlasov model and a cold slab initial law")),
            }
        }
    }
    Ok(())
}

/// Per-replica, per-time means of each distinct test function under the
/// limit: `[replica][time][function]`.
fn oracle_table(cfg: &ChaosConfig, funcs: &[TestFunction], pool: &Pool) -> Result<Vec<Vec<Vec<f64>>>> {
    match &cfg.oracle {
        OracleSpec::SelfLargeN { n_ref, replicas } => {
            let boxed: Vec<Box<dyn Fn(&[f64]) -> f64 + Sync>> = funcs
                .iter()
                .map(|f| {
                    let f = f.clone();
                    Box::new(move |z: &[f64]| f.eval(z)) as Box<dyn Fn(&[f64]) -> f64 + Sync>
                })
                .collect();
            let refs: Vec<Observable<'_>> = boxed.iter().map(|b| b.as_ref()).collect();
            large_n_means(&cfg.law, &cfg.model, &cfg.time_grid, &refs, *n_ref, *replicas, cfg.master_seed, 0, pool)
        }
        OracleSpec::ColdSlab { nodes } => {
            let (ModelConfig::Vlasov { spec, dt }, InitialLaw::ColdSlab { half_width, velocity_amplitude }) = (&cfg.model, &cfg.law)
            else {
                unreachable!("checked in validate")
            };
            let limit = ColdSlabLimit {
                half_width: *half_width,
                velocity_amplitude: *velocity_amplitude,
                potential_gradient: spec.potential_gradient.clone(),
                nodes: *nodes,
            };
            let t_end = *cfg.time_grid.last().unwrap();
            let snaps = limit.evolve(t_end, *dt, &cfg.time_grid)?;
            Ok(vec![snaps.iter().map(|s| funcs.iter().map(|f| s.integrate(|z| f.eval(z))).collect()).collect()])
        }
    }
}

/// Runs every `N` once and evaluates all observables on the shared
/// trajectories. System replica `r` at the `k`-th `N` draws its initial
/// state from stream `(SYSTEM, 2k, r)` and its dynamics from `(SYSTEM, 2k+1, r)`.
pub fn chaos_error_curve(cfg: &ChaosConfig, pool: &Pool) -> Result<ChaosRun> {
    validate(cfg)?;
    let random = !(cfg.law.is_deterministic() && cfg.model.is_deterministic());
    let mut funcs: Vec<TestFunction> = Vec::new();
    let factor_index: Vec<Vec<usize>> = cfg
        .observables
        .iter()
        .map(|o| {
            o.factors
                .iter()
                .map(|f| match funcs.iter().position(|g| g == f) {
                    Some(i) => i,
                    None => {
                        funcs.push(f.clone());
                        funcs.len() - 1
                    }
                })
                .collect()
        })
        .collect();
    let times = &cfg.time_grid;
    let t_end = *times.last().unwrap();
    let oracle = oracle_table(cfg, &funcs, pool)?;
    let ro = oracle.len();

    // system[k][r][t][o]
    let mut system = Vec::with_capacity(cfg.n_values.len());
    let mut replicas = Vec::with_capacity(cfg.n_values.len());
    let mut system_draws = 0u64;
    for (k, &n) in cfg.n_values.iter().enumerate() {
        let reps = if random { cfg.replicas.replicas(n).max(1) } else { 1 };
        let rows = pool.try_map(reps, |r| {
            let mut init_rng = RngStream::new(cfg.master_seed, stream_id(tag::SYSTEM, 2 * k as u64, r as u64));
            let mut dyn_rng = RngStream::new(cfg.master_seed, stream_id(tag::SYSTEM, 2 * k as u64 + 1, r as u64));
            let init = cfg.law.sample(n, &mut init_rng)?;
            let snaps = cfg.model.simulate(&init, t_end, times, &mut dyn_rng)?;
            let vals = snaps
                .iter()
                .map(|s| cfg.observables.iter().map(|o| cfg.estimator.eval(s, o)).collect::<Result<Vec<f64>>>())
                .collect::<Result<Vec<_>>>()?;
            Ok((vals, init_rng.draw_counter() + dyn_rng.draw_counter()))
        })?;
        system_draws += rows.iter().map(|r| r.1).sum::<u64>();
        system.push(rows.into_iter().map(|r| r.0).collect::<Vec<_>>());
        replicas.push(reps);
    }

    let oracle_products = |weights: &dyn Fn(usize) -> f64, total: f64| -> Vec<Vec<f64>> {
        // [t][o]
        (0..times.len())
            .map(|t| {
                let fm: Vec<f64> = (0..funcs.len()).map(|f| (0..ro).map(|r| weights(r) * oracle[r][t][f]).sum::<f64>() / total).collect();
                factor_index.iter().map(|idx| idx.iter().map(|&i| fm[i]).product()).collect()
            })
            .collect()
    };
    let system_means = |k: usize, weights: &dyn Fn(usize) -> f64, total: f64| -> Vec<Vec<f64>> {
        (0..times.len())
            .map(|t| {
                (0..cfg.observables.len())
                    .map(|o| (0..replicas[k]).map(|r| weights(r) * system[k][r][t][o]).sum::<f64>() / total)
                    .collect()
            })
            .collect()
    };
    // sup over t of |system - oracle|, with the maximizing time.
    let sup_error = |sys: &[Vec<f64>], orc: &[Vec<f64>], o: usize| -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, times[0]);
        for t in 0..times.len() {
            let e = (sys[t][o] - orc[t][o]).abs();
            if e > best.0 {
                best = (e, times[t]);
            }
        }
        best
    };

    let one = |_: usize| 1.0;
    let orc = oracle_products(&one, ro as f64);
    let sys: Vec<Vec<Vec<f64>>> = (0..cfg.n_values.len()).map(|k| system_means(k, &one, replicas[k] as f64)).collect();

    // Bootstrap: oracle and each N resampled independently; resample b of
    // the oracle is shared by every N so fitted slopes see one oracle.
    let nb = if random { cfg.bootstrap } else { 0 };
    let mut boot: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(nb); cfg.observables.len()];
    let mut boot_oracle: Vec<Vec<Vec<f64>>> = Vec::with_capacity(nb);
    for b in 0..nb {
        let counts = |len: usize, group: u64| -> Vec<f64> {
            let mut c = vec![0.0; len];
            let mut rng = RngStream::new(cfg.master_seed, stream_id(tag::BOOTSTRAP, group, b as u64));
            for _ in 0..len {
                c[rng.index(len)] += 1.0;
            }
            c
        };
        let oc = counts(ro, 0);
        let orc_b = oracle_products(&|r| oc[r], ro as f64);
        let mut row: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.n_values.len()); cfg.observables.len()];
        for k in 0..cfg.n_values.len() {
            let sc = counts(replicas[k], 1 + k as u64);
            let sys_b = system_means(k, &|r| sc[r], replicas[k] as f64);
            for (o, row_o) in row.iter_mut().enumerate() {
                row_o.push(sup_error(&sys_b, &orc_b, o).0);
            }
        }
        for (o, r) in row.into_iter().enumerate() {
            boot[o].push(r);
        }
        boot_oracle.push(orc_b);
    }

    let mut curves = Vec::with_capacity(cfg.observables.len());
    for (o, obs) in cfg.observables.iter().enumerate() {
        let mut errors = Vec::new();
        let mut time_of_sup = Vec::new();
        for s in &sys {
            let (e, t) = sup_error(s, &orc, o);
            errors.push(e);
            time_of_sup.push(t);
        }
        let std_errors: Vec<f64> = (0..cfg.n_values.len())
            .map(|k| sd(&boot[o].iter().map(|row| row[k]).collect::<Vec<_>>()))
            .collect();
        let oracle_std_error = (0..times.len())
            .map(|t| sd(&boot_oracle.iter().map(|ob| ob[t][o]).collect::<Vec<_>>()))
            .fold(0.0, f64::max);
        let mut warnings = Vec::new();
        let min_err = errors.iter().cloned().fold(f64::INFINITY, f64::min);
        if oracle_std_error > 0.0 && 3.0 * oracle_std_error >= min_err {
            warnings.push(format!(
                "oracle standard error {oracle_std_error:.3e} is within 3x of the smallest gap {min_err:.3e}"
            ));
        }
        if random && nb < 2 {
            warnings.push("fewer than two bootstrap resamples: standard errors are unavailable".into());
        }
        if let Some((k, _)) = replicas.iter().enumerate().find(|(_, &r)| random && r < 2) {
            warnings.push(format!("only one replica at N = {}", cfg.n_values[k]));
        }
        let fit = match rate_fit(&cfg.n_values, &errors, &std_errors, if nb > 0 { Some(&boot[o]) } else { None }) {
            Ok(f) => Some(f),
            Err(e) => {
                warnings.push(format!("no rate fit: {e}"));
                None
            }
        };
        curves.push(ChaosCurve {
            model_tag: cfg.model.tag().to_string(),
            observable: obs.name(),
            ell: obs.ell(),
            estimator: cfg.estimator,
            n_values: cfg.n_values.clone(),
            replicas: replicas.clone(),
            errors,
            std_errors,
            time_of_sup,
            oracle_std_error,
            bootstrap: std::mem::take(&mut boot[o]),
            fit,
            warnings,
        });
    }

    let mut streams = vec![("system", 2 * replicas.iter().sum::<usize>() as u64)];
    if let OracleSpec::SelfLargeN { replicas: r, .. } = cfg.oracle {
        streams.push(("oracle", 2 * r as u64));
    }
    streams.push(("bootstrap", (nb * (1 + cfg.n_values.len())) as u64));
    let oracle_particles = match cfg.oracle {
        OracleSpec::SelfLargeN { n_ref, .. } => n_ref,
        OracleSpec::ColdSlab { nodes } => nodes,
    };
    Ok(ChaosRun { curves, oracle_replicas: ro, oracle_particles, streams, system_draws })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kac::AngularKernel;
    use crate::mckean_vlasov::{Interaction, VlasovSpec};

    fn kac_cfg(ns: Vec<usize>, n_ref: usize) -> ChaosConfig {
        ChaosConfig {
            model: ModelConfig::Kac { kernel: AngularKernel::isotropic(2).unwrap() },
            law: InitialLaw::SphereShell { dim: 2, radius: 2f64.sqrt() },
            observables: vec![
                ObservableProduct::from_name("clipped_energy:8*clipped_energy:8").unwrap(),
                ObservableProduct::from_name("gaussian_bump:1").unwrap(),
            ],
            n_values: ns,
            time_grid: vec![0.0, 0.5, 1.0],
            replicas: ReplicaPlan::ParticleBudget { budget: 20_000, min: 10, max: 2000 },
            estimator: MarginalEstimator::UStatistic,
            oracle: OracleSpec::SelfLargeN { n_ref, replicas: 8 },
            bootstrap: 50,
            master_seed: 7,
        }
    }

    #[test]
    fn energy_pair_correlation_decays() {
        let run = chaos_error_curve(&kac_cfg(vec![8, 32, 128], 4096), &Pool::new(1).unwrap()).unwrap();
        let c = &run.curves[0];
        assert_eq!(c.ell, 2);
        assert_eq!(c.replicas, vec![2000, 625, 156]);
        assert!(c.errors[0] > 4.0 * c.errors[2], "{:?}", c.errors);
        assert!(c.std_errors.iter().all(|s| *s > 0.0));
        assert_eq!(c.bootstrap.len(), 50);
        // three N values cannot be fitted
        assert!(c.fit.is_none());
    }

    #[test]
    fn independent_of_worker_count() {
        let cfg = kac_cfg(vec![4, 16], 256);
        let a = chaos_error_curve(&cfg, &Pool::new(1).unwrap()).unwrap();
        let b = chaos_error_curve(&cfg, &Pool::new(3).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_small_oracles_and_bad_grids() {
        let pool = Pool::new(1).unwrap();
        assert!(chaos_error_curve(&kac_cfg(vec![8, 32], 256), &pool).is_err());
        assert!(chaos_error_curve(&kac_cfg(vec![32, 8], 4096), &pool).is_err());
        let mut cfg = kac_cfg(vec![8], 256);
        cfg.time_grid = vec![1.0, 0.5];
        assert!(chaos_error_curve(&cfg, &pool).is_err());
    }

    #[test]
    fn deterministic_vlasov_uses_one_replica() {
        let cfg = ChaosConfig {
            model: ModelConfig::Vlasov {
                spec: VlasovSpec { space_dim: 1, potential_gradient: Interaction::Rational { amplitude: 1.0 } },
                dt: 0.05,
            },
            law: InitialLaw::ColdSlab { half_width: 1.0, velocity_amplitude: 0.5 },
            observables: vec![ObservableProduct::from_name("gaussian_bump:1").unwrap()],
            n_values: vec![8, 16, 32, 64],
            time_grid: vec![0.0, 0.5],
            replicas: ReplicaPlan::Fixed(10),
            estimator: MarginalEstimator::UStatistic,
            oracle: OracleSpec::ColdSlab { nodes: 64 },
            bootstrap: 100,
            master_seed: 0,
        };
        let run = chaos_error_curve(&cfg, &Pool::new(1).unwrap()).unwrap();
        let c = &run.curves[0];
        assert_eq!(c.replicas, vec![1; 4]);
        assert!(c.std_errors.iter().all(|s| *s == 0.0));
        for w in c.errors.windows(2) {
            assert!(w[1] < 0.5 * w[0], "{:?}", c.errors);
        }
    }
}
