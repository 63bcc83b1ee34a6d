//! Contraction checks: the coupled Kac dynamics does not increase the
//! coupling cost, and the spectral flow grows the Toscani distance by at
//! most `exp(2 lambda t)`.

use num_complex::Complex64;

use crate::init::InitialLaw;
use crate::kac::{AngularKernel, CoupledKac};
use crate::limit::spectral::{spectral_evolve_observed, GridSpectrum, InvariantLog, SpectralModel};
use crate::metrics::fourier::toscani_norm;
use crate::parallel::Pool;
use crate::rng::{stream_id, tag, RngStream};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TanakaPoint {
    pub time: f64,
    /// `sqrt` of the mean coupling cost, an upper estimate of
    /// `W_2(f_t, g_t)` up to sampling error.
    pub w2: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TanakaResult {
    pub points: Vec<TanakaPoint>,
    /// Largest excess over the `t = 0` value, in units of the pooled
    /// standard error.
    pub max_excess: f64,
    /// Largest increase between consecutive times, same units.
    pub max_step_excess: f64,
    pub replicas: usize,
    pub particles: usize,
}

impl TanakaResult {
    /// Never above the initial value by more than two standard errors.
    pub fn holds(&self) -> bool {
        self.max_excess <= 2.0
    }
}

/// Runs `replicas` coupled pairs of `n`-particle Kac systems started from
/// a common-normals coupling of `law_a` and `law_b`. Replica `r` uses
/// streams `(SYSTEM, 0, r)` for the initial coupling and `(SYSTEM, 1, r)`
/// for the dynamics.
#[allow(clippy::too_many_arguments)]
pub fn tanaka_contraction_check(
    law_a: &InitialLaw,
    law_b: &InitialLaw,
    kernel: &AngularKernel,
    times: &[f64],
    n: usize,
    replicas: usize,
    master_seed: u64,
    pool: &Pool,
) -> Result<TanakaResult> {
    if times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) || times[0] < 0.0 {
        return Err(Error::invalid("time grid needs at least two nonnegative, strictly increasing times"));
    }
    if replicas < 2 || n < 2 {
        return Err(Error::invalid("need at least two replicas of at least two particles"));
    }
    if law_a.dim() != kernel.dim() {
        return Err(Error::invalid("initial laws and kernel differ in dimension"));
    }
    let costs: Vec<Vec<f64>> = pool.try_map(replicas, |r| {
        let mut init_rng = RngStream::new(master_seed, stream_id(tag::SYSTEM, 0, r as u64));
        let mut dyn_rng = RngStream::new(master_seed, stream_id(tag::SYSTEM, 1, r as u64));
        let (a, b) = InitialLaw::sample_coupled(law_a, law_b, n, &mut init_rng)?;
        let mut c = CoupledKac::new(a, b, kernel, &mut dyn_rng)?;
        times
            .iter()
            .map(|&t| {
                c.advance_to(t)?;
                Ok(c.coupling_cost())
            })
            .collect()
    })?;
    let rf = replicas as f64;
    let points: Vec<TanakaPoint> = times
        .iter()
        .enumerate()
        .map(|(k, &time)| {
            let m = costs.iter().map(|c| c[k]).sum::<f64>() / rf;
            let var = costs.iter().map(|c| (c[k] - m).powi(2)).sum::<f64>() / (rf - 1.0);
            let w2 = m.sqrt();
            let se_cost = (var / rf).sqrt();
            let std_error = if w2 > 0.0 { se_cost / (2.0 * w2) } else { se_cost.sqrt() };
            TanakaPoint { time, w2, std_error }
        })
        .collect();
    let excess = |a: &TanakaPoint, b: &TanakaPoint| {
        // rises at rounding level count as none: a translation keeps the
        // cost fixed pathwise, with zero spread across replicas
        let rise = b.w2 - a.w2;
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        if rise <= 1e-12 * a.w2.max(b.w2) {
            if se > 0.0 { rise.min(0.0) / se } else { 0.0 }
        } else if se > 0.0 {
            rise / se
        } else {
            f64::INFINITY
        }
    };
    let max_excess = points[1..].iter().map(|p| excess(&points[0], p)).fold(f64::NEG_INFINITY, f64::max);
    let max_step_excess = points.windows(2).map(|w| excess(&w[0], &w[1])).fold(f64::NEG_INFINITY, f64::max);
    Ok(TanakaResult { points, max_excess, max_step_excess, replicas, particles: n })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourierContraction {
    /// `(t, d_s(f_t, g_t))` after every step.
    pub distances: Vec<(f64, f64)>,
    /// `max_t d_s(f_t, g_t) / (exp(2 lambda t) d_s(f_0, g_0))`.
    pub max_ratio: f64,
    pub log: InvariantLog,
}

impl FourierContraction {
    pub fn holds(&self) -> bool {
        self.max_ratio <= 1.0 + 1e-9
    }
}

/// Evolves both spectra with the same model and step and compares their
/// Toscani distance of order `s` with the bound `exp(2 lambda t) d_s(f_0, g_0)`.
pub fn fourier_contraction_check(
    a: &GridSpectrum,
    b: &GridSpectrum,
    model: &SpectralModel,
    s: f64,
    t_end: f64,
    dt: f64,
) -> Result<FourierContraction> {
    if a.xi() != b.xi() {
        return Err(Error::invalid("spectra must share the frequency grid"));
    }
    let d0 = toscani_norm(a, b, s)?.value;
    let mut path_a: Vec<Vec<Complex64>> = Vec::new();
    let (_, mut log) = spectral_evolve_observed(a, model, t_end, dt, |_, f| path_a.push(f.values().to_vec()))?;
    let mut distances = Vec::with_capacity(path_a.len());
    let mut failure = None;
    let (_, log_b) = spectral_evolve_observed(b, model, t_end, dt, |t, g| {
        if failure.is_some() {
            return;
        }
        let k = distances.len();
        match GridSpectrum::new(g.xi().to_vec(), path_a[k].clone()).and_then(|fa| toscani_norm(&fa, g, s)) {
            Ok(v) => distances.push((t, v.value)),
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    log.merge(&log_b);
    let max_ratio = distances
        .iter()
        .map(|&(t, d)| {
            if d0 > 0.0 {
                d / ((2.0 * model.collision_rate * t).exp() * d0)
            } else if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
        .fold(0.0, f64::max);
    Ok(FourierContraction { distances, max_ratio, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::spectral::{gaussian_spectrum, uniform_grid};

    #[test]
    fn identical_laws_stay_at_zero_cost() {
        let law = InitialLaw::standard_gaussian(2);
        let k = AngularKernel::isotropic(2).unwrap();
        let r = tanaka_contraction_check(&law, &law, &k, &[0.0, 1.0], 50, 4, 3, &Pool::new(1).unwrap()).unwrap();
        assert!(r.points.iter().all(|p| p.w2 == 0.0));
    }

    #[test]
    fn shifted_gaussians_keep_the_shift() {
        // a pure translation is preserved pathwise: both relative
        // velocities agree, so the coupled angles do too
        let a = InitialLaw::standard_gaussian(3);
        let b = InitialLaw::Gaussian { mean: vec![0.5, 0.0, 0.0], variance: vec![1.0; 3] };
        let k = AngularKernel::isotropic(3).unwrap();
        let r = tanaka_contraction_check(&a, &b, &k, &[0.0, 0.5, 1.0, 2.0], 200, 10, 4, &Pool::new(1).unwrap()).unwrap();
        for p in &r.points {
            assert!((p.w2 - 0.5).abs() < 1e-10, "{r:?}");
        }
        assert!(r.holds());
    }

    #[test]
    fn mismatched_variances_contract() {
        let a = InitialLaw::standard_gaussian(3);
        let b = InitialLaw::Gaussian { mean: vec![0.0; 3], variance: vec![4.0, 1.0, 0.25] };
        let k = AngularKernel::isotropic(3).unwrap();
        let r = tanaka_contraction_check(&a, &b, &k, &[0.0, 0.5, 1.0, 2.0], 200, 40, 5, &Pool::new(1).unwrap()).unwrap();
        assert!(r.holds(), "{r:?}");
        assert!(r.points[3].w2 < r.points[0].w2 - 4.0 * r.points[0].std_error, "{r:?}");
    }

    #[test]
    fn spectral_distance_respects_the_exponential_bound() {
        let xi = uniform_grid(40.0, 512).unwrap();
        let a = gaussian_spectrum(0.0, 1.0, &xi).unwrap();
        let b = gaussian_spectrum(0.3, 0.6, &xi).unwrap();
        let m = SpectralModel::new(0.6, false).unwrap();
        let c = fourier_contraction_check(&a, &b, &m, 2.0, 1.0, 0.01).unwrap();
        assert!(c.holds(), "{}", c.max_ratio);
        assert!(c.log.holds());
        assert_eq!(c.distances.len(), 101);
        let same = fourier_contraction_check(&a, &a, &m, 2.0, 0.1, 0.01).unwrap();
        assert_eq!(same.max_ratio, 0.0);
    }
}
