//! Monte Carlo estimate of `Omega_N = E W_2(mu^N, f)^2`, the sampling error
//! of an `N`-point i.i.d. empirical measure.
//!
//! The law `f` is represented by a reference sample of size
//! `M >= 64 max N`. Three estimators are available:
//! * `Exact1d`: sorted coupling against the reference (exact in 1-D);
//! * `Sliced`: sliced `W_2^2` against the reference over a fixed set of
//!   random directions shared by all replicas;
//! * `TwoSample`: exact matching between two independent `N`-samples,
//!   which estimates `E W_2(mu^N, nu^N)^2` (between one and four times
//!   `Omega_N`) without any reference proxy.

use crate::init::InitialLaw;
use crate::metrics::transport::{quantile_cost, w2_exact_matching};
use crate::parallel::Pool;
use crate::rng::{stream_id, tag, RngStream};
use crate::state::{EmpiricalMeasure, ParticleState};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OmegaEstimator {
    Exact1d,
    Sliced { projections: usize },
    TwoSample,
}

impl OmegaEstimator {
    pub fn name(&self) -> String {
        match self {
            Self::Exact1d => "exact_1d".into(),
            Self::Sliced { projections } => format!("sliced:{projections}"),
            Self::TwoSample => "two_sample_matching".into(),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "exact_1d" => Ok(Self::Exact1d),
            None if s == "two_sample_matching" => Ok(Self::TwoSample),
            None if s == "sliced" => Ok(Self::Sliced { projections: 64 }),
            Some(("sliced", p)) => p
                .parse()
                .map(|projections| Self::Sliced { projections })
                .map_err(|e| Error::invalid(format!("estimator `{s}`: {e}"))),
            _ => Err(Error::invalid(format!("unknown estimator `{s}`"))),
        }
    }

    /// Exact 1-D coupling in one dimension, sliced with 64 directions
    /// otherwise.
    pub fn default_for(dim: usize) -> Self {
        if dim == 1 {
            Self::Exact1d
        } else {
            Self::Sliced { projections: 64 }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaPoint {
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaResult {
    pub estimator: OmegaEstimator,
    pub reference_size: usize,
    pub points: Vec<OmegaPoint>,
    /// Same estimator between two independent reference samples: the
    /// error floor of the reference proxy.
    pub reference_floor: f64,
    /// Per-replica values, `samples[k][r]` for `n_values[k]`.
    pub samples: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
    pub streams: u64,
    pub draws: u64,
}

/// Sorted projections of a reference sample. With block summaries the
/// quantile coupling with an `N`-sample (`M` divisible by `N`) costs `O(N)`.
struct ProjectedReference {
    sorted: Vec<f64>,
}

/// Reference cut into `n` consecutive blocks of the sorted sample: block
/// means and the total within-block sum of squares.
struct Blocks {
    means: Vec<f64>,
    within: f64,
}

impl ProjectedReference {
    fn new(mut x: Vec<f64>) -> Self {
        x.sort_by(f64::total_cmp);
        Self { sorted: x }
    }

    fn blocks(&self, n: usize) -> Option<Blocks> {
        let m = self.sorted.len();
        if m % n != 0 {
            return None;
        }
        let k = m / n;
        let mut means = Vec::with_capacity(n);
        let mut within = 0.0;
        for b in self.sorted.chunks(k) {
            let mu = b[0] + b.iter().map(|x| x - b[0]).sum::<f64>() / k as f64;
            within += b.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>();
            means.push(mu);
        }
        Some(Blocks { means, within })
    }

    /// `W_2^2` between the sorted sample `y` and this reference. When `N`
    /// divides the reference size each sample point is matched to a block
    /// of `M / N` reference points, and the cost splits into the distance
    /// to the block mean plus the block spread.
    fn cost(&self, y: &[f64], blocks: Option<&Blocks>) -> f64 {
        let m = self.sorted.len();
        match blocks {
            Some(b) if b.means.len() == y.len() => {
                let k = (m / y.len()) as f64;
                let near: f64 = y.iter().zip(&b.means).map(|(a, mu)| (a - mu) * (a - mu)).sum();
                (k * near + b.within) / m as f64
            }
            _ => quantile_cost(y, &self.sorted, 2.0),
        }
    }
}

fn project(coords: &[f64], dim: usize, theta: &[f64]) -> Vec<f64> {
    coords.chunks(dim).map(|z| z.iter().zip(theta).map(|(a, b)| a * b).sum()).collect()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn mean_se(x: &[f64]) -> (f64, f64) {
    let r = x.len() as f64;
    let m = x.iter().sum::<f64>() / r;
    if x.len() < 2 {
        return (m, 0.0);
    }
    let v = x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (r - 1.0);
    (m, (v / r).sqrt())
}

/// Estimates `Omega_N` for every `N` in `n_values`, averaging `replicas`
/// independent samples. Replica `r` of the `k`-th size uses stream
/// `(SYSTEM, k, r)`; references and projections have their own streams.
pub fn omega_n_estimator(
    law: &InitialLaw,
    n_values: &[usize],
    replicas: usize,
    reference_size: usize,
    estimator: OmegaEstimator,
    master_seed: u64,
    pool: &Pool,
) -> Result<OmegaResult> {
    law.validate()?;
    let dim = law.dim();
    if n_values.is_empty() || n_values.contains(&0) || replicas == 0 {
        return Err(Error::invalid("need positive sample sizes and at least one replica"));
    }
    let n_max = *n_values.iter().max().unwrap();
    let uses_reference = !matches!(estimator, OmegaEstimator::TwoSample);
    if uses_reference && reference_size < 64 * n_max {
        return Err(Error::invalid(format!(
            "reference_size = {reference_size} must be at least 64 x max N = {}",
            64 * n_max
        )));
    }
    if estimator == OmegaEstimator::Exact1d && dim != 1 {
        return Err(Error::invalid("exact_1d estimator needs a one-dimensional law"));
    }
    let mut streams = 0u64;
    let mut draws = 0u64;
    let draw_ref = |group: u64, streams: &mut u64, draws: &mut u64| -> Result<ParticleState> {
        let mut rng = RngStream::new(master_seed, stream_id(tag::REFERENCE, group, 0));
        let s = law.sample(reference_size, &mut rng)?;
        *streams += 1;
        *draws += rng.draw_counter();
        Ok(s)
    };
    let (refs, floor_ref): (Vec<ProjectedReference>, Vec<ProjectedReference>);
    let mut thetas: Vec<Vec<f64>> = Vec::new();
    match estimator {
        OmegaEstimator::Exact1d => {
            refs = vec![ProjectedReference::new(draw_ref(0, &mut streams, &mut draws)?.into_coords())];
            floor_ref = vec![ProjectedReference::new(draw_ref(1, &mut streams, &mut draws)?.into_coords())];
        }
        OmegaEstimator::Sliced { projections } => {
            if projections == 0 {
                return Err(Error::invalid("sliced estimator needs at least one projection"));
            }
            let mut rng = RngStream::new(master_seed, stream_id(tag::PROJECTIONS, 0, 0));
            for _ in 0..projections {
                let mut t = vec![0.0; dim];
                rng.unit_vector(&mut t);
                thetas.push(t);
            }
            streams += 1;
            draws += rng.draw_counter();
            let a = draw_ref(0, &mut streams, &mut draws)?;
            let b = draw_ref(1, &mut streams, &mut draws)?;
            refs = thetas.iter().map(|t| ProjectedReference::new(project(a.coords(), dim, t))).collect();
            floor_ref = thetas.iter().map(|t| ProjectedReference::new(project(b.coords(), dim, t))).collect();
        }
        OmegaEstimator::TwoSample => {
            refs = Vec::new();
            floor_ref = Vec::new();
        }
    }

    let reference_floor = if uses_reference {
        let costs: Vec<f64> = refs.iter().zip(&floor_ref).map(|(a, b)| a.cost(&b.sorted, a.blocks(b.sorted.len()).as_ref())).collect();
        costs.iter().sum::<f64>() / costs.len() as f64
    } else {
        0.0
    };

    let mut samples = Vec::with_capacity(n_values.len());
    let mut points = Vec::with_capacity(n_values.len());
    for (k, &n) in n_values.iter().enumerate() {
        let blocks: Vec<Option<Blocks>> = refs.iter().map(|r| r.blocks(n)).collect();
        let per: Vec<(f64, u64)> = pool.try_map(replicas, |r| {
            let mut rng = RngStream::new(master_seed, stream_id(tag::SYSTEM, k as u64, r as u64));
            let s = law.sample(n, &mut rng)?;
            let v = match estimator {
                OmegaEstimator::Exact1d => refs[0].cost(&sorted(s.coords().to_vec()), blocks[0].as_ref()),
                OmegaEstimator::Sliced { .. } => {
                    let c: f64 = thetas
                        .iter()
                        .zip(refs.iter().zip(&blocks))
                        .map(|(t, (rf, bl))| rf.cost(&sorted(project(s.coords(), dim, t)), bl.as_ref()))
                        .sum();
                    c / thetas.len() as f64
                }
                OmegaEstimator::TwoSample => {
                    let other = law.sample(n, &mut rng)?;
                    let a = EmpiricalMeasure::new(dim, s.into_coords())?;
                    let b = EmpiricalMeasure::new(dim, other.into_coords())?;
                    w2_exact_matching(&a, &b)?.cost
                }
            };
            Ok((v, rng.draw_counter()))
        })?;
        streams += replicas as u64;
        draws += per.iter().map(|p| p.1).sum::<u64>();
        let vals: Vec<f64> = per.into_iter().map(|p| p.0).collect();
        let (mean, se) = mean_se(&vals);
        points.push(OmegaPoint { n, mean, std_error: se });
        samples.push(vals);
    }

    let mut warnings = Vec::new();
    if uses_reference {
        let smallest = points.iter().map(|p| p.mean).fold(f64::INFINITY, f64::min);
        if reference_floor > 0.1 * smallest {
            warnings.push(format!(
                "reference floor {reference_floor:.3e} is not small against the smallest estimate {smallest:.3e}"
            ));
        }
    }
    Ok(OmegaResult { estimator, reference_size, points, reference_floor, samples, warnings, streams, draws })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirac_law_gives_zero() {
        let law = InitialLaw::Dirac { point: vec![1.0, -2.0] };
        let r = omega_n_estimator(&law, &[4, 8], 5, 512, OmegaEstimator::Sliced { projections: 8 }, 1, &Pool::default()).unwrap();
        assert!(r.points.iter().all(|p| p.mean == 0.0 && p.std_error == 0.0));
        assert_eq!(r.reference_floor, 0.0);
    }

    #[test]
    fn block_coupling_matches_merge() {
        let mut rng = RngStream::new(50, 0);
        let refv: Vec<f64> = (0..64).map(|_| rng.normal()).collect();
        let y = sorted((0..8).map(|_| rng.normal()).collect());
        let pr = ProjectedReference::new(refv.clone());
        let direct = quantile_cost(&y, &sorted(refv), 2.0);
        assert!((pr.cost(&y, pr.blocks(8).as_ref()) - direct).abs() < 1e-12);
        assert!(pr.blocks(7).is_none());
        let y7 = sorted((0..7).map(|_| rng.normal()).collect());
        assert_eq!(pr.cost(&y7, None), quantile_cost(&y7, &pr.sorted, 2.0));
    }

    #[test]
    fn reference_sample_against_itself_is_zero() {
        let mut rng = RngStream::new(51, 0);
        let refv: Vec<f64> = (0..256).map(|_| rng.normal()).collect();
        let pr = ProjectedReference::new(refv);
        assert!(pr.cost(&pr.sorted.clone(), pr.blocks(256).as_ref()) == 0.0);
    }

    #[test]
    fn one_dimensional_gaussian_decays() {
        let law = InitialLaw::standard_gaussian(1);
        let pool = Pool::new(2).unwrap();
        let r = omega_n_estimator(&law, &[16, 256], 100, 64 * 256, OmegaEstimator::Exact1d, 7, &pool).unwrap();
        assert!(r.points[1].mean < r.points[0].mean / 5.0, "{:?}", r.points);
        let again = omega_n_estimator(&law, &[16, 256], 100, 64 * 256, OmegaEstimator::Exact1d, 7, &Pool::new(1).unwrap()).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn rejects_small_reference() {
        let law = InitialLaw::standard_gaussian(2);
        assert!(omega_n_estimator(&law, &[16], 2, 100, OmegaEstimator::Sliced { projections: 4 }, 0, &Pool::default()).is_err());
        assert!(omega_n_estimator(&law, &[16], 2, 4096, OmegaEstimator::Exact1d, 0, &Pool::default()).is_err());
    }

    #[test]
    fn estimator_names_round_trip() {
        for e in [OmegaEstimator::Exact1d, OmegaEstimator::TwoSample, OmegaEstimator::Sliced { projections: 32 }] {
            assert_eq!(OmegaEstimator::parse(&e.name()).unwrap(), e);
        }
    }
}
