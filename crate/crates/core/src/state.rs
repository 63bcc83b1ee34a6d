//! Particle configurations, empirical measures and moments.

use crate::rng::RngStream;
use crate::{Error, Result};

/// Configuration of `N` particles in `R^m` plus the simulation clock.
///
/// Coordinates are stored flat: particle `i` occupies
/// `coords[i * dim..(i + 1) * dim]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleState {
    dim: usize,
    coords: Vec<f64>,
    time: f64,
}

impl ParticleState {
    pub fn new(dim: usize, coords: Vec<f64>, time: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("particle dimension must be positive"));
        }
        if coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::invalid(format!(
                "coordinate buffer of length {} does not hold a positive number of {dim}-vectors",
                coords.len()
            )));
        }
        if !(time >= 0.0) {
            return Err(Error::invalid(format!("time must be nonnegative, got {time}")));
        }
        Ok(Self { dim, coords, time })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("rows have inconsistent lengths"));
        }
        Self::new(dim, rows.concat(), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_particles(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Moves the clock forward. Panics if `t` would move it backwards.
    pub fn set_time(&mut self, t: f64) {
        assert!(t >= self.time, "time must be nondecreasing ({} -> {t})", self.time);
        self.time = t;
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn particle_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Mutable views of two distinct particles.
    pub fn pair_mut(&mut self, i: usize, j: usize) -> (&mut [f64], &mut [f64]) {
        assert_ne!(i, j);
        let d = self.dim;
        if i < j {
            let (lo, hi) = self.coords.split_at_mut(j * d);
            (&mut lo[i * d..(i + 1) * d], &mut hi[..d])
        } else {
            let (lo, hi) = self.coords.split_at_mut(i * d);
            let (pj, pi) = (&mut lo[j * d..(j + 1) * d], &mut hi[..d]);
            (pi, pj)
        }
    }

    pub fn particles(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn total_momentum(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        for v in self.particles() {
            p.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }
        p
    }

    /// `sum_k |v_k|^2`.
    pub fn total_energy(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum()
    }

    /// Per-coordinate temperature `(1 / (dN)) sum_k |v_k|^2`.
    pub fn temperature(&self) -> f64 {
        self.total_energy() / self.coords.len() as f64
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.coords.iter().position(|x| !x.is_finite()) {
            None => Ok(()),
            Some(k) => Err(Error::BlowUp {
                particle: k / self.dim,
                time: self.time,
            }),
        }
    }

    pub fn empirical(&self) -> EmpiricalMeasure {
        empirical_from_state(self)
    }
}

/// Uniform-weight atomic probability measure `(1/N) sum_j delta_{z_j}`.
///
/// Equality is equality as measures: atoms are compared as multisets.
#[derive(Clone, Debug)]
pub struct EmpiricalMeasure {
    dim: usize,
    atoms: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(dim: usize, atoms: Vec<f64>) -> Result<Self> {
        if dim == 0 || atoms.is_empty() || atoms.len() % dim != 0 {
            return Err(Error::invalid("empirical measure needs at least one atom of positive dimension"));
        }
        Ok(Self { dim, atoms })
    }

    pub fn from_points_1d(points: &[f64]) -> Result<Self> {
        Self::new(1, points.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.atoms.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.dim..(i + 1) * self.dim]
    }

    pub fn atoms(&self) -> impl Iterator<Item = &[f64]> {
        self.atoms.chunks_exact(self.dim)
    }

    pub fn raw(&self) -> &[f64] {
        &self.atoms
    }

    /// Integral of a test function against the measure.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.atoms().map(f).sum::<f64>() / self.len() as f64
    }

    /// Atoms sorted lexicographically; the canonical representative of the
    /// permutation class.
    pub fn canonical_atoms(&self) -> Vec<Vec<f64>> {
        let mut v: Vec<Vec<f64>> = self.atoms().map(<[f64]>::to_vec).collect();
        v.sort_by(|a, b| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        v
    }

    /// Sorted 1-D atoms. Panics unless `dim == 1`.
    pub fn sorted_1d(&self) -> Vec<f64> {
        assert_eq!(self.dim, 1, "sorted_1d needs a one-dimensional measure");
        let mut v = self.atoms.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

impl PartialEq for EmpiricalMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.canonical_atoms() == other.canonical_atoms()
    }
}

pub fn empirical_from_state(state: &ParticleState) -> EmpiricalMeasure {
    EmpiricalMeasure {
        dim: state.dim,
        atoms: state.coords.clone(),
    }
}

/// `M_q(f) = <f, <v>^q>` with `<v>^2 = 1 + |v|^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentVector {
    pub order_q: f64,
    pub value: f64,
}

pub fn moment(mu: &EmpiricalMeasure, q: f64) -> Result<MomentVector> {
    if !(q >= 0.0) {
        return Err(Error::invalid(format!("moment order must be nonnegative, got {q}")));
    }
    let value = mu.integrate(|z| {
        let r2: f64 = z.iter().map(|x| x * x).sum();
        (1.0 + r2).powf(q / 2.0)
    });
    Ok(MomentVector { order_q: q, value })
}

/// Deterministic 1-D initialisation `z_j = F^{-1}((j - 1/2) / n)`.
pub fn quantile_init_1d(inverse_cdf: impl Fn(f64) -> f64, n: usize) -> Result<ParticleState> {
    if n == 0 {
        return Err(Error::invalid("quantile initialisation needs n >= 1"));
    }
    let mut coords = Vec::with_capacity(n);
    for j in 0..n {
        let p = (j as f64 + 0.5) / n as f64;
        let x = inverse_cdf(p);
        if !x.is_finite() {
            return Err(Error::invalid(format!("inverse CDF returned {x} at p = {p}")));
        }
        coords.push(x);
    }
    if coords.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("inverse CDF is not monotone"));
    }
    ParticleState::new(1, coords, 0.0)
}

/// `N` i.i.d. draws from a Gaussian with diagonal covariance.
pub fn gaussian_sample_state(
    mean: &[f64],
    covariance_diagonal: &[f64],
    n: usize,
    rng: &mut RngStream,
) -> Result<ParticleState> {
    if mean.len() != covariance_diagonal.len() || mean.is_empty() {
        return Err(Error::invalid("mean and covariance diagonal must have the same positive length"));
    }
    if let Some(v) = covariance_diagonal.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::invalid(format!("variance must be nonnegative, got {v}")));
    }
    if n == 0 {
        return Err(Error::invalid("need at least one particle"));
    }
    let sd: Vec<f64> = covariance_diagonal.iter().map(|v| v.sqrt()).collect();
    let dim = mean.len();
    let mut coords = Vec::with_capacity(n * dim);
    for _ in 0..n {
        for a in 0..dim {
            coords.push(mean[a] + sd[a] * rng.normal());
        }
    }
    ParticleState::new(dim, coords, 0.0)
}

/// Standard normal quantile function.
pub fn normal_quantile(p: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::standard().inverse_cdf(p)
}
