//! Inelastic Maxwell collisions with restitution `alpha` driven by an
//! independent Brownian bath of strength `nu` on every particle.
//!
//! Both components are sampled exactly. Collisions arrive on a global
//! exponential clock. Bath increments are applied lazily: a particle carries
//! the time up to which its Brownian path has been added, and receives the
//! exact Gaussian increment for the elapsed interval whenever it collides or
//! the state is observed. Since each particle's increments over disjoint
//! intervals are independent, this has the same law as moving every particle
//! between consecutive events, at O(d) cost per event.

use crate::kac::{collide_in_place, draw_pair, relative_direction, AngularKernel};
use crate::rng::RngStream;
use crate::state::ParticleState;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PairConvention {
    /// Ordered pairs: total collision rate `N - 1`.
    #[default]
    Ordered,
    /// Unordered pairs: total collision rate `(N - 1) / 2`.
    Unordered,
}

impl PairConvention {
    pub fn total_rate(self, n: usize) -> f64 {
        let m = n as f64 - 1.0;
        match self {
            Self::Ordered => m,
            Self::Unordered => 0.5 * m,
        }
    }

    /// Collision frequency per particle in the mean-field limit.
    pub fn limit_rate(self) -> f64 {
        match self {
            Self::Ordered => 2.0,
            Self::Unordered => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Ordered => "ordered",
            Self::Unordered => "unordered",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ordered" => Ok(Self::Ordered),
            "unordered" => Ok(Self::Unordered),
            _ => Err(Error::invalid(format!("unknown pair convention `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RestitutionParams {
    pub alpha: f64,
    pub nu: f64,
    pub dim: usize,
}

impl RestitutionParams {
    /// Accepts `alpha` in `(0, 1]` and `nu >= 0`; the endpoints are the
    /// elastic and bath-free limits.
    pub fn new(alpha: f64, nu: f64, dim: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!("restitution alpha = {alpha} outside (0, 1]")));
        }
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(Error::invalid(format!("bath strength nu = {nu} must be finite and >= 0")));
        }
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        Ok(Self { alpha, nu, dim })
    }
}

/// Inelastic pair rule; `alpha = 1` gives the elastic rule bit for bit.
pub fn collide_inelastic(v_i: &[f64], v_j: &[f64], sigma: &[f64], alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let (mut a, mut b) = (v_i.to_vec(), v_j.to_vec());
    collide_in_place(&mut a, &mut b, sigma, alpha);
    (a, b)
}

pub struct ThermostatProcess<'a> {
    state: ParticleState,
    kernel: &'a AngularKernel,
    params: RestitutionParams,
    convention: PairConvention,
    rng: &'a mut RngStream,
    pending: Option<f64>,
    bath_time: Vec<f64>,
    events: u64,
    u_hat: Vec<f64>,
    sigma: Vec<f64>,
}

impl<'a> ThermostatProcess<'a> {
    pub fn new(
        state: ParticleState,
        kernel: &'a AngularKernel,
        params: RestitutionParams,
        convention: PairConvention,
        rng: &'a mut RngStream,
    ) -> Result<Self> {
        if state.dim() != kernel.dim() || state.dim() != params.dim {
            return Err(Error::invalid(format!(
                "dimension mismatch: state {}, kernel {}, params {}",
                state.dim(),
                kernel.dim(),
                params.dim
            )));
        }
        let d = state.dim();
        let bath_time = vec![state.time(); state.n_particles()];
        Ok(Self {
            state,
            kernel,
            params,
            convention,
            rng,
            pending: None,
            bath_time,
            events: 0,
            u_hat: vec![0.0; d],
            sigma: vec![0.0; d],
        })
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    /// Current state with every bath increment applied up to the clock.
    pub fn state(&mut self) -> &ParticleState {
        let t = self.state.time();
        for i in 0..self.state.n_particles() {
            self.heat(i, t);
        }
        &self.state
    }

    pub fn into_state(mut self) -> ParticleState {
        self.state();
        self.state
    }

    fn heat(&mut self, i: usize, t: f64) {
        let dt = t - self.bath_time[i];
        if dt > 0.0 && self.params.nu > 0.0 {
            let s = (2.0 * self.params.nu * dt).sqrt();
            for x in self.state.particle_mut(i) {
                *x += s * self.rng.normal();
            }
        }
        self.bath_time[i] = t;
    }

    fn next_time(&mut self) -> f64 {
        let rate = self.convention.total_rate(self.state.n_particles());
        let now = self.state.time();
        *self.pending.get_or_insert_with(|| now + self.rng.exponential(rate))
    }

    fn fire(&mut self, t: f64) {
        self.pending = None;
        self.state.set_time(t);
        let (i, j) = draw_pair(self.state.n_particles(), self.rng);
        self.heat(i, t);
        self.heat(j, t);
        relative_direction(self.state.particle(i), self.state.particle(j), &mut self.u_hat);
        self.kernel
            .sample_sigma_into(&self.u_hat, self.rng, &mut self.sigma)
            .expect("dimensions checked at construction");
        let (vi, vj) = self.state.pair_mut(i, j);
        collide_in_place(vi, vj, &self.sigma, self.params.alpha);
        self.events += 1;
    }

    /// Runs the jump-diffusion up to `until`, which must lie strictly ahead
    /// of the clock.
    pub fn step_mixed(&mut self, until: f64) -> Result<()> {
        if !(until > self.state.time()) {
            return Err(Error::invalid(format!(
                "until = {until} must exceed the current time {}",
                self.state.time()
            )));
        }
        self.run_to(until)
    }

    fn run_to(&mut self, until: f64) -> Result<()> {
        if self.state.n_particles() >= 2 {
            loop {
                let te = self.next_time();
                if te > until {
                    break;
                }
                self.fire(te);
            }
        }
        self.state.set_time(until);
        for i in 0..self.state.n_particles() {
            self.heat(i, until);
        }
        self.state.check_finite()
    }

    /// Like [`ThermostatProcess::step_mixed`] but accepts `until` equal to
    /// the current time.
    pub fn advance_to(&mut self, until: f64) -> Result<()> {
        if until < self.state.time() {
            return Err(Error::invalid(format!("cannot advance backwards to {until}")));
        }
        self.run_to(until)
    }
}

/// Convenience wrapper over [`ThermostatProcess::step_mixed`].
pub fn step_mixed(
    state: &ParticleState,
    kernel: &AngularKernel,
    params: RestitutionParams,
    convention: PairConvention,
    until: f64,
    rng: &mut RngStream,
) -> Result<ParticleState> {
    let mut p = ThermostatProcess::new(state.clone(), kernel, params, convention, rng)?;
    p.step_mixed(until)?;
    Ok(p.into_state())
}

/// States at each snapshot time (or the final state when none are given).
pub fn simulate_thermostat(
    initial: &ParticleState,
    kernel: &AngularKernel,
    params: RestitutionParams,
    convention: PairConvention,
    t_end: f64,
    snapshot_times: &[f64],
    rng: &mut RngStream,
) -> Result<Vec<ParticleState>> {
    crate::kac::check_snapshots(initial.time(), t_end, snapshot_times)?;
    let mut p = ThermostatProcess::new(initial.clone(), kernel, params, convention, rng)?;
    let mut out = Vec::with_capacity(snapshot_times.len().max(1));
    for &t in snapshot_times {
        p.advance_to(t)?;
        out.push(p.state().clone());
    }
    p.advance_to(t_end)?;
    if snapshot_times.is_empty() {
        out.push(p.into_state());
    }
    Ok(out)
}

/// Expected change of `|v_i|^2 + |v_j|^2` in one collision of a pair with
/// relative speed `|u|`: `-(1 - alpha^2)(1 - b_1)|u|^2 / 4`.
pub fn expected_energy_loss(alpha: f64, b1: f64, u_sq: f64) -> f64 {
    -(1.0 - alpha * alpha) * (1.0 - b1) * u_sq / 4.0
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SteadyTemperature {
    Finite(f64),
    /// No dissipation (`alpha = 1` or `b_1 = 1`) with a bath switched on.
    Divergent,
}

impl SteadyTemperature {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Finite(t) => Some(t),
            Self::Divergent => None,
        }
    }
}

/// Stationary temperature `T = |v|^2 / d` of the mean-field limit.
///
/// Each particle collides at rate `lambda` (2 for ordered pairs, 1 for
/// unordered), losing on average `(1 - alpha^2)(1 - b_1)/4 * E|v - v_*|^2`
/// per collision, split between the two partners, and gains `2 d nu` per
/// unit time from the bath. With zero mean `E|v - v_*|^2 = 2 d T`, so
/// `dT/dt = -lambda (1 - alpha^2)(1 - b_1) T / 4 + 2 nu`.
pub fn steady_temperature_oracle(
    params: RestitutionParams,
    kernel: &AngularKernel,
    convention: PairConvention,
) -> SteadyTemperature {
    let c = (1.0 - params.alpha * params.alpha) * (1.0 - kernel.first_moment()) / 4.0;
    if params.nu == 0.0 {
        return SteadyTemperature::Finite(0.0);
    }
    if c <= 0.0 {
        return SteadyTemperature::Divergent;
    }
    SteadyTemperature::Finite(2.0 * params.nu / (convention.limit_rate() * c))
}

/// Stationary temperature of the `N`-particle system itself, measured in the
/// centre-of-mass frame (`sum |v - vbar|^2 / (dN)`); tends to the oracle
/// above as `N -> infinity`.
pub fn steady_temperature_finite_n(
    params: RestitutionParams,
    kernel: &AngularKernel,
    convention: PairConvention,
    n: usize,
) -> SteadyTemperature {
    match steady_temperature_oracle(params, kernel, convention) {
        SteadyTemperature::Finite(t) => {
            let n = n as f64;
            SteadyTemperature::Finite(t * (n - 1.0) / n)
        }
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kac::collide_elastic;
    use crate::state::gaussian_sample_state;

    #[test]
    fn inelastic_examples() {
        let (a, b) = collide_inelastic(&[1.0], &[-1.0], &[1.0], 0.5);
        assert_eq!((a, b), (vec![1.0], vec![-1.0]));
        let (a, b) = collide_inelastic(&[1.0], &[-1.0], &[-1.0], 0.5);
        assert_eq!((a.clone(), b.clone()), (vec![-0.5], vec![0.5]));
        assert_eq!(a[0] * a[0] + b[0] * b[0], 0.5);
        let (a, b) = collide_inelastic(&[0.3, 1.2], &[0.3, 1.2], &[0.0, 1.0], 0.5);
        assert_eq!((a, b), (vec![0.3, 1.2], vec![0.3, 1.2]));
    }

    #[test]
    fn alpha_one_is_elastic() {
        let mut rng = RngStream::new(20, 0);
        for _ in 0..1000 {
            let mut v = [0.0; 9];
            rng.fill_normal(&mut v);
            let mut s = [0.0; 3];
            rng.unit_vector(&mut s);
            let e = collide_elastic(&v[..3], &v[3..6], &s);
            let i = collide_inelastic(&v[..3], &v[3..6], &s, 1.0);
            for k in 0..3 {
                assert!((e.0[k] - i.0[k]).abs() <= 1e-12 && (e.1[k] - i.1[k]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn relative_speed_contracts() {
        let mut rng = RngStream::new(21, 0);
        for _ in 0..20_000 {
            let mut v = [0.0; 6];
            rng.fill_normal(&mut v);
            let mut s = [0.0; 3];
            rng.unit_vector(&mut s);
            let alpha = rng.uniform();
            let (a, b) = collide_inelastic(&v[..3], &v[3..], &s, alpha);
            let u: f64 = (0..3).map(|k| (v[k] - v[k + 3]).powi(2)).sum::<f64>().sqrt();
            let us: f64 = (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt();
            assert!(us <= u * (1.0 + 1e-12));
            for k in 0..3 {
                assert!((a[k] + b[k] - v[k] - v[k + 3]).abs() < 1e-12);
            }
            let e0: f64 = v.iter().map(|x| x * x).sum();
            let e1: f64 = a.iter().chain(&b).map(|x| x * x).sum();
            assert!(e1 <= e0 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn single_collision_energy_loss_matches_formula() {
        // Monte Carlo over sigma for a fixed pair, isotropic and forward kernels
        let mut rng = RngStream::new(22, 0);
        let vi: [f64; 3] = [1.0, -0.5, 2.0];
        let vj = [-0.3, 0.4, -1.0];
        let u_sq: f64 = (0..3).map(|k| (vi[k] - vj[k]).powi(2)).sum();
        let e0: f64 = vi.iter().chain(&vj).map(|x| x * x).sum();
        let mut u_hat = [0.0; 3];
        relative_direction(&vi, &vj, &mut u_hat);
        for name in ["isotropic", "forward:1"] {
            let k = AngularKernel::from_name(3, name).unwrap();
            let n = 400_000;
            let mut acc = 0.0;
            for _ in 0..n {
                let s = k.sample_sigma(&u_hat, &mut rng).unwrap();
                let (a, b) = collide_inelastic(&vi, &vj, &s, 0.8);
                acc += a.iter().chain(&b).map(|x| x * x).sum::<f64>() - e0;
            }
            let mc = acc / n as f64;
            let exact = expected_energy_loss(0.8, k.first_moment(), u_sq);
            assert!((mc - exact).abs() < 0.01 * exact.abs(), "{name}: {mc} vs {exact}");
        }
    }

    #[test]
    fn oracle_limits() {
        let k = AngularKernel::isotropic(3).unwrap();
        let p = RestitutionParams::new(0.8, 1.0, 3).unwrap();
        let t = steady_temperature_oracle(p, &k, PairConvention::Unordered).value().unwrap();
        assert!((t - 8.0 / 0.36).abs() < 1e-12);
        let t = steady_temperature_oracle(p, &k, PairConvention::Ordered).value().unwrap();
        assert!((t - 4.0 / 0.36).abs() < 1e-12);
        let p1 = RestitutionParams::new(1.0, 1.0, 3).unwrap();
        assert_eq!(steady_temperature_oracle(p1, &k, PairConvention::Ordered), SteadyTemperature::Divergent);
        let p0 = RestitutionParams::new(0.8, 0.0, 3).unwrap();
        assert_eq!(steady_temperature_oracle(p0, &k, PairConvention::Ordered), SteadyTemperature::Finite(0.0));
        assert!(RestitutionParams::new(0.0, 1.0, 3).is_err());
        assert!(RestitutionParams::new(1.2, 1.0, 3).is_err());
    }

    #[test]
    fn bath_off_cools_monotonically() {
        let k = AngularKernel::isotropic(3).unwrap();
        let p = RestitutionParams::new(0.7, 0.0, 3).unwrap();
        let init = gaussian_sample_state(&[0.0; 3], &[1.0; 3], 200, &mut RngStream::new(23, 1)).unwrap();
        let mut rng = RngStream::new(23, 0);
        let mut proc = ThermostatProcess::new(init, &k, p, PairConvention::Ordered, &mut rng).unwrap();
        let mut e = proc.state().total_energy();
        for step in 1..=200 {
            proc.step_mixed(step as f64 * 0.01).unwrap();
            let e1 = proc.state().total_energy();
            assert!(e1 <= e * (1.0 + 1e-12));
            e = e1;
        }
    }

    #[test]
    fn trivial_collisions_leave_pure_brownian_growth() {
        // sigma ~ u_hat makes every collision (nearly) trivial
        let k = AngularKernel::from_name(1, "two_point:1").unwrap();
        let p = RestitutionParams::new(0.9, 1.0, 1).unwrap();
        let n = 100_000;
        let init = ParticleState::new(1, vec![0.0; n], 0.0).unwrap();
        let out = simulate_thermostat(&init, &k, p, PairConvention::Ordered, 0.5, &[], &mut RngStream::new(24, 0)).unwrap();
        let var = out[0].coords().iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 0.03, "{var}");
    }

    #[test]
    fn momentum_is_a_random_walk() {
        let k = AngularKernel::isotropic(3).unwrap();
        let p = RestitutionParams::new(0.8, 1.0, 3).unwrap();
        let n = 100;
        let reps = 4000;
        let mut sums = Vec::with_capacity(reps);
        for r in 0..reps {
            let init = gaussian_sample_state(&[0.0; 3], &[1.0; 3], n, &mut RngStream::new(25, 2 * r as u64)).unwrap();
            let p0 = init.total_momentum();
            let s = step_mixed(&init, &k, p, PairConvention::Ordered, 1.0, &mut RngStream::new(25, 2 * r as u64 + 1)).unwrap();
            let p1 = s.total_momentum();
            sums.push(p1[0] - p0[0]);
        }
        let mean = sums.iter().sum::<f64>() / reps as f64;
        let var = sums.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let expect = 2.0 * n as f64;
        assert!((var - expect).abs() < 0.1 * expect, "{var}");
        assert!(mean.abs() < 4.0 * (expect / reps as f64).sqrt());
    }

    #[test]
    fn step_rejects_non_advancing_target() {
        let k = AngularKernel::isotropic(2).unwrap();
        let p = RestitutionParams::new(0.8, 1.0, 2).unwrap();
        let init = ParticleState::new(2, vec![0.0; 8], 1.0).unwrap();
        assert!(step_mixed(&init, &k, p, PairConvention::Ordered, 1.0, &mut RngStream::new(0, 0)).is_err());
        let out = simulate_thermostat(&init, &k, p, PairConvention::Ordered, 1.0, &[1.0], &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(out[0], init);
    }
}
