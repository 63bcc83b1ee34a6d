//! Elastic Kac collision process for Maxwell molecules with angular cutoff.
//!
//! The `N(N-1)/2` independent pair clocks of the textbook construction are
//! replaced by a single exponential clock of total rate `(N-1)/2` and a
//! uniformly drawn pair; both generate the same Markov process. Each event
//! rotates the relative velocity of the chosen pair onto `|u| sigma`, with
//! `sigma` drawn from the angular kernel around `u / |u|`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::rng::RngStream;
use crate::state::ParticleState;
use crate::{Error, Result};

/// Nodes of the inverse-CDF table used for non-isotropic kernels.
pub const TABLE_NODES: usize = 4096;
const SIMPSON_INTERVALS: usize = 1 << 16;

type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Shape {
    /// Constant density on the sphere; sampled exactly.
    Isotropic,
    /// Density `scale * raw(cos theta)`, sampled through a tabulated
    /// inverse CDF on the deviation angle.
    Tabulated { raw: Density, scale: f64, table: AngleTable },
    /// `d = 1`: `sigma = +u_hat` with probability `forward`, else `-u_hat`.
    TwoPoint { forward: f64 },
}

/// Collision kernel `b(cos theta)` normalised so that
/// `int_{S^{d-1}} b(sigma . u_hat) d sigma = 1`.
#[derive(Clone)]
pub struct AngularKernel {
    dim: usize,
    name: String,
    shape: Shape,
    first_moment: f64,
}

impl fmt::Debug for AngularKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AngularKernel")
            .field("dim", &self.dim)
            .field("name", &self.name)
            .field("first_moment", &self.first_moment)
            .finish()
    }
}

impl PartialEq for AngularKernel {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.name == other.name
    }
}

/// Surface area of the unit sphere `S^k` in `R^{k+1}`.
pub fn sphere_area(k: usize) -> f64 {
    let h = (k as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / statrs::function::gamma::gamma(h)
}

/// Composite Simpson rule for `int_0^pi g(theta) d theta`.
fn simpson_angle(g: impl Fn(f64) -> f64) -> f64 {
    let n = SIMPSON_INTERVALS;
    let h = PI / n as f64;
    let mut acc = g(0.0) + g(PI);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * g(k as f64 * h);
    }
    acc * h / 3.0
}

#[derive(Clone, Debug)]
struct AngleTable {
    cdf: Vec<f64>,
}

impl AngleTable {
    fn build(weight: impl Fn(f64) -> f64) -> Result<Self> {
        let h = PI / (TABLE_NODES - 1) as f64;
        let w: Vec<f64> = (0..TABLE_NODES).map(|k| weight(k as f64 * h)).collect();
        let mut cdf = Vec::with_capacity(TABLE_NODES);
        cdf.push(0.0);
        for k in 1..TABLE_NODES {
            cdf.push(cdf[k - 1] + 0.5 * h * (w[k - 1] + w[k]));
        }
        let total = cdf[TABLE_NODES - 1];
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::invalid("angular kernel has no mass on the table grid"));
        }
        cdf.iter_mut().for_each(|c| *c /= total);
        Ok(Self { cdf })
    }

    fn sample_angle(&self, u: f64) -> f64 {
        let h = PI / (TABLE_NODES - 1) as f64;
        // first node with cdf > u
        let k = self.cdf.partition_point(|&c| c <= u).clamp(1, TABLE_NODES - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        ((k - 1) as f64 + frac) * h
    }
}

impl AngularKernel {
    /// Constant kernel `b = 1 / |S^{d-1}|` (for `d = 1`: equal weights on
    /// `sigma = +-u_hat`).
    pub fn isotropic(dim: usize) -> Result<Self> {
        match dim {
            0 => Err(Error::invalid("kernel dimension must be positive")),
            1 => Self::two_point(0.5),
            _ => Ok(Self {
                dim,
                name: "isotropic".into(),
                shape: Shape::Isotropic,
                first_moment: 0.0,
            }),
        }
    }

    /// One-dimensional kernel with weight `forward` on `sigma = u_hat` and
    /// `1 - forward` on `sigma = -u_hat`.
    pub fn two_point(forward: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&forward) {
            return Err(Error::invalid(format!("forward weight {forward} outside [0, 1]")));
        }
        Ok(Self {
            dim: 1,
            name: format!("two_point:{forward}"),
            shape: Shape::TwoPoint { forward },
            first_moment: 2.0 * forward - 1.0,
        })
    }

    /// Kernel proportional to an arbitrary nonnegative density of
    /// `cos theta` on `[-1, 1]`; normalised on `S^{d-1}`.
    pub fn from_density(
        dim: usize,
        name: impl Into<String>,
        density: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::invalid("tabulated kernels need d >= 2; use two_point for d = 1"));
        }
        let raw: Density = Arc::new(density);
        let surf = sphere_area(dim - 2);
        let sin_pow = |t: f64| t.sin().powi(dim as i32 - 2);
        let negative = std::cell::Cell::new(false);
        let z = surf
            * simpson_angle(|t| {
                let b = raw(t.cos());
                if b < 0.0 || !b.is_finite() {
                    negative.set(true);
                }
                b * sin_pow(t)
            });
        if negative.get() {
            return Err(Error::invalid("angular density must be finite and nonnegative"));
        }
        if !(z > 0.0) {
            return Err(Error::invalid("angular density has zero mass"));
        }
        let scale = 1.0 / z;
        let table = AngleTable::build(|t| raw(t.cos()) * sin_pow(t))?;
        let first_moment = surf * simpson_angle(|t| t.cos() * scale * raw(t.cos()) * sin_pow(t));
        Ok(Self {
            dim,
            name: name.into(),
            shape: Shape::Tabulated { raw, scale, table },
            first_moment,
        })
    }

    /// Built-in catalog: `isotropic`, `forward:<k>` (`b ~ (1 + cos)^k`),
    /// `spike:<kappa>` (`b ~ exp(kappa (cos - 1))`), `two_point:<w>` (d = 1).
    pub fn from_name(dim: usize, spec: &str) -> Result<Self> {
        let (head, arg) = match spec.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (spec, None),
        };
        let param = || -> Result<f64> {
            arg.ok_or_else(|| Error::invalid(format!("kernel `{spec}` needs a parameter")))?
                .parse::<f64>()
                .map_err(|e| Error::invalid(format!("kernel `{spec}`: {e}")))
        };
        match head {
            "isotropic" => Self::isotropic(dim),
            "two_point" if dim == 1 => Self::two_point(param()?),
            "forward" => {
                let k = param()?;
                if dim == 1 {
                    return Err(Error::invalid("forward kernels need d >= 2"));
                }
                Self::from_density(dim, spec, move |c| (1.0 + c).max(0.0).powf(k))
            }
            "spike" => {
                let kappa = param()?;
                Self::from_density(dim, spec, move |c| (kappa * (c - 1.0)).exp())
            }
            _ => Err(Error::invalid(format!("unknown kernel `{spec}` for d = {dim}"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `b_1 = int (sigma . u_hat) b d sigma`.
    pub fn first_moment(&self) -> f64 {
        self.first_moment
    }

    /// Normalised kernel value `b(c)` for `c = cos theta`. For `d = 1` the
    /// point masses are returned: `b(1) = forward`, `b(-1) = 1 - forward`.
    pub fn density(&self, c: f64) -> f64 {
        match &self.shape {
            Shape::Isotropic => 1.0 / sphere_area(self.dim - 1),
            Shape::Tabulated { raw, scale, .. } => scale * raw(c),
            Shape::TwoPoint { forward } => {
                if c >= 0.0 {
                    *forward
                } else {
                    1.0 - forward
                }
            }
        }
    }

    /// `int_{S^{d-1}} b(sigma . u_hat) d sigma` under the module's quadrature.
    pub fn normalization(&self) -> f64 {
        match &self.shape {
            Shape::TwoPoint { forward } => forward + (1.0 - forward),
            _ => {
                let d = self.dim;
                sphere_area(d - 2) * simpson_angle(|t| self.density(t.cos()) * t.sin().powi(d as i32 - 2))
            }
        }
    }

    /// Draws `sigma` around the unit vector `u_hat` into `out`.
    pub fn sample_sigma_into(&self, u_hat: &[f64], rng: &mut RngStream, out: &mut [f64]) -> Result<()> {
        let d = self.dim;
        if u_hat.len() != d || out.len() != d {
            return Err(Error::invalid(format!("kernel has dimension {d}, vector has {}", u_hat.len())));
        }
        let norm = u_hat.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("u_hat must be a unit vector, |u_hat| = {norm}")));
        }
        match &self.shape {
            Shape::TwoPoint { forward } => {
                let s = if rng.uniform() < *forward { 1.0 } else { -1.0 };
                out[0] = s * u_hat[0].signum();
            }
            Shape::Isotropic => rng.unit_vector(out),
            Shape::Tabulated { table, .. } => {
                let theta = table.sample_angle(rng.uniform());
                let (s, c) = theta.sin_cos();
                // azimuth: uniform direction in the complement of u_hat
                loop {
                    rng.fill_normal(out);
                    let proj: f64 = out.iter().zip(u_hat).map(|(g, u)| g * u).sum();
                    out.iter_mut().zip(u_hat).for_each(|(g, u)| *g -= proj * u);
                    let en = out.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if en > 1e-12 {
                        out.iter_mut().zip(u_hat).for_each(|(g, u)| *g = c * u + s * *g / en);
                        break;
                    }
                }
                let n = out.iter().map(|x| x * x).sum::<f64>().sqrt();
                out.iter_mut().for_each(|x| *x /= n);
            }
        }
        Ok(())
    }

    pub fn sample_sigma(&self, u_hat: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.sample_sigma_into(u_hat, rng, &mut out)?;
        Ok(out)
    }
}

/// Applies the (possibly inelastic) pair rule in place:
/// `v_i* = w/2 + u*/2`, `v_j* = w/2 - u*/2`,
/// `u* = (1-alpha)/2 u + (1+alpha)/2 |u| sigma`. `alpha = 1` is elastic.
/// A pair with `u = 0` is left unchanged.
#[inline]
pub(crate) fn collide_in_place(vi: &mut [f64], vj: &mut [f64], sigma: &[f64], alpha: f64) {
    let un = vi.iter().zip(vj.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if un == 0.0 {
        return;
    }
    let a = 0.5 * (1.0 - alpha);
    let c = 0.5 * (1.0 + alpha);
    for k in 0..vi.len() {
        let w = vi[k] + vj[k];
        let u = vi[k] - vj[k];
        let us = a * u + c * un * sigma[k];
        vi[k] = 0.5 * w + 0.5 * us;
        vj[k] = 0.5 * w - 0.5 * us;
    }
}

/// Elastic collision `R_{ij,sigma}`.
pub fn collide_elastic(v_i: &[f64], v_j: &[f64], sigma: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (mut a, mut b) = (v_i.to_vec(), v_j.to_vec());
    collide_in_place(&mut a, &mut b, sigma, 1.0);
    (a, b)
}

/// Writes `(v_i - v_j) / |v_i - v_j|` into `out`; `e_1` when the pair has
/// zero relative velocity (the collision is then trivial anyway).
#[inline]
pub(crate) fn relative_direction(vi: &[f64], vj: &[f64], out: &mut [f64]) -> f64 {
    let mut n2 = 0.0;
    for k in 0..vi.len() {
        out[k] = vi[k] - vj[k];
        n2 += out[k] * out[k];
    }
    let n = n2.sqrt();
    if n > 0.0 {
        out.iter_mut().for_each(|x| *x /= n);
    } else {
        out.iter_mut().for_each(|x| *x = 0.0);
        out[0] = 1.0;
    }
    n
}

/// Uniform ordered pair `(i, j)`, `i != j`.
#[inline]
pub(crate) fn draw_pair(n: usize, rng: &mut RngStream) -> (usize, usize) {
    let i = rng.index(n);
    let mut j = rng.index(n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollisionEvent {
    pub time: f64,
    pub pair: (usize, usize),
    pub sigma: Vec<f64>,
}

/// Total jump rate `(N - 1) / 2` of the elastic process.
pub fn kac_rate(n: usize) -> f64 {
    (n as f64 - 1.0) / 2.0
}

/// Draws the next event from `state` without applying it.
pub fn next_collision(state: &ParticleState, kernel: &AngularKernel, rng: &mut RngStream) -> Result<CollisionEvent> {
    let n = state.n_particles();
    if n < 2 {
        return Err(Error::invalid("a collision needs at least two particles"));
    }
    check_dims(state, kernel)?;
    let time = state.time() + rng.exponential(kac_rate(n));
    let pair = draw_pair(n, rng);
    let mut u_hat = vec![0.0; state.dim()];
    relative_direction(state.particle(pair.0), state.particle(pair.1), &mut u_hat);
    let sigma = kernel.sample_sigma(&u_hat, rng)?;
    Ok(CollisionEvent { time, pair, sigma })
}

fn check_dims(state: &ParticleState, kernel: &AngularKernel) -> Result<()> {
    if state.dim() != kernel.dim() {
        return Err(Error::invalid(format!(
            "state dimension {} does not match kernel dimension {}",
            state.dim(),
            kernel.dim()
        )));
    }
    Ok(())
}

pub(crate) fn check_snapshots(start: f64, t_end: f64, snapshots: &[f64]) -> Result<()> {
    if !(t_end >= start) {
        return Err(Error::invalid(format!("t_end = {t_end} precedes the start time {start}")));
    }
    if snapshots.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("snapshot times must be sorted"));
    }
    if snapshots.iter().any(|&t| t < start || t > t_end) {
        return Err(Error::invalid(format!("snapshot times must lie in [{start}, {t_end}]")));
    }
    Ok(())
}

/// Event-driven elastic process. The next event time is drawn once and kept
/// across `advance_to` calls, so the trajectory does not depend on where it
/// is observed.
pub struct KacProcess<'a> {
    state: ParticleState,
    kernel: &'a AngularKernel,
    rng: &'a mut RngStream,
    pending: Option<f64>,
    events: u64,
    u_hat: Vec<f64>,
    sigma: Vec<f64>,
}

impl<'a> KacProcess<'a> {
    pub fn new(state: ParticleState, kernel: &'a AngularKernel, rng: &'a mut RngStream) -> Result<Self> {
        check_dims(&state, kernel)?;
        let d = state.dim();
        Ok(Self {
            state,
            kernel,
            rng,
            pending: None,
            events: 0,
            u_hat: vec![0.0; d],
            sigma: vec![0.0; d],
        })
    }

    pub fn state(&self) -> &ParticleState {
        &self.state
    }

    pub fn into_state(self) -> ParticleState {
        self.state
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    fn next_time(&mut self) -> f64 {
        let rate = kac_rate(self.state.n_particles());
        let now = self.state.time();
        *self.pending.get_or_insert_with(|| now + self.rng.exponential(rate))
    }

    fn fire(&mut self, time: f64) -> (usize, usize) {
        self.pending = None;
        self.state.set_time(time);
        let (i, j) = draw_pair(self.state.n_particles(), self.rng);
        relative_direction(self.state.particle(i), self.state.particle(j), &mut self.u_hat);
        self.kernel
            .sample_sigma_into(&self.u_hat, self.rng, &mut self.sigma)
            .expect("dimensions checked at construction");
        let (vi, vj) = self.state.pair_mut(i, j);
        collide_in_place(vi, vj, &self.sigma, 1.0);
        self.events += 1;
        (i, j)
    }

    /// Applies the next event and returns it.
    pub fn step(&mut self) -> Result<CollisionEvent> {
        if self.state.n_particles() < 2 {
            return Err(Error::invalid("a collision needs at least two particles"));
        }
        let t = self.next_time();
        let pair = self.fire(t);
        Ok(CollisionEvent {
            time: t,
            pair,
            sigma: self.sigma.clone(),
        })
    }

    /// Runs all events up to time `t` and sets the clock to `t`.
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        if t < self.state.time() {
            return Err(Error::invalid(format!("cannot advance backwards to {t}")));
        }
        if self.state.n_particles() >= 2 {
            loop {
                let te = self.next_time();
                if te > t {
                    break;
                }
                self.fire(te);
            }
        }
        self.state.set_time(t);
        Ok(())
    }
}

/// Exact event-driven simulation; returns the state at each snapshot time
/// (or the final state when `snapshot_times` is empty).
pub fn simulate_kac(
    initial: &ParticleState,
    kernel: &AngularKernel,
    t_end: f64,
    snapshot_times: &[f64],
    rng: &mut RngStream,
) -> Result<Vec<ParticleState>> {
    check_snapshots(initial.time(), t_end, snapshot_times)?;
    let mut p = KacProcess::new(initial.clone(), kernel, rng)?;
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

/// Minimal rotation taking unit vector `a` to unit vector `b`, applied to `x`.
pub(crate) fn rotate_minimal(a: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let d = a.len();
    if a == b {
        out.copy_from_slice(x);
        return;
    }
    let c: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
    let ax: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
    if d == 1 {
        out[0] = if c >= 0.0 { x[0] } else { -x[0] };
        return;
    }
    if 1.0 + c > 1e-12 {
        let abx: f64 = (0..d).map(|k| (a[k] + b[k]) * x[k]).sum::<f64>() / (1.0 + c);
        for k in 0..d {
            out[k] = x[k] - abx * (a[k] + b[k]) + 2.0 * ax * b[k];
        }
    } else {
        // antiparallel: rotate by pi in the plane of a and a fixed normal p
        let mut p = vec![0.0; d];
        let k0 = (0..d).min_by(|&i, &j| a[i].abs().total_cmp(&a[j].abs())).unwrap();
        p[k0] = 1.0;
        let pa = a[k0];
        p.iter_mut().zip(a).for_each(|(pk, ak)| *pk -= pa * ak);
        let pn = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        p.iter_mut().for_each(|v| *v /= pn);
        let px: f64 = p.iter().zip(x).map(|(u, v)| u * v).sum();
        for k in 0..d {
            out[k] = x[k] - 2.0 * ax * a[k] - 2.0 * px * p[k];
        }
    }
}

/// Two elastic systems driven by the same clock, pairs and angular draws.
/// System `b` uses `sigma_b = R sigma_a`, where `R` is the minimal rotation
/// taking `u_hat_a` to `u_hat_b`; each marginal is an exact Kac process and
/// the coupling cost `(1/N) sum |v_a - v_b|^2` does not grow in expectation.
pub struct CoupledKac<'a> {
    a: ParticleState,
    b: ParticleState,
    kernel: &'a AngularKernel,
    rng: &'a mut RngStream,
    pending: Option<f64>,
    ua: Vec<f64>,
    ub: Vec<f64>,
    sa: Vec<f64>,
    sb: Vec<f64>,
}

impl<'a> CoupledKac<'a> {
    pub fn new(a: ParticleState, b: ParticleState, kernel: &'a AngularKernel, rng: &'a mut RngStream) -> Result<Self> {
        check_dims(&a, kernel)?;
        check_dims(&b, kernel)?;
        if a.n_particles() != b.n_particles() || a.time() != b.time() {
            return Err(Error::invalid("coupled systems need equal N and a common clock"));
        }
        let d = a.dim();
        Ok(Self {
            a,
            b,
            kernel,
            rng,
            pending: None,
            ua: vec![0.0; d],
            ub: vec![0.0; d],
            sa: vec![0.0; d],
            sb: vec![0.0; d],
        })
    }

    pub fn states(&self) -> (&ParticleState, &ParticleState) {
        (&self.a, &self.b)
    }

    /// `(1/N) sum_i |v_i^a - v_i^b|^2`, an upper bound for `W_2^2` of the
    /// two empirical measures.
    pub fn coupling_cost(&self) -> f64 {
        let s: f64 = self.a.coords().iter().zip(self.b.coords()).map(|(x, y)| (x - y) * (x - y)).sum();
        s / self.a.n_particles() as f64
    }

    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        let n = self.a.n_particles();
        if n >= 2 {
            loop {
                let now = self.a.time();
                let rate = kac_rate(n);
                let te = *self.pending.get_or_insert_with(|| now + self.rng.exponential(rate));
                if te > t {
                    break;
                }
                self.pending = None;
                self.a.set_time(te);
                self.b.set_time(te);
                let (i, j) = draw_pair(n, self.rng);
                relative_direction(self.a.particle(i), self.a.particle(j), &mut self.ua);
                relative_direction(self.b.particle(i), self.b.particle(j), &mut self.ub);
                self.kernel.sample_sigma_into(&self.ua, self.rng, &mut self.sa)?;
                rotate_minimal(&self.ua, &self.ub, &self.sa, &mut self.sb);
                let (vi, vj) = self.a.pair_mut(i, j);
                collide_in_place(vi, vj, &self.sa, 1.0);
                let (vi, vj) = self.b.pair_mut(i, j);
                collide_in_place(vi, vj, &self.sb, 1.0);
            }
        }
        self.a.set_time(t);
        self.b.set_time(t);
        Ok(())
    }
}
