//! McKean-Vlasov particle systems `dz_i = (T z_i + F_i) dt + sigma dW_i`
//! with `F_i = (1/N) sum_{j != i} U(z_i - z_j)`, integrated by
//! Euler-Maruyama, and the deterministic Vlasov case (`x' = v`,
//! `v' = (1/N) sum_j grad psi(x_i - x_j)`) integrated by explicit midpoint.

use crate::kac::check_snapshots;
use crate::rng::RngStream;
use crate::state::ParticleState;
use crate::{Error, Result};

/// Built-in interaction kernels. All are odd (`U(-z) = -U(z)`) with
/// `U(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum Interaction {
    Zero,
    /// `U(z) = -kappa z`.
    Linear { kappa: f64 },
    /// Gradient of `a exp(-|z|^2 / (2 w^2))`.
    GaussianDerivative { amplitude: f64, width: f64 },
    /// `a z exp(-sqrt(|z|^2 + eps^2) / l) / (|z|^2 + eps^2)^{3/2}`.
    ScreenedCoulomb { amplitude: f64, softening: f64, screening: f64 },
    /// `a z / (1 + |z|^2)^2`.
    Rational { amplitude: f64 },
}

impl Interaction {
    pub fn from_name(spec: &str) -> Result<Self> {
        let (head, args) = match spec.split_once(':') {
            Some((h, a)) => (h, a),
            None => (spec, ""),
        };
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::invalid(format!("interaction `{spec}`: {e}")))?
        };
        let want = |k: usize| -> Result<()> {
            if nums.len() == k {
                Ok(())
            } else {
                Err(Error::invalid(format!("interaction `{spec}` expects {k} parameter(s)")))
            }
        };
        let it = match head {
            "zero" => {
                want(0)?;
                Self::Zero
            }
            "linear" => {
                want(1)?;
                Self::Linear { kappa: nums[0] }
            }
            "gaussian_derivative" => {
                want(2)?;
                Self::GaussianDerivative { amplitude: nums[0], width: nums[1] }
            }
            "screened_coulomb" => {
                want(3)?;
                Self::ScreenedCoulomb { amplitude: nums[0], softening: nums[1], screening: nums[2] }
            }
            "rational" => {
                want(1)?;
                Self::Rational { amplitude: nums[0] }
            }
            _ => return Err(Error::invalid(format!("unknown interaction `{spec}`"))),
        };
        it.validate()?;
        Ok(it)
    }

    pub fn name(&self) -> String {
        match self {
            Self::Zero => "zero".into(),
            Self::Linear { kappa } => format!("linear:{kappa}"),
            Self::GaussianDerivative { amplitude, width } => format!("gaussian_derivative:{amplitude},{width}"),
            Self::ScreenedCoulomb { amplitude, softening, screening } => {
                format!("screened_coulomb:{amplitude},{softening},{screening}")
            }
            Self::Rational { amplitude } => format!("rational:{amplitude}"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Zero => true,
            Self::Linear { kappa } => kappa.is_finite(),
            Self::GaussianDerivative { amplitude, width } => amplitude.is_finite() && width > 0.0,
            Self::ScreenedCoulomb { amplitude, softening, screening } => {
                amplitude.is_finite() && softening > 0.0 && screening > 0.0
            }
            Self::Rational { amplitude } => amplitude.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid interaction parameters: {}", self.name())))
        }
    }

    /// Coefficient `kappa` when the kernel is linear (`Zero` counts as 0).
    pub fn linear_coefficient(&self) -> Option<f64> {
        match *self {
            Self::Zero => Some(0.0),
            Self::Linear { kappa } => Some(kappa),
            _ => None,
        }
    }

    /// Writes `U(z)` into `out`.
    #[inline]
    pub fn eval(&self, z: &[f64], out: &mut [f64]) {
        let r2 = || z.iter().map(|x| x * x).sum::<f64>();
        let scale = match *self {
            Self::Zero => 0.0,
            Self::Linear { kappa } => -kappa,
            Self::GaussianDerivative { amplitude, width } => {
                let w2 = width * width;
                -amplitude / w2 * (-r2() / (2.0 * w2)).exp()
            }
            Self::ScreenedCoulomb { amplitude, softening, screening } => {
                let s2 = r2() + softening * softening;
                let s = s2.sqrt();
                amplitude * (-s / screening).exp() / (s2 * s)
            }
            Self::Rational { amplitude } => {
                let q = 1.0 + r2();
                amplitude / (q * q)
            }
        };
        out.iter_mut().zip(z).for_each(|(o, x)| *o = scale * x);
    }
}

/// `dz = (T z + F) dt + sigma dW`; matrices are row-major `m x m`.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftDiffusionSpec {
    pub dim: usize,
    pub linear_drift: Vec<f64>,
    pub diffusion: Vec<f64>,
    pub interaction: Interaction,
    /// Multiply the interaction sum by `N/(N-1)`.
    pub mean_over_others: bool,
}

fn scaled_identity(m: usize, c: f64) -> Vec<f64> {
    let mut a = vec![0.0; m * m];
    (0..m).for_each(|k| a[k * m + k] = c);
    a
}

impl DriftDiffusionSpec {
    /// `T = -lambda I`, `sigma = s I`.
    pub fn isotropic(dim: usize, lambda: f64, sigma: f64, interaction: Interaction) -> Result<Self> {
        let s = Self {
            dim,
            linear_drift: scaled_identity(dim, -lambda),
            diffusion: scaled_identity(dim, sigma),
            interaction,
            mean_over_others: false,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let m2 = self.dim * self.dim;
        if self.dim == 0 || self.linear_drift.len() != m2 || self.diffusion.len() != m2 {
            return Err(Error::invalid(format!("drift and diffusion must be {0}x{0} matrices", self.dim)));
        }
        if self.linear_drift.iter().chain(&self.diffusion).any(|x| !x.is_finite()) {
            return Err(Error::invalid("drift and diffusion entries must be finite"));
        }
        self.interaction.validate()
    }

    /// `A = sigma sigma^T / 2`.
    pub fn diffusion_tensor(&self) -> Vec<f64> {
        let m = self.dim;
        let s = &self.diffusion;
        let mut a = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                a[i * m + j] = 0.5 * (0..m).map(|k| s[i * m + k] * s[j * m + k]).sum::<f64>();
            }
        }
        a
    }

    fn has_noise(&self) -> bool {
        self.diffusion.iter().any(|&x| x != 0.0)
    }

    fn force_scale(&self, n: usize) -> f64 {
        let n = n as f64;
        if self.mean_over_others && n > 1.0 {
            1.0 / (n - 1.0)
        } else {
            1.0 / n
        }
    }
}

/// `(1/N) sum_{j != i} U(z_i - z_j)`, by direct summation.
pub fn pairwise_force(state: &ParticleState, spec: &DriftDiffusionSpec, i: usize) -> Result<Vec<f64>> {
    let n = state.n_particles();
    if i >= n {
        return Err(Error::invalid(format!("particle index {i} out of range for N = {n}")));
    }
    let m = state.dim();
    let mut acc = vec![0.0; m];
    let mut diff = vec![0.0; m];
    let mut u = vec![0.0; m];
    let zi = state.particle(i);
    for j in (0..n).filter(|&j| j != i) {
        diff.iter_mut().zip(zi.iter().zip(state.particle(j))).for_each(|(d, (a, b))| *d = a - b);
        spec.interaction.eval(&diff, &mut u);
        acc.iter_mut().zip(&u).for_each(|(a, b)| *a += b);
    }
    let c = spec.force_scale(n);
    acc.iter_mut().for_each(|a| *a *= c);
    Ok(acc)
}

/// All interaction forces into `out` (flat, `N x m`). Linear kernels use the
/// exact identity `sum_{j != i}(z_i - z_j) = N z_i - sum_j z_j`; other kernels
/// use the antisymmetric pair loop.
pub fn interaction_forces(coords: &[f64], m: usize, interaction: &Interaction, scale: f64, out: &mut [f64]) {
    let n = coords.len() / m;
    out.iter_mut().for_each(|x| *x = 0.0);
    if let Some(kappa) = interaction.linear_coefficient() {
        if kappa == 0.0 {
            return;
        }
        let mut sum = vec![0.0; m];
        for i in 0..n {
            sum.iter_mut().zip(&coords[i * m..(i + 1) * m]).for_each(|(s, x)| *s += x);
        }
        for i in 0..n {
            for k in 0..m {
                out[i * m + k] = -kappa * scale * (n as f64 * coords[i * m + k] - sum[k]);
            }
        }
        return;
    }
    let mut diff = vec![0.0; m];
    let mut u = vec![0.0; m];
    for i in 0..n {
        let zi = &coords[i * m..(i + 1) * m];
        for j in i + 1..n {
            let zj = &coords[j * m..(j + 1) * m];
            for k in 0..m {
                diff[k] = zi[k] - zj[k];
            }
            interaction.eval(&diff, &mut u);
            for k in 0..m {
                out[i * m + k] += u[k];
                out[j * m + k] -= u[k];
            }
        }
    }
    out.iter_mut().for_each(|x| *x *= scale);
}

fn em_step_in_place(
    state: &mut ParticleState,
    spec: &DriftDiffusionSpec,
    dt: f64,
    new_time: f64,
    rng: &mut RngStream,
    force: &mut [f64],
) -> Result<()> {
    let m = spec.dim;
    let n = state.n_particles();
    interaction_forces(state.coords(), m, &spec.interaction, spec.force_scale(n), force);
    let noise = spec.has_noise();
    let sq = dt.sqrt();
    let mut xi = vec![0.0; m];
    let mut next = vec![0.0; m];
    let (tm, sm) = (&spec.linear_drift, &spec.diffusion);
    for i in 0..n {
        let z = state.particle(i);
        if noise {
            rng.fill_normal(&mut xi);
        }
        for r in 0..m {
            let drift: f64 = (0..m).map(|c| tm[r * m + c] * z[c]).sum::<f64>() + force[i * m + r];
            let mut v = z[r] + drift * dt;
            if noise {
                v += sq * (0..m).map(|c| sm[r * m + c] * xi[c]).sum::<f64>();
            }
            next[r] = v;
        }
        state.particle_mut(i).copy_from_slice(&next);
    }
    state.set_time(new_time);
    state.check_finite()
}

/// One Euler-Maruyama step.
pub fn em_step(state: &ParticleState, spec: &DriftDiffusionSpec, dt: f64, rng: &mut RngStream) -> Result<ParticleState> {
    check_step(state, spec.dim, dt)?;
    spec.validate()?;
    let mut s = state.clone();
    let mut force = vec![0.0; s.coords().len()];
    let t = s.time() + dt;
    em_step_in_place(&mut s, spec, dt, t, rng, &mut force)?;
    Ok(s)
}

fn check_step(state: &ParticleState, m: usize, dt: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("time step dt = {dt} must be positive")));
    }
    if state.dim() != m {
        return Err(Error::invalid(format!("state dimension {} does not match model dimension {m}", state.dim())));
    }
    Ok(())
}

/// Step counts for each snapshot and for `t_end` on a grid of spacing `dt`
/// starting at `t0`; times must fall on the grid within rounding.
pub fn grid_steps(t0: f64, t_end: f64, dt: f64, snapshots: &[f64]) -> Result<(Vec<u64>, u64)> {
    check_snapshots(t0, t_end, snapshots)?;
    let to_steps = |t: f64| -> Result<u64> {
        let k = ((t - t0) / dt).round();
        if ((t - t0) - k * dt).abs() > 1e-9 * (1.0 + (t - t0).abs()) {
            return Err(Error::invalid(format!("time {t} is not a multiple of dt = {dt} from {t0}")));
        }
        Ok(k as u64)
    };
    let snaps = snapshots.iter().map(|&t| to_steps(t)).collect::<Result<Vec<_>>>()?;
    Ok((snaps, to_steps(t_end)?))
}

fn run_grid(
    initial: &ParticleState,
    t_end: f64,
    dt: f64,
    snapshot_times: &[f64],
    mut step: impl FnMut(&mut ParticleState, f64) -> Result<()>,
) -> Result<Vec<ParticleState>> {
    let t0 = initial.time();
    let (snaps, total) = grid_steps(t0, t_end, dt, snapshot_times)?;
    let mut s = initial.clone();
    let mut out = Vec::with_capacity(snaps.len().max(1));
    let mut next_snap = 0;
    for k in 0..=total {
        if k > 0 {
            // time on the grid, free of accumulated rounding
            step(&mut s, t0 + k as f64 * dt)?;
        }
        while next_snap < snaps.len() && snaps[next_snap] == k {
            let mut snap = s.clone();
            snap.set_time(snapshot_times[next_snap].max(s.time()));
            out.push(snap);
            next_snap += 1;
        }
    }
    if snapshot_times.is_empty() {
        out.push(s);
    }
    Ok(out)
}

/// Fixed-step Euler-Maruyama trajectory observed at the snapshot times.
pub fn simulate_mkv(
    initial: &ParticleState,
    spec: &DriftDiffusionSpec,
    t_end: f64,
    dt: f64,
    snapshot_times: &[f64],
    rng: &mut RngStream,
) -> Result<Vec<ParticleState>> {
    check_step(initial, spec.dim, dt)?;
    spec.validate()?;
    let mut force = vec![0.0; initial.coords().len()];
    run_grid(initial, t_end, dt, snapshot_times, |s, t| em_step_in_place(s, spec, dt, t, rng, &mut force))
}

/// Vlasov dynamics in `R^d x R^d`; the interaction plays the role of
/// `grad psi`.
#[derive(Clone, Debug, PartialEq)]
pub struct VlasovSpec {
    pub space_dim: usize,
    pub potential_gradient: Interaction,
}

impl VlasovSpec {
    /// `(x', v')` for coordinates laid out as `(x, v)` per particle.
    pub fn vector_field(&self, coords: &[f64], out: &mut [f64], accel: &mut [f64], positions: &mut [f64]) {
        let d = self.space_dim;
        let n = coords.len() / (2 * d);
        for i in 0..n {
            positions[i * d..(i + 1) * d].copy_from_slice(&coords[2 * d * i..2 * d * i + d]);
        }
        interaction_forces(positions, d, &self.potential_gradient, 1.0 / n as f64, accel);
        for i in 0..n {
            for k in 0..d {
                out[2 * d * i + k] = coords[2 * d * i + d + k];
                out[2 * d * i + d + k] = accel[i * d + k];
            }
        }
    }
}

/// Explicit midpoint integration; no randomness, so repeated runs agree bit
/// for bit.
pub fn simulate_vlasov(
    initial: &ParticleState,
    spec: &VlasovSpec,
    t_end: f64,
    dt: f64,
    snapshot_times: &[f64],
) -> Result<Vec<ParticleState>> {
    check_step(initial, 2 * spec.space_dim, dt)?;
    spec.potential_gradient.validate()?;
    let len = initial.coords().len();
    let n = initial.n_particles();
    let d = spec.space_dim;
    let mut k = vec![0.0; len];
    let mut mid = vec![0.0; len];
    let mut accel = vec![0.0; n * d];
    let mut pos = vec![0.0; n * d];
    run_grid(initial, t_end, dt, snapshot_times, |s, t| {
        spec.vector_field(s.coords(), &mut k, &mut accel, &mut pos);
        mid.iter_mut().zip(s.coords().iter().zip(&k)).for_each(|(m, (y, f))| *m = y + 0.5 * dt * f);
        spec.vector_field(&mid, &mut k, &mut accel, &mut pos);
        s.coords_mut().iter_mut().zip(&k).for_each(|(y, f)| *y += dt * f);
        s.set_time(t);
        s.check_finite()
    })
}

/// Mean and per-coordinate variance of the limit law at given times.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTrajectory {
    pub times: Vec<f64>,
    pub mean: Vec<Vec<f64>>,
    pub variance: Vec<Vec<f64>>,
}

/// Closed-form moments of the limit equation for `T = -lambda I`,
/// `U(z) = -kappa z` and diagonal `sigma`:
/// the mean solves `m' = -lambda m`, and the centred process is an
/// Ornstein-Uhlenbeck process with rate `lambda + kappa`, so
/// `V' = -2 (lambda + kappa) V + sigma^2`.
pub fn mkv_moment_oracle(spec: &DriftDiffusionSpec, mean0: &[f64], var0: &[f64], times: &[f64]) -> Result<MomentTrajectory> {
    spec.validate()?;
    let m = spec.dim;
    let kappa = spec
        .interaction
        .linear_coefficient()
        .ok_or_else(|| Error::invalid("moment oracle needs a linear interaction"))?;
    let lambda = -spec.linear_drift[0];
    for r in 0..m {
        for c in 0..m {
            let t = spec.linear_drift[r * m + c];
            let s = spec.diffusion[r * m + c];
            if (r == c && t != -lambda) || (r != c && (t != 0.0 || s != 0.0)) {
                return Err(Error::invalid("moment oracle needs T = -lambda I and diagonal sigma"));
            }
        }
    }
    if mean0.len() != m || var0.len() != m {
        return Err(Error::invalid("initial moments must have the model dimension"));
    }
    let rate = lambda + kappa;
    let mut out = MomentTrajectory { times: times.to_vec(), mean: Vec::new(), variance: Vec::new() };
    for &t in times {
        out.mean.push(mean0.iter().map(|m0| m0 * (-lambda * t).exp()).collect());
        out.variance.push(
            (0..m)
                .map(|k| {
                    let s2 = spec.diffusion[k * m + k].powi(2);
                    if rate == 0.0 {
                        var0[k] + s2 * t
                    } else {
                        let v_inf = s2 / (2.0 * rate);
                        v_inf + (var0[k] - v_inf) * (-2.0 * rate * t).exp()
                    }
                })
                .collect(),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::gaussian_sample_state;

    fn spec1(lambda: f64, sigma: f64, it: Interaction) -> DriftDiffusionSpec {
        DriftDiffusionSpec::isotropic(1, lambda, sigma, it).unwrap()
    }

    #[test]
    fn force_examples() {
        let s = ParticleState::new(1, vec![0.0, 1.0, 2.0], 0.0).unwrap();
        // U(z) = z is linear with kappa = -1
        let spec = spec1(0.0, 0.0, Interaction::Linear { kappa: -1.0 });
        assert_eq!(pairwise_force(&s, &spec, 0).unwrap(), vec![-1.0]);
        let zero = spec1(0.0, 0.0, Interaction::Zero);
        assert_eq!(pairwise_force(&s, &zero, 1).unwrap(), vec![0.0]);
        let one = ParticleState::new(1, vec![3.0], 0.0).unwrap();
        assert_eq!(pairwise_force(&one, &spec, 0).unwrap(), vec![0.0]);
    }

    #[test]
    fn fast_paths_match_direct_sum() {
        let s = gaussian_sample_state(&[0.0; 2], &[1.0; 2], 30, &mut RngStream::new(30, 0)).unwrap();
        for it in [
            Interaction::Linear { kappa: 0.7 },
            Interaction::GaussianDerivative { amplitude: 1.3, width: 0.8 },
            Interaction::ScreenedCoulomb { amplitude: 0.5, softening: 0.2, screening: 2.0 },
            Interaction::Rational { amplitude: -1.0 },
        ] {
            for flag in [false, true] {
                let mut spec = DriftDiffusionSpec::isotropic(2, 0.0, 0.0, it.clone()).unwrap();
                spec.mean_over_others = flag;
                let mut all = vec![0.0; 60];
                interaction_forces(s.coords(), 2, &it, spec.force_scale(30), &mut all);
                for i in 0..30 {
                    let f = pairwise_force(&s, &spec, i).unwrap();
                    for k in 0..2 {
                        assert!((f[k] - all[2 * i + k]).abs() < 1e-13, "{it:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn kernels_are_odd() {
        let z = [0.3, -1.1];
        let mz = [-0.3, 1.1];
        for name in ["linear:2", "gaussian_derivative:1,0.5", "screened_coulomb:1,0.1,3", "rational:2"] {
            let it = Interaction::from_name(name).unwrap();
            assert_eq!(Interaction::from_name(&it.name()).unwrap(), it);
            let (mut a, mut b) = ([0.0; 2], [0.0; 2]);
            it.eval(&z, &mut a);
            it.eval(&mz, &mut b);
            assert_eq!(a[0], -b[0]);
            it.eval(&[0.0, 0.0], &mut a);
            assert_eq!(a, [0.0, 0.0]);
        }
        assert!(Interaction::from_name("coulomb").is_err());
        assert!(Interaction::from_name("rational:1,2").is_err());
    }

    #[test]
    fn em_step_examples() {
        let s = ParticleState::new(1, vec![1.0], 0.0).unwrap();
        let null = spec1(0.0, 0.0, Interaction::Zero);
        let out = em_step(&s, &null, 0.1, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(out.coords(), &[1.0]);
        assert!((out.time() - 0.1).abs() < 1e-15);
        let decay = spec1(1.0, 0.0, Interaction::Zero);
        let out = em_step(&s, &decay, 0.1, &mut RngStream::new(0, 0)).unwrap();
        assert!((out.coords()[0] - 0.9).abs() < 1e-15);
        assert!(em_step(&s, &decay, 0.0, &mut RngStream::new(0, 0)).is_err());

        let n = 100_000;
        let zero = ParticleState::new(1, vec![0.0; n], 0.0).unwrap();
        let bm = spec1(0.0, 1.0, Interaction::Zero);
        let out = em_step(&zero, &bm, 0.01, &mut RngStream::new(31, 0)).unwrap();
        let var = out.coords().iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var / 0.01 - 1.0).abs() < 0.03);
    }

    #[test]
    fn blow_up_is_reported() {
        let s = ParticleState::new(1, vec![1e300, -1e300], 0.0).unwrap();
        let spec = spec1(-1e300, 0.0, Interaction::Zero);
        let e = em_step(&s, &spec, 1.0, &mut RngStream::new(0, 0)).unwrap_err();
        assert!(matches!(e, Error::BlowUp { .. }));
    }

    #[test]
    fn ou_variance_is_stationary() {
        let spec = spec1(1.0, 2f64.sqrt(), Interaction::Zero);
        let n = 20_000;
        let init = gaussian_sample_state(&[0.0], &[1.0], n, &mut RngStream::new(32, 1)).unwrap();
        let out = simulate_mkv(&init, &spec, 1.0, 1e-3, &[1.0], &mut RngStream::new(32, 0)).unwrap();
        let c = out[0].coords();
        let mean = c.iter().sum::<f64>() / n as f64;
        let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt() + 2e-3, "{var}");
        assert!((out[0].time() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_horizon_and_grid_checks() {
        let spec = spec1(1.0, 1.0, Interaction::Zero);
        let init = ParticleState::new(1, vec![0.5, 0.25], 0.0).unwrap();
        let out = simulate_mkv(&init, &spec, 0.0, 1e-3, &[0.0], &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(out, vec![init.clone()]);
        assert!(simulate_mkv(&init, &spec, 1.0, 0.3, &[0.5], &mut RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn euler_maruyama_weak_order_one() {
        // sigma = 0 isolates the time-discretisation error of the mean
        let spec = spec1(1.0, 0.0, Interaction::Linear { kappa: 0.5 });
        let init = gaussian_sample_state(&[1.0], &[0.5], 500, &mut RngStream::new(33, 1)).unwrap();
        let mean_at = |dt: f64| {
            let s = simulate_mkv(&init, &spec, 1.0, dt, &[], &mut RngStream::new(33, 0)).unwrap();
            s[0].coords().iter().sum::<f64>() / 500.0
        };
        let (a, b, c) = (mean_at(0.02), mean_at(0.01), mean_at(0.005));
        let ratio = (a - b).abs() / (b - c).abs();
        assert!((1.6..2.4).contains(&ratio), "{ratio}");
    }

    #[test]
    fn moment_oracle_matches_rk4() {
        let spec = DriftDiffusionSpec::isotropic(2, 0.5, 1.2, Interaction::Linear { kappa: 1.0 }).unwrap();
        let times: Vec<f64> = (0..=8).map(|k| k as f64 * 0.25).collect();
        let o = mkv_moment_oracle(&spec, &[1.0, -2.0], &[0.25, 3.0], &times).unwrap();
        // independent RK4 solve of (m, V)' = (-lambda m, -2 (lambda + kappa) V + s^2)
        let f = |y: [f64; 2]| [-0.5 * y[0], -3.0 * y[1] + 1.44];
        let mut y = [1.0, 0.25];
        let h: f64 = 1e-3;
        for (k, &t) in times.iter().enumerate() {
            let steps = if k == 0 { 0 } else { (0.25 / h).round() as usize };
            for _ in 0..steps {
                let k1 = f(y);
                let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
                let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
                let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
                for c in 0..2 {
                    y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
                }
            }
            assert!((o.mean[k][0] - y[0]).abs() < 1e-10, "t={t}");
            assert!((o.variance[k][0] - y[1]).abs() < 1e-10, "t={t}");
        }
        // trivial cases
        let still = spec1(0.0, 0.0, Interaction::Zero);
        let o = mkv_moment_oracle(&still, &[2.0], &[0.5], &[0.0, 3.0]).unwrap();
        assert_eq!(o.mean[1], vec![2.0]);
        assert_eq!(o.variance[1], vec![0.5]);
        let nonlinear = spec1(0.0, 0.0, Interaction::Rational { amplitude: 1.0 });
        assert!(mkv_moment_oracle(&nonlinear, &[0.0], &[1.0], &[1.0]).is_err());
    }

    #[test]
    fn stationary_variance_with_interaction_matches_large_n() {
        let spec = spec1(0.0, 2f64.sqrt(), Interaction::Linear { kappa: 1.0 });
        let o = mkv_moment_oracle(&spec, &[0.0], &[1.0], &[3.0]).unwrap();
        let n = 100_000;
        let init = gaussian_sample_state(&[0.0], &[1.0], n, &mut RngStream::new(34, 1)).unwrap();
        let out = simulate_mkv(&init, &spec, 3.0, 2e-3, &[3.0], &mut RngStream::new(34, 0)).unwrap();
        let c = out[0].coords();
        let mean = c.iter().sum::<f64>() / n as f64;
        let var = c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = o.variance[0][0] * (2.0 / n as f64).sqrt();
        // Euler-Maruyama inflates the OU variance by ~ rate * dt / 2
        assert!((var - o.variance[0][0]).abs() < 3.0 * se + o.variance[0][0] * 2e-3, "{var}");
    }

    #[test]
    fn vlasov_free_transport_and_determinism() {
        let spec = VlasovSpec { space_dim: 1, potential_gradient: Interaction::Zero };
        let init = ParticleState::new(2, vec![0.0, 1.0, 1.0, -0.5], 0.0).unwrap();
        let out = simulate_vlasov(&init, &spec, 1.0, 0.1, &[1.0]).unwrap();
        let c = out[0].coords();
        assert!((c[0] - 1.0).abs() < 1e-13 && (c[2] - 0.5).abs() < 1e-13);
        assert_eq!(c[1], 1.0);

        let spec = VlasovSpec { space_dim: 1, potential_gradient: Interaction::Rational { amplitude: 1.0 } };
        let init = ParticleState::new(2, vec![-0.3, 0.1, 0.2, 0.0, 0.9, -0.4], 0.0).unwrap();
        let a = simulate_vlasov(&init, &spec, 2.0, 0.01, &[1.0, 2.0]).unwrap();
        let b = simulate_vlasov(&init, &spec, 2.0, 0.01, &[1.0, 2.0]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn vlasov_conserves_momentum() {
        let spec = VlasovSpec { space_dim: 1, potential_gradient: Interaction::GaussianDerivative { amplitude: 2.0, width: 0.5 } };
        let init = ParticleState::new(2, vec![-0.4, 0.3, 0.1, -1.0], 0.0).unwrap();
        let p0 = init.coords()[1] + init.coords()[3];
        let mut s = init;
        for k in 1..=100 {
            s = simulate_vlasov(&s, &spec, k as f64 * 0.01, 0.01, &[]).unwrap().remove(0);
            let p = s.coords()[1] + s.coords()[3];
            assert!((p - p0).abs() <= 1e-12 * k as f64);
        }
    }

    #[test]
    fn single_particle_vlasov_is_free() {
        let spec = VlasovSpec { space_dim: 2, potential_gradient: Interaction::Rational { amplitude: 3.0 } };
        let init = ParticleState::new(4, vec![0.0, 1.0, 2.0, -1.0], 0.0).unwrap();
        let out = simulate_vlasov(&init, &spec, 0.5, 0.05, &[]).unwrap();
        let c = out[0].coords();
        assert!((c[0] - 1.0).abs() < 1e-13 && (c[1] - 0.5).abs() < 1e-13);
    }
}
