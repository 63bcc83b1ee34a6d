//! One-dimensional Fourier-spectral solver for the inelastic Boltzmann
//! equation with diffusion, based on Bobylev's identity.
//!
//! In `d = 1` the angular variable takes the two values `sigma = +-xi_hat`
//! with weights `b+` and `b- = 1 - b+`. The first leaves the pair unchanged
//! (`xi+ = xi`, `xi- = 0`), the second gives `xi+ = (1-alpha)/2 xi`,
//! `xi- = (1+alpha)/2 xi`, so that
//! `dF/dt = lambda (b+ F(xi) F(0) + b- F(xi+) F(xi-) - F(xi)) - nu xi^2 F(xi)`.
//! Off-grid values come from monotone cubic (Fritsch-Carlson) interpolation of the
//! real and imaginary parts.

use num_complex::Complex64;

use crate::state::EmpiricalMeasure;
use crate::{Error, Result};

/// Characteristic function `F(xi) = int exp(-i xi v) f(dv)` on a symmetric
/// uniform grid containing `xi = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpectrum {
    xi: Vec<f64>,
    values: Vec<Complex64>,
}

/// Symmetric uniform grid `[-xi_max, xi_max]` with `intervals` cells
/// (`intervals + 1` nodes, `intervals` even so that 0 is a node).
pub fn uniform_grid(xi_max: f64, intervals: usize) -> Result<Vec<f64>> {
    if intervals < 2 || intervals % 2 != 0 || !(xi_max > 0.0) {
        return Err(Error::invalid("grid needs an even number of intervals and xi_max > 0"));
    }
    let h = 2.0 * xi_max / intervals as f64;
    let half = intervals / 2;
    Ok((0..=intervals)
        .map(|k| {
            let j = k as i64 - half as i64;
            j as f64 * h
        })
        .collect())
}

fn grid_step(xi: &[f64]) -> Result<f64> {
    let k = xi.len();
    if k < 3 || k % 2 == 0 {
        return Err(Error::invalid("grid needs an odd number (>= 3) of nodes"));
    }
    let h = (xi[k - 1] - xi[0]) / (k - 1) as f64;
    let mid = k / 2;
    for (i, &x) in xi.iter().enumerate() {
        let expect = (i as f64 - mid as f64) * h;
        if (x - expect).abs() > 1e-9 * h {
            return Err(Error::invalid("grid must be uniform and symmetric about 0"));
        }
    }
    Ok(h)
}

impl GridSpectrum {
    pub fn new(xi: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        grid_step(&xi)?;
        if values.len() != xi.len() {
            return Err(Error::invalid("one value per grid node is required"));
        }
        Ok(Self { xi, values })
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn zero_index(&self) -> usize {
        self.xi.len() / 2
    }

    pub fn step(&self) -> f64 {
        self.xi[1] - self.xi[0]
    }

    /// `-Re F''(0)`, i.e. `int v^2 f`, by a fourth-order central difference.
    pub fn second_moment(&self) -> f64 {
        let z = self.zero_index();
        let h = self.step();
        let f = |k: isize| self.values[(z as isize + k) as usize].re;
        -(-f(-2) + 16.0 * f(-1) - 30.0 * f(0) + 16.0 * f(1) - f(2)) / (12.0 * h * h)
    }

    /// Largest modulus at the two end nodes.
    pub fn boundary_modulus(&self) -> f64 {
        self.values[0].norm().max(self.values[self.values.len() - 1].norm())
    }

    /// `(|F(0) - 1|, max |F(-xi) - conj F(xi)|, max |F|)`.
    pub fn invariant_errors(&self) -> (f64, f64, f64) {
        let k = self.values.len();
        let mass = (self.values[self.zero_index()] - 1.0).norm();
        let herm = (0..k).map(|i| (self.values[k - 1 - i] - self.values[i].conj()).norm()).fold(0.0, f64::max);
        let modulus = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        (mass, herm, modulus)
    }
}

/// `F(xi) = (1/N) sum_j exp(-i xi z_j)`, exactly at every node.
pub fn char_from_empirical(mu: &EmpiricalMeasure, xi: &[f64]) -> Result<GridSpectrum> {
    if mu.dim() != 1 {
        return Err(Error::invalid("characteristic functions on a grid need 1-D atoms"));
    }
    let w = mu.weight();
    let values = xi
        .iter()
        .map(|&x| {
            let (mut re, mut im) = (0.0, 0.0);
            for &z in mu.raw() {
                let (s, c) = (x * z).sin_cos();
                re += c;
                im -= s;
            }
            Complex64::new(re * w, im * w)
        })
        .collect();
    GridSpectrum::new(xi.to_vec(), values)
}

/// Characteristic function of `N(mean, variance)`.
pub fn gaussian_spectrum(mean: f64, variance: f64, xi: &[f64]) -> Result<GridSpectrum> {
    if !(variance >= 0.0) {
        return Err(Error::invalid("variance must be nonnegative"));
    }
    let values = xi
        .iter()
        .map(|&x| Complex64::from_polar((-0.5 * variance * x * x).exp(), -mean * x))
        .collect();
    GridSpectrum::new(xi.to_vec(), values)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralModel {
    pub alpha: f64,
    /// Weight `b+` of `sigma = +xi_hat`.
    pub forward_weight: f64,
    /// Collision frequency per particle (`lambda`).
    pub collision_rate: f64,
    pub with_collisions: bool,
    pub with_diffusion: bool,
    pub nu: f64,
}

impl SpectralModel {
    /// Unit collision frequency, isotropic kernel, `nu = 1`.
    pub fn new(alpha: f64, with_diffusion: bool) -> Result<Self> {
        let m = Self {
            alpha,
            forward_weight: 0.5,
            collision_rate: 1.0,
            with_collisions: true,
            with_diffusion,
            nu: 1.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha = {} outside (0, 1]", self.alpha)));
        }
        if !(0.0..=1.0).contains(&self.forward_weight) {
            return Err(Error::invalid("forward weight must lie in [0, 1]"));
        }
        if !(self.collision_rate >= 0.0) || !(self.nu >= 0.0) {
            return Err(Error::invalid("rates must be nonnegative"));
        }
        Ok(())
    }

    /// Largest stable RK4 step for the grid: the linear part has spectral
    /// radius at most `2 lambda + nu xi_max^2`, and RK4 is stable on the
    /// negative real axis up to about 2.785.
    pub fn stability_bound(&self, xi_max: f64) -> f64 {
        let mut r = 0.0;
        if self.with_collisions {
            r += 2.0 * self.collision_rate;
        }
        if self.with_diffusion {
            r += self.nu * xi_max * xi_max;
        }
        if r == 0.0 {
            f64::INFINITY
        } else {
            2.785 / r
        }
    }
}

/// Monotone cubic (Fritsch-Carlson) slopes of `y` on a uniform grid of
/// step `h`: centered differences, zeroed at local extrema and scaled back
/// where they would break monotonicity on an interval.
fn monotone_slopes(y: &[f64], h: f64, d: &mut [f64]) {
    let n = y.len();
    let delta = |k: usize| (y[k + 1] - y[k]) / h;
    for k in 1..n - 1 {
        let (a, b) = (delta(k - 1), delta(k));
        d[k] = if a * b <= 0.0 { 0.0 } else { 0.5 * (a + b) };
    }
    d[0] = delta(0);
    d[n - 1] = delta(n - 2);
    for k in 0..n - 1 {
        let dk = delta(k);
        if dk == 0.0 {
            d[k] = 0.0;
            d[k + 1] = 0.0;
            continue;
        }
        let (a, b) = (d[k] / dk, d[k + 1] / dk);
        let r2 = a * a + b * b;
        if r2 > 9.0 {
            let tau = 3.0 / r2.sqrt();
            d[k] = tau * a * dk;
            d[k + 1] = tau * b * dk;
        }
    }
}

#[inline]
fn hermite(y0: f64, y1: f64, d0: f64, d1: f64, h: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1
}

/// Interval index and offset of the points `c * xi_k`.
#[derive(Clone, Debug)]
struct Taps {
    idx: Vec<usize>,
    t: Vec<f64>,
}

impl Taps {
    fn new(xi: &[f64], c: f64) -> Result<Self> {
        let n = xi.len();
        let h = xi[1] - xi[0];
        let mut idx = Vec::with_capacity(n);
        let mut t = Vec::with_capacity(n);
        for &x in xi {
            let target = c * x;
            if target < xi[0] - 1e-12 * h || target > xi[n - 1] + 1e-12 * h {
                return Err(Error::GridTruncation { xi: target, lo: xi[0], hi: xi[n - 1] });
            }
            let pos = ((target - xi[0]) / h).clamp(0.0, (n - 1) as f64);
            let j = (pos.floor() as usize).min(n - 2);
            idx.push(j);
            t.push(pos - j as f64);
        }
        Ok(Self { idx, t })
    }
}

/// Reusable evaluator of the right-hand side on a fixed grid.
pub struct BobylevOperator {
    model: SpectralModel,
    xi: Vec<f64>,
    h: f64,
    plus: Taps,
    minus: Taps,
    slopes_re: Vec<f64>,
    slopes_im: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl BobylevOperator {
    pub fn new(model: SpectralModel, xi: &[f64]) -> Result<Self> {
        model.validate()?;
        let h = grid_step(xi)?;
        let n = xi.len();
        Ok(Self {
            model,
            xi: xi.to_vec(),
            h,
            plus: Taps::new(xi, 0.5 * (1.0 - model.alpha))?,
            minus: Taps::new(xi, 0.5 * (1.0 + model.alpha))?,
            slopes_re: vec![0.0; n],
            slopes_im: vec![0.0; n],
            re: vec![0.0; n],
            im: vec![0.0; n],
        })
    }

    fn interp(&self, taps: &Taps, k: usize) -> Complex64 {
        let j = taps.idx[k];
        let t = taps.t[k];
        let h = self.h;
        Complex64::new(
            hermite(self.re[j], self.re[j + 1], self.slopes_re[j], self.slopes_re[j + 1], h, t),
            hermite(self.im[j], self.im[j + 1], self.slopes_im[j], self.slopes_im[j + 1], h, t),
        )
    }

    pub fn apply(&mut self, f: &[Complex64], out: &mut [Complex64]) {
        let m = self.model;
        let n = f.len();
        let z = n / 2;
        if m.with_collisions {
            for k in 0..n {
                self.re[k] = f[k].re;
                self.im[k] = f[k].im;
            }
            monotone_slopes(&self.re, self.h, &mut self.slopes_re);
            monotone_slopes(&self.im, self.h, &mut self.slopes_im);
        }
        let bp = m.forward_weight;
        let bm = 1.0 - bp;
        for k in 0..n {
            let mut r = Complex64::new(0.0, 0.0);
            if m.with_collisions {
                let gain = if k == z {
                    // xi = 0: every argument is 0
                    (bp + bm) * f[z] * f[z]
                } else {
                    bp * f[k] * f[z] + bm * self.interp(&self.plus, k) * self.interp(&self.minus, k)
                };
                r += m.collision_rate * (gain - f[k]);
            }
            if m.with_diffusion {
                r -= m.nu * self.xi[k] * self.xi[k] * f[k];
            }
            out[k] = r;
        }
    }
}

/// `dF/dt` at every node.
pub fn bobylev_rhs(spectrum: &GridSpectrum, model: &SpectralModel) -> Result<Vec<Complex64>> {
    let mut op = BobylevOperator::new(*model, spectrum.xi())?;
    let mut out = vec![Complex64::new(0.0, 0.0); spectrum.values.len()];
    op.apply(&spectrum.values, &mut out);
    Ok(out)
}

/// Worst invariant violations seen over a run.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InvariantLog {
    pub steps: u64,
    pub max_mass_error: f64,
    pub max_hermitian_error: f64,
    pub max_modulus: f64,
}

impl InvariantLog {
    pub const MASS_TOL: f64 = 1e-10;
    pub const HERMITIAN_TOL: f64 = 1e-10;
    pub const MODULUS_TOL: f64 = 1e-6;

    fn record(&mut self, s: &GridSpectrum) {
        let (m, h, a) = s.invariant_errors();
        self.steps += 1;
        self.max_mass_error = self.max_mass_error.max(m);
        self.max_hermitian_error = self.max_hermitian_error.max(h);
        self.max_modulus = self.max_modulus.max(a);
    }

    pub fn holds(&self) -> bool {
        self.max_mass_error <= Self::MASS_TOL
            && self.max_hermitian_error <= Self::HERMITIAN_TOL
            && self.max_modulus <= 1.0 + Self::MODULUS_TOL
    }

    pub fn merge(&mut self, other: &InvariantLog) {
        self.steps += other.steps;
        self.max_mass_error = self.max_mass_error.max(other.max_mass_error);
        self.max_hermitian_error = self.max_hermitian_error.max(other.max_hermitian_error);
        self.max_modulus = self.max_modulus.max(other.max_modulus);
    }
}

/// RK4 integration to `t_end` with step at most `dt`. `observe` sees the
/// spectrum after every step (and once at `t = 0`). Aborts if `|F|` exceeds
/// `1 + 1e-6` anywhere.
pub fn spectral_evolve_observed(
    spectrum: &GridSpectrum,
    model: &SpectralModel,
    t_end: f64,
    dt: f64,
    mut observe: impl FnMut(f64, &GridSpectrum),
) -> Result<(GridSpectrum, InvariantLog)> {
    if !(t_end >= 0.0) || !(dt > 0.0) {
        return Err(Error::invalid("t_end must be >= 0 and dt > 0"));
    }
    let mut log = InvariantLog::default();
    let mut cur = spectrum.clone();
    log.record(&cur);
    observe(0.0, &cur);
    if t_end == 0.0 {
        return Ok((cur, log));
    }
    let xi_max = *cur.xi.last().unwrap();
    let bound = model.stability_bound(xi_max);
    if dt > bound {
        return Err(Error::invalid(format!("dt = {dt} exceeds the RK4 stability bound {bound:.3e} for this grid")));
    }
    if cur.boundary_modulus() >= 1e-6 {
        return Err(Error::SpectralInvariant(format!(
            "|F| = {:.3e} at the grid boundary; widen the grid",
            cur.boundary_modulus()
        )));
    }
    let steps = (t_end / dt).ceil() as u64;
    let h = t_end / steps as f64;
    let n = cur.values.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut op = BobylevOperator::new(*model, &cur.xi)?;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    for s in 1..=steps {
        let y = &cur.values;
        op.apply(y, &mut k1);
        (0..n).for_each(|i| tmp[i] = y[i] + 0.5 * h * k1[i]);
        op.apply(&tmp, &mut k2);
        (0..n).for_each(|i| tmp[i] = y[i] + 0.5 * h * k2[i]);
        op.apply(&tmp, &mut k3);
        (0..n).for_each(|i| tmp[i] = y[i] + h * k3[i]);
        op.apply(&tmp, &mut k4);
        for i in 0..n {
            cur.values[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t = s as f64 * h;
        if let Some((i, v)) = cur
            .values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.norm() <= 1.0 + InvariantLog::MODULUS_TOL))
        {
            return Err(Error::SpectralInstability { xi: cur.xi[i], modulus: v.norm(), time: t });
        }
        log.record(&cur);
        observe(t, &cur);
    }
    Ok((cur, log))
}

pub fn spectral_evolve(spectrum: &GridSpectrum, model: &SpectralModel, t_end: f64, dt: f64) -> Result<GridSpectrum> {
    spectral_evolve_observed(spectrum, model, t_end, dt, |_, _| {}).map(|(s, _)| s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        uniform_grid(40.0, 512).unwrap()
    }

    #[test]
    fn grid_layout() {
        let g = grid();
        assert_eq!(g.len(), 513);
        assert_eq!(g[256], 0.0);
        assert_eq!(g[0], -40.0);
        assert!(uniform_grid(1.0, 3).is_err());
    }

    #[test]
    fn empirical_spectra() {
        let g = uniform_grid(5.0, 20).unwrap();
        let d0 = char_from_empirical(&EmpiricalMeasure::from_points_1d(&[0.0]).unwrap(), &g).unwrap();
        assert!(d0.values().iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        let da = char_from_empirical(&EmpiricalMeasure::from_points_1d(&[0.7]).unwrap(), &g).unwrap();
        for (x, v) in g.iter().zip(da.values()) {
            assert!((v.norm() - 1.0).abs() < 1e-15);
            assert!((v - Complex64::from_polar(1.0, -0.7 * x)).norm() < 1e-15);
        }
        let pm = char_from_empirical(&EmpiricalMeasure::from_points_1d(&[-1.0, 1.0]).unwrap(), &g).unwrap();
        for (x, v) in g.iter().zip(pm.values()) {
            assert!((v.re - x.cos()).abs() < 1e-15 && v.im.abs() < 1e-15);
        }
    }

    #[test]
    fn dirac_is_a_collision_fixed_point() {
        let g = grid();
        let ones = GridSpectrum::new(g.clone(), vec![Complex64::new(1.0, 0.0); g.len()]).unwrap();
        for alpha in [0.3, 0.8, 1.0] {
            let m = SpectralModel::new(alpha, false).unwrap();
            let r = bobylev_rhs(&ones, &m).unwrap();
            assert!(r.iter().all(|v| v.norm() < 1e-15));
            let m = SpectralModel::new(alpha, true).unwrap();
            let r = bobylev_rhs(&ones, &m).unwrap();
            for (x, v) in g.iter().zip(&r) {
                assert!((v.re + x * x).abs() < 1e-12 && v.im.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mass_node_has_zero_rhs() {
        let g = grid();
        let s = gaussian_spectrum(0.4, 0.8, &g).unwrap();
        let r = bobylev_rhs(&s, &SpectralModel::new(0.6, true).unwrap()).unwrap();
        assert_eq!(r[256], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn elastic_energy_is_conserved() {
        let g = grid();
        let s = gaussian_spectrum(0.0, 1.3, &g).unwrap();
        let m = SpectralModel::new(1.0, false).unwrap();
        let out = spectral_evolve(&s, &m, 1.0, 1e-3).unwrap();
        assert!((out.second_moment() - s.second_moment()).abs() < 1e-6 * s.second_moment());
    }

    #[test]
    fn pure_diffusion_is_the_heat_multiplier() {
        let g = grid();
        let s = gaussian_spectrum(0.5, 0.3, &g).unwrap();
        let mut m = SpectralModel::new(0.8, true).unwrap();
        m.with_collisions = false;
        let t = 0.2;
        let out = spectral_evolve(&s, &m, t, 1e-3).unwrap();
        for ((x, a), b) in g.iter().zip(out.values()).zip(s.values()) {
            assert!((a - b * (-x * x * t).exp()).norm() < 1e-9);
        }
    }

    #[test]
    fn zero_horizon_returns_input() {
        let s = gaussian_spectrum(0.0, 1.0, &grid()).unwrap();
        let m = SpectralModel::new(0.8, true).unwrap();
        assert_eq!(spectral_evolve(&s, &m, 0.0, 1e-3).unwrap(), s);
        assert!(spectral_evolve(&s, &m, 1.0, 0.01).is_err());
    }

    #[test]
    fn cooling_without_bath_is_monotone() {
        // F = exp(-xi^2) is negligible beyond |xi| = 6; a fine grid resolves
        // the curvature at 0
        let s = gaussian_spectrum(0.0, 2.0, &uniform_grid(8.0, 1024).unwrap()).unwrap();
        let m = SpectralModel::new(0.7, false).unwrap();
        let mut last = f64::INFINITY;
        let mut ok = true;
        let (_, log) = spectral_evolve_observed(&s, &m, 1.0, 1e-3, |_, f| {
            let e = f.second_moment();
            ok &= e <= last + 1e-12;
            last = e;
        })
        .unwrap();
        assert!(ok);
        assert!(log.holds(), "{log:?}");
        // Haff: d E/dt = -lambda (1 - alpha^2)(1 - b1) E / 4 with b1 = 0
        let expect = 2.0 * (-(1.0 - 0.49) / 4.0f64).exp();
        assert!((last - expect).abs() < 1e-4 * expect, "{last} vs {expect}");
    }

    #[test]
    fn bath_drives_energy_to_balance() {
        // nu small keeps the stationary law resolved on the grid
        let g = grid();
        let s = gaussian_spectrum(0.0, 1.0, &g).unwrap();
        let mut m = SpectralModel::new(0.8, true).unwrap();
        m.nu = 0.05;
        let t_inf = 8.0 * m.nu / (1.0 - 0.64);
        let out = spectral_evolve(&s, &m, 40.0, 1e-3).unwrap();
        let e = out.second_moment();
        assert!((e - t_inf).abs() < 0.02 * t_inf, "{e} vs {t_inf}");
    }
}
