//! Limit solution of the 1-D Vlasov equation for monokinetic ("cold")
//! initial data.
//!
//! For `f_in(x, v) = 1/(2h) 1_{|x| < h} delta(v - u(x))` the mean-field flow
//! stays monokinetic and is described by Lagrangian trajectories
//! `X(a, t), V(a, t)` indexed by the initial position `a`:
//! `X' = V`, `V' = (1/2h) int grad psi(X(a) - X(b)) db`. The label integral
//! is discretised with Gauss-Legendre quadrature, which converges
//! spectrally for smooth kernels, and time is advanced with the same
//! explicit midpoint rule as the particle system.

use crate::init::cold_slab_velocity;
use crate::mckean_vlasov::{grid_steps, Interaction};
use crate::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColdSlabLimit {
    pub half_width: f64,
    pub velocity_amplitude: f64,
    pub potential_gradient: Interaction,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LagrangianSnapshot {
    pub time: f64,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    /// Quadrature weights, summing to 1.
    pub weights: Vec<f64>,
}

impl LagrangianSnapshot {
    /// `<f_t, phi>` for `phi` of the phase point `(x, v)`.
    pub fn integrate(&self, phi: impl Fn(&[f64]) -> f64) -> f64 {
        (0..self.weights.len())
            .map(|k| self.weights[k] * phi(&[self.positions[k], self.velocities[k]]))
            .sum()
    }
}

impl ColdSlabLimit {
    fn accel(&self, x: &[f64], w: &[f64], out: &mut [f64]) {
        let mut u = [0.0];
        for k in 0..x.len() {
            let mut a = 0.0;
            for j in 0..x.len() {
                self.potential_gradient.eval(&[x[k] - x[j]], &mut u);
                a += w[j] * u[0];
            }
            out[k] = a;
        }
    }

    pub fn evolve(&self, t_end: f64, dt: f64, snapshot_times: &[f64]) -> Result<Vec<LagrangianSnapshot>> {
        if self.nodes == 0 || !(self.half_width > 0.0) || !(dt > 0.0) {
            return Err(Error::invalid("cold slab limit needs nodes >= 1, h > 0 and dt > 0"));
        }
        self.potential_gradient.validate()?;
        let (snaps, total) = grid_steps(0.0, t_end, dt, snapshot_times)?;
        let (g, gw) = gauss_legendre(self.nodes);
        let h = self.half_width;
        let mut x: Vec<f64> = g.iter().map(|a| h * a).collect();
        let mut v: Vec<f64> = x.iter().map(|&a| cold_slab_velocity(a, h, self.velocity_amplitude)).collect();
        let w: Vec<f64> = gw.iter().map(|q| q / 2.0).collect();
        let n = x.len();
        let (mut acc, mut xm, mut vm) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut out = Vec::new();
        let mut next = 0;
        for k in 0..=total {
            if k > 0 {
                self.accel(&x, &w, &mut acc);
                for i in 0..n {
                    xm[i] = x[i] + 0.5 * dt * v[i];
                    vm[i] = v[i] + 0.5 * dt * acc[i];
                }
                self.accel(&xm, &w, &mut acc);
                for i in 0..n {
                    x[i] += dt * vm[i];
                    v[i] += dt * acc[i];
                }
            }
            while next < snaps.len() && snaps[next] == k {
                out.push(LagrangianSnapshot {
                    time: snapshot_times[next],
                    positions: x.clone(),
                    velocities: v.clone(),
                    weights: w.clone(),
                });
                next += 1;
            }
        }
        if x.iter().chain(&v).any(|z| !z.is_finite()) {
            return Err(Error::BlowUp { particle: 0, time: t_end });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 0 { 2.0 / (deg + 1) as f64 } else { 0.0 };
            let q: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(deg as i32)).sum();
            assert!((q - exact).abs() < 1e-13, "n={n}");
            let even = 2 * n - 2;
            let q: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(even as i32)).sum();
            assert!((q - 2.0 / (even + 1) as f64).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn free_streaming_limit_is_exact() {
        let lim = ColdSlabLimit { half_width: 1.0, velocity_amplitude: 0.5, potential_gradient: Interaction::Zero, nodes: 32 };
        let s = lim.evolve(1.0, 0.1, &[1.0]).unwrap();
        let x0 = gauss_legendre(32).0;
        for k in 0..32 {
            let v = cold_slab_velocity(x0[k], 1.0, 0.5);
            assert!((s[0].positions[k] - x0[k] - v).abs() < 1e-13);
        }
        assert!((s[0].integrate(|_| 1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quadrature_converges_under_interaction() {
        let mk = |nodes| ColdSlabLimit {
            half_width: 1.0,
            velocity_amplitude: 0.5,
            potential_gradient: Interaction::Rational { amplitude: 1.0 },
            nodes,
        };
        let phi = |z: &[f64]| (z[0] + 0.3 * z[1]).cos();
        let a = mk(48).evolve(1.0, 0.03125, &[1.0]).unwrap()[0].integrate(phi);
        let b = mk(96).evolve(1.0, 0.03125, &[1.0]).unwrap()[0].integrate(phi);
        assert!((a - b).abs() < 1e-13, "{}", (a - b).abs());
    }
}
