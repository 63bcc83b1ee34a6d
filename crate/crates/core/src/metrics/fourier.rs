//! Fourier-based distances on a finite frequency grid.

use num_complex::Complex64;

use crate::limit::spectral::{char_from_empirical, GridSpectrum};
use crate::state::EmpiricalMeasure;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToscaniValue {
    pub value: f64,
    /// Grid node where the supremum is attained.
    pub argmax_xi: f64,
    /// The supremum sits on an end node of the grid, a sign that the grid
    /// does not cover it.
    pub at_boundary: bool,
}

fn check_pair(a: &GridSpectrum, b: &GridSpectrum) -> Result<()> {
    if a.xi() != b.xi() {
        return Err(Error::invalid("spectra must share the frequency grid"));
    }
    Ok(())
}

/// `max_k |F_a(xi_k) - F_b(xi_k)| / (1 + xi_k^2)^{s/2}`.
pub fn toscani_norm(a: &GridSpectrum, b: &GridSpectrum, s: f64) -> Result<ToscaniValue> {
    check_pair(a, b)?;
    if !(s > 0.0) {
        return Err(Error::invalid("Toscani order s must be positive"));
    }
    let xi = a.xi();
    let mut best = (0.0, 0usize);
    for (k, (fa, fb)) in a.values().iter().zip(b.values()).enumerate() {
        let r = (fa - fb).norm() / (1.0 + xi[k] * xi[k]).powf(0.5 * s);
        if r > best.0 {
            best = (r, k);
        }
    }
    let k = best.1;
    Ok(ToscaniValue {
        value: best.0,
        argmax_xi: xi[k],
        at_boundary: best.0 > 0.0 && (k == 0 || k == xi.len() - 1),
    })
}

pub fn toscani_norm_empirical(a: &EmpiricalMeasure, b: &EmpiricalMeasure, s: f64, xi: &[f64]) -> Result<ToscaniValue> {
    toscani_norm(&char_from_empirical(a, xi)?, &char_from_empirical(b, xi)?, s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SobolevValue {
    pub value: f64,
    /// Estimated share of `int |dF|^2 <xi>^{-2s}` lying beyond the grid,
    /// extrapolating the boundary integrand with its `|xi|^{-2s}` decay.
    pub tail_fraction: f64,
    pub warning: bool,
}

/// `( int |F_a - F_b|^2 / (1 + xi^2)^s d xi )^{1/2}` by the trapezoid rule.
/// One-dimensional grids only, `s >= 1`.
pub fn h_neg_sobolev_norm(a: &GridSpectrum, b: &GridSpectrum, s: f64) -> Result<SobolevValue> {
    check_pair(a, b)?;
    if !(s >= 1.0) {
        return Err(Error::invalid("negative Sobolev order must satisfy s >= 1 in one dimension"));
    }
    let xi = a.xi();
    let g: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .zip(xi)
        .map(|((fa, fb), x): ((&Complex64, &Complex64), &f64)| (fa - fb).norm_sqr() / (1.0 + x * x).powf(s))
        .collect();
    let h = xi[1] - xi[0];
    let n = g.len();
    let integral = h * (g.iter().sum::<f64>() - 0.5 * (g[0] + g[n - 1]));
    let tail = (g[0] * xi[0].abs() + g[n - 1] * xi[n - 1].abs()) / (2.0 * s - 1.0);
    let tail_fraction = if integral > 0.0 { tail / integral } else { 0.0 };
    Ok(SobolevValue {
        value: integral.sqrt(),
        tail_fraction,
        warning: tail_fraction > 0.01,
    })
}
