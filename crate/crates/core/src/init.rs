//! Initial laws `f_in` used to seed the particle systems.

use crate::rng::RngStream;
use crate::state::{normal_quantile, quantile_init_1d, ParticleState};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum InitialLaw {
    /// Independent Gaussian coordinates.
    Gaussian { mean: Vec<f64>, variance: Vec<f64> },
    /// Uniform on the sphere of the given radius in `R^dim`.
    SphereShell { dim: usize, radius: f64 },
    /// Uniform on the cube `[-h, h]^dim`.
    UniformBox { dim: usize, half_width: f64 },
    Dirac { point: Vec<f64> },
    /// Deterministic midpoint quantiles of `U[lo, hi]`.
    QuantileUniform { lo: f64, hi: f64 },
    /// Deterministic midpoint quantiles of `N(mean, sd^2)`.
    QuantileGaussian { mean: f64, sd: f64 },
    /// 1-D phase space `(x, v)`: positions at the midpoint quantiles of
    /// `U[-h, h]`, velocities `amplitude * sin(pi x / (2h))`.
    ColdSlab { half_width: f64, velocity_amplitude: f64 },
    /// Explicit particle list (from an initial-state file).
    Points { dim: usize, coords: Vec<f64> },
}

impl InitialLaw {
    pub fn standard_gaussian(dim: usize) -> Self {
        InitialLaw::Gaussian {
            mean: vec![0.0; dim],
            variance: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            InitialLaw::Gaussian { mean, .. } => mean.len(),
            InitialLaw::SphereShell { dim, .. } | InitialLaw::UniformBox { dim, .. } => *dim,
            InitialLaw::Dirac { point } => point.len(),
            InitialLaw::QuantileUniform { .. } | InitialLaw::QuantileGaussian { .. } => 1,
            InitialLaw::ColdSlab { .. } => 2,
            InitialLaw::Points { dim, .. } => *dim,
        }
    }

    /// True when sampling consumes no randomness.
    pub fn is_deterministic(&self) -> bool {
        matches!(
            self,
            InitialLaw::Dirac { .. }
                | InitialLaw::QuantileUniform { .. }
                | InitialLaw::QuantileGaussian { .. }
                | InitialLaw::ColdSlab { .. }
                | InitialLaw::Points { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(m.to_string()));
        match self {
            InitialLaw::Gaussian { mean, variance } => {
                if mean.is_empty() || mean.len() != variance.len() {
                    return bad("gaussian mean and variance need equal positive length");
                }
                if variance.iter().any(|v| !(*v >= 0.0)) {
                    return bad("gaussian variance must be nonnegative");
                }
            }
            InitialLaw::SphereShell { dim, radius } => {
                if *dim == 0 || !(*radius >= 0.0) {
                    return bad("sphere shell needs dim >= 1 and radius >= 0");
                }
            }
            InitialLaw::UniformBox { dim, half_width } => {
                if *dim == 0 || !(*half_width >= 0.0) {
                    return bad("uniform box needs dim >= 1 and half width >= 0");
                }
            }
            InitialLaw::Dirac { point } => {
                if point.is_empty() {
                    return bad("dirac point must be nonempty");
                }
            }
            InitialLaw::QuantileUniform { lo, hi } => {
                if !(hi > lo) {
                    return bad("quantile uniform needs lo < hi");
                }
            }
            InitialLaw::QuantileGaussian { sd, .. } => {
                if !(*sd > 0.0) {
                    return bad("quantile gaussian needs sd > 0");
                }
            }
            InitialLaw::ColdSlab { half_width, .. } => {
                if !(*half_width > 0.0) {
                    return bad("cold slab needs a positive half width");
                }
            }
            InitialLaw::Points { dim, coords } => {
                if *dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
                    return bad("point list does not hold whole particles");
                }
            }
        }
        Ok(())
    }

    /// Maps one standard normal vector to a draw from the law. Laws driven
    /// this way can be coupled by feeding two of them the same normals.
    fn push_from_normals(&self, g: &[f64], out: &mut Vec<f64>) {
        match self {
            InitialLaw::Gaussian { mean, variance } => {
                out.extend(mean.iter().zip(variance).zip(g).map(|((m, v), z)| m + v.sqrt() * z));
            }
            InitialLaw::SphereShell { radius, .. } => {
                let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
                out.extend(g.iter().map(|z| radius * z / norm));
            }
            InitialLaw::UniformBox { half_width, .. } => {
                use statrs::distribution::{ContinuousCDF, Normal};
                let std = Normal::standard();
                out.extend(g.iter().map(|z| half_width * (2.0 * std.cdf(*z) - 1.0)));
            }
            InitialLaw::Dirac { point } => out.extend_from_slice(point),
            _ => unreachable!("deterministic laws are not driven by normals"),
        }
    }

    /// `n` particles from the law. Random laws consume `dim` normals per
    /// particle; deterministic laws ignore `rng`.
    pub fn sample(&self, n: usize, rng: &mut RngStream) -> Result<ParticleState> {
        self.validate()?;
        if n == 0 {
            return Err(Error::invalid("need at least one particle"));
        }
        let dim = self.dim();
        match self {
            InitialLaw::QuantileUniform { lo, hi } => quantile_init_1d(|p| lo + (hi - lo) * p, n),
            InitialLaw::QuantileGaussian { mean, sd } => {
                quantile_init_1d(|p| mean + sd * normal_quantile(p), n)
            }
            InitialLaw::ColdSlab {
                half_width,
                velocity_amplitude,
            } => {
                let xs = quantile_init_1d(|p| half_width * (2.0 * p - 1.0), n)?;
                let coords = xs
                    .coords()
                    .iter()
                    .flat_map(|&x| [x, cold_slab_velocity(x, *half_width, *velocity_amplitude)])
                    .collect();
                ParticleState::new(2, coords, 0.0)
            }
            InitialLaw::Points { dim, coords } => {
                if coords.len() / dim != n {
                    return Err(Error::invalid(format!(
                        "initial-state file holds {} particles but {n} were requested",
                        coords.len() / dim
                    )));
                }
                ParticleState::new(*dim, coords.clone(), 0.0)
            }
            _ => {
                let mut coords = Vec::with_capacity(n * dim);
                let mut g = vec![0.0; dim];
                for _ in 0..n {
                    rng.fill_normal(&mut g);
                    self.push_from_normals(&g, &mut coords);
                }
                ParticleState::new(dim, coords, 0.0)
            }
        }
    }

    /// Two samples driven by the same normals (common random numbers). For
    /// Gaussian pairs with diagonal covariance this is the optimal coupling.
    pub fn sample_coupled(
        a: &InitialLaw,
        b: &InitialLaw,
        n: usize,
        rng: &mut RngStream,
    ) -> Result<(ParticleState, ParticleState)> {
        a.validate()?;
        b.validate()?;
        if a.dim() != b.dim() {
            return Err(Error::invalid("coupled laws must share the dimension"));
        }
        if a.is_deterministic() || b.is_deterministic() {
            return Err(Error::invalid("coupled sampling needs two random laws"));
        }
        let dim = a.dim();
        let (mut ca, mut cb) = (Vec::with_capacity(n * dim), Vec::with_capacity(n * dim));
        let mut g = vec![0.0; dim];
        for _ in 0..n {
            rng.fill_normal(&mut g);
            a.push_from_normals(&g, &mut ca);
            b.push_from_normals(&g, &mut cb);
        }
        Ok((ParticleState::new(dim, ca, 0.0)?, ParticleState::new(dim, cb, 0.0)?))
    }
}

pub fn cold_slab_velocity(x: f64, half_width: f64, amplitude: f64) -> f64 {
    amplitude * (std::f64::consts::PI * x / (2.0 * half_width)).sin()
}

/// Reads an initial-state file: one particle per line, whitespace-separated
/// coordinates. Blank lines and `#` comments are skipped.
pub fn read_points(text: &str) -> Result<InitialLaw> {
    let mut dim = None;
    let mut coords = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse).collect();
        let row = row.map_err(|e| Error::invalid(format!("line {}: {e}", lineno + 1)))?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::invalid(format!(
                    "line {}: expected {d} coordinates, found {}",
                    lineno + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        coords.extend(row);
    }
    let dim = dim.ok_or_else(|| Error::invalid("initial-state file has no particles"))?;
    Ok(InitialLaw::Points { dim, coords })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_shell_has_fixed_radius() {
        let law = InitialLaw::SphereShell { dim: 3, radius: 3f64.sqrt() };
        let s = law.sample(100, &mut RngStream::new(1, 0)).unwrap();
        for p in s.particles() {
            let r2: f64 = p.iter().map(|x| x * x).sum();
            assert!((r2 - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coupled_shifted_gaussians_differ_by_the_shift() {
        let a = InitialLaw::standard_gaussian(3);
        let b = InitialLaw::Gaussian {
            mean: vec![1.0, 0.0, 0.0],
            variance: vec![1.0; 3],
        };
        let (sa, sb) = InitialLaw::sample_coupled(&a, &b, 50, &mut RngStream::new(2, 0)).unwrap();
        for (pa, pb) in sa.particles().zip(sb.particles()) {
            assert!((pb[0] - pa[0] - 1.0).abs() < 1e-15);
            assert_eq!(pa[1], pb[1]);
        }
    }

    #[test]
    fn cold_slab_is_deterministic_and_odd() {
        let law = InitialLaw::ColdSlab {
            half_width: 1.0,
            velocity_amplitude: 0.5,
        };
        let s = law.sample(4, &mut RngStream::new(0, 0)).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.particle(0)[0], -0.75);
        assert!((s.particle(0)[1] + s.particle(3)[1]).abs() < 1e-15);
    }

    #[test]
    fn reads_point_files() {
        let law = read_points("# header\n1 2\n3 4\n\n5 6\n").unwrap();
        assert_eq!(law, InitialLaw::Points { dim: 2, coords: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0] });
        assert!(read_points("1 2\n3\n").is_err());
        assert!(read_points("").is_err());
        assert!(law.sample(2, &mut RngStream::new(0, 0)).is_err());
    }
}
