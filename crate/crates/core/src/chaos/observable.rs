//! Bounded Lipschitz one-particle test functions and their tensor products.

use crate::state::EmpiricalMeasure;
use crate::{Error, Result};

/// One-particle test functions, each bounded by 1 in sup norm.
#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    Constant,
    /// `exp(-|z|^2 / (2 w^2))`.
    GaussianBump { width: f64 },
    /// `tanh(z_axis / scale)`.
    Tanh { axis: usize, scale: f64 },
    /// `min(|z|^2, cap) / cap`.
    ClippedEnergy { cap: f64 },
    /// `z_axis` clamped to `[0, 1]`.
    UnitInterval { axis: usize },
    /// `z_axis` clamped to `[-cap, cap]`, divided by `cap`.
    ClippedCoordinate { axis: usize, cap: f64 },
    /// `cos(k z_axis)`.
    Cosine { axis: usize, frequency: f64 },
}

fn params(spec: &str, args: &str, want: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = if args.is_empty() {
        Vec::new()
    } else {
        args.split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::invalid(format!("test function `{spec}`: {e}")))?
    };
    if v.len() != want {
        return Err(Error::invalid(format!("test function `{spec}` expects {want} parameter(s)")));
    }
    Ok(v)
}

fn axis(x: f64, spec: &str) -> Result<usize> {
    if x >= 0.0 && x.fract() == 0.0 {
        Ok(x as usize)
    } else {
        Err(Error::invalid(format!("test function `{spec}`: axis must be a nonnegative integer")))
    }
}

impl TestFunction {
    pub fn from_name(spec: &str) -> Result<Self> {
        let (head, args) = spec.split_once(':').unwrap_or((spec, ""));
        let f = match head {
            "constant" => {
                params(spec, args, 0)?;
                Self::Constant
            }
            "gaussian_bump" => Self::GaussianBump { width: params(spec, args, 1)?[0] },
            "tanh" => {
                let p = params(spec, args, 2)?;
                Self::Tanh { axis: axis(p[0], spec)?, scale: p[1] }
            }
            "clipped_energy" => Self::ClippedEnergy { cap: params(spec, args, 1)?[0] },
            "unit_interval" => Self::UnitInterval { axis: axis(params(spec, args, 1)?[0], spec)? },
            "clipped" => {
                let p = params(spec, args, 2)?;
                Self::ClippedCoordinate { axis: axis(p[0], spec)?, cap: p[1] }
            }
            "cos" => {
                let p = params(spec, args, 2)?;
                Self::Cosine { axis: axis(p[0], spec)?, frequency: p[1] }
            }
            _ => return Err(Error::invalid(format!("unknown test function `{spec}`"))),
        };
        f.validate()?;
        Ok(f)
    }

    pub fn name(&self) -> String {
        match self {
            Self::Constant => "constant".into(),
            Self::GaussianBump { width } => format!("gaussian_bump:{width}"),
            Self::Tanh { axis, scale } => format!("tanh:{axis},{scale}"),
            Self::ClippedEnergy { cap } => format!("clipped_energy:{cap}"),
            Self::UnitInterval { axis } => format!("unit_interval:{axis}"),
            Self::ClippedCoordinate { axis, cap } => format!("clipped:{axis},{cap}"),
            Self::Cosine { axis, frequency } => format!("cos:{axis},{frequency}"),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::GaussianBump { width } => width > 0.0,
            Self::Tanh { scale, .. } => scale > 0.0,
            Self::ClippedEnergy { cap } => cap > 0.0,
            Self::ClippedCoordinate { cap, .. } => cap > 0.0,
            Self::Cosine { frequency, .. } => frequency.is_finite(),
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid parameters in `{}`", self.name())))
        }
    }

    /// Largest coordinate index read, if any.
    pub fn axis(&self) -> Option<usize> {
        match *self {
            Self::Tanh { axis, .. } | Self::UnitInterval { axis } | Self::ClippedCoordinate { axis, .. } | Self::Cosine { axis, .. } => {
                Some(axis)
            }
            _ => None,
        }
    }

    #[inline]
    pub fn eval(&self, z: &[f64]) -> f64 {
        match *self {
            Self::Constant => 1.0,
            Self::GaussianBump { width } => (-z.iter().map(|x| x * x).sum::<f64>() / (2.0 * width * width)).exp(),
            Self::Tanh { axis, scale } => (z[axis] / scale).tanh(),
            Self::ClippedEnergy { cap } => z.iter().map(|x| x * x).sum::<f64>().min(cap) / cap,
            Self::UnitInterval { axis } => z[axis].clamp(0.0, 1.0),
            Self::ClippedCoordinate { axis, cap } => z[axis].clamp(-cap, cap) / cap,
            Self::Cosine { axis, frequency } => (frequency * z[axis]).cos(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        1.0
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            Self::Constant => 0.0,
            Self::GaussianBump { width } => (-0.5f64).exp() / width,
            Self::Tanh { scale, .. } => 1.0 / scale,
            Self::ClippedEnergy { cap } => 2.0 / cap.sqrt(),
            Self::UnitInterval { .. } => 1.0,
            Self::ClippedCoordinate { cap, .. } => 1.0 / cap,
            Self::Cosine { frequency, .. } => frequency.abs(),
        }
    }
}

/// `phi_1 (x) ... (x) phi_l`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableProduct {
    pub factors: Vec<TestFunction>,
}

impl ObservableProduct {
    pub fn new(factors: Vec<TestFunction>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::invalid("an observable needs at least one factor"));
        }
        Ok(Self { factors })
    }

    /// Factors separated by `*`, e.g. `clipped_energy:9*clipped_energy:9`.
    pub fn from_name(spec: &str) -> Result<Self> {
        Self::new(spec.split('*').map(|s| TestFunction::from_name(s.trim())).collect::<Result<_>>()?)
    }

    pub fn name(&self) -> String {
        self.factors.iter().map(|f| f.name()).collect::<Vec<_>>().join("*")
    }

    pub fn ell(&self) -> usize {
        self.factors.len()
    }

    pub fn sup_norm(&self) -> f64 {
        self.factors.iter().map(|f| f.sup_norm()).product()
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        for f in &self.factors {
            if let Some(a) = f.axis() {
                if a >= dim {
                    return Err(Error::invalid(format!("`{}` reads axis {a} of a {dim}-dimensional phase space", f.name())));
                }
            }
        }
        Ok(())
    }

    /// `prod_j phi_j(z_j)` for the tuple `(z_1, ..., z_l)`.
    pub fn eval_tuple(&self, zs: &[&[f64]]) -> f64 {
        self.factors.iter().zip(zs).map(|(f, z)| f.eval(z)).product()
    }

    /// Concatenation `phi (x) psi`.
    pub fn tensor(&self, other: &ObservableProduct) -> ObservableProduct {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        ObservableProduct { factors }
    }
}

/// `R^l[phi](mu) = prod_j <mu, phi_j>`.
pub fn poly_observable(mu: &EmpiricalMeasure, obs: &ObservableProduct) -> f64 {
    obs.factors.iter().map(|f| mu.integrate(|z| f.eval(z))).product()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::state::{gaussian_sample_state, ParticleState};
    use proptest::prelude::*;

    #[test]
    fn catalog_round_trips_and_is_bounded() {
        let mut rng = RngStream::new(60, 0);
        for name in ["constant", "gaussian_bump:0.7", "tanh:1,2", "clipped_energy:9", "unit_interval:0", "clipped:2,1.5", "cos:0,3"] {
            let f = TestFunction::from_name(name).unwrap();
            assert_eq!(f.name(), name);
            let mut z = [0.0; 3];
            let mut w = [0.0; 3];
            for _ in 0..2000 {
                rng.fill_normal(&mut z);
                rng.fill_normal(&mut w);
                z.iter_mut().for_each(|x| *x *= 3.0);
                assert!(f.eval(&z).abs() <= f.sup_norm());
                let d = z.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                assert!((f.eval(&z) - f.eval(&w)).abs() <= f.lipschitz() * d * (1.0 + 1e-12) + 1e-15, "{name}");
            }
        }
        assert!(TestFunction::from_name("tanh:0.5,1").is_err());
        assert!(TestFunction::from_name("gaussian_bump:-1").is_err());
        let o = ObservableProduct::from_name("tanh:0,1*clipped_energy:9").unwrap();
        assert_eq!(ObservableProduct::from_name(&o.name()).unwrap(), o);
        assert!(o.check_dim(1).is_ok());
        assert!(ObservableProduct::from_name("tanh:3,1").unwrap().check_dim(3).is_err());
    }

    #[test]
    fn poly_examples() {
        let mu = EmpiricalMeasure::from_points_1d(&[0.0, 1.0]).unwrap();
        let one = ObservableProduct::from_name("constant*constant*constant").unwrap();
        assert_eq!(poly_observable(&mu, &one), 1.0);
        let id = ObservableProduct::from_name("unit_interval:0*unit_interval:0").unwrap();
        assert_eq!(poly_observable(&mu, &id), 0.25);
    }

    proptest! {
        #[test]
        fn multiplicative_and_symmetric(seed in any::<u64>()) {
            let mut rng = RngStream::new(seed, 0);
            let s = gaussian_sample_state(&[0.0; 2], &[1.0; 2], 9, &mut rng).unwrap();
            let a = ObservableProduct::from_name("tanh:0,1*gaussian_bump:1").unwrap();
            let b = ObservableProduct::from_name("cos:1,2").unwrap();
            let mu = s.empirical();
            let lhs = poly_observable(&mu, &a.tensor(&b));
            let rhs = poly_observable(&mu, &a) * poly_observable(&mu, &b);
            prop_assert!((lhs - rhs).abs() < 1e-14);
            let mut rows: Vec<Vec<f64>> = s.particles().map(|p| p.to_vec()).collect();
            rows.rotate_left(4);
            let p = ParticleState::from_rows(&rows).unwrap().empirical();
            prop_assert!((poly_observable(&p, &a) - poly_observable(&mu, &a)).abs() < 1e-14);
        }
    }
}
