//! Experiment configs: a flat TOML file whose only tables are the initial
//! law `[init]` and the comparison law `[compare]`. Every key has a default;
//! the resolved config is echoed verbatim into CSV headers and parses back
//! to the same value.

use serde::{Deserialize, Serialize};

use crate::chaos::{MarginalEstimator, ObservableProduct, OracleSpec, ReplicaPlan};
use crate::init::{read_points, InitialLaw};
use crate::kac::AngularKernel;
use crate::mckean_vlasov::{DriftDiffusionSpec, Interaction, VlasovSpec};
use crate::metrics::omega::OmegaEstimator;
use crate::model::ModelConfig;
use crate::thermostat::{PairConvention, RestitutionParams};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LawConfig {
    /// gaussian, sphere_shell, uniform_box, dirac, quantile_uniform,
    /// quantile_gaussian, cold_slab or file.
    pub law: String,
    /// Empty means the origin.
    pub mean: Vec<f64>,
    /// Empty means unit variance in every coordinate.
    pub variance: Vec<f64>,
    /// Sphere radius; 0 means `sqrt(dim)`.
    pub radius: f64,
    pub half_width: f64,
    pub lo: f64,
    pub hi: f64,
    pub sd: f64,
    pub amplitude: f64,
    pub file: String,
}

impl Default for LawConfig {
    fn default() -> Self {
        Self {
            law: "gaussian".into(),
            mean: Vec::new(),
            variance: Vec::new(),
            radius: 0.0,
            half_width: 1.0,
            lo: 0.0,
            hi: 1.0,
            sd: 1.0,
            amplitude: 0.5,
            file: String::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// kac_elastic, inelastic_thermostat, mckean_vlasov or vlasov.
    pub model: String,
    /// Velocity dimension for the kinetic models, state dimension for
    /// McKean-Vlasov, space dimension for Vlasov.
    pub dim: usize,
    pub master_seed: u64,
    /// Particle count for `simulate` and `metric`.
    pub n: usize,
    /// Particle counts for `chaos-curve` and `omega-n`.
    pub n_values: Vec<usize>,
    pub kernel: String,
    pub alpha: f64,
    pub nu: f64,
    /// ordered (rate N-1) or unordered (rate (N-1)/2).
    pub pair_convention: String,
    /// `lambda` in the drift `-lambda x`.
    pub linear_drift: f64,
    /// Isotropic diffusion coefficient.
    pub sigma: f64,
    pub interaction: String,
    pub mean_over_others: bool,
    pub t_end: f64,
    pub dt: f64,
    /// Empty means 9 equally spaced times on `[0, t_end]`.
    pub snapshot_times: Vec<f64>,
    /// `simulate` output: moments or particles.
    pub output: String,
    pub replicas: usize,
    /// When positive, replicas at each `N` are `budget / N`, clamped to
    /// `[min_replicas, max_replicas]`.
    pub particle_budget: usize,
    pub min_replicas: usize,
    pub max_replicas: usize,
    pub observables: Vec<String>,
    pub estimator: String,
    /// self or cold_slab.
    pub oracle: String,
    /// 0 means 16 x max N.
    pub oracle_n: usize,
    pub oracle_replicas: usize,
    pub oracle_nodes: usize,
    pub bootstrap: usize,
    /// w1, w2, w2_sliced, toscani, tv.
    pub metrics: Vec<String>,
    pub projections: usize,
    pub toscani_s: f64,
    pub xi_max: f64,
    pub xi_intervals: usize,
    pub tv_edges: Vec<f64>,
    /// Empty means the dimension default.
    pub omega_estimator: String,
    /// 0 means 64 x max N.
    pub reference_size: usize,
    pub init: LawConfig,
    /// Law of the second system in `metric`; an empty `law` means the
    /// initial law.
    pub compare: LawConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: "kac_elastic".into(),
            dim: 3,
            master_seed: 0,
            n: 1000,
            n_values: vec![64, 256, 1024, 4096],
            kernel: "isotropic".into(),
            alpha: 0.8,
            nu: 1.0,
            pair_convention: "ordered".into(),
            linear_drift: 0.5,
            sigma: 1.0,
            interaction: "zero".into(),
            mean_over_others: false,
            t_end: 1.0,
            dt: 0.01,
            snapshot_times: Vec::new(),
            output: "moments".into(),
            replicas: 100,
            particle_budget: 0,
            min_replicas: 10,
            max_replicas: 1_000_000,
            observables: vec!["gaussian_bump:1".into()],
            estimator: "first_particles".into(),
            oracle: "self".into(),
            oracle_n: 0,
            oracle_replicas: 16,
            oracle_nodes: 128,
            bootstrap: 200,
            metrics: vec!["w2_sliced".into()],
            projections: 64,
            toscani_s: 2.0,
            xi_max: 40.0,
            xi_intervals: 512,
            tv_edges: Vec::new(),
            omega_estimator: String::new(),
            reference_size: 0,
            init: LawConfig::default(),
            compare: LawConfig { law: String::new(), ..LawConfig::default() },
        }
    }
}

fn at<T>(path: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config { .. } => e,
        other => Error::config(path, other.to_string()),
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let path = e.span().map(|s| format!("byte {}", s.start)).unwrap_or_default();
            Error::config(path, e.message().to_string())
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Fills the defaults that depend on other fields and checks every
    /// field, so that the result can be echoed and rerun unchanged.
    pub fn resolve(mut self) -> Result<Self> {
        if self.snapshot_times.is_empty() {
            self.snapshot_times = (0..9).map(|k| self.t_end * k as f64 / 8.0).collect();
        }
        let phase = self.phase_dim()?;
        for law in [&mut self.init, &mut self.compare] {
            if law.law.is_empty() {
                continue;
            }
            let d = if law.law == "cold_slab" { 2 } else { phase };
            if matches!(law.law.as_str(), "gaussian" | "dirac") && law.mean.is_empty() {
                law.mean = vec![0.0; d];
            }
            if law.law == "gaussian" && law.variance.is_empty() {
                law.variance = vec![1.0; law.mean.len()];
            }
            if law.law == "sphere_shell" && law.radius == 0.0 {
                law.radius = (d as f64).sqrt();
            }
        }
        if self.oracle == "self" && self.oracle_n == 0 {
            self.oracle_n = 16 * self.n_values.iter().copied().max().unwrap_or(1);
        }
        if self.omega_estimator.is_empty() {
            self.omega_estimator = OmegaEstimator::default_for(phase).name();
        }
        if self.reference_size == 0 {
            self.reference_size = 64 * self.n_values.iter().copied().max().unwrap_or(1);
        }
        self.validate()?;
        Ok(self)
    }

    fn phase_dim(&self) -> Result<usize> {
        if self.dim == 0 {
            return Err(Error::config("dim", "must be at least 1"));
        }
        Ok(if self.model == "vlasov" { 2 * self.dim } else { self.dim })
    }

    fn validate(&self) -> Result<()> {
        let m = self.model_config()?;
        let law = at("init", self.init_law())?;
        if law.dim() != m.phase_dim() {
            return Err(Error::config("init", format!("law has dimension {} but the model needs {}", law.dim(), m.phase_dim())));
        }
        if let Some(c) = at("compare", self.compare_law())? {
            if c.dim() != law.dim() {
                return Err(Error::config("compare", "comparison law differs in dimension from the initial law"));
            }
        }
        if !(self.t_end >= 0.0) {
            return Err(Error::config("t_end", "must be nonnegative"));
        }
        if self.snapshot_times.windows(2).any(|w| w[1] <= w[0]) || self.snapshot_times.iter().any(|&t| t < 0.0 || t > self.t_end) {
            return Err(Error::config("snapshot_times", "must be strictly increasing within [0, t_end]"));
        }
        if !matches!(self.output.as_str(), "moments" | "particles") {
            return Err(Error::config("output", "expected moments or particles"));
        }
        for (i, o) in self.observables.iter().enumerate() {
            at(&format!("observables[{i}]"), ObservableProduct::from_name(o).and_then(|p| p.check_dim(m.phase_dim())))?;
        }
        at("estimator", MarginalEstimator::parse(&self.estimator))?;
        if !matches!(self.oracle.as_str(), "self" | "cold_slab") {
            return Err(Error::config("oracle", "expected self or cold_slab"));
        }
        for (i, name) in self.metrics.iter().enumerate() {
            if !matches!(name.as_str(), "w1" | "w2" | "w2_sliced" | "toscani" | "tv") {
                return Err(Error::config(format!("metrics[{i}]"), format!("unknown metric `{name}`")));
            }
        }
        at("omega_estimator", OmegaEstimator::parse(&self.omega_estimator))?;
        if self.n == 0 {
            return Err(Error::config("n", "must be positive"));
        }
        if self.replicas == 0 {
            return Err(Error::config("replicas", "must be positive"));
        }
        if self.min_replicas == 0 || self.max_replicas < self.min_replicas {
            return Err(Error::config("min_replicas", "need 1 <= min_replicas <= max_replicas"));
        }
        Ok(())
    }

    pub fn model_config(&self) -> Result<ModelConfig> {
        let d = self.dim;
        match self.model.as_str() {
            "kac_elastic" => Ok(ModelConfig::Kac { kernel: at("kernel", AngularKernel::from_name(d, &self.kernel))? }),
            "inelastic_thermostat" => Ok(ModelConfig::Thermostat {
                kernel: at("kernel", AngularKernel::from_name(d, &self.kernel))?,
                params: at("alpha", RestitutionParams::new(self.alpha, self.nu, d))?,
                convention: at("pair_convention", PairConvention::parse(&self.pair_convention))?,
            }),
            "mckean_vlasov" => {
                let interaction = at("interaction", Interaction::from_name(&self.interaction))?;
                let mut spec = at("linear_drift", DriftDiffusionSpec::isotropic(d, self.linear_drift, self.sigma, interaction))?;
                spec.mean_over_others = self.mean_over_others;
                if !(self.dt > 0.0) {
                    return Err(Error::config("dt", "must be positive"));
                }
                Ok(ModelConfig::McKeanVlasov { spec, dt: self.dt })
            }
            "vlasov" => {
                let potential_gradient = at("interaction", Interaction::from_name(&self.interaction))?;
                if !(self.dt > 0.0) {
                    return Err(Error::config("dt", "must be positive"));
                }
                Ok(ModelConfig::Vlasov { spec: VlasovSpec { space_dim: d, potential_gradient }, dt: self.dt })
            }
            other => Err(Error::config("model", format!("unknown model `{other}`"))),
        }
    }

    pub fn init_law(&self) -> Result<InitialLaw> {
        law_from(&self.init, self.phase_dim()?)
    }

    /// `None` when the comparison law is the initial law.
    pub fn compare_law(&self) -> Result<Option<InitialLaw>> {
        if self.compare.law.is_empty() {
            Ok(None)
        } else {
            law_from(&self.compare, self.phase_dim()?).map(Some)
        }
    }

    pub fn observable_products(&self) -> Result<Vec<ObservableProduct>> {
        self.observables.iter().map(|o| ObservableProduct::from_name(o)).collect()
    }

    pub fn replica_plan(&self) -> ReplicaPlan {
        if self.particle_budget > 0 {
            ReplicaPlan::ParticleBudget { budget: self.particle_budget, min: self.min_replicas, max: self.max_replicas }
        } else {
            ReplicaPlan::Fixed(self.replicas)
        }
    }

    pub fn oracle_spec(&self) -> OracleSpec {
        if self.oracle == "cold_slab" {
            OracleSpec::ColdSlab { nodes: self.oracle_nodes }
        } else {
            OracleSpec::SelfLargeN { n_ref: self.oracle_n, replicas: self.oracle_replicas }
        }
    }

    /// TOML text of the config, which parses back to an equal value.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn law_from(c: &LawConfig, dim: usize) -> Result<InitialLaw> {
    let law = match c.law.as_str() {
        "gaussian" => InitialLaw::Gaussian { mean: c.mean.clone(), variance: c.variance.clone() },
        "sphere_shell" => InitialLaw::SphereShell { dim, radius: c.radius },
        "uniform_box" => InitialLaw::UniformBox { dim, half_width: c.half_width },
        "dirac" => InitialLaw::Dirac { point: c.mean.clone() },
        "quantile_uniform" => InitialLaw::QuantileUniform { lo: c.lo, hi: c.hi },
        "quantile_gaussian" => InitialLaw::QuantileGaussian { mean: c.mean.first().copied().unwrap_or(0.0), sd: c.sd },
        "cold_slab" => InitialLaw::ColdSlab { half_width: c.half_width, velocity_amplitude: c.amplitude },
        "file" => {
            let text = std::fs::read_to_string(&c.file).map_err(|e| Error::Io(format!("{}: {e}", c.file)))?;
            read_points(&text)?
        }
        other => return Err(Error::invalid(format!("unknown law `{other}`"))),
    };
    law.validate()?;
    Ok(law)
}
