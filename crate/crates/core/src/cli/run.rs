//! Subcommand implementations. Each turns a resolved config into a CSV
//! document; none of them depends on the worker count.

use super::config::ExperimentConfig;
use super::csv::{float, CsvDoc};
use crate::chaos::{chaos_error_curve, rate_fit, ChaosConfig, MarginalEstimator};
use crate::limit::spectral::uniform_grid;
use crate::metrics::fourier::toscani_norm_empirical;
use crate::metrics::omega::{omega_n_estimator, OmegaEstimator};
use crate::metrics::transport::{w1_exact_1d, w2_exact_1d, w2_exact_matching, w2_sliced};
use crate::metrics::tv::tv_histogram;
use crate::model::ModelConfig;
use crate::parallel::Pool;
use crate::rng::{stream_id, tag, RngStream};
use crate::state::ParticleState;
use crate::{Error, Result};

fn model_header(doc: &mut CsvDoc, cfg: &ExperimentConfig, model: &ModelConfig) {
    doc.config(cfg);
    doc.meta("model", model.tag());
    doc.meta("rate_convention", model.rate_convention());
    if let ModelConfig::Thermostat { convention, .. } = model {
        doc.meta("thermostat_pairs", convention.as_str());
    }
}

/// One system of `cfg.n` particles: initial state from `(SYSTEM, 2g, 0)`,
/// dynamics from `(SYSTEM, 2g + 1, 0)`.
fn run_system(cfg: &ExperimentConfig, model: &ModelConfig, law: &crate::init::InitialLaw, g: u64) -> Result<(Vec<ParticleState>, u64)> {
    let mut init_rng = RngStream::new(cfg.master_seed, stream_id(tag::SYSTEM, 2 * g, 0));
    let mut dyn_rng = RngStream::new(cfg.master_seed, stream_id(tag::SYSTEM, 2 * g + 1, 0));
    let init = law.sample(cfg.n, &mut init_rng)?;
    let snaps = model.simulate(&init, cfg.t_end, &cfg.snapshot_times, &mut dyn_rng)?;
    Ok((snaps, init_rng.draw_counter() + dyn_rng.draw_counter()))
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<CsvDoc> {
    let model = cfg.model_config()?;
    let law = cfg.init_law()?;
    let (snaps, draws) = run_system(cfg, &model, &law, 0)?;
    let m = model.phase_dim();
    let mut doc = CsvDoc::new("simulate");
    model_header(&mut doc, cfg, &model);
    doc.meta("streams", format!("{},{}", stream_id(tag::SYSTEM, 0, 0), stream_id(tag::SYSTEM, 1, 0)));
    doc.meta("draws", draws);
    if cfg.output == "particles" {
        let mut cols = vec!["time".to_string(), "particle".to_string()];
        cols.extend((0..m).map(|a| format!("z{a}")));
        doc.columns(&cols.iter().map(String::as_str).collect::<Vec<_>>());
        for s in &snaps {
            for (i, z) in s.particles().enumerate() {
                let mut row = vec![float(s.time()), i.to_string()];
                row.extend(z.iter().map(|x| float(*x)));
                doc.row(row);
            }
        }
    } else {
        let mut cols = vec!["time".to_string()];
        cols.extend((0..m).map(|a| format!("mean_{a}")));
        cols.push("second_moment".into());
        doc.columns(&cols.iter().map(String::as_str).collect::<Vec<_>>());
        for s in &snaps {
            let n = s.n_particles() as f64;
            let mut row = vec![float(s.time())];
            row.extend(s.total_momentum().iter().map(|p| float(p / n)));
            row.push(float(s.coords().iter().map(|x| x * x).sum::<f64>() / n));
            doc.row(row);
        }
    }
    Ok(doc)
}

pub fn metric(cfg: &ExperimentConfig) -> Result<CsvDoc> {
    let model = cfg.model_config()?;
    let law_a = cfg.init_law()?;
    let law_b = cfg.compare_law()?.unwrap_or_else(|| law_a.clone());
    let (a, da) = run_system(cfg, &model, &law_a, 0)?;
    let (b, db) = run_system(cfg, &model, &law_b, 1)?;
    let mut proj = RngStream::new(cfg.master_seed, stream_id(tag::PROJECTIONS, 0, 0));
    let xi = if cfg.metrics.iter().any(|m| m == "toscani") { uniform_grid(cfg.xi_max, cfg.xi_intervals)? } else { Vec::new() };
    let mut doc = CsvDoc::new("metric");
    model_header(&mut doc, cfg, &model);
    doc.columns(&["time", "metric", "value", "std_error"]);
    for (sa, sb) in a.iter().zip(&b) {
        let (ma, mb) = (sa.empirical(), sb.empirical());
        for name in &cfg.metrics {
            let (v, se) = match name.as_str() {
                "w1" => (w1_exact_1d(&ma, &mb)?, 0.0),
                "w2" if ma.dim() == 1 => (w2_exact_1d(&ma, &mb)?, 0.0),
                "w2" => (w2_exact_matching(&ma, &mb)?.w2(), 0.0),
                "w2_sliced" => {
                    let s = w2_sliced(&ma, &mb, cfg.projections, &mut proj)?;
                    (s.value, s.std_error)
                }
                "toscani" => (toscani_norm_empirical(&ma, &mb, cfg.toscani_s, &xi)?.value, 0.0),
                "tv" => (tv_histogram(&ma, &mb, &cfg.tv_edges)?, 0.0),
                other => return Err(Error::config("metrics", format!("unknown metric `{other}`"))),
            };
            doc.row(vec![float(sa.time()), name.clone(), float(v), float(se)]);
        }
    }
    doc.meta("draws", da + db + proj.draw_counter());
    doc.meta("projection_stream", format!("{}:{}", stream_id(tag::PROJECTIONS, 0, 0), proj.draw_counter()));
    Ok(doc)
}

pub fn chaos_config(cfg: &ExperimentConfig) -> Result<ChaosConfig> {
    Ok(ChaosConfig {
        model: cfg.model_config()?,
        law: cfg.init_law()?,
        observables: cfg.observable_products()?,
        n_values: cfg.n_values.clone(),
        time_grid: cfg.snapshot_times.clone(),
        replicas: cfg.replica_plan(),
        estimator: MarginalEstimator::parse(&cfg.estimator)?,
        oracle: cfg.oracle_spec(),
        bootstrap: cfg.bootstrap,
        master_seed: cfg.master_seed,
    })
}

pub fn chaos_curve(cfg: &ExperimentConfig, pool: &Pool) -> Result<CsvDoc> {
    let cc = chaos_config(cfg)?;
    let run = chaos_error_curve(&cc, pool)?;
    let mut doc = CsvDoc::new("chaos-curve");
    model_header(&mut doc, cfg, &cc.model);
    doc.meta("estimator", cc.estimator.as_str());
    doc.meta("oracle", format!("{}:{}x{}", cfg.oracle, run.oracle_particles, run.oracle_replicas));
    doc.meta("bootstrap", cfg.bootstrap);
    for (name, count) in &run.streams {
        doc.meta(&format!("streams_{name}"), count);
    }
    doc.meta("system_draws", run.system_draws);
    doc.columns(&["observable", "N", "replicas", "error", "std_error", "time_of_sup"]);
    for c in &run.curves {
        for k in 0..c.n_values.len() {
            doc.row(vec![
                c.observable.clone(),
                c.n_values[k].to_string(),
                c.replicas[k].to_string(),
                float(c.errors[k]),
                float(c.std_errors[k]),
                float(c.time_of_sup[k]),
            ]);
        }
    }
    for c in &run.curves {
        doc.footer(&format!("oracle_std_error[{}]", c.observable), float(c.oracle_std_error));
        if let Some(f) = &c.fit {
            doc.footer(&format!("fit_slope[{}]", c.observable), float(f.slope));
            doc.footer(&format!("fit_ci[{}]", c.observable), format!("{};{}", float(f.ci.0), float(f.ci.1)));
        }
        for w in &c.warnings {
            doc.footer(&format!("warning[{}]", c.observable), w);
        }
    }
    Ok(doc)
}

pub fn omega_n(cfg: &ExperimentConfig, pool: &Pool) -> Result<CsvDoc> {
    let law = cfg.init_law()?;
    let est = OmegaEstimator::parse(&cfg.omega_estimator)?;
    let r = omega_n_estimator(&law, &cfg.n_values, cfg.replicas, cfg.reference_size, est, cfg.master_seed, pool)?;
    let mut doc = CsvDoc::new("omega-n");
    doc.config(cfg);
    doc.meta("estimator", est.name());
    doc.meta("reference_size", r.reference_size);
    doc.meta("streams", r.streams);
    doc.meta("draws", r.draws);
    doc.columns(&["N", "replicas", "omega", "std_error"]);
    for p in &r.points {
        doc.row(vec![p.n.to_string(), cfg.replicas.to_string(), float(p.mean), float(p.std_error)]);
    }
    doc.footer("reference_floor", float(r.reference_floor));
    let ns: Vec<usize> = r.points.iter().map(|p| p.n).collect();
    let means: Vec<f64> = r.points.iter().map(|p| p.mean).collect();
    let ses: Vec<f64> = r.points.iter().map(|p| p.std_error).collect();
    match rate_fit(&ns, &means, &ses, None) {
        Ok(f) => {
            doc.footer("fit_slope", float(f.slope));
            doc.footer("fit_ci", format!("{};{}", float(f.ci.0), float(f.ci.1)));
        }
        Err(e) => {
            doc.footer("warning", format!("no rate fit: {e}"));
        }
    }
    for w in &r.warnings {
        doc.footer("warning", w);
    }
    Ok(doc)
}
