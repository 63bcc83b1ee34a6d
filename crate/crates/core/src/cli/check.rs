//! Built-in invariant suite behind the `check` subcommand: conservation in
//! the elastic dynamics, the symmetrization bound, transport metric axioms
//! and spectral invariants.

use crate::chaos::{injective_tuple_mean, symmetrization_gap, symmetrize_over_permutations, ObservableProduct};
use crate::kac::{AngularKernel, KacProcess};
use crate::limit::spectral::{gaussian_spectrum, spectral_evolve_observed, uniform_grid, SpectralModel};
use crate::metrics::transport::{w2_exact_1d, w2_exact_matching};
use crate::rng::{stream_id, tag, RngStream};
use crate::state::{gaussian_sample_state, EmpiricalMeasure, ParticleState};
use crate::thermostat::{simulate_thermostat, PairConvention, RestitutionParams};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn aux(seed: u64, group: u64) -> RngStream {
    RngStream::new(seed, stream_id(tag::AUX, group, 0))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn kac_conservation(seed: u64) -> Result<CheckRow> {
    let mut worst_step = 0.0f64;
    let mut worst_drift = 0.0f64;
    for (g, name) in ["isotropic", "forward:2"].iter().enumerate() {
        let kernel = AngularKernel::from_name(3, name)?;
        let mut init_rng = aux(seed, 2 * g as u64);
        let state = gaussian_sample_state(&[0.3, 0.0, -0.1], &[1.0; 3], 200, &mut init_rng)?;
        let (e0, p0) = (state.total_energy(), state.total_momentum());
        let mut rng = aux(seed, 2 * g as u64 + 1);
        let mut k = KacProcess::new(state, &kernel, &mut rng)?;
        let mut last = e0;
        for _ in 0..20_000 {
            k.step()?;
            let e = k.state().total_energy();
            worst_step = worst_step.max(rel(e, last));
            last = e;
        }
        let p = k.state().total_momentum();
        let pscale = e0.sqrt();
        worst_drift = worst_drift.max(rel(last, e0));
        worst_drift = worst_drift.max(p.iter().zip(&p0).map(|(a, b)| (a - b).abs() / pscale).fold(0.0, f64::max));
    }
    Ok(CheckRow {
        name: "elastic_conservation",
        passed: worst_step <= 1e-12 && worst_drift <= 1e-8,
        detail: format!("per-collision {worst_step:.3e}, drift {worst_drift:.3e}"),
    })
}

fn elastic_thermostat_limit(seed: u64) -> Result<CheckRow> {
    let kernel = AngularKernel::isotropic(3)?;
    let params = RestitutionParams::new(1.0, 0.0, 3)?;
    let init = gaussian_sample_state(&[0.0; 3], &[1.0; 3], 300, &mut aux(seed, 10))?;
    let out = simulate_thermostat(&init, &kernel, params, PairConvention::Ordered, 20.0, &[], &mut aux(seed, 11))?.remove(0);
    let de = rel(out.total_energy(), init.total_energy());
    Ok(CheckRow {
        name: "thermostat_elastic_limit",
        passed: de <= 1e-8,
        detail: format!("energy drift {de:.3e} at alpha = 1, nu = 0"),
    })
}

fn symmetrization(seed: u64) -> Result<CheckRow> {
    let catalog = ["tanh:0,1", "cos:0,2", "gaussian_bump:0.8", "clipped:1,1.5", "unit_interval:0", "clipped_energy:4"];
    let mut rng = aux(seed, 20);
    let (mut violations, mut worst_route, mut count) = (0, 0.0f64, 0);
    for inst in 0..300 {
        let n = [4, 6, 8][inst % 3];
        let ell = 1 + (inst / 3) % 3;
        if n < 2 * ell {
            continue;
        }
        let factors = (0..ell).map(|_| catalog[rng.index(catalog.len())]).collect::<Vec<_>>().join("*");
        let obs = ObservableProduct::from_name(&factors)?;
        let scale = 0.5 + 2.0 * rng.uniform();
        let state = gaussian_sample_state(&[0.0, 0.0], &[scale, scale], n, &mut rng)?;
        let g = symmetrization_gap(&state, &obs)?;
        if !g.holds() {
            violations += 1;
        }
        let literal = symmetrize_over_permutations(&state, &obs)?;
        worst_route = worst_route.max((literal - injective_tuple_mean(&state, &obs)?).abs());
        count += 1;
    }
    Ok(CheckRow {
        name: "symmetrization_bound",
        passed: violations == 0 && worst_route < 1e-12,
        detail: format!("{count} instances, {violations} violations, route mismatch {worst_route:.1e}"),
    })
}

/// Minimum over all permutations of the mean squared distance.
fn brute_w2_sq(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
    fn rec(a: &EmpiricalMeasure, b: &EmpiricalMeasure, i: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
        if acc >= *best {
            return;
        }
        if i == a.len() {
            *best = acc;
            return;
        }
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                let c: f64 = a.atom(i).iter().zip(b.atom(j)).map(|(x, y)| (x - y) * (x - y)).sum();
                rec(a, b, i + 1, used, acc + c, best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(a, b, 0, &mut vec![false; b.len()], 0.0, &mut best);
    best / a.len() as f64
}

fn metric_axioms(seed: u64) -> Result<CheckRow> {
    let mut rng = aux(seed, 30);
    let mut failures = Vec::new();
    for inst in 0..200 {
        let n = 2 + inst % 5;
        let draw = |rng: &mut RngStream| -> Result<EmpiricalMeasure> {
            Ok(gaussian_sample_state(&[0.0, 0.0], &[1.0, 1.0], n, rng)?.empirical())
        };
        let (a, b, c) = (draw(&mut rng)?, draw(&mut rng)?, draw(&mut rng)?);
        let ab = w2_exact_matching(&a, &b)?.cost;
        if (ab - brute_w2_sq(&a, &b)).abs() > 1e-12 * (1.0 + ab) {
            failures.push(format!("matching not optimal at instance {inst}"));
        }
        let ba = w2_exact_matching(&b, &a)?.cost;
        if (ab - ba).abs() > 1e-12 * (1.0 + ab) {
            failures.push(format!("asymmetric at instance {inst}"));
        }
        if w2_exact_matching(&a, &a)?.cost != 0.0 {
            failures.push(format!("nonzero self-distance at instance {inst}"));
        }
        let (d_ab, d_bc, d_ac) = (ab.sqrt(), w2_exact_matching(&b, &c)?.w2(), w2_exact_matching(&a, &c)?.w2());
        if d_ac > d_ab + d_bc + 1e-12 {
            failures.push(format!("triangle inequality fails at instance {inst}"));
        }
        let (x, y) = (
            ParticleState::new(1, a.raw().iter().step_by(2).copied().collect(), 0.0)?.empirical(),
            ParticleState::new(1, b.raw().iter().step_by(2).copied().collect(), 0.0)?.empirical(),
        );
        let sorted = w2_exact_1d(&x, &y)?;
        if (sorted * sorted - w2_exact_matching(&x, &y)?.cost).abs() > 1e-12 {
            failures.push(format!("1-D sorted coupling disagrees with matching at instance {inst}"));
        }
    }
    Ok(CheckRow {
        name: "transport_metric_axioms",
        passed: failures.is_empty(),
        detail: if failures.is_empty() { "200 instances".to_string() } else { failures.join("; ") },
    })
}

fn spectral_invariants() -> Result<CheckRow> {
    let xi = uniform_grid(40.0, 512)?;
    let a = gaussian_spectrum(0.5, 1.0, &xi)?;
    let model = SpectralModel::new(0.8, true)?;
    let (_, log) = spectral_evolve_observed(&a, &model, 1.0, 1e-3, |_, _| {})?;
    Ok(CheckRow {
        name: "spectral_invariants",
        passed: log.holds(),
        detail: format!(
            "{} steps, mass {:.1e}, hermitian {:.1e}, max |F| {:.6}",
            log.steps, log.max_mass_error, log.max_hermitian_error, log.max_modulus
        ),
    })
}

/// Runs the whole suite. Errors inside a check are reported as failures.
pub fn run_checks(seed: u64) -> Vec<CheckRow> {
    let checks: [(&'static str, Box<dyn Fn() -> Result<CheckRow>>); 5] = [
        ("elastic_conservation", Box::new(move || kac_conservation(seed))),
        ("thermostat_elastic_limit", Box::new(move || elastic_thermostat_limit(seed))),
        ("symmetrization_bound", Box::new(move || symmetrization(seed))),
        ("transport_metric_axioms", Box::new(move || metric_axioms(seed))),
        ("spectral_invariants", Box::new(spectral_invariants)),
    ];
    checks
        .iter()
        .map(|(name, f)| {
            f().unwrap_or_else(|e| CheckRow { name, passed: false, detail: e.to_string() })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for row in run_checks(0) {
            assert!(row.passed, "{row:?}");
        }
    }
}
