//! Optimal-transport distances between empirical measures.

use crate::rng::RngStream;
use crate::state::EmpiricalMeasure;
use crate::{Error, Result};

/// Largest `N` accepted by the cubic assignment solver.
pub const ASSIGNMENT_BUDGET: usize = 4096;

/// `int_0^1 |F_a^{-1}(u) - F_b^{-1}(u)|^p du` for sorted samples with uniform
/// weights (any counts).
pub fn quantile_cost(a: &[f64], b: &[f64], p: f64) -> f64 {
    let (n, m) = (a.len(), b.len());
    if n == m {
        return a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum::<f64>() / n as f64;
    }
    // walk the merged breakpoints i/n and j/m in exact integer arithmetic
    let (nm, mut i, mut j, mut pos, mut acc) = (n * m, 0usize, 0usize, 0usize, 0.0);
    while pos < nm {
        let next_a = (i + 1) * m;
        let next_b = (j + 1) * n;
        let next = next_a.min(next_b);
        acc += (next - pos) as f64 * (a[i] - b[j]).abs().powf(p);
        pos = next;
        if next == next_a {
            i += 1;
        }
        if next == next_b {
            j += 1;
        }
    }
    acc / nm as f64
}

fn sorted_1d(mu: &EmpiricalMeasure, what: &str) -> Result<Vec<f64>> {
    if mu.dim() != 1 {
        return Err(Error::invalid(format!("{what} needs 1-D atoms, got dimension {}", mu.dim())));
    }
    Ok(mu.sorted_1d())
}

/// `W_1` in one dimension via the sorted (quantile) coupling.
pub fn w1_exact_1d(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    Ok(quantile_cost(&sorted_1d(a, "w1_exact_1d")?, &sorted_1d(b, "w1_exact_1d")?, 1.0))
}

/// `W_2` in one dimension via the sorted coupling.
pub fn w2_exact_1d(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<f64> {
    Ok(quantile_cost(&sorted_1d(a, "w2_exact_1d")?, &sorted_1d(b, "w2_exact_1d")?, 2.0).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportPlanResult {
    /// `W_2^2 = (1/N) sum_i |a_i - b_{assignment[i]}|^2`.
    pub cost: f64,
    pub assignment: Vec<usize>,
}

impl TransportPlanResult {
    pub fn w2(&self) -> f64 {
        self.cost.sqrt()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Exact `W_2` between two `N`-point empirical measures: a minimum-cost
/// perfect matching found by the shortest augmenting path (Hungarian)
/// method in `O(N^3)`.
pub fn w2_exact_matching(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> Result<TransportPlanResult> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::invalid(format!("exact matching needs equal atom counts ({n} vs {})", b.len())));
    }
    if a.dim() != b.dim() {
        return Err(Error::invalid("measures live in different dimensions"));
    }
    if n > ASSIGNMENT_BUDGET {
        return Err(Error::AssignmentBudget { n, budget: ASSIGNMENT_BUDGET });
    }
    let cost = |i: usize, j: usize| sq_dist(a.atom(i), b.atom(j));
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![inf; n + 1];
    let mut used = vec![false; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        minv.iter_mut().for_each(|x| *x = inf);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    let total: f64 = (0..n).map(|i| cost(i, assignment[i])).sum();
    Ok(TransportPlanResult { cost: total / n.max(1) as f64, assignment })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlicedEstimate {
    /// Square root of the mean projected `W_2^2`.
    pub value: f64,
    pub std_error: f64,
    pub projections: usize,
}

impl SlicedEstimate {
    /// Builds the estimate from per-projection squared costs.
    pub fn from_costs(costs: &[f64]) -> Self {
        let p = costs.len();
        let mean = costs.iter().sum::<f64>() / p as f64;
        let value = mean.sqrt();
        let std_error = if p > 1 && value > 0.0 {
            let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (p - 1) as f64;
            // delta method for the square root
            (var / p as f64).sqrt() / (2.0 * value)
        } else {
            0.0
        };
        Self { value, std_error, projections: p }
    }
}

fn project_sorted(mu: &EmpiricalMeasure, theta: &[f64]) -> Vec<f64> {
    let mut x: Vec<f64> = mu.atoms().map(|z| z.iter().zip(theta).map(|(a, b)| a * b).sum()).collect();
    x.sort_by(f64::total_cmp);
    x
}

/// Sliced `W_2`: random unit directions, exact 1-D coupling of the
/// projections. In one dimension every projection is the identity up to
/// sign, so the exact value is returned without drawing.
pub fn w2_sliced(a: &EmpiricalMeasure, b: &EmpiricalMeasure, n_projections: usize, rng: &mut RngStream) -> Result<SlicedEstimate> {
    if n_projections == 0 {
        return Err(Error::invalid("need at least one projection"));
    }
    if a.dim() != b.dim() {
        return Err(Error::invalid("measures live in different dimensions"));
    }
    if a.dim() == 1 {
        let c = quantile_cost(&a.sorted_1d(), &b.sorted_1d(), 2.0);
        return Ok(SlicedEstimate { value: c.sqrt(), std_error: 0.0, projections: n_projections });
    }
    let mut theta = vec![0.0; a.dim()];
    let costs: Vec<f64> = (0..n_projections)
        .map(|_| {
            rng.unit_vector(&mut theta);
            quantile_cost(&project_sorted(a, &theta), &project_sorted(b, &theta), 2.0)
        })
        .collect();
    Ok(SlicedEstimate::from_costs(&costs))
}
