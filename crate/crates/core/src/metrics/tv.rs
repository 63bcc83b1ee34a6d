//! Binned total variation between 1-D samples.

use crate::state::EmpiricalMeasure;
use crate::{Error, Result};

fn bin_masses(mu: &EmpiricalMeasure, edges: &[f64]) -> Vec<f64> {
    // slot 0 is the underflow bin, slot edges.len() the overflow bin
    let mut m = vec![0.0; edges.len() + 1];
    for &x in mu.raw() {
        let k = edges.partition_point(|&e| e <= x);
        m[k] += 1.0;
    }
    m.iter_mut().for_each(|c| *c /= mu.len() as f64);
    m
}

/// `sum_bins |p_a - p_b|` over the histogram bins `[e_k, e_{k+1})`, plus one
/// underflow and one overflow bin. Lies in `[0, 2]`.
pub fn tv_histogram(a: &EmpiricalMeasure, b: &EmpiricalMeasure, bin_edges: &[f64]) -> Result<f64> {
    if a.dim() != 1 || b.dim() != 1 {
        return Err(Error::invalid("histogram distance needs 1-D atoms"));
    }
    if bin_edges.len() < 2 || bin_edges.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid("bin edges must be strictly increasing (at least two)"));
    }
    let (pa, pb) = (bin_masses(a, bin_edges), bin_masses(b, bin_edges));
    Ok(pa.iter().zip(&pb).map(|(x, y)| (x - y).abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m1(x: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::from_points_1d(x).unwrap()
    }

    #[test]
    fn examples() {
        let e = [0.0, 1.0, 2.0];
        assert_eq!(tv_histogram(&m1(&[0.5, 1.5]), &m1(&[1.5, 0.5]), &e).unwrap(), 0.0);
        assert_eq!(tv_histogram(&m1(&[0.2, 0.4]), &m1(&[1.2, 1.4]), &e).unwrap(), 2.0);
        assert_eq!(tv_histogram(&m1(&[0.0, 0.0, 1.0, 1.0]), &m1(&[0.0, 1.0, 1.0, 1.0]), &e).unwrap(), 0.5);
        // out-of-range atoms land in the overflow bins
        assert_eq!(tv_histogram(&m1(&[-5.0]), &m1(&[5.0]), &e).unwrap(), 2.0);
        assert!(tv_histogram(&m1(&[0.0]), &m1(&[0.0]), &[1.0]).is_err());
    }
}
