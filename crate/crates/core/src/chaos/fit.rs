//! Least-squares fit of `log error = c - r log N`.

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    /// Fitted slope; a `1/N` rate gives `-1`.
    pub slope: f64,
    pub intercept: f64,
    /// 95% interval for the slope.
    pub ci: (f64, f64),
    pub points: usize,
}

fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let se = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    (slope, intercept, se)
}

/// Fits the decay rate of `errors` against `n_values`. Refuses fewer than
/// four points, less than 1.5 decades of `N`, or any error within two
/// standard errors of zero. When `bootstrap` rows (one error per `N` each)
/// are supplied, the interval is their 2.5/97.5 percentile of slopes;
/// otherwise it is the normal interval of the least-squares slope.
pub fn rate_fit(n_values: &[usize], errors: &[f64], std_errors: &[f64], bootstrap: Option<&[Vec<f64>]>) -> Result<RateFit> {
    let k = n_values.len();
    if errors.len() != k || std_errors.len() != k {
        return Err(Error::invalid("rate fit inputs differ in length"));
    }
    if k < 4 {
        return Err(Error::DegenerateFit(format!("need at least 4 values of N, got {k}")));
    }
    let lo = *n_values.iter().min().unwrap() as f64;
    let hi = *n_values.iter().max().unwrap() as f64;
    if lo < 1.0 || (hi / lo).log10() < 1.5 {
        return Err(Error::DegenerateFit(format!("N spans {:.2} decades, need 1.5", (hi / lo).log10())));
    }
    for ((&n, &e), &se) in n_values.iter().zip(errors).zip(std_errors) {
        if !(e > 2.0 * se) || !(e > 0.0) {
            return Err(Error::DegenerateFit(format!("error {e:.3e} at N = {n} is within 2 SE ({se:.3e}) of zero")));
        }
    }
    let x: Vec<f64> = n_values.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (slope, intercept, se) = ols(&x, &y);
    let ci = match bootstrap {
        Some(rows) if rows.len() >= 20 => {
            let mut slopes: Vec<f64> = rows
                .iter()
                .filter(|r| r.len() == k && r.iter().all(|e| *e > 0.0))
                .map(|r| ols(&x, &r.iter().map(|e| e.ln()).collect::<Vec<_>>()).0)
                .collect();
            if slopes.len() < 20 {
                (slope - 1.96 * se, slope + 1.96 * se)
            } else {
                slopes.sort_by(f64::total_cmp);
                let q = |p: f64| slopes[((p * (slopes.len() - 1) as f64).round() as usize).min(slopes.len() - 1)];
                (q(0.025), q(0.975))
            }
        }
        _ => (slope - 1.96 * se, slope + 1.96 * se),
    };
    Ok(RateFit { slope, intercept, ci, points: k })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_power_laws() {
        let ns = [16, 64, 256, 1024, 4096];
        for r in [0.5, 1.0, 2.0] {
            let e: Vec<f64> = ns.iter().map(|&n| 3.0 * (n as f64).powf(-r)).collect();
            let f = rate_fit(&ns, &e, &[0.0; 5], None).unwrap();
            assert!((f.slope + r).abs() < 1e-12);
            assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn refuses_degenerate_inputs() {
        let e = [1.0, 0.5, 0.25, 0.125];
        assert!(matches!(rate_fit(&[10, 20, 40], &e[..3], &[0.0; 3], None), Err(Error::DegenerateFit(_))));
        assert!(matches!(rate_fit(&[10, 20, 40, 80], &e, &[0.0; 4], None), Err(Error::DegenerateFit(_))));
        assert!(matches!(
            rate_fit(&[10, 100, 1000, 10000], &e, &[0.0, 0.0, 0.0, 0.1], None),
            Err(Error::DegenerateFit(_))
        ));
        assert!(rate_fit(&[10, 100, 1000, 10000], &e, &[0.0; 4], None).is_ok());
    }
}
