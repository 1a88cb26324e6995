//! Two-sample tests and small regression helpers.

use serde::Serialize;

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic KS critical value at level `alpha` for sample sizes n, m.
pub fn ks_critical(n: usize, m: usize, alpha: f64) -> f64 {
    let c = (-0.5 * (alpha / 2.0).ln()).sqrt();
    c * ((n + m) as f64 / (n * m) as f64).sqrt()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

/// Ordinary (optionally weighted) least squares y = a + b x.
pub fn linear_fit(x: &[f64], y: &[f64], w: Option<&[f64]>) -> LinearFit {
    let n = x.len();
    let ones = vec![1.0; n];
    let w = w.unwrap_or(&ones);
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for k in 0..n {
        sxx += w[k] * (x[k] - mx).powi(2);
        sxy += w[k] * (x[k] - mx) * (y[k] - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = (0..n)
        .map(|k| w[k] * (y[k] - intercept - slope * x[k]).powi(2))
        .sum();
    let dof = (n as f64 - 2.0).max(1.0);
    let slope_stderr = (rss / dof / sxx).sqrt();
    LinearFit { slope, intercept, slope_stderr }
}

/// Pearson chi-square statistic of observed counts against expected counts.
pub fn chi_square(observed: &[f64], expected: &[f64]) -> f64 {
    observed
        .iter()
        .zip(expected)
        .filter(|(_, e)| **e > 0.0)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum()
}
