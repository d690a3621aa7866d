//! Small summary statistics used by every experiment.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.576;

#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std_dev: f64,
    /// 99% normal-approximation half width of the mean.
    pub half_width: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary { count: 0, mean: f64::NAN, std_dev: f64::NAN, half_width: f64::NAN, min: f64::NAN, max: f64::NAN };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    let std_dev = var.sqrt();
    Summary {
        count: n,
        mean,
        std_dev,
        half_width: Z99 * std_dev / (n as f64).sqrt(),
        min: xs.iter().copied().fold(f64::INFINITY, f64::min),
        max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Largest sample value `q` with at least three quarters of the samples `≥ q`.
pub fn lower_quartile(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v[v.len() / 4]
}

/// Least-squares slope of `ys` against `xs` and its standard error.
pub fn regression_slope(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = xs.iter().zip(ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let se = if n > 2.0 { (resid / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    (slope, se)
}

/// Pearson statistic of observed counts against equal expected counts and
/// its upper-tail p-value.
pub fn chi_square_uniform(counts: &[u64]) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    (stat, chi_square_p(stat, counts.len() as f64 - 1.0))
}

pub fn chi_square_p(stat: f64, df: f64) -> f64 {
    let dist = ChiSquared::new(df).expect("positive degrees of freedom");
    1.0 - dist.cdf(stat)
}

/// `max / min` of strictly positive finite values; infinite otherwise.
pub fn spread(xs: &[f64]) -> f64 {
    if xs.is_empty() || xs.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return f64::INFINITY;
    }
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_summary() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.std_dev - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!((s.min, s.max), (1.0, 4.0));
    }

    #[test]
    fn quartile_keeps_three_quarters_above() {
        let xs: Vec<f64> = (0..200).map(|i| ((i * 37) % 200) as f64).collect();
        let q = lower_quartile(&xs);
        assert_eq!(q, 50.0);
        assert!(xs.iter().filter(|&&x| x >= q).count() * 4 >= xs.len() * 3);
    }

    #[test]
    fn regression_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let (s, se) = regression_slope(&xs, &ys);
        assert!((s - 2.0).abs() < 1e-12 && se < 1e-9);
    }

    #[test]
    fn chi_square_reference_values() {
        // P(χ²₁ > 6.635) ≈ 0.01, P(χ²₃ > 7.815) ≈ 0.05
        assert!((chi_square_p(6.635, 1.0) - 0.01).abs() < 1e-4);
        assert!((chi_square_p(7.815, 3.0) - 0.05).abs() < 1e-4);
        let (stat, p) = chi_square_uniform(&[25, 25, 25, 25]);
        assert_eq!(stat, 0.0);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spread_of_ratios() {
        assert_eq!(spread(&[1.0, 2.0, 4.0]), 4.0);
        assert!(spread(&[1.0, 0.0]).is_infinite());
    }
}
