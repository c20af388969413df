use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

/// Sum in a fixed pairwise order; the result depends only on the input order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n > 0 && samples.iter().all(|&x| x == samples[0]) {
            return Self {
                mean: samples[0],
                variance: 0.0,
                std_error: 0.0,
                n,
            };
        }
        let mean = pairwise_sum(samples) / n as f64;
        let dev: Vec<f64> = samples.iter().map(|x| (x - mean) * (x - mean)).collect();
        let variance = if n > 1 {
            pairwise_sum(&dev) / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            variance,
            std_error: (variance / n as f64).sqrt(),
            n,
        }
    }

    /// Distance to `target` in standard errors. Zero-variance estimates count
    /// as exact: any gap above rounding is infinitely many standard errors.
    pub fn z_score(&self, target: f64) -> f64 {
        let gap = (self.mean - target).abs();
        if self.std_error > 0.0 {
            gap / self.std_error
        } else if gap <= 1e-12 * target.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn within(&self, target: f64, n_se: f64) -> bool {
        self.z_score(target) <= n_se
    }
}

/// Unbiased sample variance, with the standard error of that variance
/// estimated from the squared deviations.
pub fn variance_estimate(samples: &[f64]) -> Estimate {
    let n = samples.len();
    if n < 2 {
        return Estimate { mean: 0.0, variance: 0.0, std_error: 0.0, n };
    }
    let centre = Estimate::from_samples(samples).mean;
    let dev: Vec<f64> = samples.iter().map(|x| (x - centre) * (x - centre)).collect();
    let raw = Estimate::from_samples(&dev);
    let scale = n as f64 / (n - 1) as f64;
    Estimate {
        mean: raw.mean * scale,
        variance: raw.variance * scale * scale,
        std_error: raw.std_error * scale,
        n,
    }
}

/// Asymptotic 95% critical value of the one-sample Kolmogorov-Smirnov
/// statistic, scaled by `sqrt(n)`.
pub const KS_CRITICAL_95: f64 = 1.358;

/// One-sample KS statistic against `N(mean, variance)`.
pub fn ks_normal(samples: &[f64], mean: f64, variance: f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let s = (2.0 * variance).sqrt();
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 0.5 * erfc(-(x - mean) / s);
            let lo = cdf - i as f64 / n;
            let hi = (i + 1) as f64 / n - cdf;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}
