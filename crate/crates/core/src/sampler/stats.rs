use serde::{Deserialize, Serialize};

/// How an estimate was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Degenerate parameters: the configuration is deterministic.
    Exact,
    Direct,
    Splitting,
}

/// Monte Carlo estimate with batch-means error bars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    /// Integrated autocorrelation time in samples; `stderr` equals the naive
    /// error times `sqrt(2 tau_int)`.
    pub tau_int: f64,
    pub n: u64,
    pub chain_means: Vec<f64>,
    pub unreliable: bool,
    pub method: Method,
    /// Standard error of `ln(mean)`; infinite when the mean is zero.
    pub log_stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Estimate {
        Estimate {
            mean: value,
            stderr: 0.0,
            tau_int: 0.5,
            n: 0,
            chain_means: vec![value],
            unreliable: false,
            method: Method::Exact,
            log_stderr: if value > 0.0 { 0.0 } else { f64::INFINITY },
        }
    }

    /// Number of samples in which the event occurred.
    pub fn hits(&self) -> f64 {
        self.mean * self.n as f64
    }

    /// The complementary probability `1 - mean`.
    pub fn complement(&self) -> Estimate {
        let mean = 1.0 - self.mean;
        Estimate {
            mean,
            chain_means: self.chain_means.iter().map(|m| 1.0 - m).collect(),
            log_stderr: log_se(mean, self.stderr),
            ..self.clone()
        }
    }
}

pub(crate) fn log_se(mean: f64, stderr: f64) -> f64 {
    if mean > 0.0 {
        stderr / mean
    } else {
        f64::INFINITY
    }
}

/// Mean, variance and binning error analysis of one series.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesStats {
    pub n: usize,
    pub mean: f64,
    pub var: f64,
    pub stderr: f64,
    pub tau_int: f64,
}

/// Batch means at every dyadic bin size leaving at least 16 bins; the largest
/// resulting error is kept, which is the usual conservative plateau reading.
pub fn series_stats(x: &[f64]) -> SeriesStats {
    let n = x.len();
    if n == 0 {
        return SeriesStats { n, mean: f64::NAN, var: 0.0, stderr: f64::INFINITY, tau_int: 0.5 };
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    if var <= 0.0 {
        return SeriesStats { n, mean, var: 0.0, stderr: 0.0, tau_int: 0.5 };
    }
    let naive2 = var / n as f64;
    let mut tau: f64 = 0.5;
    let mut bins: Vec<f64> = x.to_vec();
    while bins.len() / 2 >= 16 {
        bins = bins.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
        let m = bins.len();
        let bm = bins.iter().sum::<f64>() / m as f64;
        let bvar = bins.iter().map(|v| (v - bm) * (v - bm)).sum::<f64>() / (m - 1) as f64;
        tau = tau.max(0.5 * (bvar / m as f64) / naive2);
    }
    SeriesStats { n, mean, var, stderr: (2.0 * tau * naive2).sqrt(), tau_int: tau }
}

/// Merges independent chains. The mean weights each chain by its sample count;
/// inverse-variance weights would favour chains that saw few hits of a rare
/// event. Per-chain variances are floored at the pooled variance times the
/// average `tau` of the non-constant chains, and the merged error is inflated
/// by the Birge ratio when the chain means disagree beyond their errors.
pub fn merge_chains(series: &[Vec<f64>]) -> Estimate {
    let stats: Vec<SeriesStats> = series.iter().map(|s| series_stats(s)).collect();
    let total: usize = stats.iter().map(|s| s.n).sum();
    let chain_means: Vec<f64> = stats.iter().map(|s| s.mean).collect();
    if total == 0 {
        return Estimate {
            mean: f64::NAN,
            stderr: f64::INFINITY,
            tau_int: f64::INFINITY,
            n: 0,
            chain_means,
            unreliable: true,
            method: Method::Direct,
            log_stderr: f64::INFINITY,
        };
    }
    let grand = series.iter().flatten().sum::<f64>() / total as f64;
    let pooled = if total > 1 {
        series.iter().flatten().map(|v| (v - grand) * (v - grand)).sum::<f64>() / (total - 1) as f64
    } else {
        0.0
    };
    if pooled <= 0.0 {
        return Estimate {
            mean: grand,
            stderr: 0.0,
            tau_int: 0.5,
            n: total as u64,
            chain_means,
            unreliable: false,
            method: Method::Direct,
            log_stderr: log_se(grand, 0.0),
        };
    }
    let live: Vec<&SeriesStats> = stats.iter().filter(|s| s.var > 0.0).collect();
    let live_n: usize = live.iter().map(|s| s.n).sum();
    let tau_floor =
        if live_n == 0 { 0.5 } else { live.iter().map(|s| s.tau_int * s.n as f64).sum::<f64>() / live_n as f64 };
    let vars: Vec<f64> =
        stats.iter().map(|s| (s.stderr * s.stderr).max(2.0 * tau_floor * pooled / s.n.max(1) as f64)).collect();
    let mean = grand;
    let mut stderr = stats.iter().zip(&vars).map(|(s, v)| (s.n as f64 / total as f64).powi(2) * v).sum::<f64>().sqrt();
    let k = stats.iter().filter(|s| s.n > 0).count();
    if k > 1 {
        let chi2: f64 =
            stats.iter().zip(&vars).filter(|(s, _)| s.n > 0).map(|(s, v)| (s.mean - mean).powi(2) / v).sum();
        let birge = chi2 / (k - 1) as f64;
        if birge > 1.0 {
            stderr *= birge.sqrt();
        }
    }
    let tau_int = (total as f64 * stderr * stderr / (2.0 * pooled)).max(0.5);
    let window = total as f64 / k as f64;
    Estimate {
        mean,
        stderr,
        tau_int,
        n: total as u64,
        chain_means,
        unreliable: tau_int > window / 10.0,
        method: Method::Direct,
        log_stderr: log_se(mean, stderr),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn iid_series_has_unit_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..1 << 14).map(|_| rng.gen::<f64>()).collect();
        let s = series_stats(&x);
        assert!(s.tau_int < 1.0, "{}", s.tau_int);
        assert!((s.mean - 0.5).abs() < 4.0 * s.stderr);
    }

    #[test]
    fn correlated_series_inflates_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut v = 0.0;
        let x: Vec<f64> = (0..1 << 15)
            .map(|_| {
                v = 0.95 * v + rng.gen::<f64>() - 0.5;
                v
            })
            .collect();
        let s = series_stats(&x);
        // AR(1) with rho = 0.95: tau = (1 + rho) / (2 (1 - rho)) = 19.5.
        assert!(s.tau_int > 12.0 && s.tau_int < 25.0, "{}", s.tau_int);
    }

    #[test]
    fn constant_and_disagreeing_chains() {
        let e = merge_chains(&[vec![1.0; 100], vec![1.0; 100]]);
        assert_eq!((e.mean, e.stderr), (1.0, 0.0));
        let e = merge_chains(&[vec![0.0; 1000], vec![1.0; 1000]]);
        assert!((e.mean - 0.5).abs() < 1e-12);
        assert!(e.unreliable);
        let naive = (0.25f64 / 2000.0).sqrt();
        assert!((e.stderr / naive / (2.0 * e.tau_int).sqrt() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn rare_hits_do_not_bias_the_merged_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (rate, reps) = (0.004, 400);
        let total: f64 = (0..reps)
            .map(|_| {
                let series: Vec<Vec<f64>> =
                    (0..4).map(|_| (0..500).map(|_| (rng.gen::<f64>() < rate) as u8 as f64).collect()).collect();
                merge_chains(&series).mean
            })
            .sum();
        let sigma = (rate * (1.0 - rate) / (2000.0 * reps as f64)).sqrt();
        let mean = total / reps as f64;
        assert!((mean - rate).abs() < 4.0 * sigma, "{mean}");
    }
}
