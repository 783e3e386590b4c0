//! Mergeable running statistics, batch-means standard errors, and the
//! two-sample Kolmogorov-Smirnov test.

/// Welford (count, mean, M2) accumulator. Merging is associative, so partial
/// accumulators from parallel workers combine into the same result as a
/// sequential pass when merged in a fixed order.
#[derive(Debug, Clone, Default)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        RunningStats::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &RunningStats) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let delta = other.mean - self.mean;
        let total = n1 + n2;
        self.mean += delta * n2 / total;
        self.m2 += other.m2 + delta * delta * n1 * n2 / total;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean for i.i.d. samples.
    pub fn std_err(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Standard error of a time average from contiguous batch means, for
/// serially correlated increments. `values` are the per-batch means.
pub fn batch_means_std_err(values: &[f64]) -> f64 {
    let b = values.len();
    if b < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / b as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

/// Two-sample Kolmogorov-Smirnov result with the standard asymptotic p-value.
#[derive(Debug, Clone, Copy)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_x: usize,
    pub n_y: usize,
}

/// Two-sample KS test. Sorts copies of both samples and walks the merged
/// order tracking the maximum CDF gap; the p-value uses the Kolmogorov
/// asymptotic distribution with the small-sample effective-size correction.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> KsResult {
    assert!(!x.is_empty() && !y.is_empty(), "KS requires non-empty samples");
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let (nx, ny) = (xs.len(), ys.len());
    let (inv_x, inv_y) = (1.0 / nx as f64, 1.0 / ny as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut cdf_gap = 0.0f64;
    let mut d = 0.0f64;
    while i < nx && j < ny {
        let (xv, yv) = (xs[i], ys[j]);
        if xv <= yv {
            cdf_gap += inv_x;
            i += 1;
        }
        if yv <= xv {
            cdf_gap -= inv_y;
            j += 1;
        }
        d = d.max(cdf_gap.abs());
    }
    // the remaining tail of either sample only moves the gap monotonically to 0
    let n_eff = ((nx * ny) as f64 / (nx + ny) as f64).sqrt();
    let lambda = (n_eff + 0.12 + 0.11 / n_eff) * d;
    KsResult {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
        n_x: nx,
        n_y: ny,
    }
}

/// Survival function of the Kolmogorov distribution,
/// Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
