//! Univariate robust statistics and rank-based correlation measures.
//!
//! Everything here operates on plain `&[f64]` slices of *observed* values;
//! missing-data bookkeeping happens in the calling modules.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Gaussian consistency factor for the MAD.
pub const MAD_CONSISTENCY: f64 = 1.4826;

/// Gaussian consistency factor for the Qn estimator.
pub const QN_CONSISTENCY: f64 = 2.2219;

/// Sample median. Even counts take the midpoint of the two central order
/// statistics.
///
/// Panics on an empty slice; callers are expected to have checked counts.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// MAD scale: `1.4826 * median(|x_i - median(x)|)`.
pub fn mad_scale(values: &[f64]) -> f64 {
    let m = median(values);
    let dev: Vec<f64> = values.iter().map(|&x| (x - m).abs()).collect();
    MAD_CONSISTENCY * median(&dev)
}

/// Qn scale estimator: the k-th order statistic of the pairwise absolute
/// differences, k = C(h,2) with h = floor(m/2)+1, times 2.2219.
///
/// Exact O(m^2) enumeration; fine at desk scale.
pub fn qn_scale(values: &[f64]) -> f64 {
    let m = values.len();
    if m < 2 {
        return 0.0;
    }
    let mut diffs = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            diffs.push((values[i] - values[j]).abs());
        }
    }
    diffs.sort_unstable_by(f64::total_cmp);
    let h = m / 2 + 1;
    let k = h * (h - 1) / 2; // C(h,2), 1-based rank
    QN_CONSISTENCY * diffs[k - 1]
}

/// Midranks (1-based; ties get the average of their rank range).
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_unstable_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; m];
    let mut i = 0;
    while i < m {
        let mut j = i;
        while j + 1 < m && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share the midrank
        let mid = 0.5 * ((i + 1) + (j + 1)) as f64;
        for &idx in &order[i..=j] {
            ranks[idx] = mid;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation of two paired samples. Returns 0 when either side
/// has no variance.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Gaussian rank correlation: Pearson correlation of the normal scores
/// `qnorm(rank/(m+1))`, normalized by the exact score variance so the
/// estimate is 1 for perfectly concordant data.
pub fn gaussian_rank_correlation(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let m = x.len();
    if m < 2 {
        return 0.0;
    }
    let rx = midranks(x);
    let ry = midranks(y);
    let denom: f64 = (1..=m)
        .map(|i| {
            let q = std_normal_quantile(i as f64 / (m as f64 + 1.0));
            q * q
        })
        .sum();
    if denom <= 0.0 {
        return 0.0;
    }
    let num: f64 = rx
        .iter()
        .zip(&ry)
        .map(|(&a, &b)| {
            std_normal_quantile(a / (m as f64 + 1.0)) * std_normal_quantile(b / (m as f64 + 1.0))
        })
        .sum();
    (num / denom).clamp(-1.0, 1.0)
}

/// Spearman rank correlation (Pearson correlation of midranks), without
/// the Gaussian consistency transform.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> f64 {
    pearson(&midranks(x), &midranks(y))
}

/// Standard normal quantile function.
pub fn std_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Quantile of the chi-squared distribution with one degree of freedom.
pub fn chi2_1_quantile(p: f64) -> f64 {
    ChiSquared::new(1.0).expect("df = 1").inverse_cdf(p)
}

/// Default flagging cutoff: sqrt of the 0.99 chi-squared(1) quantile.
pub fn default_cutoff() -> f64 {
    chi2_1_quantile(0.99).sqrt()
}
