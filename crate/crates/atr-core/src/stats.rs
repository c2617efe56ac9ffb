//! Small statistics helpers used by report assembly and scenario assertions.

/// Arithmetic mean. Returns 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n-1 denominator); 0 for fewer than two points.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    var.sqrt()
}

/// Empirical quantile with linear interpolation between order statistics.
/// `q` is clamped to [0, 1]. Returns NaN for an empty slice.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    quantile_sorted(&sorted, q)
}

/// `quantile` over an already ascending-sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let q = q.clamp(0.0, 1.0);
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = pos - lo as f64;
        sorted[lo] * (1.0 - frac) + sorted[hi] * frac
    }
}

/// Central interval covering fraction `p` of the distribution:
/// `[quantile((1-p)/2), quantile((1+p)/2)]`.
pub fn coverage_band(xs: &[f64], p: f64) -> (f64, f64) {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let lo = (1.0 - p) / 2.0;
    (
        quantile_sorted(&sorted, lo),
        quantile_sorted(&sorted, 1.0 - lo),
    )
}

/// Mid-ranks (ties share the average rank), 1-based.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("non-finite sample"));
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation (Pearson correlation of mid-ranks).
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "spearman over unequal lengths");
    pearson(&ranks(xs), &ranks(ys))
}

/// Ordinary least squares `y = slope * x + intercept`.
/// Returns `(slope, intercept, r_squared)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len(), "fit over unequal lengths");
    assert!(xs.len() >= 2, "fit needs at least two points");
    let mx = mean(xs);
    let my = mean(ys);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    (slope, intercept, r2)
}

/// Two-sided Mann-Whitney U test p-value via the normal approximation with
/// tie correction and continuity correction. Suitable for n, m >= ~10.
pub fn mann_whitney_p(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = ys.len() as f64;
    assert!(n > 0.0 && m > 0.0, "rank test needs data in both groups");

    let mut all: Vec<f64> = xs.iter().chain(ys.iter()).copied().collect();
    let r = ranks(&all);
    let rank_sum_x: f64 = r[..xs.len()].iter().sum();
    let u = rank_sum_x - n * (n + 1.0) / 2.0;

    // Tie correction over the pooled sample.
    all.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1] == all[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let total = n + m;
    let mu = n * m / 2.0;
    let sigma2 = n * m / 12.0 * ((total + 1.0) - tie_term / (total * (total - 1.0)));
    if sigma2 <= 0.0 {
        // All observations identical: the groups are indistinguishable.
        return 1.0;
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / sigma2.sqrt();
    2.0 * normal_sf(z)
}

/// Standard normal survival function via the complementary error function.
fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Abramowitz & Stegun 7.1.26 rational approximation, |error| < 1.5e-7.
fn erfc(x: f64) -> f64 {
    let sign_neg = x < 0.0;
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let poly = t
        * (0.254_829_592
            + t * (-0.284_496_736
                + t * (1.421_413_741 + t * (-1.453_152_027 + t * 1.061_405_429))));
    let y = poly * (-x * x).exp();
    if sign_neg {
        2.0 - y
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_interpolates() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert!((quantile(&xs, 0.5) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn coverage_band_is_central() {
        let xs: Vec<f64> = (0..=100).map(f64::from).collect();
        let (lo, hi) = coverage_band(&xs, 0.5);
        assert!((lo - 25.0).abs() < 1e-9);
        assert!((hi - 75.0).abs() < 1e-9);
    }

    #[test]
    fn spearman_detects_monotone_relations() {
        let xs: Vec<f64> = (0..20).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!((spearman_rho(&xs, &ys) - 1.0).abs() < 1e-12);
        let ys_rev: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((spearman_rho(&xs, &ys_rev) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn linear_fit_recovers_exact_line() {
        let xs: Vec<f64> = (0..10).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x - 1.0).collect();
        let (slope, intercept, r2) = linear_fit(&xs, &ys);
        assert!((slope - 3.0).abs() < 1e-12);
        assert!((intercept + 1.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mann_whitney_separates_shifted_samples() {
        let xs: Vec<f64> = (0..40).map(|i| f64::from(i) * 0.1).collect();
        let ys: Vec<f64> = (0..40).map(|i| f64::from(i) * 0.1 + 10.0).collect();
        assert!(mann_whitney_p(&xs, &ys) < 1e-6);
        // Identical groups are indistinguishable.
        assert!(mann_whitney_p(&xs, &xs) > 0.9);
    }

    #[test]
    fn ranks_handle_ties_with_midranks() {
        let r = ranks(&[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(r, vec![1.0, 2.5, 2.5, 4.0]);
    }
}
