//! Chain summaries and goodness-of-fit statistics on `f64` output.

use statrs::distribution::{ChiSquared, ContinuousCDF};

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

/// Sample correlation of pairs; NaN when either column is constant.
pub fn pearson(pairs: &[[f64; 2]]) -> f64 {
    let n = pairs.len() as f64;
    let (ma, mb) = pairs.iter().fold((0.0, 0.0), |(a, b), p| (a + p[0] / n, b + p[1] / n));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for p in pairs {
        let (a, b) = (p[0] - ma, p[1] - mb);
        sab += a * b;
        saa += a * a;
        sbb += b * b;
    }
    sab / (saa * sbb).sqrt()
}

/// Linear-interpolation quantile of sorted data (the usual "type 7").
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(x: &[f64], p: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&s, p)
}

/// Autocovariance at `lag` with divisor `n`.
fn autocovariance(x: &[f64], m: f64, lag: usize) -> f64 {
    let n = x.len();
    x[..n - lag].iter().zip(&x[lag..]).map(|(a, b)| (a - m) * (b - m)).sum::<f64>() / n as f64
}

/// Effective sample size by the initial monotone sequence estimator.
///
/// Sums of adjacent autocovariance pairs are truncated at the first
/// non-positive pair and forced to be non-increasing. A constant chain
/// reports its length.
pub fn ess(x: &[f64]) -> f64 {
    let n = x.len();
    if n < 4 {
        return n as f64;
    }
    let m = mean(x);
    let g0 = autocovariance(x, m, 0);
    if !(g0 > 0.0) {
        return n as f64;
    }
    let mut total = 0.0;
    let mut prev = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = autocovariance(x, m, lag) + autocovariance(x, m, lag + 1);
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        total += pair;
        prev = pair;
        lag += 2;
    }
    let tau = (2.0 * total - g0) / g0;
    (n as f64 / tau.max(1.0 / n as f64)).min(n as f64 * (n as f64).log10().max(1.0))
}

/// Asymptotic Kolmogorov tail `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// p-value of a KS distance `d` at effective size `n_eff`, with the usual
/// small-sample correction of the Kolmogorov argument.
pub fn ks_pvalue(d: f64, n_eff: f64) -> f64 {
    let r = n_eff.sqrt();
    kolmogorov_sf((r + 0.12 + 0.11 / r) * d)
}

/// One-sample KS distance against a continuous cdf.
pub fn ks_one_sample<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len() as f64;
    s.iter().enumerate().fold(0.0, |d: f64, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// Two-sample KS distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Upper tail of the chi-squared distribution.
pub fn chi2_sf(x: f64, df: f64) -> f64 {
    ChiSquared::new(df).map(|d| d.sf(x)).unwrap_or(f64::NAN)
}

/// Interior cut points of `bins` equiprobable cells of a sample.
pub fn equiprobable_edges(reference: &[f64], bins: usize) -> Vec<f64> {
    let mut s = reference.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    (1..bins).map(|k| quantile_sorted(&s, k as f64 / bins as f64)).collect()
}

/// Cell counts of `x` for the cut points `edges` (cells are `(e_{k-1}, e_k]`).
pub fn bin_counts(x: &[f64], edges: &[f64]) -> Vec<f64> {
    let mut c = vec![0.0; edges.len() + 1];
    for v in x {
        c[edges.partition_point(|e| e < v)] += 1.0;
    }
    c
}

/// Chi-squared test that two (possibly fractional, e.g. ESS-scaled) count
/// vectors come from the same cell probabilities. Cells empty in both are
/// dropped. Returns `(statistic, df, p-value)`.
pub fn chi2_two_sample(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let (na, nb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    let (ka, kb) = ((nb / na).sqrt(), (na / nb).sqrt());
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (x, y) in a.iter().zip(b) {
        if x + y > 0.0 {
            stat += (ka * x - kb * y).powi(2) / (x + y);
            cells += 1;
        }
    }
    let df = cells.saturating_sub(1) as f64;
    (stat, df, chi2_sf(stat, df))
}

/// Pearson chi-squared goodness of fit of counts to cell probabilities.
pub fn chi2_goodness(counts: &[f64], probs: &[f64]) -> (f64, f64, f64) {
    let n: f64 = counts.iter().sum();
    let stat = counts.iter().zip(probs).map(|(o, p)| (o - n * p).powi(2) / (n * p)).sum::<f64>();
    let df = (counts.len() - 1) as f64;
    (stat, df, chi2_sf(stat, df))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn type7_quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&s, 0.0), 1.0);
        assert_eq!(quantile_sorted(&s, 1.0), 4.0);
        assert!((quantile_sorted(&s, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile_sorted(&s, 0.25) - 1.75).abs() < 1e-15);
    }

    #[test]
    fn ess_of_iid_and_ar1() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let iid: Vec<f64> = (0..20_000).map(|_| rng.random::<f64>()).collect();
        let e = ess(&iid);
        assert!((e / 20_000.0 - 1.0).abs() < 0.1, "{e}");
        // AR(1) with phi = 0.9 has tau = (1 + phi) / (1 - phi) = 19
        let mut x = vec![0.0; 50_000];
        for t in 1..x.len() {
            x[t] = 0.9 * x[t - 1] + rng.random::<f64>() - 0.5;
        }
        let e = ess(&x);
        assert!((50_000.0 / e / 19.0 - 1.0).abs() < 0.2, "{e}");
    }

    #[test]
    fn kolmogorov_tail_values() {
        // P(K > 1.36) is about 0.049, P(K > 1.63) about 0.010
        assert!((kolmogorov_sf(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.6276) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn ks_distances() {
        let u: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert!((ks_one_sample(&u, |x| x) - 0.05).abs() < 1e-12);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert_eq!(ks_two_sample(&[1.0, 3.0], &[1.0, 3.0]), 0.0);
    }

    #[test]
    fn chi2_two_sample_detects_difference() {
        let (_, df, p) = chi2_two_sample(&[100.0, 100.0, 100.0], &[200.0, 200.0, 200.0]);
        assert_eq!(df, 2.0);
        assert!((p - 1.0).abs() < 1e-12);
        let (_, _, p) = chi2_two_sample(&[150.0, 100.0, 50.0], &[100.0, 100.0, 100.0]);
        assert!(p < 1e-4);
    }

    #[test]
    fn binning() {
        let e = equiprobable_edges(&[1.0, 2.0, 3.0, 4.0, 5.0], 2);
        assert_eq!(e, vec![3.0]);
        assert_eq!(bin_counts(&[0.0, 3.0, 3.5, 9.0], &e), vec![2.0, 2.0]);
    }
}
