//! Summary statistics and hypothesis tests.

pub mod centering;

use rand::Rng as _;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::rng::Rng;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased sample variance.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Mean and its standard error.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    (mean(x), (variance(x) / x.len() as f64).sqrt())
}

/// Sample covariance with a delta-method standard error (centered products
/// treated as i.i.d.).
pub fn covariance_se(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect();
    let n = z.len() as f64;
    let (m, se) = mean_se(&z);
    (m * n / (n - 1.0), se)
}

/// `|est - target| <= k se`
pub fn within_sigma(est: f64, se: f64, target: f64, k: f64) -> bool {
    (est - target).abs() <= k * se
}

/// Linear-interpolated quantile (type 7).
pub fn quantile(x: &[f64], q: f64) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&v, q)
}

pub fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

pub fn median(x: &[f64]) -> f64 {
    quantile(x, 0.5)
}

pub fn iqr(x: &[f64]) -> f64 {
    let mut v = x.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p: f64,
}

/// Kolmogorov survival function `Q(λ) = 2 Σ (-1)^{j-1} e^{-2 j² λ²}`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    if lambda < 1.18 {
        // small-λ form converges faster here
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let s: f64 = (0..50)
            .map(|j| y.powi((2 * j + 1) * (2 * j + 1)))
            .sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut sum = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        sum += if j % 2 == 1 { term } else { -term };
        if term < 1e-17 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn ks_p(d: f64, ne: f64) -> f64 {
    let sq = ne.sqrt();
    kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument("KS test on an empty sample".into()));
    }
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(|p, q| p.total_cmp(q));
    y.sort_by(|p, q| p.total_cmp(q));
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    Ok(KsResult {
        statistic: d,
        p: if d == 0.0 { 1.0 } else { ks_p(d, ne) },
    })
}

/// One-sample KS against a continuous CDF.
pub fn ks_one_sample(a: &[f64], cdf: impl Fn(f64) -> f64) -> Result<KsResult> {
    if a.is_empty() {
        return Err(Error::Argument("KS test on an empty sample".into()));
    }
    let mut x = a.to_vec();
    x.sort_by(|p, q| p.total_cmp(q));
    let n = x.len() as f64;
    let mut d = 0.0f64;
    for (i, v) in x.iter().enumerate() {
        let f = cdf(*v);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(KsResult {
        statistic: d,
        p: ks_p(d, n),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofResult {
    pub chi2: f64,
    pub df: usize,
    pub p: f64,
    /// Pooling left fewer than two bins; no test performed.
    pub skipped: bool,
}

/// Chi-square goodness of fit of integer counts against a pmf on
/// `0, 1, 2, ...`. Adjacent bins are pooled until each expects at least 5;
/// the last bin absorbs the upper tail. `fitted` parameters reduce df.
pub fn chi_square_pmf(counts: &[u64], pmf: impl Fn(u64) -> f64, fitted: usize) -> GofResult {
    let n = counts.len() as f64;
    let top = counts.iter().copied().max().unwrap_or(0);
    let mut observed = vec![0f64; top as usize + 1];
    for &c in counts {
        observed[c as usize] += 1.0;
    }
    // extend the support until the remaining mass is negligible
    let mut probs: Vec<f64> = Vec::new();
    let mut mass = 0.0;
    let mut k = 0u64;
    while k <= top || (1.0 - mass) * n >= 5.0 {
        let p = pmf(k);
        probs.push(p);
        mass += p;
        k += 1;
        if k > 100_000 {
            break;
        }
    }
    observed.resize(probs.len(), 0.0);
    let tail = (1.0 - mass).max(0.0);
    if let Some(last) = probs.last_mut() {
        *last += tail;
    }

    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (ob, p) in observed.iter().zip(&probs) {
        o += ob;
        e += p * n;
        if e >= 5.0 {
            bins.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match bins.last_mut() {
            Some(b) => {
                b.0 += o;
                b.1 += e;
            }
            None => bins.push((o, e)),
        }
    }
    let used = 1 + fitted;
    if bins.len() <= used {
        return GofResult {
            chi2: 0.0,
            df: 0,
            p: 1.0,
            skipped: true,
        };
    }
    let chi2: f64 = bins.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    let df = bins.len() - used;
    let p = 1.0 - ChiSquared::new(df as f64).unwrap().cdf(chi2);
    GofResult {
        chi2,
        df,
        p,
        skipped: false,
    }
}

pub fn poisson_pmf(rate: f64, k: u64) -> f64 {
    if rate == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * rate.ln() - rate - statrs::function::gamma::ln_gamma(k as f64 + 1.0)).exp()
}

pub fn binomial_pmf(m: u64, p: f64, k: u64) -> f64 {
    if k > m {
        return 0.0;
    }
    let lc = statrs::function::factorial::ln_binomial(m, k);
    let a = if k == 0 { 0.0 } else { k as f64 * p.ln() };
    let b = if k == m { 0.0 } else { (m - k) as f64 * (1.0 - p).ln() };
    (lc + a + b).exp()
}

pub fn poisson_gof(counts: &[u64], rate: f64) -> Result<GofResult> {
    if counts.is_empty() || !(rate > 0.0) {
        return Err(Error::Argument("Poisson GOF needs counts and a positive rate".into()));
    }
    Ok(chi_square_pmf(counts, |k| poisson_pmf(rate, k), 0))
}

/// Variance-to-mean ratio.
pub fn dispersion(counts: &[f64]) -> Result<f64> {
    if counts.len() < 2 {
        return Err(Error::Argument("dispersion needs two or more counts".into()));
    }
    let m = mean(counts);
    if m <= 0.0 {
        return Err(Error::Numeric("dispersion of all-zero counts".into()));
    }
    Ok(variance(counts) / m)
}

/// `P(|N(0,1)| >= |z|)`.
pub fn normal_two_sided(z: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    if z.is_nan() {
        return 1.0;
    }
    if z.is_infinite() {
        return 0.0;
    }
    2.0 * Normal::standard().sf(z.abs())
}

/// Holm step-down; returns which hypotheses are rejected at family level
/// `alpha`.
pub fn holm(p: &[f64], alpha: f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let m = p.len();
    let mut reject = vec![false; m];
    for (rank, &i) in order.iter().enumerate() {
        if p[i] <= alpha / (m - rank) as f64 {
            reject[i] = true;
        } else {
            break;
        }
    }
    reject
}

/// Holm-adjusted p-values; hypothesis `i` is rejected at family level
/// `alpha` iff `adjusted[i] <= alpha`.
pub fn holm_adjust(p: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let m = p.len();
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &i) in order.iter().enumerate() {
        running = running.max(((m - rank) as f64 * p[i]).min(1.0));
        adjusted[i] = running;
    }
    adjusted
}

/// Percentile bootstrap confidence interval.
pub fn bootstrap_ci(
    data: &[f64],
    stat: impl Fn(&[f64]) -> f64,
    resamples: usize,
    level: f64,
    rng: &mut Rng,
) -> (f64, f64) {
    let n = data.len();
    let mut buf = vec![0.0; n];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for b in buf.iter_mut() {
                *b = data[rng.random_range(0..n)];
            }
            stat(&buf)
        })
        .filter(|v| v.is_finite())
        .collect();
    stats.sort_by(|a, b| a.total_cmp(b));
    let a = (1.0 - level) / 2.0;
    (quantile_sorted(&stats, a), quantile_sorted(&stats, 1.0 - a))
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{replica_rng, uniform01};
    use approx::assert_abs_diff_eq;
    use rand_distr::{Distribution, Gamma, Poisson};

    #[test]
    fn ks_identical_samples() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p, 1.0);
        assert!(ks_two_sample(&[], &a).is_err());
    }

    #[test]
    fn ks_detects_shift() {
        let mut rng = replica_rng(1, "ks", 0);
        let a: Vec<f64> = (0..10_000).map(|_| uniform01(&mut rng)).collect();
        let b: Vec<f64> = (0..10_000).map(|_| 0.5 + uniform01(&mut rng)).collect();
        assert!(ks_two_sample(&a, &b).unwrap().p < 1e-6);
    }

    #[test]
    fn ks_null_p_values_are_centred() {
        let mut rng = replica_rng(2, "ks", 0);
        let ps: Vec<f64> = (0..200)
            .map(|_| {
                let a: Vec<f64> = (0..300).map(|_| uniform01(&mut rng)).collect();
                let b: Vec<f64> = (0..300).map(|_| uniform01(&mut rng)).collect();
                ks_two_sample(&a, &b).unwrap().p
            })
            .collect();
        let med = median(&ps);
        assert!((0.3..=0.7).contains(&med), "median p = {med}");
    }

    #[test]
    fn kolmogorov_reference_points() {
        // tabulated: Q(1.0) = 0.27, Q(1.36) = 0.0494, Q(1.63) = 0.0098
        assert_abs_diff_eq!(kolmogorov_q(1.0), 0.2700, epsilon = 1e-4);
        assert_abs_diff_eq!(kolmogorov_q(1.36), 0.0494, epsilon = 2e-4);
        assert_abs_diff_eq!(kolmogorov_q(1.63), 0.0098, epsilon = 2e-4);
        // both series agree where they meet (slope there is about -0.6)
        assert_abs_diff_eq!(kolmogorov_q(1.17999), kolmogorov_q(1.18001), epsilon = 2e-5);
    }

    #[test]
    fn poisson_gof_calibration() {
        let mut rng = replica_rng(3, "gof", 0);
        let pois = Poisson::new(3.0).unwrap();
        let counts: Vec<u64> = (0..10_000).map(|_| pois.sample(&mut rng) as u64).collect();
        assert!(poisson_gof(&counts, 3.0).unwrap().p > 0.01);
        let zeros = vec![0u64; 10_000];
        assert!(poisson_gof(&zeros, 5.0).unwrap().p < 1e-6);
    }

    #[test]
    fn gof_skips_single_bin() {
        let r = chi_square_pmf(&[0, 0, 0], |k| if k == 0 { 1.0 } else { 0.0 }, 0);
        assert!(r.skipped);
    }

    #[test]
    fn mixed_poisson_is_overdispersed() {
        let mut rng = replica_rng(4, "mix", 0);
        let g = Gamma::new(2.0, 1.5).unwrap();
        let counts: Vec<f64> = (0..20_000)
            .map(|_| Poisson::new(g.sample(&mut rng)).unwrap().sample(&mut rng))
            .collect();
        assert!(dispersion(&counts).unwrap() > 1.5);
    }

    #[test]
    fn holm_examples() {
        assert_eq!(holm(&[0.001, 0.2, 0.004], 0.01), vec![true, false, true]);
        assert_eq!(holm(&[0.006, 0.006], 0.01), vec![false, false]);
        assert_eq!(holm(&[0.004, 0.006], 0.01), vec![true, true]);
    }

    #[test]
    fn pmfs_sum_to_one() {
        let s: f64 = (0..60).map(|k| poisson_pmf(4.5, k)).sum();
        assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        let b: f64 = (0..=5).map(|k| binomial_pmf(5, 0.3, k)).sum();
        assert_abs_diff_eq!(b, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(binomial_pmf(4, 0.25, 0), 0.31640625, epsilon = 1e-12);
    }

    #[test]
    fn quantiles() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(median(&x), 3.0);
        assert_eq!(iqr(&x), 2.0);
    }
    #[test]
    fn holm_adjust_agrees_with_step_down() {
        let p = [0.001, 0.04, 0.012, 0.3, 0.0049];
        let adj = holm_adjust(&p);
        for alpha in [0.01, 0.02, 0.05, 0.5] {
            let rej = holm(&p, alpha);
            for i in 0..p.len() {
                assert_eq!(rej[i], adj[i] <= alpha, "alpha {alpha}, i {i}");
            }
        }
        assert_abs_diff_eq!(adj[0], 0.005, epsilon = 1e-15);
        assert!(holm_adjust(&[]).is_empty());
    }
}
