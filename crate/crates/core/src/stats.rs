//! Small statistics toolbox: streaming moments, batch-means standard errors,
//! goodness-of-fit statistics, and confidence intervals.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Mc,
    BatchMeans,
    Exact,
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub method: Method,
}

impl Estimate {
    pub fn exact(value: f64) -> Estimate {
        Estimate { mean: value, stderr: 0.0, n_samples: 0, method: Method::Exact }
    }

    /// |mean - target| measured in combined standard errors.
    pub fn sigmas_from(&self, target: f64) -> f64 {
        if self.stderr == 0.0 {
            if self.mean == target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - target).abs() / self.stderr
        }
    }
}

/// Streaming mean/variance accumulator (Welford). Merging is exact, so
/// replication results can be reduced in any order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn new() -> Accumulator {
        Accumulator::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        self.mean += d * other.n as f64 / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample variance (n-1 denominator).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate { mean: self.mean(), stderr: self.stderr(), n_samples: self.n, method: Method::Mc }
    }
}

/// Mean of a correlated series with a batch-means standard error.
///
/// The series is cut into `ceil(sqrt(n))`-sized batches; the stderr is the
/// sample standard deviation of the batch means divided by `sqrt(#batches)`.
pub fn batch_means(series: &[f64]) -> Estimate {
    let n = series.len();
    if n < 4 {
        let mut acc = Accumulator::new();
        for &x in series {
            acc.push(x);
        }
        return acc.estimate();
    }
    let batch_len = (n as f64).sqrt().ceil() as usize;
    let n_batches = n / batch_len;
    let mut acc = Accumulator::new();
    for b in 0..n_batches {
        let chunk = &series[b * batch_len..(b + 1) * batch_len];
        acc.push(chunk.iter().sum::<f64>() / chunk.len() as f64);
    }
    Estimate {
        mean: series.iter().sum::<f64>() / n as f64,
        stderr: acc.stderr(),
        n_samples: n as u64,
        method: Method::BatchMeans,
    }
}

/// One-sample Kolmogorov-Smirnov statistic against the cdf `f`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in samples.iter().enumerate() {
        let fx = cdf(x);
        d = d.max((((i + 1) as f64) / n - fx).abs());
        d = d.max((fx - i as f64 / n).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
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

/// Asymptotic p-value for a one-sample KS statistic at sample size `n`
/// (Kolmogorov distribution with the usual small-sample correction).
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    kolmogorov_survival(lambda)
}

/// Asymptotic p-value for a two-sample KS statistic.
pub fn ks_two_sample_p_value(d: f64, na: usize, nb: usize) -> f64 {
    let ne = (na as f64 * nb as f64) / (na as f64 + nb as f64);
    let sn = ne.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    kolmogorov_survival(lambda)
}

fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Wilson score interval for a binomial proportion at confidence `z` sigmas.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Regularized lower incomplete gamma function P(a, x) by series/continued
/// fraction, good to ~1e-12 for the moderate arguments used here.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // series expansion
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..500 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-15 {
                break;
            }
        }
        sum * (-x + a * x.ln() - ln_gamma(a)).exp()
    } else {
        // continued fraction for Q(a, x)
        let mut b = x + 1.0 - a;
        let mut c = 1e308;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < 1e-300 {
                d = 1e-300;
            }
            c = b + an / c;
            if c.abs() < 1e-300 {
                c = 1e-300;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-15 {
                break;
            }
        }
        1.0 - h * (-x + a * x.ln() - ln_gamma(a)).exp()
    }
}

/// Lanczos log-gamma.
pub fn ln_gamma(x: f64) -> f64 {
    const G: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for g in G {
        y += 1.0;
        ser += g / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Survival function of the chi-square distribution with `df` degrees of
/// freedom: `P(X > x)`.
pub fn chi_square_survival(x: f64, df: u64) -> f64 {
    (1.0 - gamma_p(df as f64 / 2.0, x / 2.0)).clamp(0.0, 1.0)
}

/// Pearson goodness-of-fit statistic and p-value for observed counts against
/// expected probabilities.
pub fn chi_square_gof(observed: &[u64], expected_probs: &[f64]) -> (f64, f64) {
    assert_eq!(observed.len(), expected_probs.len());
    let n: u64 = observed.iter().sum();
    let mut stat = 0.0;
    for (&o, &p) in observed.iter().zip(expected_probs) {
        let e = p * n as f64;
        if e > 0.0 {
            stat += (o as f64 - e) * (o as f64 - e) / e;
        }
    }
    let df = (observed.len() - 1) as u64;
    (stat, chi_square_survival(stat, df))
}

/// Least-squares line through `(x, y)` points; returns `(slope, intercept)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// cdf of Exp(1).
pub fn exp1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0 - (-x).exp()
    }
}

/// cdf of Uniform(0, b).
pub fn uniform_cdf(b: f64) -> impl Fn(f64) -> f64 {
    move |x| (x / b).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accumulator_matches_direct_moments() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let mut acc = Accumulator::new();
        for &x in &xs {
            acc.push(x);
        }
        assert!((acc.mean() - 6.2).abs() < 1e-12);
        assert!((acc.variance() - 37.2).abs() < 1e-12);

        let mut left = Accumulator::new();
        let mut right = Accumulator::new();
        for &x in &xs[..2] {
            left.push(x);
        }
        for &x in &xs[2..] {
            right.push(x);
        }
        left.merge(&right);
        assert!((left.mean() - acc.mean()).abs() < 1e-12);
        assert!((left.variance() - acc.variance()).abs() < 1e-12);
    }

    #[test]
    fn batch_means_reports_wider_error_for_correlated_series() {
        // strongly autocorrelated sawtooth
        let series: Vec<f64> = (0..10_000).map(|i| ((i / 100) % 2) as f64).collect();
        let bm = batch_means(&series);
        let mut naive = Accumulator::new();
        for &x in &series {
            naive.push(x);
        }
        assert!(bm.stderr > 2.0 * naive.stderr());
        assert_eq!(bm.method, Method::BatchMeans);
    }

    #[test]
    fn ks_statistic_on_exact_grid_is_small() {
        let mut xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&mut xs, |x| x);
        assert!(d <= 0.5e-3 + 1e-12, "d = {d}");
    }

    #[test]
    fn ks_p_value_sane() {
        assert!(ks_p_value(0.008, 10_000) > 0.5);
        assert!(ks_p_value(0.05, 10_000) < 1e-6);
    }

    #[test]
    fn two_sample_ks_detects_shift() {
        let mut a: Vec<f64> = (0..2000).map(|i| i as f64 / 2000.0).collect();
        let mut b: Vec<f64> = (0..2000).map(|i| i as f64 / 2000.0 + 0.2).collect();
        let d = ks_two_sample(&mut a, &mut b);
        assert!((d - 0.2).abs() < 0.01);
        assert!(ks_two_sample_p_value(d, 2000, 2000) < 1e-10);
    }

    #[test]
    fn wilson_interval_contains_proportion() {
        let (lo, hi) = wilson_interval(330, 1000, 1.96);
        assert!(lo < 0.33 && 0.33 < hi);
        assert!(hi - lo < 0.07);
        assert_eq!(wilson_interval(0, 0, 1.96), (0.0, 1.0));
    }

    #[test]
    fn chi_square_survival_reference_values() {
        // classic table entries
        assert!((chi_square_survival(3.841, 1) - 0.05).abs() < 1e-3);
        assert!((chi_square_survival(41.638, 23) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn chi_square_gof_uniform_counts() {
        let observed = [250u64, 250, 250, 250];
        let (stat, p) = chi_square_gof(&observed, &[0.25; 4]);
        assert!(stat < 1e-12);
        assert!(p > 0.999);
    }

    #[test]
    fn linear_fit_recovers_line() {
        let xs: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x).collect();
        let (slope, intercept) = linear_fit(&xs, &ys);
        assert!((slope + 2.0).abs() < 1e-12);
        assert!((intercept - 3.0).abs() < 1e-10);
    }

    #[test]
    fn gamma_p_matches_exponential_cdf() {
        // P(1, x) = 1 - e^{-x}
        for &x in &[0.1, 0.5, 1.0, 2.5, 7.0] {
            assert!((gamma_p(1.0, x) - (1.0 - (-x as f64).exp())).abs() < 1e-12);
        }
    }
}
