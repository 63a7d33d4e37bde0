//! Exact combinatorics of crater/mound patterns.
//!
//! Everything here is computed in exact rational arithmetic; floats appear
//! only at the reporting boundary. The closed forms are cross-checked against
//! brute-force enumeration over all permutations of a window, which is the
//! independent oracle for the whole module.
//!
//! Conventions: a window of length `m` has interior positions `1..m-1`
//! (0-based); the first and last position of a window are never peaks or
//! valleys. A "peak" at `i` means `w[i-1] < w[i] > w[i+1]`, a "valley" the
//! reverse. On the cycle, craters of the mass process are exactly the peaks
//! of the permutation ranking vertices by last-hit time, and mounds are the
//! valleys.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Windows above this length are rejected: `13!` permutations do not fit the
/// enumeration budget.
pub const MAX_WINDOW: usize = 12;

/// An exact probability: a big rational guaranteed to lie in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactProb(BigRational);

impl ExactProb {
    pub fn new(r: BigRational) -> Result<ExactProb> {
        if r.is_negative() || r > BigRational::one() {
            return Err(Error::Validation(format!("probability {r} outside [0,1]")));
        }
        Ok(ExactProb(r))
    }

    pub fn from_u64(num: u64, den: u64) -> ExactProb {
        ExactProb::new(BigRational::new(BigInt::from(num), BigInt::from(den))).unwrap()
    }

    pub fn value(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn into_inner(self) -> BigRational {
        self.0
    }
}

impl std::fmt::Display for ExactProb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= i;
    }
    acc
}

pub fn binomial(n: u64, r: i64) -> BigInt {
    if r < 0 || r as u64 > n {
        return BigInt::zero();
    }
    let r = (r as u64).min(n - r as u64);
    let mut acc = BigInt::one();
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

/// Probability that a fixed site of a large cycle is a crater: 1/3.
pub fn p_zero() -> ExactProb {
    ExactProb::from_u64(1, 3)
}

/// Probability that a fixed site starts a maximal run of exactly `n`
/// non-crater sites: `n (n+3) 2^(n+1) / (n+4)!`. `closed_p(0)` is the crater
/// probability 1/3.
pub fn closed_p(n: u64) -> ExactProb {
    if n == 0 {
        return p_zero();
    }
    let num = BigInt::from(n) * BigInt::from(n + 3) * (BigInt::one() << (n + 1));
    ExactProb::new(ratio(num, factorial(n + 4))).unwrap()
}

/// Probability that `n` fixed consecutive sites are all non-craters (the run
/// need not be maximal): `2^(n+1) / (n+2)!`.
pub fn closed_phat(n: u64) -> ExactProb {
    let num = BigInt::one() << (n + 1);
    ExactProb::new(ratio(num, factorial(n + 2))).unwrap()
}

/// Probability that a fixed site is a crater whose next two crater gaps have
/// sizes `i` and `j` (`i, j >= 1`).
pub fn closed_a(i: u64, j: u64) -> Result<ExactProb> {
    if i < 1 || j < 1 {
        return Err(Error::Validation("closed_a needs i, j >= 1".into()));
    }
    let m = i + j + 1;
    let inner = BigInt::from(j) * binomial(m, i as i64 - 1)
        + BigInt::from(j + 1) * binomial(m, i as i64)
        + BigInt::from(i + 1) * binomial(m, i as i64 + 1)
        + BigInt::from(i) * binomial(m, i as i64 + 2)
        - BigInt::from(2 * m);
    let bracket = BigInt::from(i + j + 4) * inner + BigInt::from(i * j) * binomial(i + j + 4, i as i64 + 2);
    let num = (BigInt::one() << (i + j)) * bracket;
    ExactProb::new(ratio(num, factorial(i + j + 5)))
}

fn b_one_sided(i: u64, j: u64) -> BigRational {
    let bracket = binomial(i + j + 1, i as i64 + 1) + BigInt::from(i + 1) * binomial(i + j + 2, i as i64 + 2);
    ratio(BigInt::from(2 * (i + j + 4)) * bracket, factorial(i + j + 5))
}

/// Probability that a fixed site is a crater followed by a mound and another
/// crater, with `i` and `j` plain sites between the three (`i, j >= 0`).
///
/// The event is invariant under reflection, which forces `B(i,j) = B(j,i)`;
/// the one-sided binomial expression is averaged with its mirror image.
/// Enumeration pins this down exactly (see the `oracle_exact` tests).
pub fn closed_b(i: u64, j: u64) -> ExactProb {
    let two = BigRational::from(BigInt::from(2));
    ExactProb::new((b_one_sided(i, j) + b_one_sided(j, i)) / two).unwrap()
}

/// Partial sums `(p_0 + sum_{n=1..N} p_n, sum_{n=1..N} n p_n)`.
/// Both converge to 2/3.
pub fn series_partial_sums(n_max: u64) -> (BigRational, BigRational) {
    let mut total = p_zero().into_inner();
    let mut weighted = BigRational::zero();
    for n in 1..=n_max {
        let p = closed_p(n).into_inner();
        total += &p;
        weighted += p * BigRational::from(BigInt::from(n));
    }
    (total, weighted)
}

/// Runs `f` on every permutation of `{1, ..., m}` (Heap's algorithm).
fn for_each_permutation<F: FnMut(&[u8])>(m: usize, mut f: F) {
    let mut a: Vec<u8> = (1..=m as u8).collect();
    let mut c = vec![0usize; m];
    f(&a);
    let mut i = 0;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Exact probability that a uniform random permutation of `{1, ..., m}`
/// satisfies `predicate`, by full enumeration. `m <= 12`.
pub fn enumerate_window_probability<F: FnMut(&[u8]) -> bool>(
    m: usize,
    mut predicate: F,
) -> Result<ExactProb> {
    if m == 0 || m > MAX_WINDOW {
        return Err(Error::Budget(format!("window length {m} outside 1..={MAX_WINDOW}")));
    }
    let mut count = 0u64;
    for_each_permutation(m, |w| {
        if predicate(w) {
            count += 1;
        }
    });
    ExactProb::new(ratio(BigInt::from(count), factorial(m as u64)))
}

/// `w[i]` is a peak: an interior position exceeding both neighbors.
pub fn is_peak(w: &[u8], i: usize) -> bool {
    i >= 1 && i + 1 < w.len() && w[i - 1] < w[i] && w[i] > w[i + 1]
}

/// `w[i]` is a valley: an interior position below both neighbors.
pub fn is_valley(w: &[u8], i: usize) -> bool {
    i >= 1 && i + 1 < w.len() && w[i - 1] > w[i] && w[i] < w[i + 1]
}

/// True iff the interior peak set of `w` is exactly `peaks` (0-based).
pub fn peaks_exactly(w: &[u8], peaks: &[usize]) -> bool {
    (1..w.len() - 1).all(|i| is_peak(w, i) == peaks.contains(&i))
}

/// Enumeration oracle for [`closed_p`]: window `n+4`, peaks exactly at the
/// 0-based positions `{1, n+2}`.
pub fn enum_p(n: u64) -> Result<ExactProb> {
    if n == 0 {
        // peak at the middle of a 3-window
        return enumerate_window_probability(3, |w| is_peak(w, 1));
    }
    let m = (n + 4) as usize;
    enumerate_window_probability(m, |w| peaks_exactly(w, &[1, m - 2]))
}

/// Enumeration oracle for [`closed_phat`]: window `n+2` with no interior peaks.
pub fn enum_phat(n: u64) -> Result<ExactProb> {
    let m = (n + 2) as usize;
    enumerate_window_probability(m, |w| peaks_exactly(w, &[]))
}

/// Enumeration oracle for [`closed_a`].
pub fn enum_a(i: u64, j: u64) -> Result<ExactProb> {
    let m = (i + j + 5) as usize;
    let peaks = [1usize, (i + 2) as usize, (i + j + 3) as usize];
    enumerate_window_probability(m, |w| peaks_exactly(w, &peaks))
}

/// Enumeration oracle for [`closed_b`].
pub fn enum_b(i: u64, j: u64) -> Result<ExactProb> {
    let m = (i + j + 5) as usize;
    let peaks = [1usize, (i + j + 3) as usize];
    let valley = (i + 2) as usize;
    enumerate_window_probability(m, |w| {
        peaks_exactly(w, &peaks) && (1..m - 1).all(|p| is_valley(w, p) == (p == valley))
    })
}

/// A family of relative-order window patterns.
///
/// A pattern of length `m` is a permutation of `{1, ..., m}`. The family
/// occurs at position `j` of a sequence of distinct values when, for some
/// pattern, the window starting at `j` order-matches it.
#[derive(Debug, Clone)]
pub struct PatternSpec {
    patterns: Vec<Vec<u8>>,
    max_len: usize,
}

impl PatternSpec {
    pub fn new(patterns: Vec<Vec<u8>>) -> Result<PatternSpec> {
        if patterns.is_empty() {
            return Ok(PatternSpec { patterns, max_len: 0 });
        }
        let mut max_len = 0;
        for p in &patterns {
            let m = p.len();
            if m == 0 || m > MAX_WINDOW {
                return Err(Error::Validation(format!("pattern length {m} outside 1..={MAX_WINDOW}")));
            }
            let mut seen = vec![false; m];
            for &x in p {
                if x == 0 || x as usize > m || seen[x as usize - 1] {
                    return Err(Error::Validation(format!("{p:?} is not a permutation")));
                }
                seen[x as usize - 1] = true;
            }
            max_len = max_len.max(m);
        }
        Ok(PatternSpec { patterns, max_len })
    }

    /// The crater family: a window of three whose middle entry is the
    /// largest, i.e. the site one step into the window is a peak.
    pub fn crater() -> PatternSpec {
        PatternSpec::new(vec![vec![1, 3, 2], vec![2, 3, 1]]).unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn patterns(&self) -> &[Vec<u8>] {
        &self.patterns
    }

    /// Does the family occur at the start of `window`? Values must be
    /// pairwise distinct; only the first `len(pattern)` entries of the window
    /// are consulted for each pattern.
    pub fn occurs_at<T: PartialOrd>(&self, window: &[T]) -> bool {
        self.patterns.iter().any(|p| {
            let m = p.len();
            if window.len() < m {
                return false;
            }
            for i in 0..m {
                for l in (i + 1)..m {
                    if (window[i] < window[l]) != (p[i] < p[l]) {
                        return false;
                    }
                }
            }
            true
        })
    }
}

/// Exact central-limit parameters for a pattern count over a long cycle.
#[derive(Debug, Clone)]
pub struct CltParams {
    pub mu_exact: BigRational,
    pub sigma_sq_exact: BigRational,
    pub mu: f64,
    pub sigma: f64,
}

/// Mean and standard-deviation parameters for the count of occurrences of
/// `spec` in a uniform random ranking of a long cycle: the count over `k`
/// sites is asymptotically normal with mean `k mu` and variance `k sigma^2`.
///
/// `mu` is the per-site occurrence probability. The variance sums the lag
/// covariances of the stationary occurrence indicators: windows further apart
/// than the longest pattern are independent, so only lags `1..max_len` need
/// joint enumeration (over at most `2 * max_len <= 12` positions).
pub fn clt_params(spec: &PatternSpec) -> Result<CltParams> {
    let b = spec.max_len();
    if b == 0 {
        return Ok(CltParams {
            mu_exact: BigRational::zero(),
            sigma_sq_exact: BigRational::zero(),
            mu: 0.0,
            sigma: 0.0,
        });
    }
    if 2 * b > MAX_WINDOW {
        return Err(Error::Budget(format!(
            "pattern length {b} needs joint windows of {} > {MAX_WINDOW}",
            2 * b
        )));
    }
    let mu = enumerate_window_probability(b, |w| spec.occurs_at(w))?.into_inner();
    let mut sigma_sq = &mu - &mu * &mu;
    for lag in 1..b {
        let joint = enumerate_window_probability(b + lag, |w| {
            spec.occurs_at(w) && spec.occurs_at(&w[lag..])
        })?
        .into_inner();
        let cov = joint - &mu * &mu;
        sigma_sq += BigRational::from(BigInt::from(2)) * cov;
    }
    if sigma_sq.is_negative() {
        return Err(Error::Validation("negative pattern variance".into()));
    }
    let mu_f = mu.to_f64().unwrap();
    let sigma_f = sigma_sq.to_f64().unwrap().sqrt();
    Ok(CltParams {
        mu_exact: mu,
        sigma_sq_exact: sigma_sq,
        mu: mu_f,
        sigma: sigma_f,
    })
}
