//! Exact and log-space combinatorial primitives.
//!
//! Counts that can exceed `2^63` are carried as [`LogNumber`]; exact big
//! integers appear only in the brute-force oracles on tiny instances.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::RSet;

/// Problem parameters `(n, r, ell)` with `3 <= r <= n` and `2 <= ell <= r - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct Params {
    n: u32,
    r: u32,
    ell: u32,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
struct RawParams {
    n: u32,
    r: u32,
    ell: u32,
}

impl TryFrom<RawParams> for Params {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        Params::new(raw.n, raw.r, raw.ell)
    }
}

impl From<Params> for RawParams {
    fn from(p: Params) -> Self {
        RawParams { n: p.n, r: p.r, ell: p.ell }
    }
}

impl Params {
    pub fn new(n: u32, r: u32, ell: u32) -> Result<Self> {
        if r < 3 {
            return Err(Error::InvalidParams(format!("r = {r} must be at least 3")));
        }
        if r > n {
            return Err(Error::InvalidParams(format!("r = {r} exceeds n = {n}")));
        }
        if ell < 2 || ell > r - 1 {
            return Err(Error::InvalidParams(format!(
                "ell = {ell} must satisfy 2 <= ell <= r - 1 = {}",
                r - 1
            )));
        }
        Ok(Params { n, r, ell })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    /// Same `r` and `ell` on a different vertex count.
    pub fn with_n(&self, n: u32) -> Result<Self> {
        Params::new(n, self.r, self.ell)
    }

    /// `N = C(n, r)` exactly.
    pub fn total_rsets(&self) -> BigUint {
        binomial(self.n as u64, self.r as u64)
    }

    /// `N` when it fits in a `u64`.
    pub fn total_rsets_u64(&self) -> Option<u64> {
        self.total_rsets().to_u64()
    }

    /// `N` as a float (exact below `2^53`).
    pub fn total_rsets_f64(&self) -> f64 {
        match self.total_rsets_u64() {
            Some(v) => v as f64,
            None => self.log_total_rsets().exp(),
        }
    }

    pub fn log_total_rsets(&self) -> f64 {
        ln_binomial(self.n as u64, self.r as u64)
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n={}, r={}, ell={})", self.n, self.r, self.ell)
    }
}

/// A signed real stored as `sign * exp(log_magnitude)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogNumber {
    log_magnitude: f64,
    sign: i8,
}

impl LogNumber {
    pub const ZERO: LogNumber = LogNumber {
        log_magnitude: f64::NEG_INFINITY,
        sign: 0,
    };
    pub const ONE: LogNumber = LogNumber {
        log_magnitude: 0.0,
        sign: 1,
    };

    /// Positive number with the given natural log.
    pub fn from_ln(ln: f64) -> Self {
        if ln == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        LogNumber {
            log_magnitude: ln,
            sign: 1,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogNumber {
                log_magnitude: x.abs().ln(),
                sign: if x > 0.0 { 1 } else { -1 },
            }
        }
    }

    pub fn from_biguint(x: &BigUint) -> Self {
        if x.is_zero() {
            return Self::ZERO;
        }
        let bits = x.bits();
        if bits <= 1000 {
            return Self::from_f64(x.to_f64().unwrap_or(f64::INFINITY));
        }
        // shift into range, then add back the dropped power of two
        let shift = bits - 64;
        let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
        Self::from_ln(top.ln() + shift as f64 * std::f64::consts::LN_2)
    }

    /// Natural log of the absolute value; `-inf` for zero.
    pub fn ln(&self) -> f64 {
        self.log_magnitude
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn to_f64(&self) -> f64 {
        self.sign as f64 * self.log_magnitude.exp()
    }

    pub fn abs(&self) -> Self {
        if self.sign == 0 {
            *self
        } else {
            LogNumber {
                log_magnitude: self.log_magnitude,
                sign: 1,
            }
        }
    }

    pub fn powi(&self, k: i32) -> Self {
        if k == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            return Self::ZERO;
        }
        LogNumber {
            log_magnitude: self.log_magnitude * k as f64,
            sign: if k % 2 == 0 { 1 } else { self.sign },
        }
    }
}

impl Mul for LogNumber {
    type Output = LogNumber;
    fn mul(self, rhs: LogNumber) -> LogNumber {
        if self.sign == 0 || rhs.sign == 0 {
            return LogNumber::ZERO;
        }
        LogNumber {
            log_magnitude: self.log_magnitude + rhs.log_magnitude,
            sign: self.sign * rhs.sign,
        }
    }
}

impl Div for LogNumber {
    type Output = LogNumber;
    fn div(self, rhs: LogNumber) -> LogNumber {
        assert!(rhs.sign != 0, "LogNumber division by zero");
        if self.sign == 0 {
            return LogNumber::ZERO;
        }
        LogNumber {
            log_magnitude: self.log_magnitude - rhs.log_magnitude,
            sign: self.sign * rhs.sign,
        }
    }
}

impl Neg for LogNumber {
    type Output = LogNumber;
    fn neg(self) -> LogNumber {
        LogNumber {
            log_magnitude: self.log_magnitude,
            sign: -self.sign,
        }
    }
}

impl Add for LogNumber {
    type Output = LogNumber;
    fn add(self, rhs: LogNumber) -> LogNumber {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (big, small) = if self.log_magnitude >= rhs.log_magnitude {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let d = small.log_magnitude - big.log_magnitude;
        if big.sign == small.sign {
            LogNumber {
                log_magnitude: big.log_magnitude + d.exp().ln_1p(),
                sign: big.sign,
            }
        } else if d == 0.0 {
            LogNumber::ZERO
        } else {
            LogNumber {
                log_magnitude: big.log_magnitude + (-d.exp_m1()).ln(),
                sign: big.sign,
            }
        }
    }
}

impl Sub for LogNumber {
    type Output = LogNumber;
    fn sub(self, rhs: LogNumber) -> LogNumber {
        self + (-rhs)
    }
}

impl PartialOrd for LogNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Some(Ordering::Equal),
                1 => self.log_magnitude.partial_cmp(&other.log_magnitude),
                _ => other.log_magnitude.partial_cmp(&self.log_magnitude),
            },
            ord => Some(ord),
        }
    }
}

/// `[x]_t = x (x-1) ... (x-t+1)`, exactly. Zero when `t > x`.
pub fn falling_factorial(x: u64, t: u64) -> BigUint {
    if t > x {
        return BigUint::zero();
    }
    let mut acc = BigUint::one();
    for i in 0..t {
        acc *= x - i;
    }
    acc
}

/// Real-valued falling factorial, used by the asymptotic evaluators.
pub fn falling_factorial_f64(x: f64, t: u32) -> f64 {
    (0..t).map(|i| x - i as f64).product()
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Small binomials used in index arithmetic; panics on overflow.
pub fn binomial_u64(n: u64, k: u64) -> u64 {
    binomial(n, k)
        .to_u64()
        .expect("binomial coefficient overflows u64")
}

const STIRLING_CUTOFF: u64 = 64;

fn stirling_tail(x: f64) -> f64 {
    let x2 = x * x;
    let x3 = x2 * x;
    1.0 / (12.0 * x) - 1.0 / (360.0 * x3) + 1.0 / (1260.0 * x3 * x2) - 1.0 / (1680.0 * x3 * x3 * x)
}

/// `ln n!`.
pub fn ln_factorial(n: u64) -> f64 {
    if n < STIRLING_CUTOFF {
        (2..=n).map(|i| (i as f64).ln()).sum()
    } else {
        let x = n as f64;
        x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + stirling_tail(x)
    }
}

/// `ln C(n, k)` for `k <= n`, avoiding the cancellation of a naive
/// log-gamma difference.
fn ln_binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    if k == 0 {
        return 0.0;
    }
    if k < STIRLING_CUTOFF {
        let base = (n - k) as f64;
        return (1..=k).map(|i| ((base + i as f64) / i as f64).ln()).sum();
    }
    let (nf, kf) = (n as f64, k as f64);
    let rest = nf - kf;
    // n ln n - k ln k - (n-k) ln(n-k), rearranged into non-negative pieces
    let entropy = kf * (nf / kf).ln() - rest * (-kf / nf).ln_1p();
    let half = 0.5 * (nf.ln() - kf.ln() - rest.ln() - (2.0 * std::f64::consts::PI).ln());
    entropy + half + stirling_tail(nf) - stirling_tail(kf) - stirling_tail(rest)
}

pub fn log_binomial(n: u64, k: u64) -> Result<LogNumber> {
    if k > n {
        return Err(Error::Domain(format!("binomial({n}, {k}) with k > n")));
    }
    Ok(LogNumber::from_ln(ln_binomial(n, k)))
}

/// Lexicographic `k`-combinations of `0..n`, as index vectors.
#[derive(Clone, Debug)]
pub struct Combinations {
    n: usize,
    idx: Vec<usize>,
    first: bool,
    done: bool,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            idx: (0..k).collect(),
            first: true,
            done: k > n,
        }
    }

    /// Advances in place; returns the current combination or `None`.
    pub fn next_ref(&mut self) -> Option<&[usize]> {
        if self.done {
            return None;
        }
        if self.first {
            self.first = false;
            return Some(&self.idx);
        }
        let k = self.idx.len();
        let mut i = k;
        while i > 0 {
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                return Some(&self.idx);
            }
        }
        self.done = true;
        None
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;
    fn next(&mut self) -> Option<Vec<usize>> {
        self.next_ref().map(|c| c.to_vec())
    }
}

/// All `r`-subsets of `[n]` (1-based labels) in lexicographic order.
pub fn all_rsets(n: u32, r: u32) -> Vec<RSet> {
    let mut out = Vec::new();
    let mut comb = Combinations::new(n as usize, r as usize);
    while let Some(c) = comb.next_ref() {
        out.push(RSet::from_sorted_unchecked(c.iter().map(|&i| i as u32 + 1)));
    }
    out
}

/// Draws one of the `C(n, r)` r-sets uniformly.
///
/// The `r` distinct labels come from `rand::seq::index::sample`, which for
/// small `r` runs Floyd's combination algorithm (no rejection); the labels
/// are then sorted and shifted to `1..=n`.
pub fn sample_uniform_rset<R: Rng + ?Sized>(params: &Params, rng: &mut R) -> RSet {
    let mut labels: Vec<u32> = rand::seq::index::sample(rng, params.n as usize, params.r as usize)
        .into_iter()
        .map(|i| i as u32 + 1)
        .collect();
    labels.sort_unstable();
    RSet::from_sorted_unchecked(labels)
}

/// The simulation generator: ChaCha with 8 rounds.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream-splitting rule: the seed of trial `i` under `master` is the first
/// `u64` of `ChaCha8Rng::seed_from_u64(master)` on stream `i`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(trial);
    rng.next_u64()
}

pub fn trial_rng(master: u64, trial: u64) -> SimRng {
    rng_from_seed(trial_seed(master, trial))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn falling_factorial_examples() {
        assert_eq!(falling_factorial(5, 2), BigUint::from(20u32));
        assert_eq!(falling_factorial(9, 0), BigUint::from(1u32));
        assert_eq!(falling_factorial(0, 0), BigUint::from(1u32));
        assert_eq!(falling_factorial(7, 3), BigUint::from(210u32));
        assert_eq!(falling_factorial(3, 4), BigUint::zero());
    }

    proptest! {
        #[test]
        fn falling_factorial_splits(x in 0u64..40, t in 0u64..20, s in 0u64..20) {
            prop_assume!(t + s <= x);
            prop_assert_eq!(
                falling_factorial(x, t) * falling_factorial(x - t, s),
                falling_factorial(x, t + s)
            );
        }
    }

    #[test]
    fn log_binomial_small() {
        let v = log_binomial(7, 3).unwrap();
        assert!((v.ln() - 35f64.ln()).abs() < 1e-14);
        assert_eq!(log_binomial(12, 0).unwrap().ln(), 0.0);
        assert!(log_binomial(3, 4).is_err());
    }

    #[test]
    fn log_binomial_matches_big_integers_up_to_60() {
        for n in 0..=60u64 {
            for k in 0..=n {
                let exact = binomial(n, k).to_f64().unwrap();
                let approx = log_binomial(n, k).unwrap().to_f64();
                assert!(
                    ((approx - exact) / exact).abs() < 1e-9,
                    "C({n},{k}): {approx} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn log_binomial_200_100() {
        let exact = LogNumber::from_biguint(&binomial(200, 100)).ln();
        let approx = log_binomial(200, 100).unwrap().ln();
        assert!(((approx - exact) / exact).abs() < 1e-12, "{approx} vs {exact}");
    }

    #[test]
    fn log_binomial_large_n_stirling_branch_agrees_with_product_branch() {
        // k = 63 takes the product path, k = 64 the Stirling path; the
        // ratio C(n,64)/C(n,63) = (n-63)/64 ties them together.
        for &n in &[1_000u64, 123_456, 1_000_000_000] {
            let a = ln_binomial(n, 63);
            let b = ln_binomial(n, 64);
            let expect = a + ((n - 63) as f64 / 64.0).ln();
            assert!(((b - expect) / expect).abs() < 1e-12, "n={n}: {b} vs {expect}");
        }
    }

    #[test]
    fn log_binomial_exact_big_integer_midrange() {
        for &(n, k) in &[(1000u64, 500u64), (5000, 3), (2000, 700), (100_000, 99_000)] {
            let exact = LogNumber::from_biguint(&binomial(n, k)).ln();
            let approx = ln_binomial(n, k);
            assert!(((approx - exact) / exact).abs() < 1e-12, "C({n},{k})");
        }
    }

    #[test]
    fn log_number_arithmetic() {
        let a = LogNumber::from_f64(3.0);
        let b = LogNumber::from_f64(-5.0);
        assert!(((a * b).to_f64() + 15.0).abs() < 1e-12);
        assert!(((a + b).to_f64() + 2.0).abs() < 1e-12);
        assert!(((a - b).to_f64() - 8.0).abs() < 1e-12);
        assert!(((b / a).to_f64() + 5.0 / 3.0).abs() < 1e-12);
        assert!((a - a).is_zero());
        assert!(b < a);
        assert!(LogNumber::ZERO < a);
        assert!(b < LogNumber::ZERO);
        assert!(LogNumber::from_f64(-6.0) < b);
        assert_eq!(LogNumber::ZERO.ln(), f64::NEG_INFINITY);
    }

    #[test]
    fn log_number_from_huge_biguint() {
        let big = binomial(100_000, 50_000);
        let ln = LogNumber::from_biguint(&big).ln();
        assert!((ln - ln_binomial(100_000, 50_000)).abs() / ln < 1e-12);
    }

    #[test]
    fn combinations_are_lexicographic() {
        let all: Vec<_> = Combinations::new(4, 2).collect();
        assert_eq!(
            all,
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(Combinations::new(5, 5).count(), 1);
        assert_eq!(Combinations::new(5, 0).count(), 1);
        assert_eq!(Combinations::new(3, 4).count(), 0);
        assert_eq!(all_rsets(7, 3).len(), 35);
    }

    #[test]
    fn sample_rset_only_choice() {
        let p = Params::new(3, 3, 2).unwrap();
        let mut rng = rng_from_seed(1);
        for _ in 0..100 {
            assert_eq!(sample_uniform_rset(&p, &mut rng).vertices(), &[1, 2, 3]);
        }
    }

    #[test]
    fn sample_rset_deterministic_and_well_formed() {
        let p = Params::new(50, 4, 2).unwrap();
        let a: Vec<_> = {
            let mut rng = rng_from_seed(77);
            (0..200).map(|_| sample_uniform_rset(&p, &mut rng)).collect()
        };
        let b: Vec<_> = {
            let mut rng = rng_from_seed(77);
            (0..200).map(|_| sample_uniform_rset(&p, &mut rng)).collect()
        };
        assert_eq!(a, b);
        for e in &a {
            let v = e.vertices();
            assert_eq!(v.len(), 4);
            assert!(v.windows(2).all(|w| w[0] < w[1]));
            assert!(v[0] >= 1 && v[3] <= 50);
        }
    }

    #[test]
    fn sample_rset_n4_r3_is_uniform() {
        // 10^6 draws over the four triples of [4]; each frequency within
        // 3 sigma of 1/4 and a chi-square with 3 dof below its 0.999 quantile.
        let p = Params::new(4, 3, 2).unwrap();
        let mut rng = rng_from_seed(2024);
        let mut counts = [0u64; 4];
        let draws = 1_000_000u64;
        for _ in 0..draws {
            let e = sample_uniform_rset(&p, &mut rng);
            // the missing vertex identifies the triple
            let missing = (1..=4u32).find(|v| !e.contains(*v)).unwrap();
            counts[(missing - 1) as usize] += 1;
        }
        let expected = draws as f64 / 4.0;
        let sigma = (draws as f64 * 0.25 * 0.75).sqrt();
        let mut chi = 0.0;
        for &c in &counts {
            assert!((c as f64 - expected).abs() < 3.0 * sigma, "{counts:?}");
            chi += (c as f64 - expected).powi(2) / expected;
        }
        assert!(chi < 16.27, "chi-square {chi}");
    }

    #[test]
    fn trial_streams_differ_and_repeat() {
        assert_eq!(trial_seed(9, 3), trial_seed(9, 3));
        assert_ne!(trial_seed(9, 3), trial_seed(9, 4));
        assert_ne!(trial_seed(9, 3), trial_seed(10, 3));
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(5, 3, 2).is_ok());
        assert!(Params::new(5, 2, 1).is_err());
        assert!(Params::new(5, 3, 3).is_err());
        assert!(Params::new(2, 3, 2).is_err());
        assert!(Params::new(10, 5, 1).is_err());
        let p: std::result::Result<Params, _> = serde_json::from_str(r#"{"n":4,"r":3,"ell":3}"#);
        assert!(p.is_err());
    }
}
