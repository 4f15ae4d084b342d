//! Closed-form asymptotic predictions.
//!
//! Each estimator returns its principal value together with the magnitude of
//! the error term it leaves out, taken with constant 1. The dropped term
//! bounds the error in the exponent (or the relative error) of the value.

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::combinatorics::{binomial, falling_factorial, falling_factorial_f64, ln_factorial, log_binomial, LogNumber, Params};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: LogNumber,
    pub dropped: f64,
}

impl Estimate {
    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn ln(&self) -> f64 {
        self.value.ln()
    }
}

fn factorial_f64(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// The exponent correction of `|S(n,r,ell;m)|` relative to `N^m / m!`.
///
/// For `ell = 2` this is
/// `-[r]_2^2 [m]_2 / (4 n^2) - [r]_2^3 (3r^2 - 15r + 20) m^3 / (24 n^4)` with
/// dropped term `m^2 / n^3`; for `ell >= 3` it is
/// `-[r]_ell^2 [m]_2 / (2 ell! n^ell)` with dropped term
/// `max(m^2 / n^(ell+1), m^3 / n^(2 ell))`.
pub fn count_exponent(params: &Params, m: u64) -> (f64, f64) {
    let (n, r, ell) = (params.n() as f64, params.r() as f64, params.ell());
    let mf = m as f64;
    let quad = -quadratic_term(params, m);
    if ell == 2 {
        let rr = falling_factorial_f64(r, 2);
        let cubic = rr.powi(3) * (3.0 * r * r - 15.0 * r + 20.0) * mf.powi(3) / (24.0 * n.powi(4));
        (quad - cubic, mf * mf / n.powi(3))
    } else {
        let l = ell as i32;
        let dropped = (mf * mf / n.powi(l + 1)).max(mf.powi(3) / n.powi(2 * l));
        (quad, dropped)
    }
}

/// `[r]_ell^2 [m]_2 / (2 ell! n^ell)`.
pub fn quadratic_term(params: &Params, m: u64) -> f64 {
    let (n, r, ell) = (params.n() as f64, params.r() as f64, params.ell());
    let rl = falling_factorial_f64(r, ell);
    rl * rl * falling_factorial_f64(m as f64, 2) / (2.0 * factorial_f64(ell) * n.powi(ell as i32))
}

/// `[r]_ell^2 [m]_2 / (2 ell! n^ell)` in exact arithmetic.
pub fn quadratic_term_general_exact(n: u64, r: u64, ell: u64, m: u64) -> BigRational {
    let rl = BigInt::from(falling_factorial(r, ell));
    let num = &rl * &rl * BigInt::from(falling_factorial(m, 2));
    let ell_fact = BigInt::from(falling_factorial(ell, ell));
    let den = BigInt::from(2) * ell_fact * BigInt::from(n).pow(ell as u32);
    BigRational::new(num, den)
}

/// `[r]_2^2 [m]_2 / (4 n^2)` in exact arithmetic.
pub fn quadratic_term_linear_exact(n: u64, r: u64, m: u64) -> BigRational {
    let r2 = BigInt::from(falling_factorial(r, 2));
    let num = &r2 * &r2 * BigInt::from(falling_factorial(m, 2));
    BigRational::new(num, BigInt::from(4) * BigInt::from(n).pow(2))
}

/// `ln |S(n,r,ell;m)| ≈ m ln N - ln m! + exponent`.
pub fn log_count_asymptotic(params: &Params, m: u64) -> Estimate {
    let (exp, dropped) = count_exponent(params, m);
    let ln = m as f64 * params.log_total_rsets() - ln_factorial(m) + exp;
    Estimate {
        value: LogNumber::from_ln(ln),
        dropped,
    }
}

/// Predicted `|S(n,r,ell;m)| / C(N, m)`: the chance that a uniform m-subset of
/// r-sets is a partial Steiner system.
pub fn log_acceptance_asymptotic(params: &Params, m: u64) -> Result<Estimate> {
    let count = log_count_asymptotic(params, m);
    let total = params
        .total_rsets_u64()
        .ok_or_else(|| Error::Domain("C(n,r) does not fit in 64 bits".into()))?;
    if m > total {
        return Ok(Estimate {
            value: LogNumber::ZERO,
            dropped: 0.0,
        });
    }
    Ok(Estimate {
        value: count.value / log_binomial(total, m)?,
        dropped: count.dropped,
    })
}

/// `ln P[K ⊆ H] ≈ ln [m]_k - k ln N + [r]_ell^2 k^2 / (2 ell! n^ell)`, dropped
/// term `k/n^ell + m^2 k / n^(ell+1)`. Zero when `k > m`.
pub fn log_containment_asymptotic(params: &Params, m: u64, k: u64) -> Estimate {
    if k > m {
        return Estimate {
            value: LogNumber::ZERO,
            dropped: 0.0,
        };
    }
    let (n, r, ell) = (params.n() as f64, params.r() as f64, params.ell());
    let (mf, kf) = (m as f64, k as f64);
    let rl = falling_factorial_f64(r, ell);
    let l = ell as i32;
    let corr = rl * rl * kf * kf / (2.0 * factorial_f64(ell) * n.powi(l));
    let ln = ln_factorial(m) - ln_factorial(m - k) - kf * params.log_total_rsets() + corr;
    Estimate {
        value: LogNumber::from_ln(ln),
        dropped: kf / n.powi(l) + mf * mf * kf / n.powi(l + 1),
    }
}

/// `ln P[h given vertices all have degree 0] ≈ -h r m / n`, dropped term
/// `m/n^2 + m^2/n^(ell+1)`.
pub fn log_deg_zero_asymptotic(params: &Params, m: u64, h: u64) -> Estimate {
    let (n, r, l) = (params.n() as f64, params.r() as f64, params.ell() as i32);
    let mf = m as f64;
    Estimate {
        value: LogNumber::from_ln(-(h as f64) * r * mf / n),
        dropped: mf / (n * n) + mf * mf / n.powi(l + 1),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub n: u32,
    pub r: u32,
    pub omega: f64,
    pub c: f64,
}

impl ThresholdParams {
    /// `omega = ln ln n`, `c = 0`.
    pub fn new(n: u32, r: u32) -> Self {
        ThresholdParams {
            n,
            r,
            omega: (n as f64).ln().ln(),
            c: 0.0,
        }
    }

    pub fn with_c(self, c: f64) -> Self {
        ThresholdParams { c, ..self }
    }

    pub fn with_omega(self, omega: f64) -> Self {
        ThresholdParams { omega, ..self }
    }

    fn at(&self, shift: f64) -> u64 {
        let n = self.n as f64;
        (n / self.r as f64 * (n.ln() + shift)).ceil().max(0.0) as u64
    }

    pub fn m_l(&self) -> u64 {
        self.at(-self.omega)
    }

    pub fn m_c(&self) -> u64 {
        self.at(self.c)
    }

    pub fn m_r(&self) -> u64 {
        self.at(self.omega)
    }
}

/// `(m_L, m_c, m_R)`.
pub fn threshold_edge_count(tp: &ThresholdParams) -> Result<(u64, u64, u64)> {
    if tp.n < tp.r || tp.r == 0 {
        return Err(Error::InvalidParams(format!("need n >= r >= 1, got n = {}, r = {}", tp.n, tp.r)));
    }
    Ok((tp.m_l(), tp.m_c(), tp.m_r()))
}

/// Leading term of `|S+(t)| / |S+(t-1)|`:
/// `C(m - 2(t-1), 2) [r]_ell^2 / (ell! t n^ell)`.
pub fn switching_ratio_predicted(params: &Params, m: u64, t: u64) -> f64 {
    if t == 0 {
        return f64::NAN;
    }
    let free = m as i64 - 2 * (t as i64 - 1);
    if free < 2 {
        return 0.0;
    }
    let (n, r, ell) = (params.n() as f64, params.r() as f64, params.ell());
    let rl = falling_factorial_f64(r, ell);
    let pairs = (free * (free - 1) / 2) as f64;
    pairs * rl * rl / (factorial_f64(ell) * t as f64 * n.powi(ell as i32))
}

/// Leading term `t N^2` of the forward switching count.
pub fn forward_switchings_predicted(params: &Params, t: u64) -> f64 {
    t as f64 * params.total_rsets_f64().powi(2)
}

/// Leading term of the reverse switching count into `S+(t)`:
/// `(2r-ell)! / (ell! (r-ell)!^2) C(m - 2(t-1), 2) C(n, 2r-ell)`.
pub fn reverse_switchings_predicted(params: &Params, m: u64, t: u64) -> f64 {
    let (n, r, ell) = (params.n() as u64, params.r() as u64, params.ell() as u64);
    let free = m as i64 - 2 * (t as i64 - 1);
    if free < 2 {
        return 0.0;
    }
    let shape = factorial_f64((2 * r - ell) as u32) / (factorial_f64(ell as u32) * factorial_f64((r - ell) as u32).powi(2));
    let pairs = (free * (free - 1) / 2) as f64;
    let span = log_binomial(n, 2 * r - ell).map(|v| v.to_f64()).unwrap_or(0.0);
    shape * pairs * span
}

/// `N - C(r,ell) m C(n-ell, r-ell)`: r-sets avoiding every ell-set of `m` edges.
pub fn pr_predicted(params: &Params, m: u64) -> f64 {
    let (n, r, ell) = (params.n() as u64, params.r() as u64, params.ell() as u64);
    let hit = binomial(r, ell) * binomial(n - ell, r - ell);
    params.total_rsets_f64() - m as f64 * num_traits::ToPrimitive::to_f64(&hit).unwrap_or(f64::INFINITY)
}

/// Expected legal `e_i`-replacements at step `i`:
/// `(m-i+1)(1 - (m-i+1) C(r,ell) C(n-r,r-ell) / N)`.
pub fn legal_replacements_predicted(params: &Params, m: u64, i: u64) -> f64 {
    let (n, r, ell) = (params.n() as u64, params.r() as u64, params.ell() as u64);
    let k = (m + 1).saturating_sub(i) as f64;
    let c = num_traits::ToPrimitive::to_f64(&(binomial(r, ell) * binomial(n - r, r - ell))).unwrap_or(f64::INFINITY);
    k * (1.0 - k * c / params.total_rsets_f64())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummationInput {
    /// `A(1), ..., A(N)`.
    pub a: Vec<f64>,
    /// `B(1), ..., B(N)`.
    pub b: Vec<f64>,
    pub c_hat: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummationBounds {
    pub sigma1: f64,
    pub sigma2: f64,
    pub exact_sum: f64,
}

/// Sandwich bounds on `sum_{i=0}^N n_i` where `n_0 = 1` and
/// `n_i / n_{i-1} = (A(i)/i)(1 - (i-1)B(i))`; once a factor vanishes every
/// later `n_j` is 0.
pub fn summation_bounds(inp: &SummationInput) -> Result<SummationBounds> {
    let big_n = inp.a.len();
    if big_n < 2 {
        return Err(Error::Domain(format!("N = {big_n} must be at least 2")));
    }
    if inp.b.len() != big_n {
        return Err(Error::Domain(format!("A has {} entries but B has {}", big_n, inp.b.len())));
    }
    if !(inp.c_hat > 0.0 && inp.c_hat < 1.0 / 3.0) {
        return Err(Error::Domain(format!("c_hat = {} not in (0, 1/3)", inp.c_hat)));
    }
    for (idx, (&a, &b)) in inp.a.iter().zip(&inp.b).enumerate() {
        let i = idx + 1;
        if !(a >= 0.0) {
            return Err(Error::Domain(format!("A({i}) = {a} is negative")));
        }
        if !(1.0 - (i as f64 - 1.0) * b >= 0.0) {
            return Err(Error::Domain(format!("1 - (i-1)B(i) < 0 at i = {i}")));
        }
    }
    let a1 = inp.a.iter().copied().fold(f64::INFINITY, f64::min);
    let a2 = inp.a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cs: Vec<f64> = inp.a.iter().zip(&inp.b).map(|(a, b)| a * b).collect();
    let c1 = cs.iter().copied().fold(f64::INFINITY, f64::min);
    let c2 = cs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if a2 / big_n as f64 > inp.c_hat {
        return Err(Error::Domain(format!("A2/N = {} exceeds c_hat", a2 / big_n as f64)));
    }
    if c1.abs().max(c2.abs()) > inp.c_hat {
        return Err(Error::Domain(format!("max |A(i)B(i)| = {} exceeds c_hat", c1.abs().max(c2.abs()))));
    }

    let mut term = 1.0;
    let mut exact_sum = 1.0;
    for (idx, (&a, &b)) in inp.a.iter().zip(&inp.b).enumerate() {
        let i = (idx + 1) as f64;
        let f = 1.0 - (i - 1.0) * b;
        if a == 0.0 || f == 0.0 {
            break;
        }
        term *= a / i * f;
        exact_sum += term;
    }
    let tail = (2.0 * std::f64::consts::E * inp.c_hat).powi(big_n as i32);
    Ok(SummationBounds {
        sigma1: (a1 - a1 * c2 / 2.0).exp() - tail,
        sigma2: (a2 - a2 * c1 / 2.0 + a2 * c1 * c1 / 2.0).exp() + tail,
        exact_sum,
    })
}
