//! Gamma-family special functions and series truncation control.
//!
//! Everything here is a pure function of its arguments. The incomplete gamma
//! routines follow the usual split: power series below `x = a + 1`,
//! Legendre continued fraction (modified Lentz) above it.

use crate::error::{domain, invalid, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const TINY: f64 = 1.0e-300;
const ITER_CAP: usize = 100_000;
const EPS: f64 = 1.0e-16;

/// Truncation rule for the infinite sums over the shadowed-Rician series
/// index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    pub rel_tol: f64,
    pub n_max: usize,
}

impl SeriesControl {
    pub fn new(rel_tol: f64, n_max: usize) -> Result<Self> {
        if !(rel_tol > 0.0) || !rel_tol.is_finite() {
            return Err(invalid(format!("series rel_tol must be > 0, got {rel_tol}")));
        }
        if n_max < 1 {
            return Err(invalid("series n_max must be at least 1"));
        }
        Ok(Self { rel_tol, n_max })
    }
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self { rel_tol: 1e-12, n_max: 500 }
    }
}

/// Result of a truncated series summation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub terms: usize,
    /// Set when `n_max` was hit before the relative tolerance was met.
    pub truncated: bool,
}

impl SeriesValue {
    pub fn exact(value: f64) -> Self {
        Self { value, terms: 0, truncated: false }
    }

    /// Combine two independent series results with `op`, merging flags.
    pub fn zip_with(self, other: SeriesValue, op: impl FnOnce(f64, f64) -> f64) -> Self {
        Self {
            value: op(self.value, other.value),
            terms: self.terms.max(other.terms),
            truncated: self.truncated || other.truncated,
        }
    }

    pub fn map(self, op: impl FnOnce(f64) -> f64) -> Self {
        Self { value: op(self.value), ..self }
    }
}

/// Sum `term(0) + term(1) + ...` under `ctrl`.
///
/// Summation never stops before `min_terms` terms; after that it stops at the
/// first term whose magnitude is below `rel_tol * |sum|`. Callers pass the
/// index past which the terms are known to decay monotonically.
pub fn sum_series(ctrl: &SeriesControl, min_terms: usize, mut term: impl FnMut(usize) -> f64) -> SeriesValue {
    let mut sum = 0.0;
    for n in 0..ctrl.n_max {
        let t = term(n);
        sum += t;
        if n + 1 >= min_terms && t.abs() <= ctrl.rel_tol * sum.abs() {
            return SeriesValue { value: sum, terms: n + 1, truncated: false };
        }
    }
    SeriesValue { value: sum, terms: ctrl.n_max, truncated: true }
}

/// Natural log of the gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

/// ln(n!) with an exact table for small n.
pub fn ln_factorial(n: u64) -> f64 {
    const SMALL: usize = 32;
    static TABLE: std::sync::OnceLock<[f64; SMALL]> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [0.0; SMALL];
        for i in 1..SMALL {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    });
    if (n as usize) < SMALL {
        table[n as usize]
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// Regularised lower and upper incomplete gamma `(P(a,x), Q(a,x))`.
pub fn regularized_gamma_pair(a: f64, x: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain(format!("incomplete gamma requires a > 0, got {a}")));
    }
    if !(x >= 0.0) {
        return Err(domain(format!("incomplete gamma requires x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let p = (log_prefactor.exp() * lower_series(a, x)).min(1.0);
        Ok((p, 1.0 - p))
    } else {
        let q = (log_prefactor.exp() * upper_continued_fraction(a, x)).min(1.0);
        Ok((1.0 - q, q))
    }
}

/// Regularised lower incomplete gamma `P(a,x) = γ(a,x)/Γ(a)`.
pub fn regularized_lower_gamma(a: f64, x: f64) -> Result<f64> {
    regularized_gamma_pair(a, x).map(|(p, _)| p)
}

/// Lower incomplete gamma `γ(a,x) = ∫₀ˣ t^{a−1} e^{−t} dt`.
///
/// Overflows to infinity for `a` beyond ~171 like `Γ(a)` itself; the series
/// code works with [`regularized_lower_gamma`] instead.
pub fn lower_incomplete_gamma(a: f64, x: f64) -> Result<f64> {
    let (p, q) = regularized_gamma_pair(a, x)?;
    let g = ln_gamma(a).exp();
    if p < 0.5 || x < a + 1.0 {
        Ok(p * g)
    } else {
        Ok(g - q * g)
    }
}

// Σ x^k / (a (a+1) ... (a+k)), so that P(a,x) = x^a e^{-x} / Γ(a) * sum.
fn lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..ITER_CAP {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum
}

// Legendre continued fraction for Γ(a,x) e^{x} x^{-a}. Valid for any real a
// when x > 0; converges quickly once x exceeds roughly a + 1.
fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..ITER_CAP {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Exponential integral `E₁(x) = ∫ₓ^∞ e^{−t}/t dt` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("E1 requires x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x <= 1.0 {
        // -γ - ln x - Σ_{k≥1} (-x)^k / (k k!)
        let mut sum = 0.0;
        let mut fact = 1.0;
        for k in 1..200 {
            fact *= -x / k as f64;
            let term = fact / k as f64;
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        Ok(-EULER_GAMMA - x.ln() - sum)
    } else {
        // e^{-x} / (x + 1 - 1/(x + 3 - 4/(x + 5 - ...)))
        let mut b = x + 1.0;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..ITER_CAP {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < EPS {
                break;
            }
        }
        Ok(h * (-x).exp())
    }
}

/// Upper incomplete gamma at a non-positive integer order, `Γ(−t, x)`.
///
/// For `x ≤ 1` the value is built by the recurrence
/// `Γ(a−1,x) = (Γ(a,x) − x^{a−1}e^{−x})/(a−1)` from `Γ(0,x) = E₁(x)`.
/// Beyond that the recurrence loses roughly `log10(x^t/t!)` digits, so the
/// continued fraction is evaluated directly at order `−t`.
pub fn upper_incomplete_gamma_nonpos(t: u32, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(domain(format!("Γ(-t, x) requires x > 0, got {x}")));
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    if x <= 1.0 {
        let mut g = exp_integral_e1(x)?;
        let ln_x = x.ln();
        for k in 1..=t {
            // Γ(-k, x) = (x^{-k} e^{-x} - Γ(1-k, x)) / k
            let pow_term = (-(k as f64) * ln_x - x).exp();
            g = (pow_term - g) / k as f64;
        }
        Ok(g)
    } else {
        let a = -(t as f64);
        let log_prefactor = a * x.ln() - x;
        Ok(log_prefactor.exp() * upper_continued_fraction(a, x))
    }
}

/// Pochhammer symbol `(x)_n = x (x+1) ⋯ (x+n−1)`, with `(x)_0 = 1`.
pub fn pochhammer(x: f64, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, k| acc * (x + k as f64))
}
