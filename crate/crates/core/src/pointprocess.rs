//! Binomial point process on a shell: joint counts in the main-lobe cap, the
//! side-lobe annulus and the invisible remainder, plus the distance laws of a
//! single satellite.

use crate::error::{domain, Result};
use crate::geometry::EavesdropperLayer;
use crate::specfun::ln_factorial;

/// Probabilities of the four occupancy cases:
///
/// 1. nobody visible,
/// 2. main-lobe cap empty, side-lobe annulus occupied,
/// 3. main-lobe cap occupied, side-lobe annulus empty,
/// 4. both occupied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseProbabilities {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
}

impl CaseProbabilities {
    pub fn as_array(&self) -> [f64; 4] {
        [self.p1, self.p2, self.p3, self.p4]
    }
}

fn xlogy(k: u64, p: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * p.ln()
    }
}

/// Multinomial probability of exactly `p` satellites in the main-lobe cap and
/// `q` in the side-lobe annulus out of `n`.
pub fn case_probability(n: u64, p: u64, q: u64, layer: &EavesdropperLayer) -> Result<f64> {
    if p + q > n {
        return Err(domain(format!("p + q = {} exceeds N = {n}", p + q)));
    }
    let (p_ml, p_sl, p_out) = layer.region_probabilities();
    let rest = n - p - q;
    let ln = ln_factorial(n) - ln_factorial(p) - ln_factorial(q) - ln_factorial(rest)
        + xlogy(p, p_ml)
        + xlogy(q, p_sl)
        + xlogy(rest, p_out);
    Ok(ln.exp())
}

/// The four occupancy-case probabilities for `n` satellites on `layer`.
pub fn four_case_probabilities(n: u64, layer: &EavesdropperLayer) -> CaseProbabilities {
    let (p_ml, p_sl, p_out) = layer.region_probabilities();
    let pow = |base: f64| if n == 0 { 1.0 } else { (n as f64 * base.ln()).exp() };
    let p1 = pow(p_out);
    let no_ml = pow(p_out + p_sl);
    let no_sl = pow(p_out + p_ml);
    let p2 = (no_ml - p1).max(0.0);
    let p3 = (no_sl - p1).max(0.0);
    let p4 = (1.0 - no_ml - no_sl + p1).max(0.0);
    CaseProbabilities { p1, p2, p3, p4 }
}

/// One `(p, q)` cell of the joint count distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountTerm {
    pub p: u64,
    pub q: u64,
    pub prob: f64,
}

/// Cells of the joint count distribution sorted by decreasing probability,
/// truncated once the retained mass reaches `1 − mass_tol`.
///
/// Ties are ordered by `(p, q)` so the list is fully deterministic.
pub fn count_distribution(n: u64, layer: &EavesdropperLayer, mass_tol: f64) -> Vec<CountTerm> {
    let mut cells = Vec::with_capacity(((n + 1) * (n + 2) / 2) as usize);
    for p in 0..=n {
        for q in 0..=(n - p) {
            // p + q <= n by construction
            let prob = case_probability(n, p, q, layer).unwrap_or(0.0);
            if prob > 0.0 {
                cells.push(CountTerm { p, q, prob });
            }
        }
    }
    cells.sort_by(|a, b| b.prob.total_cmp(&a.prob).then(a.p.cmp(&b.p)).then(a.q.cmp(&b.q)));
    let mut mass = 0.0;
    let mut keep = cells.len();
    for (i, c) in cells.iter().enumerate() {
        mass += c.prob;
        if mass >= 1.0 - mass_tol {
            keep = i + 1;
            break;
        }
    }
    cells.truncate(keep);
    cells
}

/// CDF of the terminal-to-satellite distance for a satellite uniform on the
/// whole shell.
pub fn distance_cdf_shell(x: f64, earth_radius: f64, a_e: f64) -> f64 {
    if x <= a_e {
        0.0
    } else if x > 2.0 * earth_radius + a_e {
        1.0
    } else {
        ((x * x - a_e * a_e) / (4.0 * earth_radius * (earth_radius + a_e))).min(1.0)
    }
}

fn band_cdf(x: f64, lo: f64, hi: f64) -> f64 {
    if x <= lo {
        0.0
    } else if x > hi {
        1.0
    } else {
        ((x * x - lo * lo) / (hi * hi - lo * lo)).min(1.0)
    }
}

fn band_pdf(x: f64, lo: f64, hi: f64) -> f64 {
    if x > lo && x <= hi {
        2.0 * x / (hi * hi - lo * lo)
    } else {
        0.0
    }
}

/// Distance CDF of a satellite conditioned on the main-lobe cap.
pub fn mainlobe_distance_cdf(x: f64, layer: &EavesdropperLayer) -> f64 {
    if layer.mainlobe_degenerate() {
        return if x > layer.altitude { 1.0 } else { 0.0 };
    }
    band_cdf(x, layer.altitude, layer.d_th)
}

pub fn mainlobe_distance_pdf(x: f64, layer: &EavesdropperLayer) -> f64 {
    if layer.mainlobe_degenerate() {
        return 0.0;
    }
    band_pdf(x, layer.altitude, layer.d_th)
}

/// Distance CDF of a satellite conditioned on the side-lobe annulus. An empty
/// annulus is reported as a point mass at `d_th = d_max`.
pub fn sidelobe_distance_cdf(x: f64, layer: &EavesdropperLayer) -> f64 {
    if layer.sidelobe_degenerate() {
        return if x > layer.d_th { 1.0 } else { 0.0 };
    }
    band_cdf(x, layer.d_th, layer.d_max)
}

pub fn sidelobe_distance_pdf(x: f64, layer: &EavesdropperLayer) -> f64 {
    if layer.sidelobe_degenerate() {
        return 0.0;
    }
    band_pdf(x, layer.d_th, layer.d_max)
}
