//! Exact secrecy metrics: ergodic secrecy capacity, secrecy outage
//! probability and outage secrecy capacity.
//!
//! All three are one-dimensional integrals against the serving-link law:
//!
//! - `C = 1/ln2 ∫ F_e(x) (1 − F_s(x)) / (1+x) dx`
//! - `P_out(R) = 1 − ∫_{2^R−1} F_e(2^{−R}(1+x) − 1) f_s(x) dx`
//!
//! where `F_e` is the CDF of the strongest eavesdropper SNR. The exact
//! binomial-process `F_e` is the count-weighted mixture
//! `Σ_{p,q} P[N,p,q] B_ml(x)^p B_sl(x)^q`; it is evaluated inside a single
//! integrand so that every `(p, q)` cell shares the same quadrature nodes.
//! The integrals run over `[0, X_max]` with `1 − F_s(X_max)` below the tail
//! tolerance.

use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{invalid, Error, Result};
use crate::pointprocess::{count_distribution, CountTerm};
use crate::quadrature::{integrate_panels, QuadOptions, QuadResult};
use crate::snrdist::{power_of_base, serving_snr_cdf, serving_snr_pdf, LobeKernel, SnrScenario};
use crate::specfun::SeriesValue;

/// Largest eavesdropper count accepted by the exact evaluation.
pub const N_EXACT_CAP: u64 = 500;

/// Probability mass of the count distribution that may be skipped.
pub const COUNT_MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureControl {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper integration limit chosen so that `1 − F_s(X_max)` is below this.
    pub tail_prob: f64,
    pub max_intervals: usize,
    /// Worker threads for panel evaluation; results do not depend on it.
    pub workers: usize,
}

impl Default for QuadratureControl {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-8, tail_prob: 1e-10, max_intervals: 2000, workers: 1 }
    }
}

impl QuadratureControl {
    pub fn with_workers(self, workers: usize) -> Self {
        Self { workers: workers.max(1), ..self }
    }

    fn quad_options(&self) -> QuadOptions {
        QuadOptions { abs_tol: self.abs_tol, rel_tol: self.rel_tol, max_intervals: self.max_intervals }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Approx,
    Asymptotic,
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Approx => "approx",
            Method::Asymptotic => "asymptotic",
            Method::MonteCarlo => "mc",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub x_max: f64,
    pub evals: usize,
    /// Number of `(p, q)` cells retained in the count mixture.
    pub count_terms: usize,
    pub series_truncated: bool,
    pub quad_converged: bool,
}

/// 95% confidence half-widths of simulated metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceHalfWidths {
    pub c_erg: f64,
    pub p_out: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecrecyReport {
    pub c_erg: f64,
    pub p_out: f64,
    pub c_out: f64,
    /// Target rate solving `P_out = ε` (0 when infeasible).
    pub r_star: f64,
    pub outage_infeasible: bool,
    pub method: Method,
    pub diagnostics: Diagnostics,
    pub ci: Option<ConfidenceHalfWidths>,
}

/// Result of the outage-capacity search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageCapacity {
    pub c_out: f64,
    pub r_star: f64,
    /// Even `R_t = 0` already exceeds the allowed outage.
    pub infeasible: bool,
    pub residual: f64,
}

/// CDF of the strongest eavesdropper SNR.
pub trait EavesdropperCdf: Sync {
    fn cdf(&self, x: f64) -> f64;

    /// Whether any series evaluation so far hit its term cap.
    fn truncated(&self) -> bool {
        false
    }

    /// Number of mixture cells behind each evaluation (1 for product forms).
    fn count_terms(&self) -> usize {
        1
    }
}

/// No eavesdroppers at all: `γ_e = 0` surely.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoEavesdropper;

impl EavesdropperCdf for NoEavesdropper {
    fn cdf(&self, _x: f64) -> f64 {
        1.0
    }
}

/// Exact binomial-process CDF for a single shell.
pub struct ExactEavCdf {
    ml: LobeKernel,
    sl: LobeKernel,
    terms: Vec<CountTerm>,
    max_p: u64,
    max_q: u64,
    scn: SnrScenario,
    truncated: AtomicBool,
}

impl ExactEavCdf {
    pub fn new(scn: &SnrScenario) -> Result<Self> {
        if scn.layers.len() != 1 {
            return Err(Error::Refused(format!(
                "exact evaluation supports a single eavesdropper layer, got {}; use the approximation",
                scn.layers.len()
            )));
        }
        let layer = &scn.layers[0];
        if layer.count > N_EXACT_CAP {
            return Err(Error::Refused(format!(
                "N = {} exceeds the exact-evaluation cap of {N_EXACT_CAP}; use the approximation",
                layer.count
            )));
        }
        let terms = count_distribution(layer.count, layer, COUNT_MASS_TOL);
        let max_p = terms.iter().map(|t| t.p).max().unwrap_or(0);
        let max_q = terms.iter().map(|t| t.q).max().unwrap_or(0);
        Ok(Self {
            ml: scn.mainlobe_kernel(0),
            sl: scn.sidelobe_kernel(0),
            terms,
            max_p,
            max_q,
            scn: scn.clone(),
            truncated: AtomicBool::new(false),
        })
    }

    fn note(&self, v: SeriesValue) -> f64 {
        if v.truncated {
            self.truncated.store(true, Ordering::Relaxed);
        }
        v.value
    }

    /// Single-satellite CDFs `(B_ml(x), B_sl(x))`.
    pub fn bases(&self, x: f64) -> (f64, f64) {
        let b_ml = if self.max_p > 0 { self.note(self.ml.base(x, &self.scn.fading, &self.scn.series)) } else { 1.0 };
        let b_sl = if self.max_q > 0 { self.note(self.sl.base(x, &self.scn.fading, &self.scn.series)) } else { 1.0 };
        (b_ml, b_sl)
    }
}

fn powers(base: f64, max: u64) -> Vec<f64> {
    (0..=max).map(|k| power_of_base(base, k)).collect()
}

impl EavesdropperCdf for ExactEavCdf {
    fn cdf(&self, x: f64) -> f64 {
        let (b_ml, b_sl) = self.bases(x);
        let pm = powers(b_ml, self.max_p);
        let pq = powers(b_sl, self.max_q);
        let mut sum = 0.0;
        for t in &self.terms {
            sum += t.prob * pm[t.p as usize] * pq[t.q as usize];
        }
        sum.clamp(0.0, 1.0)
    }

    fn truncated(&self) -> bool {
        self.truncated.load(Ordering::Relaxed)
    }

    fn count_terms(&self) -> usize {
        self.terms.len()
    }
}

/// Shared quadrature set-up for one scenario: upper limit and panel breaks.
pub struct SecrecyIntegrator<'a> {
    scn: &'a SnrScenario,
    qc: QuadratureControl,
    x_max: f64,
    breaks: Vec<f64>,
    serving_truncated: AtomicBool,
}

impl<'a> SecrecyIntegrator<'a> {
    pub fn new(scn: &'a SnrScenario, qc: QuadratureControl) -> Result<Self> {
        if !(qc.tail_prob > 0.0 && qc.tail_prob < 1.0) {
            return Err(invalid("tail probability must lie in (0, 1)"));
        }
        let mean = scn.mean_serving_snr();
        let x_max = serving_quantile_upper(scn, qc.tail_prob);
        let mut breaks = vec![0.0];
        for k in [1e-4, 1e-3, 1e-2, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0] {
            let b = k * mean;
            if b < x_max {
                breaks.push(b);
            }
        }
        breaks.push(x_max);
        Ok(Self { scn, qc, x_max, breaks, serving_truncated: AtomicBool::new(false) })
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    fn serving_cdf(&self, x: f64) -> f64 {
        let v = serving_snr_cdf(x, self.scn);
        if v.truncated {
            self.serving_truncated.store(true, Ordering::Relaxed);
        }
        v.value
    }

    fn serving_pdf(&self, x: f64) -> f64 {
        let v = serving_snr_pdf(x, self.scn);
        if v.truncated {
            self.serving_truncated.store(true, Ordering::Relaxed);
        }
        v.value
    }

    fn run(&self, f: impl Fn(f64) -> f64 + Sync, breaks: &[f64]) -> QuadResult {
        integrate_panels(f, breaks, &self.qc.quad_options(), self.qc.workers)
    }

    pub fn diagnostics(&self, eav: &dyn EavesdropperCdf, q: &QuadResult) -> Diagnostics {
        Diagnostics {
            x_max: self.x_max,
            evals: q.evals,
            count_terms: eav.count_terms(),
            series_truncated: eav.truncated() || self.serving_truncated.load(Ordering::Relaxed),
            quad_converged: q.converged,
        }
    }

    /// Ergodic secrecy capacity in bits/s/Hz.
    pub fn ergodic(&self, eav: &dyn EavesdropperCdf) -> QuadResult {
        let q = self.run(
            |x| eav.cdf(x) * (1.0 - self.serving_cdf(x)).max(0.0) / (1.0 + x),
            &self.breaks,
        );
        QuadResult { value: (q.value / std::f64::consts::LN_2).max(0.0), ..q }
    }

    /// Secrecy outage probability at target rate `r_t`.
    pub fn outage(&self, eav: &dyn EavesdropperCdf, r_t: f64) -> QuadResult {
        let scale = 2f64.powf(r_t);
        let lower = scale - 1.0;
        if lower >= self.x_max {
            return QuadResult { value: 1.0, abs_err: 0.0, evals: 0, converged: true };
        }
        let mut breaks = vec![lower];
        breaks.extend(self.breaks.iter().copied().filter(|&b| b > lower));
        let q = self.run(
            |x| {
                let y = ((1.0 + x) / scale - 1.0).max(0.0);
                eav.cdf(y) * self.serving_pdf(x)
            },
            &breaks,
        );
        QuadResult { value: (1.0 - q.value).clamp(0.0, 1.0), ..q }
    }

    /// Outage secrecy capacity `(1−ε) R*` with `P_out(R*) = ε`.
    pub fn outage_capacity(&self, eav: &dyn EavesdropperCdf, eps: f64) -> Result<OutageCapacity> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(invalid(format!("outage level must lie in (0, 1), got {eps}")));
        }
        let p0 = self.outage(eav, 0.0).value;
        if p0 >= eps {
            return Ok(OutageCapacity { c_out: 0.0, r_star: 0.0, infeasible: true, residual: p0 - eps });
        }
        let gamma_hi = serving_quantile_upper(self.scn, 1e-6);
        let mut lo = 0.0;
        let mut hi = (1.0 + gamma_hi).log2();
        for _ in 0..60 {
            if hi - lo < 1e-9 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.outage(eav, mid).value < eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r_star = 0.5 * (lo + hi);
        let residual = self.outage(eav, r_star).value - eps;
        Ok(OutageCapacity { c_out: (1.0 - eps) * r_star, r_star, infeasible: false, residual })
    }

    /// All three metrics for one eavesdropper law.
    pub fn report(&self, eav: &dyn EavesdropperCdf, r_t: f64, eps: f64, method: Method) -> Result<SecrecyReport> {
        let c = self.ergodic(eav);
        let p = self.outage(eav, r_t);
        let oc = self.outage_capacity(eav, eps)?;
        let mut diagnostics = self.diagnostics(eav, &c);
        diagnostics.evals += p.evals;
        diagnostics.quad_converged &= p.converged;
        Ok(SecrecyReport {
            c_erg: c.value,
            p_out: p.value,
            c_out: oc.c_out,
            r_star: oc.r_star,
            outage_infeasible: oc.infeasible,
            method,
            diagnostics,
            ci: None,
        })
    }
}

/// Smallest `x` (up to bisection accuracy) with `1 − F_s(x) < tail`.
pub fn serving_quantile_upper(scn: &SnrScenario, tail: f64) -> f64 {
    let mut hi = scn.mean_serving_snr().max(1e-12);
    let mut guard = 0;
    while 1.0 - serving_snr_cdf(hi, scn).value >= tail && guard < 200 {
        hi *= 2.0;
        guard += 1;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - serving_snr_cdf(mid, scn).value >= tail {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    hi
}

/// Exact ergodic secrecy capacity.
pub fn ergodic_secrecy_capacity(scn: &SnrScenario, qc: &QuadratureControl) -> Result<f64> {
    let eav = ExactEavCdf::new(scn)?;
    Ok(SecrecyIntegrator::new(scn, *qc)?.ergodic(&eav).value)
}

/// Exact secrecy outage probability at target rate `r_t`.
pub fn secrecy_outage_probability(scn: &SnrScenario, r_t: f64, qc: &QuadratureControl) -> Result<f64> {
    if !(r_t >= 0.0) {
        return Err(invalid(format!("target rate must be >= 0, got {r_t}")));
    }
    let eav = ExactEavCdf::new(scn)?;
    Ok(SecrecyIntegrator::new(scn, *qc)?.outage(&eav, r_t).value)
}

/// Exact outage secrecy capacity at outage level `eps`.
pub fn outage_secrecy_capacity(scn: &SnrScenario, eps: f64, qc: &QuadratureControl) -> Result<OutageCapacity> {
    let eav = ExactEavCdf::new(scn)?;
    SecrecyIntegrator::new(scn, *qc)?.outage_capacity(&eav, eps)
}

/// All exact metrics in one report.
pub fn exact_secrecy_metrics(scn: &SnrScenario, r_t: f64, eps: f64, qc: &QuadratureControl) -> Result<SecrecyReport> {
    if !(r_t >= 0.0) {
        return Err(invalid(format!("target rate must be >= 0, got {r_t}")));
    }
    let eav = ExactEavCdf::new(scn)?;
    SecrecyIntegrator::new(scn, *qc)?.report(&eav, r_t, eps, Method::Exact)
}

/// Contribution of one `(p, q)` cell to the ergodic capacity, without the
/// count probability: `1/ln2 ∫ B_ml^p B_sl^q (1 − F_s)/(1+x) dx`.
pub fn ergodic_count_term(scn: &SnrScenario, p: u64, q: u64, qc: &QuadratureControl) -> Result<f64> {
    struct Cell {
        ml: LobeKernel,
        sl: LobeKernel,
        p: u64,
        q: u64,
        scn: SnrScenario,
    }
    impl EavesdropperCdf for Cell {
        fn cdf(&self, x: f64) -> f64 {
            let a = if self.p > 0 { self.ml.base(x, &self.scn.fading, &self.scn.series).value } else { 1.0 };
            let b = if self.q > 0 { self.sl.base(x, &self.scn.fading, &self.scn.series).value } else { 1.0 };
            power_of_base(a, self.p) * power_of_base(b, self.q)
        }
    }
    let cell = Cell { ml: scn.mainlobe_kernel(0), sl: scn.sidelobe_kernel(0), p, q, scn: scn.clone() };
    Ok(SecrecyIntegrator::new(scn, *qc)?.ergodic(&cell).value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{FadingParams, SystemParams};
    use crate::pointprocess::case_probability;
    use crate::snrdist::{BeamMode, LayerSpec};

    fn scenario(n: u64, a_e: f64, omega_deg: f64, steer_deg: f64, mode: BeamMode) -> SnrScenario {
        let sys = SystemParams {
            beam_half_angle: omega_deg.to_radians(),
            steer_angle: steer_deg.to_radians(),
            ..Default::default()
        };
        SnrScenario::new(sys, FadingParams::average_shadowing(), 600.0, 60f64.to_radians(), &[LayerSpec { count: n, altitude_km: a_e }], mode)
            .unwrap()
    }

    #[test]
    fn mixture_equals_multinomial_closed_form() {
        let scn = scenario(25, 600.0, 40.0, 0.0, BeamMode::Fixed);
        let eav = ExactEavCdf::new(&scn).unwrap();
        let (p_ml, p_sl, p_out) = scn.layers[0].region_probabilities();
        for x in [1e-3, 0.1, 1.0, 5.0, 30.0, 300.0] {
            let (a, b) = eav.bases(x);
            let closed = (p_out + p_ml * a + p_sl * b).powi(25);
            assert!((eav.cdf(x) - closed).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn per_cell_integrals_sum_to_total() {
        let scn = scenario(3, 600.0, 40.0, 0.0, BeamMode::Fixed);
        let qc = QuadratureControl::default();
        let total = ergodic_secrecy_capacity(&scn, &qc).unwrap();
        let mut sum = 0.0;
        for p in 0..=3u64 {
            for q in 0..=(3 - p) {
                sum += case_probability(3, p, q, &scn.layers[0]).unwrap() * ergodic_count_term(&scn, p, q, &qc).unwrap();
            }
        }
        assert!((total - sum).abs() < 1e-7, "{total} vs {sum}");
    }

    #[test]
    fn capacity_decreases_with_n() {
        let qc = QuadratureControl::default();
        let c: Vec<f64> = [10, 50, 200]
            .iter()
            .map(|&n| ergodic_secrecy_capacity(&scenario(n, 600.0, 40.0, 0.0, BeamMode::Fixed), &qc).unwrap())
            .collect();
        assert!(c[0] > c[1] && c[1] > c[2], "{c:?}");
        assert!(c.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn steerable_never_beats_fixed() {
        let qc = QuadratureControl::default();
        for &n in &[5u64, 40] {
            for &a_e in &[600.0, 1200.0] {
                let f = ergodic_secrecy_capacity(&scenario(n, a_e, 40.0, 20.0, BeamMode::Fixed), &qc).unwrap();
                let s = ergodic_secrecy_capacity(&scenario(n, a_e, 40.0, 20.0, BeamMode::Steerable), &qc).unwrap();
                assert!(s <= f + 1e-9, "N={n} a_e={a_e}: {s} > {f}");
            }
        }
    }

    #[test]
    fn outage_monotone_and_saturates() {
        let scn = scenario(10, 600.0, 20.0, 0.0, BeamMode::Fixed);
        let qc = QuadratureControl::default();
        let eav = ExactEavCdf::new(&scn).unwrap();
        let it = SecrecyIntegrator::new(&scn, qc).unwrap();
        let mut prev = 0.0;
        for i in 0..=20 {
            let p = it.outage(&eav, 0.25 * i as f64).value;
            assert!(p >= prev - 1e-9 && (0.0..=1.0).contains(&p));
            prev = p;
        }
        assert!(it.outage(&eav, 40.0).value > 1.0 - 1e-9);
    }

    #[test]
    fn outage_capacity_contract() {
        let scn = scenario(10, 600.0, 20.0, 0.0, BeamMode::Fixed);
        let qc = QuadratureControl::default();
        let oc = outage_secrecy_capacity(&scn, 0.1, &qc).unwrap();
        assert!(!oc.infeasible);
        assert!(oc.residual.abs() < 1e-4);
        assert!((oc.c_out - 0.9 * oc.r_star).abs() < 1e-15);
        // an outage level below P_out(0) is infeasible
        let p0 = secrecy_outage_probability(&scn, 0.0, &qc).unwrap();
        let bad = outage_secrecy_capacity(&scn, 0.5 * p0, &qc).unwrap();
        assert!(bad.infeasible && bad.c_out == 0.0);
    }

    #[test]
    fn refusals() {
        let qc = QuadratureControl::default();
        assert!(matches!(ergodic_secrecy_capacity(&scenario(501, 600.0, 40.0, 0.0, BeamMode::Fixed), &qc), Err(Error::Refused(_))));
        let two = SnrScenario::new(
            SystemParams::default(),
            FadingParams::average_shadowing(),
            600.0,
            1.0,
            &[LayerSpec { count: 2, altitude_km: 600.0 }, LayerSpec { count: 2, altitude_km: 900.0 }],
            BeamMode::Fixed,
        )
        .unwrap();
        assert!(matches!(ergodic_secrecy_capacity(&two, &qc), Err(Error::Refused(_))));
        assert!(secrecy_outage_probability(&scenario(1, 600.0, 40.0, 0.0, BeamMode::Fixed), -1.0, &qc).is_err());
    }

    #[test]
    fn worker_count_does_not_change_bits() {
        let scn = scenario(30, 900.0, 40.0, 0.0, BeamMode::Fixed);
        let a = exact_secrecy_metrics(&scn, 2.0, 0.1, &QuadratureControl::default()).unwrap();
        let b = exact_secrecy_metrics(&scn, 2.0, 0.1, &QuadratureControl::default().with_workers(4)).unwrap();
        assert_eq!(a.c_erg.to_bits(), b.c_erg.to_bits());
        assert_eq!(a.p_out.to_bits(), b.p_out.to_bits());
        assert_eq!(a.c_out.to_bits(), b.c_out.to_bits());
    }

    #[test]
    fn cap_is_accepted() {
        let scn = scenario(N_EXACT_CAP, 600.0, 40.0, 0.0, BeamMode::Fixed);
        let c = ergodic_secrecy_capacity(&scn, &QuadratureControl::default().with_workers(4)).unwrap();
        assert!(c >= 0.0 && c.is_finite());
    }
}
