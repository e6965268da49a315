//! Poisson-limit approximations, asymptotic regimes and multi-shell
//! constellations.
//!
//! When the per-satellite visibility probability is small the binomial
//! counts become Poisson, and the probability generating functional turns the
//! count mixture into a single exponential per lobe region:
//!
//! `F̃_ml(x) = exp(−N/2 [(1 − cos ψ_th) − (Π-block over ψ ∈ [0, ψ_th])])`
//!
//! where the Π-block is the integral of the gain CDF against `sin ψ dψ`,
//! evaluated in closed form through the same split as the exact kernels.
//! Shells at different altitudes multiply.

use crate::error::{invalid, Result};
use crate::geometry::{chord_distance, EavesdropperLayer};
use crate::pointprocess::distance_cdf_shell;
use crate::quadrature::{integrate, QuadOptions};
use crate::secrecy::{
    ConfidenceHalfWidths, Diagnostics, EavesdropperCdf, Method, NoEavesdropper, QuadratureControl, SecrecyIntegrator,
    SecrecyReport,
};
use crate::snrdist::{serving_snr_cdf, LobeKernel, SnrScenario};
use crate::specfun::{pochhammer, upper_incomplete_gamma_nonpos, SeriesValue};

/// Largest `N` for which the conditional mean distance uses the alternating
/// binomial sum; above it the defining integral is evaluated numerically.
pub const BINOMIAL_SUM_MAX_N: u64 = 60;

fn layer_kernel(scn: &SnrScenario, layer: &EavesdropperLayer, main: bool) -> LobeKernel {
    let lb = scn.link_budget();
    let psi = if main { (0.0, layer.psi_th) } else { (layer.psi_th, layer.psi_max) };
    let lo = chord_distance(layer.earth_radius, layer.altitude, psi.0);
    let hi = if main { layer.d_th } else { layer.d_max };
    let hi = hi.max(lo);
    LobeKernel::new(lo, hi, if main { lb.w_ml } else { lb.w_sl }, lb.alpha)
}

// −N/2 [(cos ψ_a − cos ψ_b) − Π-block/(2 r (r+a_e))]
fn ppp_lobe(x: f64, layer: &EavesdropperLayer, scn: &SnrScenario, main: bool) -> SeriesValue {
    let n = layer.count as f64;
    if layer.count == 0 {
        return SeriesValue::exact(1.0);
    }
    let (psi_a, psi_b) = if main { (0.0, layer.psi_th) } else { (layer.psi_th, layer.psi_max) };
    let cap = psi_a.cos() - psi_b.cos();
    if cap <= 0.0 {
        return SeriesValue::exact(1.0);
    }
    if x <= 0.0 {
        return SeriesValue::exact((-0.5 * n * cap).exp());
    }
    let two_r_rs = 2.0 * layer.earth_radius * layer.shell_radius();
    let kernel = layer_kernel(scn, layer, main);
    kernel
        .block_sum(x, &scn.fading, &scn.series)
        .map(|block| (-0.5 * n * (cap - block / two_r_rs).max(0.0)).exp())
}

/// Poisson-limit CDF of the strongest main-lobe eavesdropper on `layer`.
pub fn ppp_eav_mainlobe_cdf(x: f64, layer: &EavesdropperLayer, scn: &SnrScenario) -> SeriesValue {
    ppp_lobe(x, layer, scn, true)
}

/// Poisson-limit CDF of the strongest side-lobe eavesdropper on `layer`.
pub fn ppp_eav_sidelobe_cdf(x: f64, layer: &EavesdropperLayer, scn: &SnrScenario) -> SeriesValue {
    ppp_lobe(x, layer, scn, false)
}

/// Product of the Poisson-limit lobe CDFs over every shell.
pub struct PoissonEavCdf {
    scn: SnrScenario,
    truncated: std::sync::atomic::AtomicBool,
}

impl PoissonEavCdf {
    pub fn new(scn: &SnrScenario) -> Self {
        Self { scn: scn.clone(), truncated: std::sync::atomic::AtomicBool::new(false) }
    }
}

impl EavesdropperCdf for PoissonEavCdf {
    fn cdf(&self, x: f64) -> f64 {
        let mut prod = 1.0;
        for layer in &self.scn.layers {
            let v = ppp_eav_mainlobe_cdf(x, layer, &self.scn).zip_with(ppp_eav_sidelobe_cdf(x, layer, &self.scn), |a, b| a * b);
            if v.truncated {
                self.truncated.store(true, std::sync::atomic::Ordering::Relaxed);
            }
            prod *= v.value;
        }
        prod
    }

    fn truncated(&self) -> bool {
        self.truncated.load(std::sync::atomic::Ordering::Relaxed)
    }
}

/// Poisson-limit metrics: one quadrature per metric regardless of `N`, and
/// any number of shells.
pub fn approx_secrecy_metrics(scn: &SnrScenario, r_t: f64, eps: f64, qc: &QuadratureControl) -> Result<SecrecyReport> {
    if !(r_t >= 0.0) {
        return Err(invalid(format!("target rate must be >= 0, got {r_t}")));
    }
    let eav = PoissonEavCdf::new(scn);
    SecrecyIntegrator::new(scn, *qc)?.report(&eav, r_t, eps, Method::Approx)
}

/// Multi-shell metrics; identical to [`approx_secrecy_metrics`], which
/// already multiplies the per-shell laws.
pub fn multi_altitude_metrics(scn: &SnrScenario, r_t: f64, eps: f64, qc: &QuadratureControl) -> Result<SecrecyReport> {
    approx_secrecy_metrics(scn, r_t, eps, qc)
}

/// Closed-form capacity without eavesdroppers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoEavesdropperCapacity {
    pub value: f64,
    /// Number of terms `⌊m⌋` kept in the Kummer expansion.
    pub terms: u32,
    /// Set when `m` is not an integer and the finite expansion is therefore
    /// an approximation.
    pub non_integer_m: bool,
}

/// Ergodic capacity of the legitimate link alone.
///
/// Uses `f_h(x) = K e^{−βx} Σ_k (1−m)_k (−δx)^k/(k!)²`, `β = 1/(2b) − δ`,
/// which terminates for integer `m`, and
/// `∫₀^∞ x^t e^{−βcx}/(1+x) dx = t! e^{βc} Γ(−t, βc)`.
pub fn capacity_no_eavesdroppers(scn: &SnrScenario) -> Result<NoEavesdropperCapacity> {
    let f = &scn.fading;
    let terms = f.m.floor().max(1.0) as u32;
    let non_integer_m = f.m.fract() != 0.0;
    let c = scn.serving_gain_scale();
    let beta = 1.0 / (2.0 * f.b) - f.delta;
    let bc = beta * c;
    let e_bc = bc.exp();
    let gammas: Vec<f64> = (0..terms).map(|t| upper_incomplete_gamma_nonpos(t, bc)).collect::<Result<_>>()?;
    let mut sum = 0.0;
    let mut k_fact = 1.0;
    for k in 0..terms {
        if k > 0 {
            k_fact *= k as f64;
        }
        let lead = if k % 2 == 0 { 1.0 } else { -1.0 } * pochhammer(1.0 - f.m, k) * f.delta.powi(k as i32) / k_fact;
        for t in 0..=k {
            sum += lead * c.powi(t as i32) / beta.powi((k - t + 1) as i32) * e_bc * gammas[t as usize];
        }
    }
    Ok(NoEavesdropperCapacity { value: f.k * sum / std::f64::consts::LN_2, terms, non_integer_m })
}

/// Outage probability of the legitimate link alone: `F_s(2^R − 1)`.
pub fn outage_no_eavesdroppers(scn: &SnrScenario, r_t: f64) -> f64 {
    serving_snr_cdf(2f64.powf(r_t) - 1.0, scn).value
}

/// Metrics with no eavesdropper, evaluated numerically (same integrator as
/// the other methods).
pub fn no_eavesdropper_metrics(scn: &SnrScenario, r_t: f64, eps: f64, qc: &QuadratureControl) -> Result<SecrecyReport> {
    SecrecyIntegrator::new(scn, *qc)?.report(&NoEavesdropper, r_t, eps, Method::Asymptotic)
}

/// Limit of every metric as the eavesdropper count grows without bound.
pub fn degenerate_many_eavesdroppers() -> SecrecyReport {
    SecrecyReport {
        c_erg: 0.0,
        p_out: 1.0,
        c_out: 0.0,
        r_star: 0.0,
        outage_infeasible: true,
        method: Method::Asymptotic,
        diagnostics: Diagnostics { quad_converged: true, ..Default::default() },
        ci: None::<ConfidenceHalfWidths>,
    }
}

/// High-SNR upper bound `C∞ = S∞ (log₂P − L∞)` and its ingredients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighSnrCharacterization {
    pub c_erg_inf: f64,
    /// High-SNR slope `S∞` (bits/s/Hz per 3 dB).
    pub slope: f64,
    /// High-SNR power offset `L∞` in 3 dB units relative to 1 W.
    pub offset: f64,
    /// Conditional mean nearest-satellite distance inside the main-lobe cap.
    pub lambda_ml: f64,
    /// Conditional mean nearest-satellite distance inside the side-lobe
    /// annulus.
    pub lambda_sl: f64,
    /// Set when the alternating binomial sum lost more than six digits.
    pub ill_conditioned: bool,
}

/// Neumaier-compensated sum.
fn compensated_sum(terms: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut abs = 0.0f64;
    for t in terms {
        abs += t.abs();
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    (sum + comp, abs)
}

/// `E[d_min ; lo < d_min ≤ hi]` for the nearest of `n` satellites uniform on
/// the shell, by the binomial expansion of `(1 − F)^{n−1}`. Returns the
/// value and the digit-loss ratio `Σ|terms| / |sum|`.
pub fn nearest_partial_mean_binomial(n: u64, earth_radius: f64, a_e: f64, lo: f64, hi: f64) -> (f64, f64) {
    let l2 = 4.0 * earth_radius * (earth_radius + a_e);
    let base = l2 + a_e * a_e;
    // N/(2 r (r+a)) (1 + a²/L²)^{N−1} Σ_i C(N−1,i) (−1/(L²+a²))^i (hi^{2i+3} − lo^{2i+3})/(2i+3)
    let u_hi = hi * hi / base;
    let u_lo = lo * lo / base;
    let mut coef = 1.0; // C(N−1,i) (−1)^i
    let mut pow_hi = hi.powi(3);
    let mut pow_lo = lo.powi(3);
    let terms = (0..n).map(move |i| {
        if i > 0 {
            coef *= -((n - i) as f64) / i as f64;
            pow_hi *= u_hi;
            pow_lo *= u_lo;
        }
        coef * (pow_hi - pow_lo) / (2 * i + 3) as f64
    });
    let (sum, abs) = compensated_sum(terms);
    let prefactor = n as f64 / (2.0 * earth_radius * (earth_radius + a_e)) * ((n - 1) as f64 * (a_e * a_e / l2).ln_1p()).exp();
    let loss = if sum != 0.0 { abs / sum.abs() } else { f64::INFINITY };
    (prefactor * sum, loss)
}

/// Same partial mean by adaptive quadrature of `t · n f(t) (1−F(t))^{n−1}`.
pub fn nearest_partial_mean_quadrature(n: u64, earth_radius: f64, a_e: f64, lo: f64, hi: f64) -> f64 {
    let l2 = 4.0 * earth_radius * (earth_radius + a_e);
    let opts = QuadOptions { abs_tol: 0.0, rel_tol: 1e-12, max_intervals: 5000 };
    integrate(
        |t| {
            let surv = 1.0 - distance_cdf_shell(t, earth_radius, a_e);
            t * n as f64 * 2.0 * t / l2 * surv.max(0.0).powi((n - 1) as i32)
        },
        lo,
        hi,
        &opts,
    )
    .value
}

/// Conditional mean of the nearest distance given it falls in `(lo, hi]`.
pub fn conditional_mean_nearest(n: u64, earth_radius: f64, a_e: f64, lo: f64, hi: f64) -> (f64, bool) {
    let surv = |d: f64| (1.0 - distance_cdf_shell(d, earth_radius, a_e)).powi(n as i32);
    let mass = surv(lo) - surv(hi);
    if n == 0 || !(mass > 0.0) || hi <= lo {
        return (0.5 * (lo + hi), false);
    }
    let (partial, ill) = if n <= BINOMIAL_SUM_MAX_N {
        let (v, loss) = nearest_partial_mean_binomial(n, earth_radius, a_e, lo, hi);
        (v, loss > 1e6)
    } else {
        (nearest_partial_mean_quadrature(n, earth_radius, a_e, lo, hi), false)
    };
    ((partial / mass).clamp(lo, hi), ill)
}

/// High-SNR characterisation for the first shell.
///
/// The nearest satellite decides the regime: main-lobe cap (probability
/// `1 − A`), side-lobe annulus (`A − B`) or no visible satellite (`B`), with
/// `A = (1 − F(d_th))^N` and `B = (1 − F(d_max))^N`. Distances enter through
/// their conditional means; fading terms common to both links cancel.
pub fn high_snr_characterization(scn: &SnrScenario) -> HighSnrCharacterization {
    let layer = &scn.layers[0];
    let sys = &scn.system;
    let n = layer.count;
    let r = layer.earth_radius;
    let a = layer.altitude;
    let alpha = sys.path_loss_exponent;
    let d_s = scn.serving.distance;
    let surv = |d: f64| (1.0 - distance_cdf_shell(d, r, a)).powi(n as i32);
    let big_a = if n == 0 { 1.0 } else { surv(layer.d_th) };
    let big_b = if n == 0 { 1.0 } else { surv(layer.d_max) };
    let (lambda_ml, ill_ml) = conditional_mean_nearest(n, r, a, a, layer.d_th);
    let (lambda_sl, ill_sl) = conditional_mean_nearest(n, r, a, layer.d_th, layer.d_max);
    let w1 = scn.link_budget().w_ml;
    let mut c = 0.0;
    if 1.0 - big_a > 0.0 {
        c += (1.0 - big_a) * alpha * (lambda_ml / d_s).log2();
    }
    if big_a - big_b > 0.0 {
        c += (big_a - big_b) * (sys.gain_mainlobe * lambda_sl.powf(alpha) / (sys.gain_sidelobe * d_s.powf(alpha))).log2();
    }
    c += big_b * (1.0 / (w1 * (1000.0 * d_s).powf(alpha))).log2();
    let slope = big_b;
    let constant = c - slope * sys.tx_power_w.log2();
    HighSnrCharacterization {
        c_erg_inf: c,
        slope,
        offset: -constant / slope,
        lambda_ml,
        lambda_sl,
        ill_conditioned: ill_ml || ill_sl,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{dbm_to_watts, FadingParams, SystemParams};
    use crate::pointprocess::case_probability;
    use crate::secrecy::{ergodic_secrecy_capacity, exact_secrecy_metrics};
    use crate::snrdist::{eav_mainlobe_snr_cdf, eav_sidelobe_snr_cdf, BeamMode, LayerSpec};

    fn scenario_with(sys: SystemParams, fading: FadingParams, a_s: f64, layers: &[LayerSpec]) -> SnrScenario {
        SnrScenario::new(sys, fading, a_s, 60f64.to_radians(), layers, BeamMode::Fixed).unwrap()
    }

    fn scenario(n: u64, a_e: f64) -> SnrScenario {
        scenario_with(SystemParams::default(), FadingParams::average_shadowing(), 600.0, &[LayerSpec { count: n, altitude_km: a_e }])
    }

    #[test]
    fn ppp_edges() {
        let zero = scenario(0, 600.0);
        for x in [1e-3, 1.0, 100.0] {
            assert_eq!(ppp_eav_mainlobe_cdf(x, &zero.layers[0], &zero).value, 1.0);
            assert_eq!(ppp_eav_sidelobe_cdf(x, &zero.layers[0], &zero).value, 1.0);
        }
        let scn = scenario(50, 600.0);
        assert!(ppp_eav_mainlobe_cdf(1e9, &scn.layers[0], &scn).value > 1.0 - 1e-9);
        assert!(ppp_eav_sidelobe_cdf(1e9, &scn.layers[0], &scn).value > 1.0 - 1e-9);
    }

    #[test]
    fn ppp_matches_exponential_of_single_satellite_law() {
        // exp(−N p (1 − B)) written through the Π blocks
        let scn = scenario(40, 900.0);
        let l = &scn.layers[0];
        let (p_ml, p_sl, _) = l.region_probabilities();
        for x in [0.01, 0.3, 2.0, 20.0] {
            let b_ml = scn.mainlobe_kernel(0).base(x, &scn.fading, &scn.series).value;
            let b_sl = scn.sidelobe_kernel(0).base(x, &scn.fading, &scn.series).value;
            let m = ppp_eav_mainlobe_cdf(x, l, &scn).value;
            let s = ppp_eav_sidelobe_cdf(x, l, &scn).value;
            assert!((m - (-40.0 * p_ml * (1.0 - b_ml)).exp()).abs() < 1e-12);
            assert!((s - (-40.0 * p_sl * (1.0 - b_sl)).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn ppp_close_to_binomial_mixture_at_low_altitude() {
        let scn = scenario(10, 300.0);
        let l = &scn.layers[0];
        let mut sup: f64 = 0.0;
        for i in 0..=120 {
            let x = 10f64.powf(-3.0 + 6.0 * i as f64 / 120.0);
            let ml: f64 = (0..=10u64)
                .map(|p| {
                    let prob: f64 = (0..=(10 - p)).map(|q| case_probability(10, p, q, l).unwrap()).sum();
                    prob * eav_mainlobe_snr_cdf(x, p, &scn).value
                })
                .sum();
            let sl: f64 = (0..=10u64)
                .map(|q| {
                    let prob: f64 = (0..=(10 - q)).map(|p| case_probability(10, p, q, l).unwrap()).sum();
                    prob * eav_sidelobe_snr_cdf(x, q, &scn).value
                })
                .sum();
            sup = sup.max((ml - ppp_eav_mainlobe_cdf(x, l, &scn).value).abs());
            sup = sup.max((sl - ppp_eav_sidelobe_cdf(x, l, &scn).value).abs());
        }
        assert!(sup < 0.01, "{sup}");
    }

    #[test]
    fn single_layer_multi_altitude_is_identity() {
        let scn = scenario(20, 800.0);
        let qc = QuadratureControl::default();
        let a = approx_secrecy_metrics(&scn, 2.0, 0.1, &qc).unwrap();
        let b = multi_altitude_metrics(&scn, 2.0, 0.1, &qc).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.diagnostics.count_terms, 1);
    }

    #[test]
    fn product_over_layers_is_below_each_layer() {
        let two = scenario_with(
            SystemParams::default(),
            FadingParams::average_shadowing(),
            600.0,
            &[LayerSpec { count: 78, altitude_km: 1015.0 }, LayerSpec { count: 220, altitude_km: 1325.0 }],
        );
        let prod = PoissonEavCdf::new(&two);
        for i in 0..50 {
            let x = 10f64.powf(-2.0 + 4.0 * i as f64 / 49.0);
            let p = prod.cdf(x);
            for l in &two.layers {
                let per = ppp_eav_mainlobe_cdf(x, l, &two).value * ppp_eav_sidelobe_cdf(x, l, &two).value;
                assert!(p <= per + 1e-15);
            }
        }
    }

    #[test]
    fn no_eavesdropper_closed_form_matches_integral() {
        let fading = FadingParams::new(0.126, 10.0, 0.835).unwrap();
        let scn = scenario_with(SystemParams::default(), fading, 600.0, &[LayerSpec { count: 0, altitude_km: 600.0 }]);
        let closed = capacity_no_eavesdroppers(&scn).unwrap();
        assert!(!closed.non_integer_m && closed.terms == 10);
        let exact = ergodic_secrecy_capacity(&scn, &QuadratureControl::default()).unwrap();
        assert!((closed.value - exact).abs() < 1e-3, "{} vs {exact}", closed.value);
        assert!(capacity_no_eavesdroppers(&scenario(0, 600.0)).unwrap().non_integer_m);
    }

    #[test]
    fn no_eavesdropper_outage() {
        let scn = scenario(0, 600.0);
        assert_eq!(outage_no_eavesdroppers(&scn, 0.0), 0.0);
        let qc = QuadratureControl::default();
        let upper = no_eavesdropper_metrics(&scn, 2.0, 0.1, &qc).unwrap();
        assert!((upper.p_out - outage_no_eavesdroppers(&scn, 2.0)).abs() < 1e-8);
        for n in [1u64, 10, 50] {
            let r = exact_secrecy_metrics(&scenario(n, 600.0), 2.0, 0.1, &qc).unwrap();
            assert!(r.c_erg <= upper.c_erg + 1e-9);
            assert!(r.p_out >= upper.p_out - 1e-9);
        }
    }

    #[test]
    fn many_eavesdroppers_limit() {
        let lim = degenerate_many_eavesdroppers();
        assert_eq!((lim.c_erg, lim.p_out, lim.c_out), (0.0, 1.0, 0.0));
        let x = 5.0;
        let mut prev = 1.0;
        for n in [100u64, 10_000, 1_000_000] {
            let scn = scenario(n, 600.0);
            let v = PoissonEavCdf::new(&scn).cdf(x);
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn binomial_sum_agrees_with_quadrature() {
        for &a_e in &[300.0, 600.0, 1200.0] {
            let layer = EavesdropperLayer::new(6378.0, 1, a_e, 40f64.to_radians()).unwrap();
            for n in [1u64, 2, 10, 30, 60] {
                for (lo, hi) in [(a_e, layer.d_th), (layer.d_th, layer.d_max)] {
                    let (b, _) = nearest_partial_mean_binomial(n, 6378.0, a_e, lo, hi);
                    let q = nearest_partial_mean_quadrature(n, 6378.0, a_e, lo, hi);
                    assert!((b - q).abs() <= 1e-6 * q.abs().max(1e-300), "a_e={a_e} N={n}: {b} vs {q}");
                }
            }
        }
    }

    #[test]
    fn lambda_inside_intervals() {
        for &a_e in &[300.0, 600.0, 1200.0] {
            for n in [1u64, 10, 100, 500] {
                let scn = scenario(n, a_e);
                let h = high_snr_characterization(&scn);
                let l = &scn.layers[0];
                assert!(h.lambda_ml > a_e && h.lambda_ml < l.d_th, "{h:?}");
                assert!(h.lambda_sl > l.d_th && h.lambda_sl < l.d_max, "{h:?}");
            }
        }
    }

    #[test]
    fn slope_and_offset_identity() {
        let h = high_snr_characterization(&scenario(10, 600.0));
        assert!((h.slope - (1.0f64 - 0.5 / (1.0 + 6378.0 / 600.0)).powi(10)).abs() < 1e-12);
        assert!((h.slope - 0.6444).abs() < 1e-4);
        let p = SystemParams::default().tx_power_w;
        assert!((h.slope * (p.log2() - h.offset) - h.c_erg_inf).abs() < 1e-9);
        assert_eq!(high_snr_characterization(&scenario(0, 600.0)).slope, 1.0);
        for n in [1u64, 5, 50] {
            for a in [300.0, 1200.0, 2000.0] {
                let s = high_snr_characterization(&scenario(n, a)).slope;
                assert!(s > 0.5f64.powi(n as i32) && s < 1.0);
            }
        }
    }

    #[test]
    fn high_snr_gap_shrinks_with_power() {
        let qc = QuadratureControl::default();
        for n in [10u64, 50] {
            let mut prev = f64::INFINITY;
            for p_dbm in [20.0, 40.0, 60.0] {
                let sys = SystemParams { tx_power_w: dbm_to_watts(p_dbm), ..Default::default() };
                let scn = scenario_with(sys, FadingParams::average_shadowing(), 600.0, &[LayerSpec { count: n, altitude_km: 600.0 }]);
                let approx = approx_secrecy_metrics(&scn, 1.0, 0.1, &qc).unwrap().c_erg;
                let gap = (high_snr_characterization(&scn).c_erg_inf - approx).abs();
                assert!(gap < prev, "N={n} P={p_dbm}: gap {gap} prev {prev}");
                prev = gap;
            }
        }
    }
}
