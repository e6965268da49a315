//! SNR distributions of the serving link and of the strongest eavesdropper
//! conditioned on how many satellites sit in each lobe region.
//!
//! For one satellite whose distance `d` is distributed as `2y/(hi²−lo²)` on
//! `(lo, hi]` and whose SNR is `h/(w d_mᵅ)`, the CDF is
//!
//! `B(x) = Σ_n w_n J_n(x)`, `J_n = (E_n(hi) − E_n(lo)) / (hi² − lo²)`,
//! `E_n(z) = z² [P(1+n, Λ_z) − G_n Λ_z^{−2/α} P(1+n+2/α, Λ_z)]`,
//!
//! with `Λ_z = w (1000 z)ᵅ x / (2b)` and `G_n = Γ(1+n+2/α)/Γ(1+n)`. The two
//! blocks come from splitting the distance/gain double integral into the
//! part where the gamma argument is bounded by the distance and the part
//! where it is not. With `p` i.i.d. satellites the maximum has CDF `B(x)^p`.

use crate::channel::{sr_cdf, sr_pdf, FadingParams, LinkBudget, SystemParams};
use crate::error::{invalid, Result};
use crate::geometry::{EavesdropperLayer, ServingGeometry};
use crate::specfun::{ln_gamma, regularized_lower_gamma, sum_series, SeriesControl, SeriesValue};

/// Whether eavesdropper beams can be steered towards the terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BeamMode {
    #[default]
    Fixed,
    Steerable,
}

/// Count and altitude of one eavesdropping shell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerSpec {
    pub count: u64,
    pub altitude_km: f64,
}

/// Everything needed to evaluate the SNR laws.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrScenario {
    pub system: SystemParams,
    pub fading: FadingParams,
    pub serving: ServingGeometry,
    pub layers: Vec<EavesdropperLayer>,
    pub beam_mode: BeamMode,
    pub series: SeriesControl,
}

impl SnrScenario {
    pub fn new(
        system: SystemParams,
        fading: FadingParams,
        serving_altitude_km: f64,
        serving_elevation: f64,
        layers: &[LayerSpec],
        beam_mode: BeamMode,
    ) -> Result<Self> {
        system.validate()?;
        if layers.is_empty() {
            return Err(invalid("at least one eavesdropper layer is required"));
        }
        let serving = ServingGeometry::new(system.earth_radius_km, serving_altitude_km, serving_elevation)?;
        let half_angle = match beam_mode {
            BeamMode::Fixed => system.beam_half_angle,
            BeamMode::Steerable => system.beam_half_angle + system.steer_angle,
        };
        let layers = layers
            .iter()
            .map(|l| EavesdropperLayer::new(system.earth_radius_km, l.count, l.altitude_km, half_angle))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { system, fading, serving, layers, beam_mode, series: SeriesControl::default() })
    }

    pub fn with_series(mut self, series: SeriesControl) -> Self {
        self.series = series;
        self
    }

    pub fn link_budget(&self) -> LinkBudget {
        self.system.link_budget()
    }

    pub fn total_count(&self) -> u64 {
        self.layers.iter().map(|l| l.count).sum()
    }

    /// `w₁ d_sᵅ`: serving SNR `γ_s = h / serving_gain_scale`.
    pub fn serving_gain_scale(&self) -> f64 {
        let lb = self.link_budget();
        lb.w_ml * (1000.0 * self.serving.distance).powf(lb.alpha)
    }

    pub fn mean_serving_snr(&self) -> f64 {
        self.fading.mean_gain() / self.serving_gain_scale()
    }

    pub fn mainlobe_kernel(&self, layer: usize) -> LobeKernel {
        let l = &self.layers[layer];
        let lb = self.link_budget();
        LobeKernel::new(l.altitude, l.d_th, lb.w_ml, lb.alpha)
    }

    pub fn sidelobe_kernel(&self, layer: usize) -> LobeKernel {
        let l = &self.layers[layer];
        let lb = self.link_budget();
        LobeKernel::new(l.d_th, l.d_max, lb.w_sl, lb.alpha)
    }
}

/// Single-satellite SNR law for one lobe region `(lo, hi]` (km).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LobeKernel {
    pub lo: f64,
    pub hi: f64,
    pub w: f64,
    pub alpha: f64,
}

impl LobeKernel {
    pub fn new(lo: f64, hi: f64, w: f64, alpha: f64) -> Self {
        Self { lo, hi, w, alpha }
    }

    /// Zero-width region; treated as a point mass at `lo`.
    pub fn degenerate(&self) -> bool {
        self.hi - self.lo <= 1e-9 * self.hi
    }

    fn lambda(&self, z: f64, x: f64, fading: &FadingParams) -> f64 {
        self.w * (1000.0 * z).powf(self.alpha) * x / (2.0 * fading.b)
    }

    // E_n(z) with the gamma-ratio G_n supplied by the caller.
    fn endpoint_block(&self, z: f64, lam: f64, n: usize, g_n: f64) -> f64 {
        let a = 1.0 + n as f64;
        let s = 2.0 / self.alpha;
        let p1 = regularized_lower_gamma(a, lam).unwrap_or(1.0);
        let p2 = regularized_lower_gamma(a + s, lam).unwrap_or(1.0);
        z * z * (p1 - g_n * lam.powf(-s) * p2)
    }

    /// `Σ_n w_n (E_n(hi) − E_n(lo))` in km²: the distance-weighted gain CDF
    /// integrated over `d²` across the region.
    pub fn block_sum(&self, x: f64, fading: &FadingParams, ctrl: &SeriesControl) -> SeriesValue {
        if x <= 0.0 || self.hi <= self.lo {
            return SeriesValue::exact(0.0);
        }
        let s = 2.0 / self.alpha;
        let lam_hi = self.lambda(self.hi, x, fading);
        let lam_lo = self.lambda(self.lo, x, fading);
        let mut weight = fading.weights();
        let mut g_n = (ln_gamma(1.0 + s)).exp();
        sum_series(ctrl, fading.weight_mode(), |n| {
            if n > 0 {
                g_n *= (n as f64 + s) / n as f64;
            }
            weight(n) * (self.endpoint_block(self.hi, lam_hi, n, g_n) - self.endpoint_block(self.lo, lam_lo, n, g_n))
        })
    }

    /// `P[γ ≤ x]` for one satellite in this region.
    pub fn base(&self, x: f64, fading: &FadingParams, ctrl: &SeriesControl) -> SeriesValue {
        if x <= 0.0 {
            return SeriesValue::exact(0.0);
        }
        if self.degenerate() {
            return sr_cdf(self.w * (1000.0 * self.lo).powf(self.alpha) * x, fading, ctrl);
        }
        let span = self.hi * self.hi - self.lo * self.lo;
        self.block_sum(x, fading, ctrl).map(|v| (v / span).clamp(0.0, 1.0))
    }

    /// Unnormalised split integral `∫_lo^hi y γ(1+n, Λ_y) dy` in km².
    pub fn split_integral(&self, x: f64, n: usize, fading: &FadingParams) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let s = 2.0 / self.alpha;
        let g_n = (ln_gamma(1.0 + n as f64 + s) - ln_gamma(1.0 + n as f64)).exp();
        let lam_hi = self.lambda(self.hi, x, fading);
        let lam_lo = self.lambda(self.lo, x, fading);
        let diff = self.endpoint_block(self.hi, lam_hi, n, g_n) - self.endpoint_block(self.lo, lam_lo, n, g_n);
        0.5 * ln_gamma(1.0 + n as f64).exp() * diff
    }
}

/// `B^p` with the conventions `B^0 = 1` and `0^p = 0` for `p ≥ 1`.
pub fn power_of_base(base: f64, p: u64) -> f64 {
    if p == 0 {
        1.0
    } else if base <= 0.0 {
        0.0
    } else {
        (p as f64 * base.ln()).exp()
    }
}

/// CDF of the serving-link SNR.
pub fn serving_snr_cdf(x: f64, scn: &SnrScenario) -> SeriesValue {
    sr_cdf(scn.serving_gain_scale() * x, &scn.fading, &scn.series)
}

/// Density of the serving-link SNR.
pub fn serving_snr_pdf(x: f64, scn: &SnrScenario) -> SeriesValue {
    let c = scn.serving_gain_scale();
    sr_pdf(c * x, &scn.fading, &scn.series).map(|v| c * v)
}

/// CDF of the strongest of `p` main-lobe eavesdroppers on the first layer.
pub fn eav_mainlobe_snr_cdf(x: f64, p: u64, scn: &SnrScenario) -> SeriesValue {
    if p == 0 {
        return SeriesValue::exact(1.0);
    }
    scn.mainlobe_kernel(0).base(x, &scn.fading, &scn.series).map(|b| power_of_base(b, p))
}

/// CDF of the strongest of `q` side-lobe eavesdroppers on the first layer.
pub fn eav_sidelobe_snr_cdf(x: f64, q: u64, scn: &SnrScenario) -> SeriesValue {
    if q == 0 {
        return SeriesValue::exact(1.0);
    }
    scn.sidelobe_kernel(0).base(x, &scn.fading, &scn.series).map(|b| power_of_base(b, q))
}

/// CDF of the strongest eavesdropper given `p` main-lobe and `q` side-lobe
/// satellites.
pub fn eav_joint_snr_cdf(x: f64, p: u64, q: u64, scn: &SnrScenario) -> SeriesValue {
    eav_mainlobe_snr_cdf(x, p, scn).zip_with(eav_sidelobe_snr_cdf(x, q, scn), |a, b| a * b)
}
