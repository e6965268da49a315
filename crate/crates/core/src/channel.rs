//! Shadowed-Rician fading, the sectorised antenna pattern and the link
//! budget that turns a channel power gain into an SNR.
//!
//! The shadowed-Rician CDF is a negative-binomial mixture of Gamma laws:
//!
//! `F_h(x) = Σ_n w_n P(1+n, x/(2b))`, with `w_n = (1−ρ)^m (m)_n ρⁿ / n!`
//! and `ρ = 2bδ = Ω/(2bm+Ω)`.
//!
//! The weights are generated by the ratio `w_{n+1}/w_n = ρ(m+n)/(n+1)`,
//! which never overflows and reproduces the textbook coefficients
//! `K (m)_n δⁿ (2b)^{1+n} / (n!)²` after the `n!` in `γ(1+n,·)` is absorbed.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::error::{domain, invalid, Result};
use crate::geometry::EARTH_RADIUS_KM;
use crate::specfun::{regularized_lower_gamma, sum_series, SeriesControl, SeriesValue};

pub const SPEED_OF_LIGHT: f64 = 3.0e8;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Global constants and link budget, all in linear SI units except
/// distances (km) and angles (rad).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub earth_radius_km: f64,
    pub path_loss_exponent: f64,
    pub speed_of_light: f64,
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    /// Terminal transmit power in watts.
    pub tx_power_w: f64,
    /// Noise spectral density in W/Hz.
    pub noise_psd_w_per_hz: f64,
    pub gain_tx: f64,
    pub gain_mainlobe: f64,
    pub gain_sidelobe: f64,
    /// Fixed-beam main-lobe half-angle.
    pub beam_half_angle: f64,
    /// Extra half-angle reachable by steerable beams.
    pub steer_angle: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            earth_radius_km: EARTH_RADIUS_KM,
            path_loss_exponent: 2.0,
            speed_of_light: SPEED_OF_LIGHT,
            carrier_hz: 2.0e9,
            bandwidth_hz: 1.0e6,
            tx_power_w: dbm_to_watts(23.0),
            noise_psd_w_per_hz: dbm_to_watts(-174.0),
            gain_tx: db_to_linear(0.0),
            gain_mainlobe: db_to_linear(30.0),
            gain_sidelobe: db_to_linear(10.0),
            beam_half_angle: 40f64.to_radians(),
            steer_angle: 0.0,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("earth radius", self.earth_radius_km),
            ("path-loss exponent", self.path_loss_exponent),
            ("speed of light", self.speed_of_light),
            ("carrier frequency", self.carrier_hz),
            ("bandwidth", self.bandwidth_hz),
            ("transmit power", self.tx_power_w),
            ("noise density", self.noise_psd_w_per_hz),
            ("terminal gain", self.gain_tx),
            ("main-lobe gain", self.gain_mainlobe),
            ("side-lobe gain", self.gain_sidelobe),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(0.0..half_pi).contains(&self.beam_half_angle) {
            return Err(invalid("beam half-angle must lie in [0, 90) degrees"));
        }
        if !(self.steer_angle >= 0.0) || self.beam_half_angle + self.steer_angle >= half_pi {
            return Err(invalid("steering angle must be >= 0 and keep the beam below 90 degrees"));
        }
        Ok(())
    }

    pub fn link_budget(&self) -> LinkBudget {
        let f = self.carrier_hz;
        let common = 16.0 * std::f64::consts::PI.powi(2) * f * f * self.noise_psd_w_per_hz * self.bandwidth_hz
            / (self.speed_of_light.powi(2) * self.tx_power_w * self.gain_tx);
        LinkBudget {
            w_ml: common / self.gain_mainlobe,
            w_sl: common / self.gain_sidelobe,
            alpha: self.path_loss_exponent,
        }
    }
}

/// SNR normalisations: `γ = h / (w · d_mᵅ)` with `d_m` in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub w_ml: f64,
    pub w_sl: f64,
    pub alpha: f64,
}

/// `1/(w · d_mᵅ)` for a distance given in km.
pub fn snr_scale(d_km: f64, w: f64, alpha: f64) -> Result<f64> {
    if !(d_km > 0.0) {
        return Err(domain(format!("distance must be positive, got {d_km}")));
    }
    Ok(1.0 / (w * (1000.0 * d_km).powf(alpha)))
}

/// Sectorised pattern: main-lobe gain inside the cone (boundary included).
pub fn antenna_gain(offset_angle: f64, beam_half_angle: f64, g_ml: f64, g_sl: f64) -> f64 {
    if offset_angle.abs() <= beam_half_angle {
        g_ml
    } else {
        g_sl
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingParams {
    pub b: f64,
    pub m: f64,
    pub omega: f64,
    /// Leading constant `(2bm/(2bm+Ω))^m / (2b)`.
    pub k: f64,
    /// Series ratio `Ω/((2bm+Ω) 2b)`.
    pub delta: f64,
    /// `2bδ`, the negative-binomial success parameter.
    pub rho: f64,
}

impl FadingParams {
    pub fn new(b: f64, m: f64, omega: f64) -> Result<Self> {
        for (name, v) in [("b", b), ("m", m), ("omega", omega)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(format!("fading parameter {name} must be positive, got {v}")));
            }
        }
        let rho = omega / (2.0 * b * m + omega);
        let k = (m * (-rho).ln_1p()).exp() / (2.0 * b);
        Ok(Self { b, m, omega, k, delta: rho / (2.0 * b), rho })
    }

    /// Average shadowing used throughout the numerical examples.
    pub fn average_shadowing() -> Self {
        Self::new(0.126, 10.1, 0.835).expect("valid constants")
    }

    pub fn mean_gain(&self) -> f64 {
        2.0 * self.b + self.omega
    }

    /// First mixture weight `(1−ρ)^m = 2bK`.
    pub fn first_weight(&self) -> f64 {
        2.0 * self.b * self.k
    }

    /// Index past which the mixture weights decrease monotonically.
    pub fn weight_mode(&self) -> usize {
        let mode = ((self.m - 1.0) * self.rho / (1.0 - self.rho)).floor();
        if mode > 0.0 {
            mode as usize + 1
        } else {
            1
        }
    }

    /// Stateful generator of `w_0, w_1, ...`; call in increasing order.
    pub(crate) fn weights(&self) -> impl FnMut(usize) -> f64 + '_ {
        let mut current = self.first_weight();
        let mut next_index = 0usize;
        move |n: usize| {
            debug_assert_eq!(n, next_index);
            if n > 0 {
                current *= self.rho * (self.m + (n - 1) as f64) / n as f64;
            }
            next_index = n + 1;
            current
        }
    }
}

/// Shadowed-Rician CDF of the channel power gain.
pub fn sr_cdf(x: f64, fading: &FadingParams, ctrl: &SeriesControl) -> SeriesValue {
    if x <= 0.0 {
        return SeriesValue::exact(0.0);
    }
    if x.is_infinite() {
        return SeriesValue::exact(1.0);
    }
    let z = x / (2.0 * fading.b);
    let mut w = fading.weights();
    let v = sum_series(ctrl, fading.weight_mode(), |n| {
        w(n) * regularized_lower_gamma(1.0 + n as f64, z).unwrap_or(1.0)
    });
    v.map(|s| s.clamp(0.0, 1.0))
}

/// Shadowed-Rician density of the channel power gain.
pub fn sr_pdf(x: f64, fading: &FadingParams, ctrl: &SeriesControl) -> SeriesValue {
    if x < 0.0 {
        return SeriesValue::exact(0.0);
    }
    let scale = 2.0 * fading.b;
    let z = x / scale;
    let mut w = fading.weights();
    // Gamma(1+n, scale) density: z^n e^{-z} / (n! scale)
    let mut g = (-z).exp() / scale;
    sum_series(ctrl, fading.weight_mode(), |n| {
        if n > 0 {
            g *= z / n as f64;
        }
        w(n) * g
    })
}

/// Draw one channel power gain by the conditional-Rician construction.
pub fn sr_sample<R: Rng + ?Sized>(fading: &FadingParams, rng: &mut R) -> f64 {
    let los = Gamma::new(fading.m, fading.omega / fading.m).expect("validated fading").sample(rng);
    let scatter = Normal::new(0.0, fading.b.sqrt()).expect("validated fading");
    let x1 = scatter.sample(rng) + los.sqrt();
    let x2 = scatter.sample(rng);
    x1 * x1 + x2 * x2
}
