//! Spherical geometry of the terminal, the serving satellite and the
//! eavesdropper shells.
//!
//! The terminal sits on the polar axis at radius `r`; a shell at altitude
//! `a_e` has radius `R = r + a_e` and a satellite on it is located by its
//! polar angle `ψ` measured from the terminal's zenith. Angles are radians,
//! distances are kilometres.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{domain, Result};

/// Mean Earth radius used throughout the reference scenarios (km).
pub const EARTH_RADIUS_KM: f64 = 6378.0;

fn check_altitude(a: f64, what: &str) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(domain(format!("{what} altitude must be positive, got {a}")));
    }
    Ok(())
}

/// Largest polar angle visible above the terminal's horizontal plane,
/// `acos(r/(r+a_e))`.
pub fn max_polar_angle(r: f64, a_e: f64) -> Result<f64> {
    check_altitude(a_e, "shell")?;
    Ok((r / (r + a_e)).acos())
}

/// Polar angle at which a nadir-pointing beam of half-angle `beam_half_angle`
/// stops covering the terminal. Clamps to the horizon angle when the beam
/// already reaches every visible satellite.
pub fn beam_threshold_polar_angle(r: f64, a_e: f64, beam_half_angle: f64) -> Result<f64> {
    check_altitude(a_e, "shell")?;
    if !(beam_half_angle >= 0.0) || !beam_half_angle.is_finite() {
        return Err(domain(format!("beam half-angle must be >= 0, got {beam_half_angle}")));
    }
    let big_r = r + a_e;
    let psi_max = (r / big_r).acos();
    if beam_half_angle >= (r / big_r).asin() {
        return Ok(psi_max);
    }
    let arg = (big_r / r * beam_half_angle.sin()).min(1.0);
    Ok((arg.asin() - beam_half_angle).clamp(0.0, psi_max))
}

/// Slant range from the terminal to a satellite at altitude `a_s` seen at
/// elevation `elevation`.
pub fn serving_distance(r: f64, a_s: f64, elevation: f64) -> Result<f64> {
    check_altitude(a_s, "serving")?;
    if !(elevation > 0.0 && elevation <= FRAC_PI_2 + 1e-12) {
        return Err(domain(format!("elevation must be in (0, π/2], got {elevation}")));
    }
    let rs = r * elevation.sin();
    Ok((rs * rs + a_s * a_s + 2.0 * r * a_s).sqrt() - rs)
}

/// Terminal-to-shell distance at polar angle `psi` (law of cosines, written
/// as `a_e² + 4 r R sin²(ψ/2)` to stay exact near the zenith).
pub fn chord_distance(r: f64, a_e: f64, psi: f64) -> f64 {
    let half = (0.5 * psi).sin();
    (a_e * a_e + 4.0 * r * (r + a_e) * half * half).sqrt()
}

/// Horizon distance `√(a_e(2r+a_e))`.
pub fn horizon_distance(r: f64, a_e: f64) -> f64 {
    (a_e * (2.0 * r + a_e)).sqrt()
}

/// Smallest boresight steering angle that lets every visible satellite turn
/// its main lobe onto the terminal; zero when the beam already does.
pub fn min_full_steer_angle(r: f64, a_e: f64, beam_half_angle: f64) -> Result<f64> {
    check_altitude(a_e, "shell")?;
    Ok(((r / (r + a_e)).asin() - beam_half_angle).max(0.0))
}

/// Cap surface areas `(S_ml, S_sl, S_total)` in km² for the main-lobe cap,
/// the side-lobe annulus and the whole visible cap.
pub fn cap_surface_areas(r: f64, a_e: f64, psi_th: f64) -> (f64, f64, f64) {
    let big_r = r + a_e;
    let half = (0.5 * psi_th).sin();
    let s_ml = 4.0 * PI * big_r * big_r * half * half;
    let s_total = 2.0 * PI * big_r * a_e;
    (s_ml, (s_total - s_ml).max(0.0), s_total)
}

/// One shell of eavesdropping satellites together with its derived cone
/// geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EavesdropperLayer {
    pub earth_radius: f64,
    pub count: u64,
    pub altitude: f64,
    /// Beam half-angle actually seen by the terminal (fixed half-angle plus
    /// any steering allowance).
    pub effective_beam_half_angle: f64,
    pub psi_max: f64,
    pub psi_th: f64,
    pub d_th: f64,
    pub d_max: f64,
}

impl EavesdropperLayer {
    pub fn new(earth_radius: f64, count: u64, altitude: f64, effective_beam_half_angle: f64) -> Result<Self> {
        let psi_max = max_polar_angle(earth_radius, altitude)?;
        let psi_th = beam_threshold_polar_angle(earth_radius, altitude, effective_beam_half_angle)?;
        let d_max = horizon_distance(earth_radius, altitude);
        let d_th = if psi_th >= psi_max { d_max } else { chord_distance(earth_radius, altitude, psi_th) };
        Ok(Self {
            earth_radius,
            count,
            altitude,
            effective_beam_half_angle,
            psi_max,
            psi_th,
            d_th,
            d_max,
        })
    }

    pub fn shell_radius(&self) -> f64 {
        self.earth_radius + self.altitude
    }

    /// Main lobe covers the whole visible cap, so the side-lobe annulus is
    /// empty.
    pub fn sidelobe_degenerate(&self) -> bool {
        self.psi_th >= self.psi_max
    }

    /// Zero-width main-lobe cap.
    pub fn mainlobe_degenerate(&self) -> bool {
        self.psi_th <= 0.0
    }

    pub fn cap_areas(&self) -> (f64, f64, f64) {
        cap_surface_areas(self.earth_radius, self.altitude, self.psi_th)
    }

    /// Per-satellite probabilities of landing in the main-lobe cap, the
    /// side-lobe annulus, and below the horizon. They sum to one.
    pub fn region_probabilities(&self) -> (f64, f64, f64) {
        let visible = self.altitude / (2.0 * self.shell_radius());
        let half = (0.5 * self.psi_th).sin();
        let p_ml = (half * half).min(visible);
        let p_sl = if self.sidelobe_degenerate() { 0.0 } else { visible - p_ml };
        let p_ml = if self.sidelobe_degenerate() { visible } else { p_ml };
        let p_out = (2.0 * self.earth_radius + self.altitude) / (2.0 * self.shell_radius());
        (p_ml, p_sl, p_out)
    }
}

/// The serving satellite's fixed position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServingGeometry {
    pub altitude: f64,
    pub elevation: f64,
    pub distance: f64,
}

impl ServingGeometry {
    pub fn new(earth_radius: f64, altitude: f64, elevation: f64) -> Result<Self> {
        let distance = serving_distance(earth_radius, altitude, elevation)?;
        Ok(Self { altitude, elevation, distance })
    }
}
