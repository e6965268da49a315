//! Independent Monte-Carlo oracle.
//!
//! Each trial drops every eavesdropper uniformly on its shell, classifies it
//! as hidden, side-lobe or main-lobe by polar angle, draws an independent
//! shadowed-Rician gain for the serving link and for every visible
//! eavesdropper, and records `γ_s`, `γ_e*` (0 without visible eavesdroppers)
//! and the secrecy rate `[log₂((1+γ_s)/(1+γ_e*))]⁺`.
//!
//! Trials are grouped in fixed-size blocks. Block `k` uses its own ChaCha
//! stream (`seed`, stream `k`), so every trial's randomness depends only on
//! the seed and its index; blocks are reduced in index order, which makes the
//! result bit-identical for any worker count.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use rayon::prelude::*;

use crate::channel::FadingParams;
use crate::error::{invalid, Result};
use crate::geometry::EavesdropperLayer;
use crate::secrecy::{ConfidenceHalfWidths, Diagnostics, Method, SecrecyReport};
use crate::snrdist::SnrScenario;

/// Trials per random stream.
pub const BLOCK_SIZE: u64 = 8192;

const Z95: f64 = 1.959_963_984_540_054;

/// Probabilities at which empirical SNR quantiles are reported.
pub const QUANTILE_PROBS: [f64; 9] = [0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lobe {
    Hidden,
    Side,
    Main,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatelliteSample {
    pub layer: usize,
    pub cos_psi: f64,
    pub azimuth: f64,
    pub lobe: Lobe,
}

/// Pre-built samplers shared by all trials.
struct Samplers {
    los: Gamma<f64>,
    scatter: Normal<f64>,
}

impl Samplers {
    fn new(f: &FadingParams) -> Self {
        Self {
            los: Gamma::new(f.m, f.omega / f.m).expect("validated fading"),
            scatter: Normal::new(0.0, f.b.sqrt()).expect("validated fading"),
        }
    }

    fn gain<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let x1 = self.scatter.sample(rng) + self.los.sample(rng).sqrt();
        let x2 = self.scatter.sample(rng);
        x1 * x1 + x2 * x2
    }
}

fn classify(layer: &EavesdropperLayer, cos_psi: f64) -> Lobe {
    let cos_max = layer.earth_radius / layer.shell_radius();
    if cos_psi < cos_max {
        Lobe::Hidden
    } else if cos_psi >= layer.psi_th.cos() {
        Lobe::Main
    } else {
        Lobe::Side
    }
}

fn distance_km(layer: &EavesdropperLayer, cos_psi: f64) -> f64 {
    let a = layer.altitude;
    (a * a + 2.0 * layer.earth_radius * layer.shell_radius() * (1.0 - cos_psi)).sqrt()
}

/// Drop every eavesdropper of every layer uniformly on its shell.
pub fn sample_constellation<R: Rng + ?Sized>(scn: &SnrScenario, rng: &mut R) -> Vec<SatelliteSample> {
    let mut out = Vec::new();
    for (i, layer) in scn.layers.iter().enumerate() {
        for _ in 0..layer.count {
            let cos_psi = rng.random_range(-1.0..=1.0);
            let azimuth = rng.random_range(0.0..std::f64::consts::TAU);
            out.push(SatelliteSample { layer: i, cos_psi, azimuth, lobe: classify(layer, cos_psi) });
        }
    }
    out
}

/// One draw of the serving-link SNR.
pub fn sample_serving_snr<R: Rng + ?Sized>(scn: &SnrScenario, rng: &mut R) -> f64 {
    Samplers::new(&scn.fading).gain(rng) / scn.serving_gain_scale()
}

/// Strongest-eavesdropper SNR with exactly `p` satellites in the first
/// layer's main-lobe cap and `q` in its side-lobe annulus.
pub fn sample_eav_snr_given_counts<R: Rng + ?Sized>(scn: &SnrScenario, p: u64, q: u64, rng: &mut R) -> f64 {
    let layer = &scn.layers[0];
    let s = Samplers::new(&scn.fading);
    let lb = scn.link_budget();
    let cos_th = layer.psi_th.cos();
    let cos_max = layer.earth_radius / layer.shell_radius();
    let mut best: f64 = 0.0;
    for (count, lo, hi, w) in [(p, cos_th, 1.0, lb.w_ml), (q, cos_max, cos_th, lb.w_sl)] {
        for _ in 0..count {
            let c = if hi > lo { rng.random_range(lo..=hi) } else { lo };
            let d = distance_km(layer, c);
            best = best.max(s.gain(rng) / (w * (1000.0 * d).powf(lb.alpha)));
        }
    }
    best
}

/// Raw per-trial samples in trial order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialSamples {
    pub serving_snr: Vec<f64>,
    pub eav_snr: Vec<f64>,
    pub secrecy_rate: Vec<f64>,
    /// Occupancy case (1–4) of the first layer.
    pub case: Vec<u8>,
    /// Visible eavesdroppers over all layers.
    pub effective: Vec<u32>,
}

fn run_block(scn: &SnrScenario, seed: u64, block: u64, len: u64) -> TrialSamples {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    let s = Samplers::new(&scn.fading);
    let lb = scn.link_budget();
    let serving_scale = scn.serving_gain_scale();
    let geo: Vec<(f64, f64)> = scn.layers.iter().map(|l| (l.earth_radius / l.shell_radius(), l.psi_th.cos())).collect();
    let mut out = TrialSamples {
        serving_snr: Vec::with_capacity(len as usize),
        eav_snr: Vec::with_capacity(len as usize),
        secrecy_rate: Vec::with_capacity(len as usize),
        case: Vec::with_capacity(len as usize),
        effective: Vec::with_capacity(len as usize),
    };
    for _ in 0..len {
        let gamma_s = s.gain(&mut rng) / serving_scale;
        let mut gamma_e: f64 = 0.0;
        let mut effective = 0u32;
        let (mut p0, mut q0) = (0u64, 0u64);
        for (i, layer) in scn.layers.iter().enumerate() {
            let (cos_max, cos_th) = geo[i];
            for _ in 0..layer.count {
                let c: f64 = rng.random_range(-1.0..=1.0);
                if c < cos_max {
                    continue;
                }
                effective += 1;
                let main = c >= cos_th;
                if i == 0 {
                    if main {
                        p0 += 1;
                    } else {
                        q0 += 1;
                    }
                }
                let w = if main { lb.w_ml } else { lb.w_sl };
                let d = distance_km(layer, c);
                gamma_e = gamma_e.max(s.gain(&mut rng) / (w * (1000.0 * d).powf(lb.alpha)));
            }
        }
        let case = match (p0 > 0, q0 > 0) {
            (false, false) => 1,
            (false, true) => 2,
            (true, false) => 3,
            (true, true) => 4,
        };
        out.serving_snr.push(gamma_s);
        out.eav_snr.push(gamma_e);
        out.secrecy_rate.push((((1.0 + gamma_s) / (1.0 + gamma_e)).log2()).max(0.0));
        out.case.push(case);
        out.effective.push(effective);
    }
    out
}

/// Simulate `n_trials` trials; identical output for any `workers`.
pub fn simulate_samples(scn: &SnrScenario, n_trials: u64, seed: u64, workers: usize) -> Result<TrialSamples> {
    if n_trials == 0 {
        return Err(invalid("n_trials must be at least 1"));
    }
    let n_blocks = n_trials.div_ceil(BLOCK_SIZE);
    let len = |b: u64| BLOCK_SIZE.min(n_trials - b * BLOCK_SIZE);
    let blocks: Vec<TrialSamples> = if workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
        pool.install(|| (0..n_blocks).into_par_iter().map(|b| run_block(scn, seed, b, len(b))).collect())
    } else {
        (0..n_blocks).map(|b| run_block(scn, seed, b, len(b))).collect()
    };
    let mut all = TrialSamples::default();
    for b in blocks {
        all.serving_snr.extend(b.serving_snr);
        all.eav_snr.extend(b.eav_snr);
        all.secrecy_rate.extend(b.secrecy_rate);
        all.case.extend(b.case);
        all.effective.extend(b.effective);
    }
    Ok(all)
}

/// Aggregated Monte-Carlo estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialBatchResult {
    pub n_trials: u64,
    pub seed: u64,
    pub mean_secrecy_rate: f64,
    pub mean_secrecy_rate_ci: f64,
    pub r_t_grid: Vec<f64>,
    /// `P[R ≤ R_t]` per grid value.
    pub outage_frequency: Vec<f64>,
    pub outage_ci: Vec<f64>,
    pub case_frequencies: [f64; 4],
    pub case_ci: [f64; 4],
    pub mean_effective_count: f64,
    pub mean_effective_count_ci: f64,
    pub serving_quantiles: Vec<f64>,
    pub eav_quantiles: Vec<f64>,
}

fn mean_and_ci(xs: impl Iterator<Item = f64>, n: u64) -> (f64, f64) {
    let (mut sum, mut sum2) = (0.0, 0.0);
    for x in xs {
        sum += x;
        sum2 += x * x;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 { ((sum2 - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    (mean, Z95 * (var / nf).sqrt())
}

fn proportion_ci(p: f64, n: u64) -> f64 {
    Z95 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Empirical quantile with the "inverse of the empirical CDF" convention.
pub fn empirical_quantile(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    let idx = ((prob * n as f64).ceil() as usize).clamp(1, n) - 1;
    sorted[idx]
}

fn quantiles(mut xs: Vec<f64>) -> Vec<f64> {
    xs.sort_by(f64::total_cmp);
    QUANTILE_PROBS.iter().map(|&p| empirical_quantile(&xs, p)).collect()
}

impl TrialBatchResult {
    pub fn from_samples(samples: &TrialSamples, r_t_grid: &[f64], seed: u64) -> Self {
        let n = samples.secrecy_rate.len() as u64;
        let (mean_rate, rate_ci) = mean_and_ci(samples.secrecy_rate.iter().copied(), n);
        let outage_frequency: Vec<f64> = r_t_grid
            .iter()
            .map(|&r| samples.secrecy_rate.iter().filter(|&&v| v <= r).count() as f64 / n as f64)
            .collect();
        let outage_ci = outage_frequency.iter().map(|&p| proportion_ci(p, n)).collect();
        let mut counts = [0u64; 4];
        for &c in &samples.case {
            counts[(c - 1) as usize] += 1;
        }
        let case_frequencies = counts.map(|c| c as f64 / n as f64);
        let case_ci = case_frequencies.map(|p| proportion_ci(p, n));
        let (mean_eff, eff_ci) = mean_and_ci(samples.effective.iter().map(|&e| e as f64), n);
        Self {
            n_trials: n,
            seed,
            mean_secrecy_rate: mean_rate,
            mean_secrecy_rate_ci: rate_ci,
            r_t_grid: r_t_grid.to_vec(),
            outage_frequency,
            outage_ci,
            case_frequencies,
            case_ci,
            mean_effective_count: mean_eff,
            mean_effective_count_ci: eff_ci,
            serving_quantiles: quantiles(samples.serving_snr.clone()),
            eav_quantiles: quantiles(samples.eav_snr.clone()),
        }
    }
}

/// Simulate and aggregate.
pub fn simulate_secrecy(scn: &SnrScenario, r_t_grid: &[f64], n_trials: u64, seed: u64, workers: usize) -> Result<TrialBatchResult> {
    let samples = simulate_samples(scn, n_trials, seed, workers)?;
    Ok(TrialBatchResult::from_samples(&samples, r_t_grid, seed))
}

/// Simulated metrics in report form. The outage capacity uses the empirical
/// `ε`-quantile of the secrecy rate.
pub fn simulate_report(scn: &SnrScenario, r_t: f64, eps: f64, n_trials: u64, seed: u64, workers: usize) -> Result<SecrecyReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("outage level must lie in (0, 1), got {eps}")));
    }
    let samples = simulate_samples(scn, n_trials, seed, workers)?;
    report_from_samples(&samples, r_t, eps, seed).map(|(report, _)| report)
}

/// Report and aggregate for an existing sample, so that several target rates
/// can share one simulation.
pub fn report_from_samples(
    samples: &TrialSamples,
    r_t: f64,
    eps: f64,
    seed: u64,
) -> Result<(SecrecyReport, TrialBatchResult)> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("outage level must lie in (0, 1), got {eps}")));
    }
    if samples.secrecy_rate.is_empty() {
        return Err(invalid("no samples"));
    }
    let batch = TrialBatchResult::from_samples(samples, &[0.0, r_t], seed);
    let p_zero = batch.outage_frequency[0];
    let (r_star, infeasible) = if p_zero >= eps {
        (0.0, true)
    } else {
        let mut rates = samples.secrecy_rate.clone();
        rates.sort_by(f64::total_cmp);
        (empirical_quantile(&rates, eps), false)
    };
    let report = SecrecyReport {
        c_erg: batch.mean_secrecy_rate,
        p_out: batch.outage_frequency[1],
        c_out: (1.0 - eps) * r_star,
        r_star,
        outage_infeasible: infeasible,
        method: Method::MonteCarlo,
        diagnostics: Diagnostics { quad_converged: true, ..Default::default() },
        ci: Some(ConfidenceHalfWidths { c_erg: batch.mean_secrecy_rate_ci, p_out: batch.outage_ci[1] }),
    };
    Ok((report, batch))
}

/// Kolmogorov–Smirnov distance between a sample and a CDF (sorts in place).
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples.iter().enumerate().fold(0.0, |acc: f64, (i, &x)| {
        let f = cdf(x);
        acc.max((f - i as f64 / n).abs()).max((f - (i + 1) as f64 / n).abs())
    })
}

/// Asymptotic KS critical value at 1% significance.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

/// Seeded generator for stream `stream`, as used by the simulator.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
