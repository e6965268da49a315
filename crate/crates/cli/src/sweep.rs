//! Sweep execution: one row per (series value, beam mode, sweep value,
//! method, metric).

use anyhow::{Context, Result};
use satsec_core::approx::{
    capacity_no_eavesdroppers, high_snr_characterization, outage_no_eavesdroppers, PoissonEavCdf,
};
use satsec_core::montecarlo::{report_from_samples, simulate_samples, TrialSamples};
use satsec_core::pointprocess::four_case_probabilities;
use satsec_core::secrecy::{
    EavesdropperCdf, ExactEavCdf, Method, QuadratureControl, SecrecyIntegrator,
};
use satsec_core::snrdist::SnrScenario;

use crate::config::{BeamName, Config, Metric, MethodName, ScenarioConfig, SweepVar};

/// One CSV row. Analytical rows carry no CI, trial count or seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub sweep_var: &'static str,
    pub sweep_value: f64,
    pub method: &'static str,
    pub metric: String,
    pub value: f64,
    pub ci_halfwidth: Option<f64>,
    pub n_trials: Option<u64>,
    pub seed: Option<u64>,
}

/// Run-level settings that the command line may override.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub trials: u64,
    pub seed: u64,
    pub workers: usize,
}

struct Point<'a> {
    sweep_var: SweepVar,
    x: f64,
    qualifier: &'a str,
}

impl Point<'_> {
    fn row(&self, method: Method, metric: &str, value: f64) -> Row {
        Row {
            sweep_var: self.sweep_var.name(),
            sweep_value: self.x,
            method: method.as_str(),
            metric: format!("{metric}{}", self.qualifier),
            value,
            ci_halfwidth: None,
            n_trials: None,
            seed: None,
        }
    }
}

/// The simulation of the previous point, reused while only the target rate
/// changes.
struct SampleCache {
    key: Option<(ScenarioConfig, BeamName)>,
    samples: TrialSamples,
}

fn qualifier(parts: &[String]) -> String {
    if parts.is_empty() {
        String::new()
    } else {
        format!("@{}", parts.join(";"))
    }
}

/// Evaluate every point of the sweep. Warnings go to `warn`.
pub fn run(cfg: &Config, settings: RunSettings, warn: &mut dyn FnMut(String)) -> Result<Vec<Row>> {
    cfg.validate()?;
    let sw = &cfg.sweep;
    let xs = sw.values()?;
    let series: Vec<Option<(SweepVar, f64)>> = match &sw.series {
        Some(s) => s.values()?.into_iter().map(|v| Some((s.variable, v))).collect(),
        None => vec![None],
    };
    let qc = QuadratureControl::default().with_workers(settings.workers);
    let mut cache = SampleCache { key: None, samples: TrialSamples::default() };
    let mut rows = Vec::new();
    for s in &series {
        for &beam in &sw.beam_modes {
            let mut parts = Vec::new();
            if sw.beam_modes.len() > 1 {
                parts.push(format!("beam={}", beam.label()));
            }
            if let Some((var, v)) = s {
                parts.push(format!("{}={v}", var.name()));
            }
            let qual = qualifier(&parts);
            for &x in &xs {
                let mut sc = cfg.scenario();
                if let Some((var, v)) = s {
                    sc.set(*var, *v)?;
                }
                sc.set(sw.variable, x)?;
                let scn = sc.build(beam.mode())?;
                let pt = Point { sweep_var: sw.variable, x, qualifier: &qual };
                for &m in &sw.methods {
                    let ctx = || format!("{} = {x}, method {:?}", sw.variable.name(), m);
                    match m {
                        MethodName::Exact | MethodName::Approx => {
                            analytic_rows(&scn, &sc, cfg, m.method(), &qc, &pt, &mut rows).with_context(ctx)?;
                        }
                        MethodName::Asymptotic => {
                            asymptotic_rows(&scn, &sc, cfg, &pt, &mut rows, warn).with_context(ctx)?;
                        }
                        MethodName::Mc => {
                            let key = (ScenarioConfig { target_rate: 0.0, ..sc.clone() }, beam);
                            if cache.key.as_ref() != Some(&key) {
                                cache.samples = simulate_samples(&scn, settings.trials, settings.seed, settings.workers)
                                    .with_context(ctx)?;
                                cache.key = Some(key);
                            }
                            mc_rows(&cache.samples, &sc, cfg, settings, &pt, &mut rows).with_context(ctx)?;
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}

fn wants(cfg: &Config, m: Metric) -> bool {
    cfg.sweep.metrics.contains(&m)
}

fn analytic_rows(
    scn: &SnrScenario,
    sc: &ScenarioConfig,
    cfg: &Config,
    method: Method,
    qc: &QuadratureControl,
    pt: &Point,
    rows: &mut Vec<Row>,
) -> Result<()> {
    let eps = cfg.sweep.outage_level;
    let approx = method == Method::Approx;
    let wants_secrecy = [Metric::ErgodicCapacity, Metric::OutageProbability, Metric::OutageCapacity]
        .iter()
        .any(|&m| wants(cfg, m));
    let eav: Option<Box<dyn EavesdropperCdf>> = match (wants_secrecy, approx) {
        (false, _) => None,
        (true, true) => Some(Box::new(PoissonEavCdf::new(scn))),
        (true, false) => Some(Box::new(ExactEavCdf::new(scn)?)),
    };
    let integ = SecrecyIntegrator::new(scn, *qc)?;
    for &metric in &cfg.sweep.metrics {
        match metric {
            Metric::ErgodicCapacity => {
                let v = integ.ergodic(eav.as_deref().expect("built")).value;
                rows.push(pt.row(method, "c_erg", v));
            }
            Metric::OutageProbability => {
                let v = integ.outage(eav.as_deref().expect("built"), sc.target_rate).value;
                rows.push(pt.row(method, "p_out", v));
            }
            Metric::OutageCapacity => {
                let v = integ.outage_capacity(eav.as_deref().expect("built"), eps)?.c_out;
                rows.push(pt.row(method, "c_out", v));
            }
            Metric::CaseProbabilities => {
                let layer = &scn.layers[0];
                let probs = if approx {
                    let (p_ml, p_sl, _) = layer.region_probabilities();
                    let n = layer.count as f64;
                    let (e_ml, e_sl) = ((-n * p_ml).exp(), (-n * p_sl).exp());
                    [e_ml * e_sl, e_ml * (1.0 - e_sl), (1.0 - e_ml) * e_sl, (1.0 - e_ml) * (1.0 - e_sl)]
                } else {
                    four_case_probabilities(layer.count, layer).as_array()
                };
                for (i, p) in probs.iter().enumerate() {
                    rows.push(pt.row(method, &format!("p_case{}", i + 1), *p));
                }
            }
            Metric::EffectiveCount => {
                let mean: f64 = scn
                    .layers
                    .iter()
                    .map(|l| {
                        let (p_ml, p_sl, _) = l.region_probabilities();
                        l.count as f64 * (p_ml + p_sl)
                    })
                    .sum();
                rows.push(pt.row(method, "effective_count", mean));
            }
            Metric::CapacityNoEav | Metric::HighSnrSlope | Metric::HighSnrOffset => {}
        }
    }
    Ok(())
}

fn asymptotic_rows(
    scn: &SnrScenario,
    sc: &ScenarioConfig,
    cfg: &Config,
    pt: &Point,
    rows: &mut Vec<Row>,
    warn: &mut dyn FnMut(String),
) -> Result<()> {
    let method = Method::Asymptotic;
    let needs_high_snr = [Metric::ErgodicCapacity, Metric::HighSnrSlope, Metric::HighSnrOffset]
        .iter()
        .any(|&m| wants(cfg, m));
    let high = if needs_high_snr {
        if scn.layers.len() > 1 {
            warn("high-SNR characterization uses the first eavesdropper layer only".to_string());
        }
        let h = high_snr_characterization(scn);
        if h.ill_conditioned {
            warn(format!("{} = {}: high-SNR distance moments are ill-conditioned", pt.sweep_var.name(), pt.x));
        }
        Some(h)
    } else {
        None
    };
    for &metric in &cfg.sweep.metrics {
        match metric {
            Metric::ErgodicCapacity => rows.push(pt.row(method, "c_erg", high.expect("computed").c_erg_inf)),
            Metric::HighSnrSlope => rows.push(pt.row(method, "slope", high.expect("computed").slope)),
            Metric::HighSnrOffset => rows.push(pt.row(method, "offset", high.expect("computed").offset)),
            Metric::CapacityNoEav => {
                let c = capacity_no_eavesdroppers(scn)?;
                rows.push(pt.row(method, "c_erg_no_eav", c.value));
            }
            Metric::OutageProbability => {
                rows.push(pt.row(method, "p_out", outage_no_eavesdroppers(scn, sc.target_rate)));
            }
            Metric::OutageCapacity | Metric::CaseProbabilities | Metric::EffectiveCount => {}
        }
    }
    Ok(())
}

fn mc_rows(
    samples: &TrialSamples,
    sc: &ScenarioConfig,
    cfg: &Config,
    settings: RunSettings,
    pt: &Point,
    rows: &mut Vec<Row>,
) -> Result<()> {
    let method = Method::MonteCarlo;
    let (report, batch) = report_from_samples(samples, sc.target_rate, cfg.sweep.outage_level, settings.seed)?;
    let ci = report.ci.expect("simulated reports carry intervals");
    let mut push = |metric: &str, value: f64, half: Option<f64>| {
        let mut r = pt.row(method, metric, value);
        r.ci_halfwidth = half;
        r.n_trials = Some(batch.n_trials);
        r.seed = Some(settings.seed);
        rows.push(r);
    };
    for &metric in &cfg.sweep.metrics {
        match metric {
            Metric::ErgodicCapacity => push("c_erg", report.c_erg, Some(ci.c_erg)),
            Metric::OutageProbability => push("p_out", report.p_out, Some(ci.p_out)),
            Metric::OutageCapacity => push("c_out", report.c_out, None),
            Metric::CaseProbabilities => {
                for i in 0..4 {
                    push(&format!("p_case{}", i + 1), batch.case_frequencies[i], Some(batch.case_ci[i]));
                }
            }
            Metric::EffectiveCount => {
                push("effective_count", batch.mean_effective_count, Some(batch.mean_effective_count_ci))
            }
            Metric::CapacityNoEav | Metric::HighSnrSlope | Metric::HighSnrOffset => {}
        }
    }
    Ok(())
}
