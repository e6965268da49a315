//! Checks that tie several modules together: exact versus approximate
//! versus closed-form versus simulated metrics on shared scenarios.

use satsec_core::approx::{
    approx_secrecy_metrics, capacity_no_eavesdroppers, degenerate_many_eavesdroppers, PoissonEavCdf,
};
use satsec_core::channel::{FadingParams, SystemParams};
use satsec_core::montecarlo::{simulate_report, simulate_samples};
use satsec_core::pointprocess::four_case_probabilities;
use satsec_core::secrecy::{
    ergodic_secrecy_capacity, exact_secrecy_metrics, outage_secrecy_capacity, secrecy_outage_probability,
    EavesdropperCdf, QuadratureControl,
};
use satsec_core::snrdist::{BeamMode, LayerSpec, SnrScenario};
use satsec_core::Error;

fn scenario(omega_deg: f64, steer_deg: f64, a_s: f64, layers: &[(u64, f64)], mode: BeamMode) -> SnrScenario {
    let sys = SystemParams {
        beam_half_angle: omega_deg.to_radians(),
        steer_angle: steer_deg.to_radians(),
        ..Default::default()
    };
    let specs: Vec<LayerSpec> = layers.iter().map(|&(count, altitude_km)| LayerSpec { count, altitude_km }).collect();
    SnrScenario::new(sys, FadingParams::average_shadowing(), a_s, 60f64.to_radians(), &specs, mode).unwrap()
}

fn qc() -> QuadratureControl {
    QuadratureControl::default()
}

#[test]
fn exact_without_eavesdroppers_matches_closed_form() {
    for a_s in [300.0, 600.0, 1200.0] {
        let scn = scenario(40.0, 0.0, a_s, &[(0, 600.0)], BeamMode::Fixed);
        let exact = ergodic_secrecy_capacity(&scn, &qc()).unwrap();
        let closed = capacity_no_eavesdroppers(&scn).unwrap();
        assert!(closed.non_integer_m);
        assert!((exact - closed.value).abs() < 1e-4, "a_s={a_s}: {exact} vs {}", closed.value);
    }
}

#[test]
fn no_eavesdropper_capacity_bounds_every_constellation() {
    let bound = capacity_no_eavesdroppers(&scenario(40.0, 0.0, 600.0, &[(0, 600.0)], BeamMode::Fixed)).unwrap().value;
    let mut prev = f64::INFINITY;
    for n in [1, 10, 50, 200] {
        let c = ergodic_secrecy_capacity(&scenario(40.0, 0.0, 600.0, &[(n, 600.0)], BeamMode::Fixed), &qc()).unwrap();
        assert!(c < bound, "N={n}: {c} vs bound {bound}");
        assert!(c < prev, "capacity must fall with N");
        prev = c;
    }
}

#[test]
fn outage_capacity_for_fixed_beams() {
    let scn = scenario(20.0, 10.0, 600.0, &[(10, 600.0)], BeamMode::Fixed);
    let oc = outage_secrecy_capacity(&scn, 0.1, &qc()).unwrap();
    assert!(!oc.infeasible);
    assert!((oc.c_out - 0.9 * 2.3).abs() < 0.1, "{}", oc.c_out);
    let p = secrecy_outage_probability(&scn, oc.r_star, &qc()).unwrap();
    assert!((p - 0.1).abs() < 1e-6, "{p}");
}

#[test]
fn steerable_gap_grows_with_constellation_size() {
    let gap = |n| {
        let fixed = ergodic_secrecy_capacity(&scenario(40.0, 20.0, 600.0, &[(n, 600.0)], BeamMode::Fixed), &qc()).unwrap();
        let steer =
            ergodic_secrecy_capacity(&scenario(40.0, 20.0, 600.0, &[(n, 600.0)], BeamMode::Steerable), &qc()).unwrap();
        assert!(steer <= fixed + 1e-9);
        fixed - steer
    };
    let gaps: Vec<f64> = [1, 10, 100].into_iter().map(gap).collect();
    assert!(gaps.windows(2).all(|w| w[1] > w[0]), "{gaps:?}");
}

#[test]
fn case_probabilities_shape() {
    let many = four_case_probabilities(500, &scenario(40.0, 0.0, 600.0, &[(500, 1200.0)], BeamMode::Fixed).layers[0]);
    let a = many.as_array();
    assert!(a[3] > a[0] && a[3] > a[1] && a[3] > a[2], "{a:?}");
    // widening the beam brings the main-lobe and side-lobe cases together
    let steer = four_case_probabilities(10, &scenario(40.0, 15.0, 600.0, &[(10, 1200.0)], BeamMode::Steerable).layers[0]);
    let fixed = four_case_probabilities(10, &scenario(40.0, 15.0, 600.0, &[(10, 1200.0)], BeamMode::Fixed).layers[0]);
    let ratio = |c: &satsec_core::pointprocess::CaseProbabilities| c.p2 / c.p3;
    assert!(ratio(&fixed) > 5.0, "{fixed:?}");
    assert!((ratio(&steer) - 1.0).abs() < 0.5, "{steer:?}");
}

#[test]
fn approx_handles_constellations_beyond_the_exact_cap() {
    let scn = scenario(40.0, 0.0, 600.0, &[(10_000, 600.0)], BeamMode::Fixed);
    assert!(matches!(ergodic_secrecy_capacity(&scn, &qc()), Err(Error::Refused(_))));
    let r = approx_secrecy_metrics(&scn, 1.0, 0.1, &qc()).unwrap();
    assert!(r.c_erg >= 0.0 && r.c_erg < 0.1, "{}", r.c_erg);
    assert!(r.diagnostics.quad_converged);
}

#[test]
fn poisson_cdf_vanishes_for_huge_constellations() {
    let x = 0.5;
    let vals: Vec<f64> = [100u64, 10_000, 1_000_000]
        .into_iter()
        .map(|n| PoissonEavCdf::new(&scenario(40.0, 0.0, 600.0, &[(n, 600.0)], BeamMode::Fixed)).cdf(x))
        .collect();
    assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
    assert!(vals[2] < 1e-12, "{vals:?}");
    let lim = degenerate_many_eavesdroppers();
    assert_eq!((lim.c_erg, lim.p_out, lim.c_out), (0.0, 1.0, 0.0));
}

#[test]
fn simulation_without_eavesdroppers_matches_closed_form() {
    let scn = scenario(40.0, 0.0, 600.0, &[(0, 600.0)], BeamMode::Fixed);
    let report = simulate_report(&scn, 2.0, 0.1, 200_000, 5, 1).unwrap();
    let closed = capacity_no_eavesdroppers(&scn).unwrap().value;
    let ci = report.ci.unwrap();
    assert!((report.c_erg - closed).abs() <= ci.c_erg, "{} ± {} vs {closed}", report.c_erg, ci.c_erg);
}

#[test]
fn simulation_agrees_with_exact_report() {
    let scn = scenario(40.0, 0.0, 600.0, &[(50, 600.0)], BeamMode::Fixed);
    let exact = exact_secrecy_metrics(&scn, 2.0, 0.1, &qc()).unwrap();
    let mc = simulate_report(&scn, 2.0, 0.1, 200_000, 9, 1).unwrap();
    let ci = mc.ci.unwrap();
    // 99.9 % band: 3.29σ against the reported 1.96σ half-width
    let k = 3.29 / 1.96;
    assert!((exact.c_erg - mc.c_erg).abs() <= k * ci.c_erg, "{} vs {}", exact.c_erg, mc.c_erg);
    assert!((exact.p_out - mc.p_out).abs() <= k * ci.p_out, "{} vs {}", exact.p_out, mc.p_out);
    assert!((exact.c_out - mc.c_out).abs() < 0.05, "{} vs {}", exact.c_out, mc.c_out);
}

#[test]
fn simulation_is_identical_for_any_worker_count() {
    let scn = scenario(20.0, 10.0, 600.0, &[(78, 1015.0), (220, 1325.0)], BeamMode::Steerable);
    let one = simulate_samples(&scn, 30_000, 77, 1).unwrap();
    let many = simulate_samples(&scn, 30_000, 77, 3).unwrap();
    assert_eq!(one, many);
    let other = simulate_samples(&scn, 30_000, 78, 1).unwrap();
    assert_ne!(one.secrecy_rate, other.secrecy_rate);
}
