//! Adaptive 15-point Gauss–Kronrod integration.
//!
//! [`integrate`] is a globally adaptive bisection scheme: the interval with
//! the largest error estimate is split until the summed estimate meets
//! `max(abs_tol, rel_tol·|I|)`. [`integrate_panels`] runs the same scheme on
//! a fixed list of panels, optionally in parallel, and always reduces the
//! panel results in panel order so the value does not depend on scheduling.

use rayon::prelude::*;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Upper bound on the number of subintervals per call.
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-8, max_intervals: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut res_abs = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let abs_half = half.abs();
    let value = kronrod * half;
    res_abs *= abs_half;
    res_asc *= abs_half;
    let mut err = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Segment { a, b, value, err }
}

/// Integrate `f` over the finite interval `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, opts: &QuadOptions) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, abs_err: 0.0, evals: 0, converged: true };
    }
    let mut segments = vec![gauss_kronrod(&f, a, b)];
    let mut evals = 15;
    loop {
        let total: f64 = segments.iter().map(|s| s.value).sum();
        let err: f64 = segments.iter().map(|s| s.err).sum();
        let target = opts.abs_tol.max(opts.rel_tol * total.abs());
        if err <= target || segments.len() >= opts.max_intervals.max(1) {
            return QuadResult { value: total, abs_err: err, evals, converged: err <= target };
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s.err > acc.1 { (i, s.err) } else { acc });
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval exhausted at machine precision
            segments.push(Segment { err: 0.0, ..seg });
            continue;
        }
        segments.push(gauss_kronrod(&f, seg.a, mid));
        segments.push(gauss_kronrod(&f, mid, seg.b));
        evals += 30;
    }
}

/// Integrate over consecutive panels `[breaks[i], breaks[i+1]]`.
///
/// Each panel gets the full relative tolerance and an equal share of the
/// absolute tolerance. With `workers > 1` the panels are evaluated on a
/// dedicated pool; the reduction order is fixed either way.
pub fn integrate_panels<F>(f: F, breaks: &[f64], opts: &QuadOptions, workers: usize) -> QuadResult
where
    F: Fn(f64) -> f64 + Sync,
{
    if breaks.len() < 2 {
        return QuadResult { value: 0.0, abs_err: 0.0, evals: 0, converged: true };
    }
    let n_panels = breaks.len() - 1;
    let panel_opts = QuadOptions { abs_tol: opts.abs_tol / n_panels as f64, ..*opts };
    let run = |i: usize| integrate(&f, breaks[i], breaks[i + 1], &panel_opts);
    let parts: Vec<QuadResult> = if workers > 1 && n_panels > 1 {
        match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
            Ok(pool) => pool.install(|| (0..n_panels).into_par_iter().map(run).collect()),
            Err(_) => (0..n_panels).map(run).collect(),
        }
    } else {
        (0..n_panels).map(run).collect()
    };
    parts.iter().fold(
        QuadResult { value: 0.0, abs_err: 0.0, evals: 0, converged: true },
        |acc, p| QuadResult {
            value: acc.value + p.value,
            abs_err: acc.abs_err + p.abs_err,
            evals: acc.evals + p.evals,
            converged: acc.converged && p.converged,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x + 2.0 * x - 1.0, -1.0, 2.0, &QuadOptions::default());
        assert!((r.value - 9.0).abs() < 1e-13);
        assert!(r.converged);
        assert_eq!(r.evals, 15);
    }

    #[test]
    fn endpoint_singularity() {
        let opts = QuadOptions { abs_tol: 1e-12, rel_tol: 1e-12, max_intervals: 5000 };
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &opts);
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn oscillatory() {
        let r = integrate(|x: f64| (10.0 * x).sin(), 0.0, std::f64::consts::PI, &QuadOptions::default());
        assert!(r.value.abs() < 1e-9);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let opts = QuadOptions::default();
        let fwd = integrate(|x: f64| x.exp(), 0.0, 1.0, &opts).value;
        let rev = integrate(|x: f64| x.exp(), 1.0, 0.0, &opts).value;
        assert!((fwd + rev).abs() < 1e-14);
    }

    #[test]
    fn panels_are_worker_invariant() {
        let breaks: Vec<f64> = (0..=16).map(|i| i as f64 * 0.5).collect();
        let f = |x: f64| (-x).exp() * (3.0 * x).cos();
        let opts = QuadOptions::default();
        let one = integrate_panels(f, &breaks, &opts, 1);
        let four = integrate_panels(f, &breaks, &opts, 4);
        assert_eq!(one.value.to_bits(), four.value.to_bits());
        // ∫_0^8 e^{-x} cos 3x dx
        let exact = (1.0 + (-8.0f64).exp() * (3.0 * (24.0f64).sin() - (24.0f64).cos())) / 10.0;
        assert!((one.value - exact).abs() < 1e-10);
    }
}
