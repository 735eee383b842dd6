//! One-dimensional adaptive quadrature.
//!
//! Two rules live here: a Gauss–Kronrod (7, 15) pair used for the smooth
//! oscillatory pieces of characteristic-function inversion, and a globally
//! adaptive Simpson rule with an evaluation budget used for integrating
//! distribution functions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

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

// Gauss weights for the 7-point rule sitting on XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Single G7K15 panel on `[a, b]`; returns (Kronrod estimate, |K - G|).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Recursive adaptive Gauss–Kronrod integration to an absolute tolerance.
///
/// Returns the estimate and the accumulated error estimate. Recursion stops
/// at `max_depth`; the caller decides what to do with a large error.
pub fn adaptive_gk<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_depth: u32,
) -> (f64, f64) {
    let (whole, err) = gk15(f, a, b);
    gk_refine(f, a, b, whole, err, abs_tol, max_depth)
}

fn gk_refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: f64,
    err: f64,
    abs_tol: f64,
    depth: u32,
) -> (f64, f64) {
    if err <= abs_tol || depth == 0 {
        return (whole, err);
    }
    let mid = 0.5 * (a + b);
    let (l, le) = gk15(f, a, mid);
    let (r, re) = gk15(f, mid, b);
    if le + re <= abs_tol {
        return (l + r, le + re);
    }
    let (lv, lerr) = gk_refine(f, a, mid, l, le, 0.5 * abs_tol, depth - 1);
    let (rv, rerr) = gk_refine(f, mid, b, r, re, 0.5 * abs_tol, depth - 1);
    (lv + rv, lerr + rerr)
}

/// Outcome of [`adaptive_simpson`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    estimate: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // Largest error first; ties broken by left endpoint for determinism.
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Split a panel into two halves, refining the Simpson estimate.
fn split<F: Fn(f64) -> f64>(f: &F, p: &Panel) -> (Panel, Panel) {
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(p.a, m, p.fa, flm, p.fm);
    let right = simpson(m, p.b, p.fm, frm, p.fb);
    let err = ((left + right) - p.estimate).abs() / 15.0;
    // Distribute the Richardson error estimate by each half's own curvature.
    let mk = |a, b, fa, fm, fb, est: f64| Panel {
        a,
        b,
        fa,
        fm,
        fb,
        estimate: est,
        error: err * 0.5,
    };
    (
        mk(p.a, m, p.fa, flm, p.fm, left),
        mk(m, p.b, p.fm, frm, p.fb, right),
    )
}

/// Globally adaptive Simpson quadrature.
///
/// Panels are bisected in order of decreasing error estimate until the total
/// estimated error falls below `max(rel_tol * |I|, abs_tol)`. Fails with a
/// numerical error once `max_evals` integrand evaluations are spent.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_evals: usize,
) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("quadrature limits must be finite"));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let mut evals = 3usize;
    let root = Panel {
        a,
        b,
        fa,
        fm,
        fb,
        estimate: simpson(a, b, fa, fm, fb),
        error: f64::INFINITY,
    };
    // The root has no error estimate yet; split it once unconditionally.
    let (l, r) = split(&f, &root);
    evals += 2;
    let mut heap = BinaryHeap::new();
    let mut total = l.estimate + r.estimate;
    let mut total_err = l.error + r.error;
    heap.push(l);
    heap.push(r);

    loop {
        let tol = (rel_tol * total.abs()).max(abs_tol);
        if total_err <= tol {
            break;
        }
        if evals + 2 > max_evals {
            return Err(Error::numerical(
                format!("adaptive Simpson exhausted {max_evals} evaluations"),
                total_err,
            ));
        }
        let worst = heap.pop().expect("heap holds at least two panels");
        let (l, r) = split(&f, &worst);
        evals += 2;
        total += l.estimate + r.estimate - worst.estimate;
        total_err += l.error + r.error - worst.error;
        heap.push(l);
        heap.push(r);
    }

    // Re-sum to shed the drift of incremental updates.
    let value: f64 = heap.iter().map(|p| p.estimate).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult {
        value,
        error,
        evaluations: evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gk15_is_exact_for_polynomials() {
        let (v, _) = gk15(&|x: f64| x.powi(9) - 3.0 * x * x, -1.0, 2.0);
        let exact = (2f64.powi(10) - 1.0) / 10.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn adaptive_gk_handles_peaks() {
        let f = |x: f64| 1.0 / (1e-4 + x * x);
        let (v, err) = adaptive_gk(&f, -1.0, 1.0, 1e-10, 40);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() < 1e-8, "{v} vs {exact} ({err})");
    }

    #[test]
    fn simpson_integrates_smooth_function() {
        let r = adaptive_simpson(|x: f64| x.exp(), 0.0, 1.0, 1e-10, 0.0, 1 << 14).unwrap();
        assert!((r.value - (1f64.exp() - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn simpson_handles_sqrt_singularity() {
        let r = adaptive_simpson(|x: f64| x.sqrt(), 0.0, 4.0, 1e-7, 0.0, 1 << 14).unwrap();
        assert!((r.value - 16.0 / 3.0).abs() < 1e-5);
    }

    #[test]
    fn simpson_reports_budget_exhaustion() {
        let step = |x: f64| if x < 0.3 { 0.0 } else { 1.0 };
        let r = adaptive_simpson(step, 0.0, 1.0, 1e-15, 0.0, 64);
        assert!(matches!(r, Err(Error::Numerical { .. })));
    }

    #[test]
    fn empty_interval_is_zero() {
        let r = adaptive_simpson(|x: f64| x, 1.0, 1.0, 1e-6, 0.0, 16).unwrap();
        assert_eq!(r.value, 0.0);
    }
}
