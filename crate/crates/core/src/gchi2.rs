//! Generalized χ² law of a squared Gaussian error.
//!
//! For `E ~ N(m, C)` with `C` positive semi-definite, `EᵀE` has the law of
//! `δ + Σᵢ λᵢ (zᵢ + bᵢ)²` with `zᵢ` i.i.d. standard normal, where `λᵢ` are
//! the positive eigenvalues of `C`, `bᵢ = (Qᵀm)ᵢ / √λᵢ`, and `δ` collects the
//! squared mean along the null directions of `C`.
//!
//! The distribution function is evaluated by Imhof's inversion of the
//! characteristic function,
//!
//! ```text
//! P(W ≤ x) = 1/2 − (1/π) ∫₀^∞ sin θ(u) / (u ρ(u)) du
//! θ(u) = ½ Σ [atan(λu) + b²λu / (1 + λ²u²)] − ½ x u
//! ρ(u) = Π (1 + λ²u²)^{1/4} · exp(½ Σ b²λ²u² / (1 + λ²u²))
//! ```
//!
//! The integral is split at the zeros of the asymptotic phase, each
//! half-period is integrated by adaptive Gauss–Kronrod, and the alternating
//! partial sums are accelerated with Wynn's ε-algorithm. Truncation stops on
//! either the analytic envelope bound or agreement of the extrapolants.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quad::adaptive_gk;

/// Relative eigenvalue threshold below which a direction is treated as null.
pub const EIG_REL_THRESHOLD: f64 = 1e-10;
/// Absolute error target of [`GChi2::cdf`].
pub const CDF_ABS_TOL: f64 = 1e-8;

// Internal target on the raw Imhof integral; the CDF error is this over π.
const INTEGRAL_TOL: f64 = 1e-10;
const MAX_SEGMENTS: usize = 4000;
const WYNN_WINDOW: usize = 24;
// Chernoff bounds below this short-circuit the inversion.
const TAIL_CUTOFF: f64 = 1e-15;

/// Weighted sum of independent 1-dof non-central χ² variables plus a constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GChi2 {
    weights: Vec<f64>,
    noncentrality: Vec<f64>,
    offset: f64,
}

impl GChi2 {
    /// Build from explicit parameters. Weights are sorted descending and
    /// zero-weight components are dropped (they contribute nothing).
    pub fn new(weights: Vec<f64>, noncentrality: Vec<f64>, offset: f64) -> Result<Self> {
        if weights.len() != noncentrality.len() {
            return Err(Error::invalid(format!(
                "{} weights but {} noncentralities",
                weights.len(),
                noncentrality.len()
            )));
        }
        if !(offset.is_finite() && offset >= 0.0) {
            return Err(Error::invalid(format!("offset must be >= 0, got {offset}")));
        }
        let mut pairs = Vec::with_capacity(weights.len());
        for (&w, &nc) in weights.iter().zip(&noncentrality) {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid(format!("weight must be >= 0, got {w}")));
            }
            if !(nc.is_finite() && nc >= 0.0) {
                return Err(Error::invalid(format!(
                    "noncentrality must be >= 0, got {nc}"
                )));
            }
            if w > 0.0 {
                pairs.push((w, nc));
            }
        }
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
        Ok(Self {
            weights: pairs.iter().map(|p| p.0).collect(),
            noncentrality: pairs.iter().map(|p| p.1).collect(),
            offset,
        })
    }

    /// Law of `‖E‖²` for `E ~ N(mean_shift, covariance)`.
    pub fn from_gaussian_quadratic(mean_shift: &DVector<f64>, covariance: &DMatrix<f64>) -> Result<Self> {
        let m = mean_shift.len();
        if covariance.nrows() != m || covariance.ncols() != m {
            return Err(Error::invalid(format!(
                "covariance is {}x{}, mean has length {m}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if mean_shift.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite mean or covariance"));
        }
        if m == 0 {
            return Self::new(Vec::new(), Vec::new(), 0.0);
        }
        let scale = covariance.amax().max(1.0);
        let asym = (covariance - covariance.transpose()).amax();
        if asym > 1e-9 * scale {
            return Err(Error::invalid(format!("covariance asymmetric by {asym:e}")));
        }
        let sym = (covariance + covariance.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let lam_max = eig.eigenvalues.max();
        let lam_min = eig.eigenvalues.min();
        if lam_min < -1e-8 * scale {
            return Err(Error::numerical(
                "covariance has a negative eigenvalue",
                lam_min,
            ));
        }
        let proj = eig.eigenvectors.transpose() * mean_shift;
        let threshold = EIG_REL_THRESHOLD * lam_max.max(0.0);
        let mut weights = Vec::with_capacity(m);
        let mut nc = Vec::with_capacity(m);
        let mut offset = 0.0;
        for i in 0..m {
            let lam = eig.eigenvalues[i];
            let p = proj[i];
            if lam > threshold && lam > 0.0 {
                weights.push(lam);
                nc.push(p * p / lam);
            } else {
                offset += p * p;
            }
        }
        Self::new(weights, nc, offset)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn noncentrality(&self) -> &[f64] {
        &self.noncentrality
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// True when the law is a point mass at the offset.
    pub fn is_degenerate(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.offset
            + self
                .weights
                .iter()
                .zip(&self.noncentrality)
                .map(|(l, b2)| l * (1.0 + b2))
                .sum::<f64>()
    }

    pub fn variance(&self) -> f64 {
        2.0 * self
            .weights
            .iter()
            .zip(&self.noncentrality)
            .map(|(l, b2)| l * l * (1.0 + 2.0 * b2))
            .sum::<f64>()
    }

    /// Law of `c·W`.
    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::invalid(format!("scale must be > 0, got {c}")));
        }
        Self::new(
            self.weights.iter().map(|w| w * c).collect(),
            self.noncentrality.clone(),
            self.offset * c,
        )
    }

    /// `P(W ≤ t)`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        self.cdf_with_error(t).map(|(p, _)| p)
    }

    /// `P(W ≤ t)` together with an estimate of the absolute error.
    pub fn cdf_with_error(&self, t: f64) -> Result<(f64, f64)> {
        if t.is_nan() {
            return Err(Error::invalid("cdf evaluated at NaN"));
        }
        let near = 1e-12 * self.offset.max(1.0);
        if self.weights.is_empty() {
            let p = if t >= self.offset - near { 1.0 } else { 0.0 };
            return Ok((p, 0.0));
        }
        if t <= self.offset + near {
            return Ok((0.0, 0.0));
        }
        if t == f64::INFINITY {
            return Ok((1.0, 0.0));
        }
        let scale = self.weights[0];
        let lam: Vec<f64> = self.weights.iter().map(|w| w / scale).collect();
        let x = (t - self.offset) / scale;
        let problem = Imhof {
            lam: &lam,
            nc: &self.noncentrality,
            x,
        };
        if let Some(bound) = problem.lower_tail_bound() {
            return Ok((0.0, bound));
        }
        if let Some(bound) = problem.upper_tail_bound() {
            return Ok((1.0, bound));
        }
        let (integral, err) = problem.integrate()?;
        let p = 0.5 - integral / PI;
        Ok((p.clamp(0.0, 1.0), err / PI))
    }

    /// `n` i.i.d. draws, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with<R: rand::Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let shifts: Vec<f64> = self.noncentrality.iter().map(|b2| b2.sqrt()).collect();
        (0..n)
            .map(|_| {
                let mut acc = self.offset;
                for (l, b) in self.weights.iter().zip(&shifts) {
                    let z: f64 = StandardNormal.sample(rng);
                    acc += l * (z + b) * (z + b);
                }
                acc
            })
            .collect()
    }
}

/// Normalized inversion problem: the largest weight is 1.
struct Imhof<'a> {
    lam: &'a [f64],
    nc: &'a [f64],
    x: f64,
}

impl Imhof<'_> {
    fn integrand(&self, u: f64) -> f64 {
        let mut theta = -0.5 * self.x * u;
        let mut log_rho = 0.0;
        for (&l, &b2) in self.lam.iter().zip(self.nc) {
            let lu = l * u;
            let lu2 = lu * lu;
            let d = 1.0 + lu2;
            theta += 0.5 * (lu.atan() + b2 * lu / d);
            log_rho += 0.25 * lu2.ln_1p() + 0.5 * b2 * lu2 / d;
        }
        theta.sin() / (u * log_rho.exp())
    }

    /// Derivative of the integrand's phase.
    fn phase_slope(&self, u: f64) -> f64 {
        let mut slope = -0.5 * self.x;
        for (&l, &b2) in self.lam.iter().zip(self.nc) {
            let d = 1.0 + (l * u) * (l * u);
            slope += 0.5 * (l / d + b2 * l * (2.0 - d) / (d * d));
        }
        slope
    }

    /// Integral over `[a, ∞)` in panels of at most half an oscillation,
    /// available when the envelope dies out before `√3 / λ_max`. On that
    /// range the phase slope is monotone, so its extreme values sit at the
    /// end points. Returns `None` when the preconditions fail.
    fn integrate_resolved(&self, a: f64) -> Option<(f64, f64)> {
        let limit = 3f64.sqrt();
        let mut cut = a.max(f64::MIN_POSITIVE);
        while self.envelope_tail(cut) > INTEGRAL_TOL {
            cut *= 2.0;
            if cut > limit {
                return None;
            }
        }
        let slope = self.phase_slope(a).abs().max(self.phase_slope(cut).abs());
        let panels = ((cut - a) * slope / PI).ceil().max(1.0);
        if panels > MAX_SEGMENTS as f64 {
            return None;
        }
        let n = panels as usize;
        let width = (cut - a) / n as f64;
        let f = |u: f64| self.integrand(u);
        let (mut sum, mut err) = (0.0, 0.0);
        for k in 0..n {
            let lo = a + k as f64 * width;
            let hi = if k + 1 == n { cut } else { lo + width };
            let (v, e) = adaptive_gk(&f, lo, hi, 0.01 * INTEGRAL_TOL, 30);
            sum += v;
            err += e;
        }
        Some((sum, err + self.envelope_tail(cut)))
    }

    /// Bound on `∫_U^∞ |integrand|`, using the best leading subset of weights.
    fn envelope_tail(&self, u: f64) -> f64 {
        let mut noncentral = 0.0;
        for (&l, &b2) in self.lam.iter().zip(self.nc) {
            let lu2 = (l * u) * (l * u);
            noncentral += 0.5 * b2 * lu2 / (1.0 + lu2);
        }
        let mut best = f64::INFINITY;
        let mut log_prod = 0.0;
        for (j, &l) in self.lam.iter().enumerate() {
            log_prod += 0.5 * (l * u).ln();
            let k = 0.5 * (j + 1) as f64;
            let b = (-(log_prod + noncentral)).exp() / k;
            best = best.min(b);
        }
        best
    }

    /// Chernoff bound on `P(W ≤ x)` when it is negligible.
    fn lower_tail_bound(&self) -> Option<f64> {
        if self.x >= self.mean() {
            return None;
        }
        let mut best = f64::INFINITY;
        for k in -10..48 {
            let s = 2f64.powi(k);
            let mut log_mgf = 0.0;
            for (&l, &b2) in self.lam.iter().zip(self.nc) {
                let d = 1.0 + 2.0 * l * s;
                log_mgf += -0.5 * d.ln() - b2 * l * s / d;
            }
            best = best.min(s * self.x + log_mgf);
        }
        let bound = best.exp();
        (bound < TAIL_CUTOFF).then_some(bound)
    }

    /// Chernoff bound on `P(W > x)` when it is negligible.
    fn upper_tail_bound(&self) -> Option<f64> {
        if self.x <= self.mean() {
            return None;
        }
        let mut best = f64::INFINITY;
        for k in 1..40 {
            // s ranges over (0, 1/2) in units of the largest weight.
            let s = 0.5 * (1.0 - 0.7f64.powi(k));
            let mut log_mgf = 0.0;
            for (&l, &b2) in self.lam.iter().zip(self.nc) {
                let d = 1.0 - 2.0 * l * s;
                log_mgf += -0.5 * d.ln() + b2 * l * s / d;
            }
            best = best.min(-s * self.x + log_mgf);
        }
        let bound = best.exp();
        (bound < TAIL_CUTOFF).then_some(bound)
    }

    fn mean(&self) -> f64 {
        self.lam
            .iter()
            .zip(self.nc)
            .map(|(l, b2)| l * (1.0 + b2))
            .sum()
    }

    fn integrate(&self) -> Result<(f64, f64)> {
        let f = |u: f64| self.integrand(u);
        let m = self.lam.len() as f64;
        let x = self.x;
        let half_period = 2.0 * PI / x;
        // Zeros of sin(Mπ/4 − xu/2) sit at u = (Mπ/2 + 2jπ) / x.
        let phase = (m * PI / 2.0).rem_euclid(2.0 * PI);
        let first = if phase > 0.0 { phase / x } else { half_period };

        // Leading piece [0, first], split geometrically so that every weight's
        // own scale 1/λ gets resolved.
        let mut head = 0.0;
        let mut quad_err = 0.0;
        let mut a = 0.0;
        let mut b = first.min(1.0);
        loop {
            let (v, e) = adaptive_gk(&f, a, b, 0.05 * INTEGRAL_TOL, 40);
            head += v;
            quad_err += e;
            if b >= first {
                break;
            }
            a = b;
            b = (b * 8.0).min(first);
        }

        // Strongly noncentral laws evaluated near their bulk decay long
        // before the asymptotic oscillation sets in.
        if x > 1e3 {
            if let Some((v, e)) = self.integrate_resolved(first) {
                return Ok((head + v, quad_err + e));
            }
        }

        let mut partial = Vec::with_capacity(64);
        let mut estimates: Vec<f64> = Vec::with_capacity(64);
        let mut sum = head;
        let mut start = first;
        let seg_tol = 0.01 * INTEGRAL_TOL;
        let mut last_gap = f64::INFINITY;
        for n in 0..MAX_SEGMENTS {
            let end = start + half_period;
            let (v, e) = adaptive_gk(&f, start, end, seg_tol, 30);
            sum += v;
            quad_err += e;
            start = end;
            partial.push(sum);

            let tail = self.envelope_tail(start);
            if tail <= INTEGRAL_TOL {
                return Ok((sum, tail + quad_err));
            }
            let lo = partial.len().saturating_sub(WYNN_WINDOW);
            let est = wynn_epsilon(&partial[lo..]);
            estimates.push(est);
            if n >= 4 {
                let k = estimates.len();
                let gap = (estimates[k - 1] - estimates[k - 2])
                    .abs()
                    .max((estimates[k - 1] - estimates[k - 3]).abs());
                last_gap = gap;
                if gap <= INTEGRAL_TOL {
                    return Ok((est, gap + quad_err));
                }
            }
        }
        Err(Error::numerical(
            "Imhof inversion did not converge",
            (last_gap + quad_err) / PI,
        ))
    }
}

/// Wynn's ε-algorithm: extrapolated limit of a sequence of partial sums,
/// taken from the deepest even column.
pub fn wynn_epsilon(seq: &[f64]) -> f64 {
    let n = seq.len();
    if n < 3 {
        return *seq.last().unwrap_or(&0.0);
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur = seq.to_vec();
    let mut best = seq[n - 1];
    for col in 1..n {
        let len = n - col;
        let mut next = Vec::with_capacity(len);
        for k in 0..len {
            let diff = cur[k + 1] - cur[k];
            if diff == 0.0 || !diff.is_finite() {
                // The column has converged exactly; nothing further to gain.
                return if col % 2 == 1 { cur[k + 1] } else { best };
            }
            next.push(prev[k + 1] + 1.0 / diff);
        }
        prev = cur;
        cur = next;
        if col % 2 == 0 {
            let v = cur[len - 1];
            if !v.is_finite() {
                break;
            }
            best = v;
        }
    }
    best
}
