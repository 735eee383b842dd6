//! Squared-error objective and the PI, EI and mean-MSE acquisition scores.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gchi2::GChi2;
use crate::mogp::Posterior;
use crate::quad::adaptive_simpson;

/// Relative tolerance of the EI quadrature.
pub const EI_REL_TOL: f64 = 1e-6;
/// Evaluation budget of the EI quadrature.
pub const EI_MAX_EVALS: usize = 1 << 14;

/// Desired output `f₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    values: Vec<f64>,
}

impl Target {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("target must have at least one output"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("target has non-finite entries"));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check(&self, m: usize) -> Result<()> {
        if m != self.values.len() {
            return Err(Error::invalid(format!(
                "vector of length {m} compared against target of length {}",
                self.values.len()
            )));
        }
        Ok(())
    }
}

/// Best observed squared error `L*` and where it was observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub best_value: f64,
    pub best_input: Vec<f64>,
}

impl Incumbent {
    /// Replace the incumbent if `value` is strictly better. Returns whether
    /// it changed.
    pub fn update(&mut self, input: &[f64], value: f64) -> bool {
        if value < self.best_value {
            self.best_value = value;
            self.best_input = input.to_vec();
            true
        } else {
            false
        }
    }
}

/// `Σₘ (yₘ − f₀,ₘ)²`.
pub fn squared_error(y: &[f64], target: &Target) -> Result<f64> {
    target.check(y.len())?;
    Ok(y.iter().zip(&target.values).map(|(a, b)| (a - b) * (a - b)).sum())
}

fn error_law(post: &Posterior, target: &Target) -> Result<GChi2> {
    target.check(post.mean.len())?;
    let shift = &post.mean - DVector::from_column_slice(&target.values);
    GChi2::from_gaussian_quadratic(&shift, &post.covariance)
}

fn check_incumbent(value: f64) -> Result<()> {
    if !(value >= 0.0 && value.is_finite()) {
        return Err(Error::invalid(format!("incumbent value {value} must be finite and >= 0")));
    }
    Ok(())
}

/// Probability that the squared error at the test point is at most `L*`.
pub fn pi_score(post: &Posterior, target: &Target, incumbent_value: f64) -> Result<f64> {
    check_incumbent(incumbent_value)?;
    error_law(post, target)?.cdf(incumbent_value)
}

/// `E[max(0, L* − ‖E‖²)] = ∫₀^{L*} G(t) dt` with `G` the law's CDF.
pub fn ei_score(post: &Posterior, target: &Target, incumbent_value: f64) -> Result<f64> {
    check_incumbent(incumbent_value)?;
    expected_improvement(&error_law(post, target)?, incumbent_value)
}

/// Integral of the CDF of `law` over `[0, upper]`.
pub fn expected_improvement(law: &GChi2, upper: f64) -> Result<f64> {
    let lo = law.offset();
    if upper <= lo {
        return Ok(0.0);
    }
    if law.is_degenerate() {
        return Ok(upper - lo);
    }
    // The CDF vanishes below the offset, so integrate from there. The
    // absolute floor sits just above the CDF's own round-off.
    let failed = std::cell::Cell::new(None);
    let integrand = |t: f64| match law.cdf(t) {
        Ok(p) => p,
        Err(e) => {
            failed.set(Some(e));
            0.0
        }
    };
    let width = upper - lo;
    let res = adaptive_simpson(integrand, lo, upper, EI_REL_TOL, 1e-9 * width, EI_MAX_EVALS)?;
    if let Some(e) = failed.take() {
        return Err(e);
    }
    Ok(res.value.clamp(0.0, width))
}

/// Negated squared distance of the predictive mean to the target.
pub fn mean_mse_score(post: &Posterior, target: &Target) -> Result<f64> {
    let mean: Vec<f64> = post.mean.iter().copied().collect();
    Ok(-squared_error(&mean, target)?)
}

/// Score-based acquisition rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Acquisition {
    Ei,
    Pi,
    MeanMse,
}

impl Acquisition {
    pub fn score(self, post: &Posterior, target: &Target, incumbent_value: f64) -> Result<f64> {
        match self {
            Acquisition::Ei => ei_score(post, target, incumbent_value),
            Acquisition::Pi => pi_score(post, target, incumbent_value),
            Acquisition::MeanMse => mean_mse_score(post, target),
        }
    }
}

/// Index and score of the best candidate; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best
}

/// Maximize `kind` over `posts`, returning the winning index and its score.
///
/// EI is pruned with `EI ≤ (L* − δ)·G(L*)`: candidates whose bound cannot
/// reach the running best are never integrated. The winner and its score are
/// the same as scoring every candidate.
pub fn select(kind: Acquisition, posts: &[Posterior], target: &Target, incumbent_value: f64) -> Result<Option<(usize, f64)>> {
    if kind != Acquisition::Ei {
        let scores = posts
            .iter()
            .map(|p| kind.score(p, target, incumbent_value))
            .collect::<Result<Vec<_>>>()?;
        return Ok(argmax(&scores));
    }
    check_incumbent(incumbent_value)?;
    let laws = posts.iter().map(|p| error_law(p, target)).collect::<Result<Vec<_>>>()?;
    let mut bounds = Vec::with_capacity(laws.len());
    for law in &laws {
        let width = (incumbent_value - law.offset()).max(0.0);
        let bound = if width == 0.0 {
            0.0
        } else if law.is_degenerate() {
            width
        } else {
            // Slack covers the CDF and quadrature tolerances.
            let g = law.cdf(incumbent_value)?;
            width * (g + 1e-7) * (1.0 + 1e-4) + 1e-12
        };
        bounds.push(bound);
    }
    let mut order: Vec<usize> = (0..laws.len()).collect();
    order.sort_by(|&a, &b| bounds[b].total_cmp(&bounds[a]).then(a.cmp(&b)));
    let mut best: Option<(usize, f64)> = None;
    for i in order {
        if let Some((_, b)) = best {
            if bounds[i] < b {
                break;
            }
        }
        let s = expected_improvement(&laws[i], incumbent_value)?;
        let better = match best {
            None => true,
            Some((bi, b)) => s > b || (s == b && i < bi),
        };
        if better {
            best = Some((i, s));
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use statrs::distribution::{ChiSquared, Continuous, ContinuousCDF, Normal};

    fn random_posterior(rng: &mut ChaCha8Rng, m: usize) -> (Posterior, Target) {
        let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-0.6..0.6));
        let cov = &a * a.transpose() + DMatrix::identity(m, m) * 0.05;
        let mean = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
        let target = Target::new((0..m).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        (
            Posterior {
                mean,
                covariance: cov,
                includes_noise: true,
            },
            target,
        )
    }

    fn monte_carlo(post: &Posterior, target: &Target, l_star: f64, n: usize, seed: u64) -> (f64, f64) {
        let m = post.mean.len();
        let chol = post.covariance.clone().cholesky().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut hits, mut gain) = (0usize, 0.0);
        for _ in 0..n {
            let z = DVector::from_fn(m, |_, _| {
                let v: f64 = StandardNormal.sample(&mut rng);
                v
            });
            let e = &post.mean + chol.l() * z;
            let sq: f64 = e.iter().zip(target.values()).map(|(a, b)| (a - b).powi(2)).sum();
            if sq <= l_star {
                hits += 1;
                gain += l_star - sq;
            }
        }
        (hits as f64 / n as f64, gain / n as f64)
    }

    fn point(mean: Vec<f64>, cov: DMatrix<f64>) -> Posterior {
        Posterior {
            mean: DVector::from_vec(mean),
            covariance: cov,
            includes_noise: false,
        }
    }

    #[test]
    fn squared_error_cases() {
        let t = Target::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(squared_error(&[1.0, 2.0], &t).unwrap(), 0.0);
        assert_eq!(squared_error(&[4.0, 6.0], &t).unwrap(), 25.0);
        assert!(squared_error(&[1.0], &t).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y: Vec<f64> = (0..20).map(|_| rng.random_range(-3.0..3.0)).collect();
        let f: Vec<f64> = (0..20).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut naive = 0.0;
        for i in 0..20 {
            naive += (y[i] - f[i]) * (y[i] - f[i]);
        }
        let got = squared_error(&y, &Target::new(f).unwrap()).unwrap();
        assert!((got - naive).abs() < 1e-12);
    }

    #[test]
    fn target_validation() {
        assert!(Target::new(vec![]).is_err());
        assert!(Target::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn pi_special_cases() {
        let t = Target::new(vec![0.0; 4]).unwrap();
        let post = point(vec![0.0; 4], DMatrix::identity(4, 4));
        assert_eq!(pi_score(&post, &t, 0.0).unwrap(), 0.0);
        let median = ChiSquared::new(4.0).unwrap().inverse_cdf(0.5);
        assert!((pi_score(&post, &t, median).unwrap() - 0.5).abs() < 1e-6);
        assert!(pi_score(&post, &t, -1.0).is_err());
    }

    #[test]
    fn ei_special_cases() {
        let t = Target::new(vec![0.0, 0.0]).unwrap();
        let post = point(vec![1.0, 1.0], DMatrix::identity(2, 2));
        assert_eq!(ei_score(&post, &t, 0.0).unwrap(), 0.0);
        let degenerate = point(vec![1.0, 1.0], DMatrix::zeros(2, 2));
        assert_eq!(ei_score(&degenerate, &t, 5.0).unwrap(), 3.0);
        assert_eq!(ei_score(&degenerate, &t, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn mean_mse_cases() {
        let t = Target::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(mean_mse_score(&point(vec![1.0, 1.0], DMatrix::identity(2, 2)), &t).unwrap(), 0.0);
        assert_eq!(mean_mse_score(&point(vec![2.0, 0.0], DMatrix::identity(2, 2)), &t).unwrap(), -2.0);
    }

    #[test]
    fn scalar_case_matches_normal_formulas() {
        let n = Normal::new(0.0, 1.0).unwrap();
        for (m, s, l) in [(0.3, 0.5, 0.4), (-1.0, 0.2, 2.0), (0.0, 1.5, 0.1), (2.0, 0.7, 1.0)] {
            let post = point(vec![m], DMatrix::from_element(1, 1, s * s));
            let t = Target::new(vec![0.0]).unwrap();
            let r = f64::sqrt(l);
            let (a, b) = ((-r - m) / s, (r - m) / s);
            let mass = n.cdf(b) - n.cdf(a);
            let second = m * m * mass + 2.0 * m * s * (n.pdf(a) - n.pdf(b)) + s * s * (mass + a * n.pdf(a) - b * n.pdf(b));
            let ei_ref = l * mass - second;
            assert!((pi_score(&post, &t, l).unwrap() - mass).abs() < 1e-6);
            let ei = ei_score(&post, &t, l).unwrap();
            assert!((ei - ei_ref).abs() < 1e-6, "{ei} vs {ei_ref}");
        }
    }

    #[test]
    fn scores_match_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for k in 0..3 {
            let (post, target) = random_posterior(&mut rng, 3);
            let center: f64 = (&post.mean - DVector::from_column_slice(target.values())).norm_squared();
            let l_star = center + post.covariance.trace() * rng.random_range(0.2..1.0);
            let (pi_mc, ei_mc) = monte_carlo(&post, &target, l_star, 200_000, k);
            let pi = pi_score(&post, &target, l_star).unwrap();
            let ei = ei_score(&post, &target, l_star).unwrap();
            assert!((pi - pi_mc).abs() < 6e-3, "pi {pi} vs {pi_mc}");
            assert!((ei - ei_mc).abs() < (0.03 * ei_mc).max(2e-3), "ei {ei} vs {ei_mc}");
        }
    }

    #[test]
    fn ei_lower_envelope_and_monotonicity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (post, target) = random_posterior(&mut rng, 4);
        let law = error_law(&post, &target).unwrap();
        let l_star = law.mean();
        let ei = ei_score(&post, &target, l_star).unwrap();
        assert!(ei >= 0.0 && ei <= l_star);
        for k in 0..=10 {
            let t = l_star * k as f64 / 10.0;
            assert!(ei >= (l_star - t) * law.cdf(t).unwrap() - 1e-9);
        }
        let mut prev = (0.0, 0.0);
        for k in 0..=8 {
            let l = 0.25 * k as f64 * l_star;
            let cur = (pi_score(&post, &target, l).unwrap(), ei_score(&post, &target, l).unwrap());
            assert!(cur.0 >= prev.0 - 1e-9 && cur.1 >= prev.1 - 1e-9);
            prev = cur;
        }
    }

    #[test]
    fn joint_permutation_leaves_scores_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (post, target) = random_posterior(&mut rng, 4);
        let perm = [2usize, 0, 3, 1];
        let permuted = Posterior {
            mean: DVector::from_fn(4, |i, _| post.mean[perm[i]]),
            covariance: DMatrix::from_fn(4, 4, |i, j| post.covariance[(perm[i], perm[j])]),
            includes_noise: true,
        };
        let pt = Target::new(perm.iter().map(|&i| target.values()[i]).collect()).unwrap();
        let l = 1.5;
        assert!((pi_score(&post, &target, l).unwrap() - pi_score(&permuted, &pt, l).unwrap()).abs() < 1e-8);
        assert!((ei_score(&post, &target, l).unwrap() - ei_score(&permuted, &pt, l).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn mean_mse_argmax_is_translation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut posts = Vec::new();
        let (_, target) = random_posterior(&mut rng, 3);
        for _ in 0..15 {
            posts.push(random_posterior(&mut rng, 3).0);
        }
        let shift = DVector::from_vec(vec![3.0, -7.5, 0.25]);
        let moved: Vec<Posterior> = posts
            .iter()
            .map(|p| Posterior {
                mean: &p.mean + &shift,
                ..p.clone()
            })
            .collect();
        let moved_target = Target::new(target.values().iter().zip(shift.iter()).map(|(a, b)| a + b).collect()).unwrap();
        let a = select(Acquisition::MeanMse, &posts, &target, 1.0).unwrap().unwrap();
        let b = select(Acquisition::MeanMse, &moved, &moved_target, 1.0).unwrap().unwrap();
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn pruned_ei_selection_matches_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..5 {
            let (_, target) = random_posterior(&mut rng, 3);
            let posts: Vec<Posterior> = (0..30).map(|_| random_posterior(&mut rng, 3).0).collect();
            let l_star = rng.random_range(0.3..3.0);
            let scores: Vec<f64> = posts.iter().map(|p| ei_score(p, &target, l_star).unwrap()).collect();
            let want = argmax(&scores).unwrap();
            let got = select(Acquisition::Ei, &posts, &target, l_star).unwrap().unwrap();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0, 2.0]), Some((1, 3.0)));
        assert_eq!(argmax(&[]), None);
    }

    #[test]
    fn incumbent_only_improves() {
        let mut inc = Incumbent {
            best_value: 2.0,
            best_input: vec![0.0],
        };
        assert!(!inc.update(&[1.0], 2.0));
        assert!(inc.update(&[1.0], 1.0));
        assert_eq!(inc.best_input, vec![1.0]);
    }
}
