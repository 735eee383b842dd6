//! Synthetic structured-output black boxes: a family of triangles and a ring
//! of points whose shapes both depend on a scalar input.
//!
//! Outputs are laid out as all first coordinates followed by all second
//! coordinates: `(f₁, …, f_K, g₁, …, g_K)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mogp::NoiseParams;

/// Number of points on the sphere problem's ring.
pub const SPHERE_POINTS: usize = 10;
/// Noise variance used by the synthetic benchmarks.
pub const DEFAULT_NOISE_VARIANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Triangle,
    Sphere,
}

impl Problem {
    pub fn output_dim(self) -> usize {
        match self {
            Problem::Triangle => 12,
            Problem::Sphere => 2 * SPHERE_POINTS,
        }
    }

    pub fn eval(self, x: f64) -> Vec<f64> {
        match self {
            Problem::Triangle => triangle_eval(x).to_vec(),
            Problem::Sphere => sphere_eval(x).to_vec(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Problem::Triangle => "triangle",
            Problem::Sphere => "sphere",
        }
    }
}

impl std::str::FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "triangle" => Ok(Problem::Triangle),
            "sphere" => Ok(Problem::Sphere),
            other => Err(Error::invalid(format!("unknown problem '{other}'"))),
        }
    }
}

/// Vertices of six triangles sharing the corner `(5 sin x, 5 cos x)`.
pub fn triangle_eval(x: f64) -> [f64; 12] {
    let (f1, g1) = (5.0 * x.sin(), 5.0 * x.cos());
    let s = x.abs().sqrt();
    let f = [f1, f1 - s, f1 + s, f1 - 0.5 * s, f1 + 0.5 * s, f1];
    let g2 = g1 - 2.0 * s;
    let g4 = g1 - s;
    let g = [g1, g2, g2, g4, g4, g2];
    let mut out = [0.0; 12];
    out[..6].copy_from_slice(&f);
    out[6..].copy_from_slice(&g);
    out
}

/// Ten points on a circle centred at `(5 sin x, 5 cos x)` with radius
/// `5 |sin x − cos x|`.
pub fn sphere_eval(x: f64) -> [f64; 2 * SPHERE_POINTS] {
    let (c0, c1) = (5.0 * x.sin(), 5.0 * x.cos());
    let r = 5.0 * (x.sin() - x.cos()).abs();
    let mut out = [0.0; 2 * SPHERE_POINTS];
    for m in 1..=SPHERE_POINTS {
        let angle = 2.0 * m as f64 * PI / SPHERE_POINTS as f64;
        out[m - 1] = c0 + r * angle.cos();
        out[SPHERE_POINTS + m - 1] = c1 + r * angle.sin();
    }
    out
}

/// A problem paired with an optional observation-noise model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOracle {
    pub problem: Problem,
    pub noise: Option<NoiseParams>,
}

impl SyntheticOracle {
    pub fn new(problem: Problem, noise: Option<NoiseParams>) -> Result<Self> {
        if let Some(n) = &noise {
            if n.variances.len() != problem.output_dim() {
                return Err(Error::invalid(format!(
                    "{} noise variances for a {}-output problem",
                    n.variances.len(),
                    problem.output_dim()
                )));
            }
        }
        Ok(Self { problem, noise })
    }

    /// Uniform noise variance on every output; zero means noise-free.
    pub fn with_noise_variance(problem: Problem, variance: f64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(Error::invalid("noise variance must be finite and >= 0"));
        }
        let noise = if variance == 0.0 {
            None
        } else {
            Some(NoiseParams {
                variances: vec![variance; problem.output_dim()],
            })
        };
        Self::new(problem, noise)
    }

    pub fn output_dim(&self) -> usize {
        self.problem.output_dim()
    }

    /// Noiseless value plus independent Gaussian noise drawn from `rng`.
    pub fn observe<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> Result<Vec<f64>> {
        if !x.is_finite() {
            return Err(Error::Oracle(format!("oracle queried at non-finite input {x}")));
        }
        let mut y = self.problem.eval(x);
        if let Some(noise) = &self.noise {
            for (v, var) in y.iter_mut().zip(&noise.variances) {
                let eps = Normal::new(0.0, var.sqrt()).expect("noise variance is finite");
                *v += eps.sample(rng);
            }
        }
        Ok(y)
    }
}

/// `count` inputs drawn uniformly on `[lo, hi]`, sorted ascending.
pub fn generate_pool(count: usize, range: (f64, f64), seed: u64) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(format!("invalid input range [{lo}, {hi}]")));
    }
    if count == 0 {
        return Err(Error::invalid("pool must contain at least one point"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<f64> = (0..count).map(|_| rng.random_range(lo..=hi)).collect();
    pool.sort_by(f64::total_cmp);
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn triangle_at_zero_collapses() {
        let y = triangle_eval(0.0);
        assert!(y[..6].iter().all(|v| *v == 0.0));
        assert!(y[6..].iter().all(|v| *v == 5.0));
    }

    #[test]
    fn triangle_at_half_pi() {
        let y = triangle_eval(PI / 2.0);
        assert!((y[0] - 5.0).abs() < 1e-12);
        assert!(y[6].abs() < 1e-12);
        assert!((y[1] - 3.746686).abs() < 1e-6);
        assert!((y[7] + 2.50663).abs() < 1e-5);
    }

    #[test]
    fn sphere_radius_vanishes_at_quarter_pi() {
        let y = sphere_eval(PI / 4.0);
        for m in 0..SPHERE_POINTS {
            assert!((y[m] - 3.53553).abs() < 1e-5);
            assert!((y[SPHERE_POINTS + m] - 3.53553).abs() < 1e-5);
        }
    }

    #[test]
    fn noise_free_observation_is_exact() {
        let oracle = SyntheticOracle::with_noise_variance(Problem::Sphere, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(oracle.observe(1.3, &mut rng).unwrap(), sphere_eval(1.3).to_vec());
    }

    #[test]
    fn noisy_observation_has_requested_variance() {
        let oracle = SyntheticOracle::with_noise_variance(Problem::Triangle, 0.01).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let clean = triangle_eval(0.7);
        let mut sums = [0.0f64; 12];
        let mut sq = [0.0f64; 12];
        for _ in 0..n {
            let y = oracle.observe(0.7, &mut rng).unwrap();
            for m in 0..12 {
                let e = y[m] - clean[m];
                sums[m] += e;
                sq[m] += e * e;
            }
        }
        for m in 0..12 {
            let mean = sums[m] / n as f64;
            let var = sq[m] / n as f64 - mean * mean;
            assert!((0.008..=0.012).contains(&var), "output {m}: {var}");
        }
    }

    #[test]
    fn observation_is_deterministic_in_rng_state() {
        let oracle = SyntheticOracle::with_noise_variance(Problem::Triangle, 0.01).unwrap();
        let a = oracle.observe(0.2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = oracle.observe(0.2, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert!(oracle.observe(f64::NAN, &mut ChaCha8Rng::seed_from_u64(5)).is_err());
    }

    #[test]
    fn noise_length_is_checked() {
        let noise = NoiseParams::new(vec![0.1; 3]).unwrap();
        assert!(SyntheticOracle::new(Problem::Triangle, Some(noise)).is_err());
    }

    #[test]
    fn pool_is_sorted_and_in_range() {
        let pool = generate_pool(100, (-5.0, 5.0), 3).unwrap();
        assert_eq!(pool.len(), 100);
        assert!(pool.windows(2).all(|w| w[0] <= w[1]));
        assert!(pool.iter().all(|x| (-5.0..=5.0).contains(x)));
        assert_eq!(generate_pool(1, (0.0, 1.0), 1).unwrap().len(), 1);
        assert!(generate_pool(5, (1.0, 1.0), 1).is_err());
        assert!(generate_pool(0, (0.0, 1.0), 1).is_err());
        assert_eq!(pool, generate_pool(100, (-5.0, 5.0), 3).unwrap());
    }

    #[test]
    fn pool_is_uniform_by_ks() {
        let n = 20_000;
        let pool = generate_pool(n, (-5.0, 5.0), 11).unwrap();
        let d = pool
            .iter()
            .enumerate()
            .map(|(i, x)| {
                let f = (x + 5.0) / 10.0;
                (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
            })
            .fold(0.0, f64::max);
        // Asymptotic critical value at level 0.01.
        assert!(d < 1.628 / (n as f64).sqrt(), "KS distance {d}");
    }

    proptest! {
        #[test]
        fn triangle_identities(x in -50.0f64..50.0) {
            let y = triangle_eval(x);
            prop_assert!((y[5] - y[0]).abs() <= 1e-10);
            prop_assert!((y[8] - y[7]).abs() <= 1e-10);
            prop_assert!((y[10] - y[9]).abs() <= 1e-10);
            prop_assert!((y[3] + y[4] - 2.0 * y[0]).abs() <= 1e-10);
            let bound = 5.0 + 2.0 * x.abs().sqrt();
            prop_assert!(y.iter().all(|v| v.abs() <= bound + 1e-12));
        }

        #[test]
        fn sphere_identities(x in -PI..PI) {
            let y = sphere_eval(x);
            let (c0, c1) = (5.0 * x.sin(), 5.0 * x.cos());
            let r = 5.0 * (x.sin() - x.cos()).abs();
            let mean_f: f64 = y[..SPHERE_POINTS].iter().sum::<f64>() / SPHERE_POINTS as f64;
            prop_assert!((mean_f - c0).abs() <= 1e-10);
            for m in 0..SPHERE_POINTS {
                let d = (y[m] - c0).powi(2) + (y[SPHERE_POINTS + m] - c1).powi(2);
                prop_assert!((d - r * r).abs() <= 1e-10);
            }
            prop_assert!(y.iter().all(|v| v.abs() <= 5.0 + r + 1e-12 && v.abs() <= 15.0));
        }
    }
}
