//! Multi-output Gaussian process regression with an intrinsic
//! coregionalization covariance `B ⊗ Kx` and per-output Gaussian noise.
//!
//! Outputs are stacked output-major: `y = vec(Y)` for the `N × M` output
//! matrix, so the noisy covariance is `B ⊗ Kx + Σ ⊗ I_N`.
//!
//! Likelihood, gradients and predictions are computed through the exact
//! factorization
//!
//! ```text
//! B ⊗ Kx + Σ ⊗ I = (S ⊗ I)(U ⊗ V)(Λ ⊗ D + I)(U ⊗ V)ᵀ(S ⊗ I)
//! ```
//!
//! with `S = Σ^{1/2}`, `S⁻¹ B S⁻¹ = U Λ Uᵀ` and `Kx = V D Vᵀ`. The dense
//! route through [`joint_covariance`] and a jittered Cholesky factor is kept
//! in [`log_marginal_likelihood_dense`] as a cross-check.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernels::{
    coregionalization, input_kernel_matrix, input_kernel_vector, joint_covariance,
    CoregionalizationParams, InputKernelParams,
};
use crate::linalg::{cholesky_jittered, sym_eigen_clipped};
use crate::optim::{self, LbfgsOptions};

/// Smallest admissible noise variance.
pub const NOISE_FLOOR: f64 = 1e-8;

/// Paired inputs (`N × d`) and noisy outputs (`N × M`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    inputs: DMatrix<f64>,
    outputs: DMatrix<f64>,
}

impl Dataset {
    pub fn new(inputs: DMatrix<f64>, outputs: DMatrix<f64>) -> Result<Self> {
        if inputs.nrows() != outputs.nrows() {
            return Err(Error::invalid(format!(
                "{} input rows but {} output rows",
                inputs.nrows(),
                outputs.nrows()
            )));
        }
        if inputs.iter().chain(outputs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("dataset contains non-finite values"));
        }
        Ok(Self { inputs, outputs })
    }

    pub fn empty(input_dim: usize, output_dim: usize) -> Self {
        Self {
            inputs: DMatrix::<f64>::zeros(0, input_dim),
            outputs: DMatrix::<f64>::zeros(0, output_dim),
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.outputs.ncols()
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn outputs(&self) -> &DMatrix<f64> {
        &self.outputs
    }

    pub fn push(&mut self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() || y.len() != self.output_dim() {
            return Err(Error::invalid(format!(
                "observation has shape ({}, {}), dataset expects ({}, {})",
                x.len(),
                y.len(),
                self.input_dim(),
                self.output_dim()
            )));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("observation contains non-finite values"));
        }
        let n = self.len();
        self.inputs = self.inputs.clone().insert_row(n, 0.0);
        self.outputs = self.outputs.clone().insert_row(n, 0.0);
        for (j, v) in x.iter().enumerate() {
            self.inputs[(n, j)] = *v;
        }
        for (j, v) in y.iter().enumerate() {
            self.outputs[(n, j)] = *v;
        }
        Ok(())
    }

    /// Outputs stacked output-major into a length `M·N` vector.
    pub fn stacked_outputs(&self) -> DVector<f64> {
        DVector::from_column_slice(self.outputs.as_slice())
    }
}

/// Per-output noise variances `σ²ₘ`, floored at [`NOISE_FLOOR`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub variances: Vec<f64>,
}

impl NoiseParams {
    pub fn new(variances: Vec<f64>) -> Result<Self> {
        if variances.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("noise variances must be finite and >= 0"));
        }
        Ok(Self {
            variances: variances.into_iter().map(|v| v.max(NOISE_FLOOR)).collect(),
        })
    }

    pub fn uniform(outputs: usize, variance: f64) -> Result<Self> {
        Self::new(vec![variance; outputs])
    }
}

/// Full hyperparameter set of the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub kernel: InputKernelParams,
    pub coreg: CoregionalizationParams,
    pub noise: NoiseParams,
}

impl Hyperparams {
    pub fn validate(&self, outputs: usize) -> Result<()> {
        self.kernel.validate()?;
        self.coreg.validate()?;
        if self.coreg.outputs() != outputs || self.noise.variances.len() != outputs {
            return Err(Error::invalid(format!(
                "hyperparameters sized for {} / {} outputs, data has {outputs}",
                self.coreg.outputs(),
                self.noise.variances.len()
            )));
        }
        if self.noise.variances.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("noise variances must be > 0"));
        }
        Ok(())
    }

    /// Data-informed starting point: the factor spans the leading principal
    /// directions of the raw output second moments.
    pub fn initial_guess(data: &Dataset, rank: usize) -> Self {
        let m = data.output_dim();
        let rank = rank.max(1);
        let n = data.len();
        let second = if n > 0 {
            data.outputs().transpose() * data.outputs() / n as f64
        } else {
            DMatrix::identity(m, m)
        };
        let scale = (second.trace() / m.max(1) as f64).max(1e-6);
        let eig = sym_eigen_clipped(&second);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut factor = DMatrix::<f64>::zeros(m, rank);
        for (r, &idx) in order.iter().take(rank).enumerate() {
            let s = eig.eigenvalues[idx].max(1e-3 * scale).sqrt();
            for i in 0..m {
                factor[(i, r)] = s * eig.eigenvectors[(i, idx)];
            }
        }
        Self {
            kernel: InputKernelParams {
                variance: 1.0,
                lengthscale: 1.0,
            },
            coreg: CoregionalizationParams {
                factor,
                kappa: 0.1 * scale,
            },
            noise: NoiseParams {
                variances: vec![(1e-2 * scale).max(NOISE_FLOOR); m],
            },
        }
    }
}

/// Predictive law `N(mean, covariance)` of the outputs at a test input.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub includes_noise: bool,
}

/// Exact eigen-factorization of `B ⊗ Kx + Σ ⊗ I`.
#[derive(Debug, Clone)]
struct KronFactor {
    /// `S⁻¹ U`.
    p: DMatrix<f64>,
    /// `S U`.
    su: DMatrix<f64>,
    lam_b: DVector<f64>,
    v: DMatrix<f64>,
    d: DVector<f64>,
}

impl KronFactor {
    fn new(b: &DMatrix<f64>, kx: &DMatrix<f64>, noise: &[f64]) -> Self {
        let m = b.nrows();
        let sd: Vec<f64> = noise.iter().map(|v| v.sqrt()).collect();
        let bt = DMatrix::from_fn(m, m, |i, j| b[(i, j)] / (sd[i] * sd[j]));
        let eb = sym_eigen_clipped(&bt);
        let ek = sym_eigen_clipped(kx);
        let u = eb.eigenvectors;
        let p = DMatrix::from_fn(m, m, |i, a| u[(i, a)] / sd[i]);
        let su = DMatrix::from_fn(m, m, |i, a| u[(i, a)] * sd[i]);
        Self {
            p,
            su,
            lam_b: eb.eigenvalues,
            v: ek.eigenvectors,
            d: ek.eigenvalues,
        }
    }

    fn denom(&self, i: usize, a: usize) -> f64 {
        self.lam_b[a] * self.d[i] + 1.0
    }
}

struct Conditioned {
    factor: KronFactor,
    alpha: DMatrix<f64>,
    quad: f64,
    log_det: f64,
}

fn condition(y: &DMatrix<f64>, b: &DMatrix<f64>, kx: &DMatrix<f64>, noise: &[f64]) -> Conditioned {
    let (n, m) = (y.nrows(), y.ncols());
    let factor = KronFactor::new(b, kx, noise);
    let rotated = factor.v.transpose() * y * &factor.p;
    let mut scaled = rotated.clone();
    let mut quad = 0.0;
    let mut log_det = n as f64 * noise.iter().map(|v| v.ln()).sum::<f64>();
    for a in 0..m {
        for i in 0..n {
            let den = factor.denom(i, a);
            scaled[(i, a)] /= den;
            quad += rotated[(i, a)] * scaled[(i, a)];
            log_det += den.ln();
        }
    }
    let alpha = &factor.v * scaled * factor.p.transpose();
    Conditioned {
        factor,
        alpha,
        quad,
        log_det,
    }
}

/// A GP conditioned on a dataset under fixed hyperparameters.
#[derive(Debug, Clone)]
pub struct FittedModel {
    dataset: Dataset,
    hyper: Hyperparams,
    b: DMatrix<f64>,
    factor: KronFactor,
    /// `(K + Σ)⁻¹ y` reshaped to `N × M`.
    alpha: DMatrix<f64>,
    lml: f64,
}

impl FittedModel {
    /// Condition on `dataset` without re-estimating hyperparameters.
    pub fn new(dataset: Dataset, hyper: Hyperparams) -> Result<Self> {
        hyper.validate(dataset.output_dim())?;
        let b = coregionalization(&hyper.coreg)?;
        let kx = input_kernel_matrix(dataset.inputs(), dataset.inputs(), &hyper.kernel)?;
        let c = condition(dataset.outputs(), &b, &kx, &hyper.noise.variances);
        let mn = (dataset.len() * dataset.output_dim()) as f64;
        let lml = -0.5 * c.quad - 0.5 * c.log_det - 0.5 * mn * (2.0 * PI).ln();
        if !lml.is_finite() {
            return Err(Error::numerical("log marginal likelihood is not finite", lml));
        }
        Ok(Self {
            dataset,
            hyper,
            b,
            factor: c.factor,
            alpha: c.alpha,
            lml,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn output_covariance(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// Cached `log p(y | X, θ)`; zero for an empty dataset.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    /// Same data, new hyperparameters.
    pub fn with_hyperparams(&self, hyper: Hyperparams) -> Result<Self> {
        Self::new(self.dataset.clone(), hyper)
    }

    /// Predictive mean and covariance of the outputs at `x_star`.
    pub fn predict(&self, x_star: &[f64], include_noise: bool) -> Result<Posterior> {
        if x_star.len() != self.dataset.input_dim() {
            return Err(Error::invalid(format!(
                "test input has dimension {}, model expects {}",
                x_star.len(),
                self.dataset.input_dim()
            )));
        }
        if x_star.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("test input has non-finite entries"));
        }
        let m = self.dataset.output_dim();
        let n = self.dataset.len();
        let kern = &self.hyper.kernel;
        let k_star = input_kernel_vector(self.dataset.inputs(), x_star, kern);
        let k_ss = kern.variance;

        let mean = if n == 0 {
            DVector::<f64>::zeros(m)
        } else {
            &self.b * (self.alpha.transpose() * &k_star)
        };
        let w = self.factor.v.transpose() * &k_star;
        let f = &self.factor;
        let mut spectrum = DVector::<f64>::zeros(m);
        for a in 0..m {
            let lam = f.lam_b[a];
            let c: f64 = (0..n).map(|i| w[i] * w[i] / f.denom(i, a)).sum();
            spectrum[a] = (lam * k_ss - lam * lam * c).max(0.0);
        }
        let scaled = DMatrix::from_fn(m, m, |i, a| f.su[(i, a)] * spectrum[a]);
        let mut cov = scaled * f.su.transpose();
        cov = (&cov + cov.transpose()) * 0.5;
        if include_noise {
            for (i, v) in self.hyper.noise.variances.iter().enumerate() {
                cov[(i, i)] += v;
            }
        }
        Ok(Posterior {
            mean,
            covariance: cov,
            includes_noise: include_noise,
        })
    }
}

/// `log N(vec(Y) | 0, K + Σ)` of a conditioned model.
pub fn log_marginal_likelihood(model: &FittedModel) -> Result<f64> {
    if model.dataset.is_empty() {
        return Err(Error::invalid("log marginal likelihood needs at least one observation"));
    }
    Ok(model.lml)
}

/// Dense evaluation through the materialized `MN × MN` covariance and a
/// jittered Cholesky factor.
pub fn log_marginal_likelihood_dense(dataset: &Dataset, hyper: &Hyperparams) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::invalid("log marginal likelihood needs at least one observation"));
    }
    hyper.validate(dataset.output_dim())?;
    let n = dataset.len();
    let b = coregionalization(&hyper.coreg)?;
    let kx = input_kernel_matrix(dataset.inputs(), dataset.inputs(), &hyper.kernel)?;
    let mut k = joint_covariance(&b, &kx)?.matrix;
    for (m, v) in hyper.noise.variances.iter().enumerate() {
        for i in 0..n {
            k[(m * n + i, m * n + i)] += v;
        }
    }
    let (chol, _) = cholesky_jittered(&k)?;
    let y = dataset.stacked_outputs();
    let alpha = chol.solve(&y);
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok(-0.5 * y.dot(&alpha) - 0.5 * log_det - 0.5 * y.len() as f64 * (2.0 * PI).ln())
}

/// Partial derivatives of the log marginal likelihood.
#[derive(Debug, Clone, PartialEq)]
pub struct LmlGradient {
    pub log_variance: f64,
    pub log_lengthscale: f64,
    pub log_kappa: f64,
    pub log_noise: Vec<f64>,
    /// With respect to each entry of the coregionalization factor.
    pub factor: DMatrix<f64>,
}

fn squared_distances(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        (0..x.ncols()).map(|c| (x[(i, c)] - x[(j, c)]).powi(2)).sum()
    })
}

fn lml_and_gradient(
    d2: &DMatrix<f64>,
    y: &DMatrix<f64>,
    hyper: &Hyperparams,
) -> (f64, LmlGradient) {
    let (n, m) = (y.nrows(), y.ncols());
    let kern = &hyper.kernel;
    let ls2 = kern.lengthscale * kern.lengthscale;
    let kx = d2.map(|v| kern.variance * (-0.5 * v / ls2).exp());
    let l = &hyper.coreg.factor;
    let mut b = l * l.transpose();
    for i in 0..m {
        b[(i, i)] += hyper.coreg.kappa;
    }
    let noise = &hyper.noise.variances;
    let c = condition(y, &b, &kx, noise);
    let lml = -0.5 * c.quad - 0.5 * c.log_det - 0.5 * (n * m) as f64 * (2.0 * PI).ln();
    let f = &c.factor;
    let a = &c.alpha;

    // Output-covariance direction: G = Aᵀ Kx A − P diag(Σᵢ dᵢ/(λₐdᵢ+1)) Pᵀ.
    let mut t_diag = DVector::<f64>::zeros(m);
    let mut g_diag = DVector::<f64>::zeros(m);
    for ai in 0..m {
        for i in 0..n {
            let den = f.denom(i, ai);
            t_diag[ai] += f.d[i] / den;
            g_diag[ai] += 1.0 / den;
        }
    }
    let pt = DMatrix::from_fn(m, m, |i, ai| f.p[(i, ai)] * t_diag[ai]);
    let g: DMatrix<f64> = a.transpose() * &kx * a - pt * f.p.transpose();
    let d_factor = &g * l;
    let d_kappa = 0.5 * hyper.coreg.kappa * g.trace();

    // Input-kernel direction: H = A B Aᵀ − V diag(Σₐ λₐ/(λₐdᵢ+1)) Vᵀ.
    let e = DVector::from_fn(n, |i, _| {
        (0..m).map(|ai| f.lam_b[ai] / f.denom(i, ai)).sum::<f64>()
    });
    let ve = DMatrix::from_fn(n, n, |i, j| f.v[(i, j)] * e[j]);
    let h: DMatrix<f64> = a * &b * a.transpose() - ve * f.v.transpose();
    let d_var = 0.5 * h.dot(&kx);
    let d_ls = 0.5 * h.zip_map(&kx, |hv, kv| hv * kv).dot(&(d2 / ls2));

    let d_noise = (0..m)
        .map(|mi| {
            let fit: f64 = (0..n).map(|i| a[(i, mi)] * a[(i, mi)]).sum();
            let tr: f64 = (0..m).map(|ai| f.p[(mi, ai)].powi(2) * g_diag[ai]).sum();
            0.5 * noise[mi] * (fit - tr)
        })
        .collect();

    (
        lml,
        LmlGradient {
            log_variance: d_var,
            log_lengthscale: d_ls,
            log_kappa: d_kappa,
            log_noise: d_noise,
            factor: d_factor,
        },
    )
}

/// Analytic gradient of the log marginal likelihood at `hyper`.
pub fn log_marginal_likelihood_gradient(dataset: &Dataset, hyper: &Hyperparams) -> Result<(f64, LmlGradient)> {
    if dataset.is_empty() {
        return Err(Error::invalid("log marginal likelihood needs at least one observation"));
    }
    hyper.validate(dataset.output_dim())?;
    let d2 = squared_distances(dataset.inputs());
    Ok(lml_and_gradient(&d2, dataset.outputs(), hyper))
}

/// Settings for marginal-likelihood maximization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Number of local searches; the first starts at the initial guess.
    pub starts: usize,
    pub max_iters: usize,
    /// Bounds on log10 of variance, lengthscale, κ and noise variances.
    pub log10_bounds: (f64, f64),
    pub learn_noise: bool,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            starts: 5,
            max_iters: 200,
            log10_bounds: (-6.0, 6.0),
            learn_noise: true,
            seed: 0,
        }
    }
}

/// Maps hyperparameters to an unconstrained vector. Positive parameters go
/// through `log p = lo + (hi − lo)·sigmoid(z)`; factor entries are free.
struct ParamMap {
    outputs: usize,
    rank: usize,
    learn_noise: bool,
    lo: f64,
    hi: f64,
    fixed_noise: Vec<f64>,
}

impl ParamMap {
    fn to_z(&self, p: f64) -> f64 {
        let width = self.hi - self.lo;
        let frac = ((p.ln() - self.lo) / width).clamp(1e-9, 1.0 - 1e-9);
        (frac / (1.0 - frac)).ln()
    }

    fn from_z(&self, z: f64) -> (f64, f64) {
        let s = 1.0 / (1.0 + (-z).exp());
        let width = self.hi - self.lo;
        // (value, d log value / dz)
        ((self.lo + width * s).exp(), width * s * (1.0 - s))
    }

    fn encode(&self, h: &Hyperparams) -> Vec<f64> {
        let mut z = vec![
            self.to_z(h.kernel.variance),
            self.to_z(h.kernel.lengthscale),
            self.to_z(h.coreg.kappa.max(f64::MIN_POSITIVE)),
        ];
        if self.learn_noise {
            z.extend(h.noise.variances.iter().map(|v| self.to_z(*v)));
        }
        z.extend(h.coreg.factor.iter().copied());
        z
    }

    /// Hyperparameters plus the chain-rule factors d log p / dz.
    fn decode(&self, z: &[f64]) -> (Hyperparams, Vec<f64>) {
        let mut jac = Vec::with_capacity(3 + self.outputs);
        let mut take = |k: usize| {
            let (v, dj) = self.from_z(z[k]);
            jac.push(dj);
            v
        };
        let variance = take(0);
        let lengthscale = take(1);
        let kappa = take(2);
        let mut off = 3;
        let noise = if self.learn_noise {
            let v: Vec<f64> = (0..self.outputs).map(|m| take(off + m).max(NOISE_FLOOR)).collect();
            off += self.outputs;
            v
        } else {
            self.fixed_noise.clone()
        };
        let factor = DMatrix::from_column_slice(self.outputs, self.rank, &z[off..off + self.outputs * self.rank]);
        (
            Hyperparams {
                kernel: InputKernelParams {
                    variance,
                    lengthscale,
                },
                coreg: CoregionalizationParams { factor, kappa },
                noise: NoiseParams { variances: noise },
            },
            jac,
        )
    }

    fn gradient(&self, g: &LmlGradient, jac: &[f64]) -> Vec<f64> {
        let mut out = vec![
            g.log_variance * jac[0],
            g.log_lengthscale * jac[1],
            g.log_kappa * jac[2],
        ];
        if self.learn_noise {
            out.extend(g.log_noise.iter().zip(&jac[3..]).map(|(a, b)| a * b));
        }
        out.extend(g.factor.iter().copied());
        out
    }
}

/// Maximize the log marginal likelihood from `init` with multi-start L-BFGS
/// on transformed parameters. The result is never worse than `init`.
pub fn fit(data: Dataset, init: &Hyperparams, opts: &FitOptions) -> Result<FittedModel> {
    if data.is_empty() {
        return Err(Error::invalid("cannot fit hyperparameters without data"));
    }
    if opts.starts == 0 {
        return Err(Error::invalid("fit needs at least one start"));
    }
    init.validate(data.output_dim())?;
    let ln10 = std::f64::consts::LN_10;
    let map = ParamMap {
        outputs: data.output_dim(),
        rank: init.coreg.rank(),
        learn_noise: opts.learn_noise,
        lo: opts.log10_bounds.0 * ln10,
        hi: opts.log10_bounds.1 * ln10,
        fixed_noise: init.noise.variances.clone(),
    };
    let d2 = squared_distances(data.inputs());
    let y = data.outputs().clone();
    let objective = |z: &[f64]| {
        let (h, jac) = map.decode(z);
        let (lml, g) = lml_and_gradient(&d2, &y, &h);
        let grad = map.gradient(&g, &jac);
        (-lml, grad.into_iter().map(|v| -v).collect::<Vec<_>>())
    };

    let baseline = FittedModel::new(data.clone(), init.clone());
    let mut best: Option<(f64, Hyperparams)> = baseline
        .as_ref()
        .ok()
        .map(|m| (m.log_marginal_likelihood(), init.clone()));

    let lbfgs = LbfgsOptions {
        max_iters: opts.max_iters,
        ..Default::default()
    };
    let z0 = map.encode(init);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for start in 0..opts.starts {
        let z_start: Vec<f64> = if start == 0 {
            z0.clone()
        } else {
            z0.iter()
                .map(|z| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    z + e
                })
                .collect()
        };
        let Some(res) = optim::minimize(objective, &z_start, &lbfgs) else {
            continue;
        };
        let (h, _) = map.decode(&res.x);
        // Re-evaluate through the public path so the stored value is exactly
        // what the returned model reports.
        let Ok(model) = FittedModel::new(data.clone(), h.clone()) else {
            continue;
        };
        let lml = model.log_marginal_likelihood();
        if best.as_ref().is_none_or(|(b, _)| lml > *b) {
            best = Some((lml, h));
        }
    }
    match best {
        Some((_, h)) => FittedModel::new(data, h),
        None => Err(Error::numerical(
            "every hyperparameter start failed to factorize",
            f64::NAN,
        )),
    }
}
