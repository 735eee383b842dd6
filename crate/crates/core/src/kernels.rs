//! Input kernel, coregionalization matrix and the Kronecker-structured joint
//! covariance `B ⊗ Kx` over (output, input) pairs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Squared-exponential kernel `variance · exp(−‖x − x′‖² / (2 ℓ²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InputKernelParams {
    pub variance: f64,
    pub lengthscale: f64,
}

impl InputKernelParams {
    pub fn new(variance: f64, lengthscale: f64) -> Result<Self> {
        let p = Self {
            variance,
            lengthscale,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance.is_finite() && self.variance > 0.0) {
            return Err(Error::invalid(format!(
                "kernel variance must be > 0, got {}",
                self.variance
            )));
        }
        if !(self.lengthscale.is_finite() && self.lengthscale > 0.0) {
            return Err(Error::invalid(format!(
                "kernel lengthscale must be > 0, got {}",
                self.lengthscale
            )));
        }
        Ok(())
    }

    fn eval_unchecked(&self, x: &[f64], x2: &[f64]) -> f64 {
        let sq: f64 = x.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum();
        self.variance * (-0.5 * sq / (self.lengthscale * self.lengthscale)).exp()
    }
}

impl Default for InputKernelParams {
    fn default() -> Self {
        Self {
            variance: 1.0,
            lengthscale: 1.0,
        }
    }
}

/// Low-rank-plus-diagonal output covariance `B = L Lᵀ + κ I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoregionalizationParams {
    /// `M × r` factor.
    pub factor: DMatrix<f64>,
    pub kappa: f64,
}

impl CoregionalizationParams {
    pub fn new(factor: DMatrix<f64>, kappa: f64) -> Result<Self> {
        let p = Self { factor, kappa };
        p.validate()?;
        Ok(p)
    }

    /// Independent unit-variance outputs: `L = 0`, `κ = 1`, so `B = I`.
    pub fn independent(outputs: usize) -> Self {
        Self {
            factor: DMatrix::zeros(outputs, 1),
            kappa: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.factor.ncols() < 1 {
            return Err(Error::invalid("coregionalization rank must be >= 1"));
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return Err(Error::invalid(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        if self.factor.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("coregionalization factor has non-finite entries"));
        }
        Ok(())
    }

    pub fn outputs(&self) -> usize {
        self.factor.nrows()
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("{what} has non-finite entries")));
    }
    Ok(())
}

/// Kernel value between two input points.
pub fn eval_input_kernel(x: &[f64], x2: &[f64], p: &InputKernelParams) -> Result<f64> {
    if x.len() != x2.len() {
        return Err(Error::invalid(format!(
            "input dimensions differ: {} vs {}",
            x.len(),
            x2.len()
        )));
    }
    check_finite(x, "x")?;
    check_finite(x2, "x2")?;
    p.validate()?;
    Ok(p.eval_unchecked(x, x2))
}

/// Cross-kernel matrix between the rows of `x` and the rows of `x2`.
pub fn input_kernel_matrix(
    x: &DMatrix<f64>,
    x2: &DMatrix<f64>,
    p: &InputKernelParams,
) -> Result<DMatrix<f64>> {
    if x.ncols() != x2.ncols() {
        return Err(Error::invalid(format!(
            "input dimensions differ: {} vs {}",
            x.ncols(),
            x2.ncols()
        )));
    }
    check_finite(x.as_slice(), "x")?;
    check_finite(x2.as_slice(), "x2")?;
    p.validate()?;
    let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
    let rows2: Vec<Vec<f64>> = x2.row_iter().map(|r| r.iter().copied().collect()).collect();
    Ok(DMatrix::from_fn(x.nrows(), x2.nrows(), |i, j| {
        p.eval_unchecked(&rows[i], &rows2[j])
    }))
}

/// Kernel vector between the rows of `x` and a single point.
pub(crate) fn input_kernel_vector(
    x: &DMatrix<f64>,
    point: &[f64],
    p: &InputKernelParams,
) -> DVector<f64> {
    DVector::from_fn(x.nrows(), |i, _| {
        let row: Vec<f64> = x.row(i).iter().copied().collect();
        p.eval_unchecked(&row, point)
    })
}

/// `L Lᵀ + κ I`.
pub fn coregionalization(p: &CoregionalizationParams) -> Result<DMatrix<f64>> {
    p.validate()?;
    let m = p.outputs();
    let mut b = &p.factor * p.factor.transpose();
    for i in 0..m {
        b[(i, i)] += p.kappa;
    }
    // Force exact symmetry; the product is symmetric up to summation order.
    Ok((&b + b.transpose()) * 0.5)
}

/// Dense `MN × MN` covariance over outputs stacked output-major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCovariance {
    pub matrix: DMatrix<f64>,
}

const SYMMETRY_TOL: f64 = 1e-10;

fn check_symmetric(a: &DMatrix<f64>, what: &str) -> Result<()> {
    if !a.is_square() {
        return Err(Error::invalid(format!("{what} is not square")));
    }
    let asym = (a - a.transpose()).amax();
    if asym > SYMMETRY_TOL {
        return Err(Error::invalid(format!("{what} asymmetric by {asym:e}")));
    }
    Ok(())
}

/// Entry `(m·N + i, m′·N + j)` is `B[m, m′] · Kx[i, j]`.
pub fn joint_covariance(b: &DMatrix<f64>, kx: &DMatrix<f64>) -> Result<JointCovariance> {
    check_symmetric(b, "output covariance B")?;
    check_symmetric(kx, "input kernel matrix")?;
    Ok(JointCovariance {
        matrix: b.kronecker(kx),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cholesky_jittered;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-2.0..2.0))
    }

    #[test]
    fn diagonal_and_unit_distance() {
        let p = InputKernelParams::new(2.5, 0.7).unwrap();
        assert_eq!(eval_input_kernel(&[0.3, -1.0], &[0.3, -1.0], &p).unwrap(), 2.5);
        let unit = InputKernelParams::default();
        let v = eval_input_kernel(&[0.0], &[1.0], &unit).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        assert!((v - 0.60653).abs() < 1e-5);
        let far = eval_input_kernel(&[0.0], &[1e3], &unit).unwrap();
        assert!(far < 1e-12);
    }

    #[test]
    fn rejects_non_finite_and_bad_params() {
        let p = InputKernelParams::default();
        assert!(eval_input_kernel(&[f64::NAN], &[0.0], &p).is_err());
        assert!(eval_input_kernel(&[0.0, 1.0], &[0.0], &p).is_err());
        assert!(InputKernelParams::new(0.0, 1.0).is_err());
        assert!(InputKernelParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn kernel_matrix_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = random_matrix(&mut rng, 4, 2);
        let x2 = random_matrix(&mut rng, 3, 2);
        let p = InputKernelParams::new(1.3, 0.8).unwrap();
        let k = input_kernel_matrix(&x, &x2, &p).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                let xi = [x[(i, 0)], x[(i, 1)]];
                let xj = [x2[(j, 0)], x2[(j, 1)]];
                let want = eval_input_kernel(&xi, &xj, &p).unwrap();
                assert_eq!(k[(i, j)], want);
            }
        }
    }

    #[test]
    fn kernel_matrix_shapes() {
        let p = InputKernelParams::new(3.0, 1.0).unwrap();
        let one = DMatrix::from_row_slice(1, 1, &[0.4]);
        let k = input_kernel_matrix(&one, &one, &p).unwrap();
        assert_eq!(k, DMatrix::from_row_slice(1, 1, &[3.0]));

        let dup = DMatrix::from_row_slice(2, 1, &[0.4, 0.4]);
        let k = input_kernel_matrix(&dup, &dup, &p).unwrap();
        assert_eq!(k.row(0), k.row(1));
        assert!(k.determinant().abs() < 1e-12);

        let bad = DMatrix::zeros(2, 2);
        assert!(input_kernel_matrix(&dup, &bad, &p).is_err());
    }

    #[test]
    fn coregionalization_cases() {
        let zero = CoregionalizationParams::new(DMatrix::zeros(3, 1), 1.0).unwrap();
        assert_eq!(coregionalization(&zero).unwrap(), DMatrix::identity(3, 3));
        let ones = CoregionalizationParams::new(DMatrix::from_element(2, 1, 1.0), 0.0).unwrap();
        assert_eq!(
            coregionalization(&ones).unwrap(),
            DMatrix::from_element(2, 2, 1.0)
        );
        assert!(CoregionalizationParams::new(DMatrix::zeros(2, 0), 1.0).is_err());
        assert!(CoregionalizationParams::new(DMatrix::zeros(2, 1), -1.0).is_err());
    }

    #[test]
    fn coregionalization_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l = random_matrix(&mut rng, 4, 2);
        let kappa = 0.37;
        let b = coregionalization(&CoregionalizationParams::new(l.clone(), kappa).unwrap()).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let mut want = if i == j { kappa } else { 0.0 };
                for r in 0..2 {
                    want += l[(i, r)] * l[(j, r)];
                }
                assert!((b[(i, j)] - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn joint_covariance_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_matrix(&mut rng, 3, 3);
        let kx = &a * a.transpose();

        let j = joint_covariance(&DMatrix::identity(2, 2), &kx).unwrap().matrix;
        assert_eq!(j.view((0, 0), (3, 3)), kx);
        assert_eq!(j.view((3, 3), (3, 3)), kx);
        assert!(j.view((0, 3), (3, 3)).iter().all(|&v| v == 0.0));

        let j = joint_covariance(&DMatrix::from_element(1, 1, 2.0), &kx).unwrap().matrix;
        assert_eq!(j, &kx * 2.0);

        let c = random_matrix(&mut rng, 2, 2);
        let b = &c * c.transpose();
        let j = joint_covariance(&b, &kx).unwrap().matrix;
        for m in 0..2 {
            for mp in 0..2 {
                for i in 0..3 {
                    for jj in 0..3 {
                        assert_eq!(j[(m * 3 + i, mp * 3 + jj)], b[(m, mp)] * kx[(i, jj)]);
                    }
                }
            }
        }

        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.0, 1.0]);
        assert!(joint_covariance(&asym, &kx).is_err());
    }

    proptest! {
        #[test]
        fn kernel_symmetric_and_bounded(
            x in prop::collection::vec(-5.0f64..5.0, 3),
            y in prop::collection::vec(-5.0f64..5.0, 3),
            var in 0.1f64..10.0,
            ls in 0.1f64..5.0,
        ) {
            let p = InputKernelParams::new(var, ls).unwrap();
            let a = eval_input_kernel(&x, &y, &p).unwrap();
            let b = eval_input_kernel(&y, &x, &p).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a <= var);
            prop_assert!(a >= 0.0);
            if x != y {
                prop_assert!(a < var);
            }
        }

        #[test]
        fn coregionalization_spectrum_bounded_below_by_kappa(
            entries in prop::collection::vec(-3.0f64..3.0, 8),
            kappa in 0.0f64..2.0,
        ) {
            let l = DMatrix::from_vec(4, 2, entries);
            let b = coregionalization(&CoregionalizationParams::new(l, kappa).unwrap()).unwrap();
            prop_assert_eq!(&b, &b.transpose());
            let eig = nalgebra::SymmetricEigen::new(b).eigenvalues;
            prop_assert!(eig.min() >= kappa - 1e-10);
        }

        #[test]
        fn joint_covariance_of_psd_factors_is_factorizable(
            l_entries in prop::collection::vec(-2.0f64..2.0, 3),
            xs in prop::collection::vec(-3.0f64..3.0, 4),
            kappa in 0.0f64..1.0,
        ) {
            let b = coregionalization(
                &CoregionalizationParams::new(DMatrix::from_vec(3, 1, l_entries), kappa).unwrap(),
            ).unwrap();
            let x = DMatrix::from_vec(4, 1, xs);
            let kx = input_kernel_matrix(&x, &x, &InputKernelParams::default()).unwrap();
            let joint = joint_covariance(&b, &kx).unwrap();
            prop_assert!(cholesky_jittered(&joint.matrix).is_ok());
        }
    }
}
