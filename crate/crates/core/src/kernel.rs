//! Gaussian kernels and the closed-form Hellinger distance between them.

use crate::error::{FoldError, Result};
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

const LN_2PI: f64 = 1.8378770664093453;

/// Multivariate Gaussian kernel with a cached lower Cholesky factor of the
/// covariance. Construction fails if the covariance is asymmetric beyond
/// 1e-12 or not positive-definite.
#[derive(Debug, Clone)]
pub struct GaussianKernel {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    l: DMatrix<f64>,
    log_det: f64,
}

impl PartialEq for GaussianKernel {
    fn eq(&self, other: &Self) -> bool {
        self.mean == other.mean && self.l == other.l
    }
}

impl GaussianKernel {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let p = mean.len();
        if cov.nrows() != p || cov.ncols() != p {
            return Err(FoldError::SizeMismatch {
                expected: p,
                got: cov.nrows(),
            });
        }
        for i in 0..p {
            for j in (i + 1)..p {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 {
                    return Err(FoldError::InvalidParam(format!(
                        "covariance asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        let chol = Cholesky::new(cov.clone()).ok_or_else(|| FoldError::Cholesky {
            context: "kernel covariance".into(),
        })?;
        let l = chol.l();
        let log_det = 2.0 * (0..p).map(|i| l[(i, i)].ln()).sum::<f64>();
        Ok(GaussianKernel {
            mean,
            cov,
            l,
            log_det,
        })
    }

    /// Build from a lower-triangular factor; cov is set to L L^T so a kernel
    /// serialized through its factor reloads bit-for-bit.
    pub fn from_cholesky(mean: DVector<f64>, l: DMatrix<f64>) -> Result<Self> {
        let p = mean.len();
        if l.nrows() != p || l.ncols() != p {
            return Err(FoldError::SizeMismatch {
                expected: p,
                got: l.nrows(),
            });
        }
        if (0..p).any(|i| l[(i, i)] <= 0.0 || !l[(i, i)].is_finite()) {
            return Err(FoldError::Cholesky {
                context: "non-positive diagonal in supplied factor".into(),
            });
        }
        let l = l.lower_triangle();
        let cov = &l * l.transpose();
        let log_det = 2.0 * (0..p).map(|i| l[(i, i)].ln()).sum::<f64>();
        Ok(GaussianKernel {
            mean,
            cov,
            l,
            log_det,
        })
    }

    pub fn p(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Lower-triangular factor L with cov = L L^T.
    pub fn chol_l(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn log_det_cov(&self) -> f64 {
        self.log_det
    }

    /// Log density at x.
    pub fn log_density(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let y = self.l.solve_lower_triangular(&diff).unwrap();
        -0.5 * (self.p() as f64 * LN_2PI + self.log_det + y.norm_squared())
    }

    pub fn density(&self, x: &DVector<f64>) -> f64 {
        self.log_density(x).exp()
    }

    /// Draw one sample: mean + L z with z standard normal.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_iterator(
            self.p(),
            (0..self.p()).map(|_| rng.sample::<f64, _>(StandardNormal)),
        );
        &self.mean + &self.l * z
    }
}

/// Closed-form Hellinger distance between two Gaussians:
/// H = sqrt(1 - BC) with
/// BC = det(S1)^{1/4} det(S2)^{1/4} det(Sbar)^{-1/2} exp(-(1/8) d^T Sbar^{-1} d),
/// Sbar = (S1 + S2)/2, d = mu1 - mu2. Computed through Cholesky
/// log-determinants; BC is clamped to [0, 1] before the square root.
pub fn hellinger_gaussian(g1: &GaussianKernel, g2: &GaussianKernel) -> Result<f64> {
    if g1.p() != g2.p() {
        return Err(FoldError::SizeMismatch {
            expected: g1.p(),
            got: g2.p(),
        });
    }
    let sbar = (g1.cov() + g2.cov()) * 0.5;
    let chol_bar = Cholesky::new(sbar).ok_or_else(|| FoldError::Cholesky {
        context: "averaged covariance".into(),
    })?;
    let lbar = chol_bar.l_dirty();
    let log_det_bar = 2.0 * (0..g1.p()).map(|i| lbar[(i, i)].ln()).sum::<f64>();
    let diff = g1.mean() - g2.mean();
    let y = lbar.solve_lower_triangular(&diff).unwrap();
    let log_bc = 0.25 * (g1.log_det_cov() + g2.log_det_cov()) - 0.5 * log_det_bar
        - 0.125 * y.norm_squared();
    let bc = log_bc.exp().clamp(0.0, 1.0);
    Ok((1.0 - bc).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn kernel(mean: &[f64], cov: &[&[f64]]) -> GaussianKernel {
        let p = mean.len();
        let m = DVector::from_column_slice(mean);
        let c = DMatrix::from_fn(p, p, |i, j| cov[i][j]);
        GaussianKernel::new(m, c).unwrap()
    }

    #[test]
    fn identical_kernels_have_zero_distance() {
        let g = kernel(&[1.0, -2.0], &[&[2.0, 0.3], &[0.3, 1.0]]);
        assert_eq!(hellinger_gaussian(&g, &g).unwrap(), 0.0);
    }

    #[test]
    fn univariate_closed_form() {
        // mu1=0, mu2=1, unit variances: H = sqrt(1 - exp(-1/8))
        let g1 = kernel(&[0.0], &[&[1.0]]);
        let g2 = kernel(&[1.0], &[&[1.0]]);
        let h = hellinger_gaussian(&g1, &g2).unwrap();
        let expect = (1.0 - (-0.125f64).exp()).sqrt();
        assert!((h - expect).abs() < 1e-14);
    }

    #[test]
    fn univariate_matches_quadrature() {
        // Oracle: 1 - BC = (1/2) integral (sqrt f1 - sqrt f2)^2 on a fine grid.
        let cases = [
            (0.0, 1.0, 1.0, 1.0),
            (0.0, 1.0, 1.0, 4.0),
            (-0.7, 0.5, 1.3, 2.0),
            (2.0, 3.0, 0.2, 0.3),
        ];
        for &(m1, m2, v1, v2) in &cases {
            let g1 = kernel(&[m1], &[&[v1]]);
            let g2 = kernel(&[m2], &[&[v2]]);
            let h = hellinger_gaussian(&g1, &g2).unwrap();
            // trapezoid rule over +-12 sd around both means
            let lo = (m1 - 12.0 * v1.sqrt()).min(m2 - 12.0 * v2.sqrt());
            let hi = (m1 + 12.0 * v1.sqrt()).max(m2 + 12.0 * v2.sqrt());
            let steps = 400_000usize;
            let dx = (hi - lo) / steps as f64;
            let f = |x: f64, m: f64, v: f64| {
                (-0.5 * (x - m) * (x - m) / v).exp() / (2.0 * std::f64::consts::PI * v).sqrt()
            };
            let mut acc = 0.0;
            for s in 0..=steps {
                let x = lo + s as f64 * dx;
                let d = (f(x, m1, v1).sqrt() - f(x, m2, v2).sqrt()).powi(2);
                let w = if s == 0 || s == steps { 0.5 } else { 1.0 };
                acc += w * d;
            }
            let h2 = 0.5 * acc * dx;
            assert!(
                (h - h2.sqrt()).abs() < 1e-6,
                "closed {h} vs quadrature {}",
                h2.sqrt()
            );
        }
    }

    #[test]
    fn equal_quarter_identity_covariances_reduce_to_pure_exponential() {
        // With S1 = S2 = (1/4) I in 2-D, 1 - H^2 = exp(-||mu1-mu2||^2 / 2)
        // with proportionality constant exactly 1.
        let cov = [&[0.25, 0.0][..], &[0.0, 0.25][..]];
        let g1 = kernel(&[0.3, -1.2], &cov);
        let g2 = kernel(&[1.5, 0.4], &cov);
        let h = hellinger_gaussian(&g1, &g2).unwrap();
        let d2 = (g1.mean() - g2.mean()).norm_squared();
        assert!((1.0 - h * h - (-0.5 * d2).exp()).abs() < 1e-14);
    }

    #[test]
    fn symmetric_in_arguments() {
        let g1 = kernel(&[0.0, 0.0], &[&[1.0, 0.2], &[0.2, 2.0]]);
        let g2 = kernel(&[1.0, -1.0], &[&[0.5, -0.1], &[-0.1, 0.8]]);
        let a = hellinger_gaussian(&g1, &g2).unwrap();
        let b = hellinger_gaussian(&g2, &g1).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn far_separated_kernels_saturate_to_one() {
        let g1 = kernel(&[0.0], &[&[1.0]]);
        let g2 = kernel(&[60.0], &[&[1.0]]);
        let h = hellinger_gaussian(&g1, &g2).unwrap();
        assert!((h - 1.0).abs() < 1e-6);
    }

    #[test]
    fn non_pd_covariance_rejected() {
        let m = dvector![0.0, 0.0];
        let c = dmatrix![1.0, 2.0; 2.0, 1.0];
        assert!(GaussianKernel::new(m, c).is_err());
    }

    #[test]
    fn cholesky_roundtrip_is_exact() {
        let g = kernel(&[0.5, 1.5], &[&[1.7, 0.4], &[0.4, 0.9]]);
        let l = g.chol_l().clone();
        let g2 = GaussianKernel::from_cholesky(g.mean().clone(), l.clone()).unwrap();
        assert_eq!(g2.chol_l(), &l);
        assert!((g.cov() - g2.cov()).abs().max() < 1e-14);
    }

    #[test]
    fn log_density_matches_direct_formula() {
        let g = kernel(&[1.0, -1.0], &[&[2.0, 0.5], &[0.5, 1.0]]);
        let x = dvector![0.3, 0.7];
        let det: f64 = 2.0 * 1.0 - 0.5 * 0.5;
        let inv = dmatrix![1.0/det, -0.5/det; -0.5/det, 2.0/det];
        let d = &x - g.mean();
        let expect = -0.5 * (2.0 * LN_2PI + det.ln() + (inv * &d).dot(&d));
        assert!((g.log_density(&x) - expect).abs() < 1e-12);
    }
}
