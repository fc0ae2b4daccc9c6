//! One posterior draw of a finite mixture: weights, kernels, allocations.

use crate::error::{FoldError, Result};
use crate::kernel::GaussianKernel;

/// A single mixture state. `alloc[i]` is the component of observation i, so
/// the localized density of i is `kernels[alloc[i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureDraw {
    weights: Vec<f64>,
    kernels: Vec<GaussianKernel>,
    alloc: Vec<usize>,
}

impl MixtureDraw {
    pub fn new(weights: Vec<f64>, kernels: Vec<GaussianKernel>, alloc: Vec<usize>) -> Result<Self> {
        let k = weights.len();
        if kernels.len() != k {
            return Err(FoldError::LengthMismatch {
                left: k,
                right: kernels.len(),
            });
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(FoldError::InvalidParam("negative or non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(FoldError::InvalidParam(format!(
                "weights sum to {total}, not 1"
            )));
        }
        if alloc.iter().any(|&s| s >= k) {
            return Err(FoldError::InvalidParam("allocation out of range".into()));
        }
        Ok(MixtureDraw {
            weights,
            kernels,
            alloc,
        })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn n(&self) -> usize {
        self.alloc.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kernels(&self) -> &[GaussianKernel] {
        &self.kernels
    }

    pub fn alloc(&self) -> &[usize] {
        &self.alloc
    }

    /// The kernel of the component observation i is allocated to.
    pub fn localized_params(&self, i: usize) -> &GaussianKernel {
        &self.kernels[self.alloc[i]]
    }

    /// Component ids with at least one allocated observation, ascending.
    pub fn occupied(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.k()];
        for &s in &self.alloc {
            counts[s] += 1;
        }
        (0..self.k()).filter(|&k| counts[k] > 0).collect()
    }

    /// Per-component allocation counts.
    pub fn counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.k()];
        for &s in &self.alloc {
            counts[s] += 1;
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn unit_kernel(m: f64) -> GaussianKernel {
        GaussianKernel::new(DVector::from_element(1, m), DMatrix::identity(1, 1)).unwrap()
    }

    #[test]
    fn localized_params_is_direct_lookup() {
        let a = unit_kernel(0.0);
        let b = unit_kernel(5.0);
        let draw = MixtureDraw::new(vec![0.5, 0.5], vec![a.clone(), b.clone()], vec![1, 0]).unwrap();
        assert_eq!(draw.localized_params(0), &b);
        assert_eq!(draw.localized_params(1), &a);
        for i in 0..draw.n() {
            assert_eq!(draw.localized_params(i), &draw.kernels()[draw.alloc()[i]]);
        }
    }

    #[test]
    fn same_allocation_shares_localized_density() {
        let draw = MixtureDraw::new(
            vec![0.7, 0.3],
            vec![unit_kernel(1.0), unit_kernel(2.0)],
            vec![0, 0],
        )
        .unwrap();
        assert_eq!(draw.localized_params(0), draw.localized_params(1));
    }

    #[test]
    fn invalid_draws_rejected() {
        let ks = vec![unit_kernel(0.0), unit_kernel(1.0)];
        assert!(MixtureDraw::new(vec![0.6, 0.6], ks.clone(), vec![0]).is_err());
        assert!(MixtureDraw::new(vec![0.5, 0.5], ks.clone(), vec![2]).is_err());
        assert!(MixtureDraw::new(vec![-0.1, 1.1], ks, vec![0]).is_err());
    }
}
