//! The pairwise fusing loss, its posterior risk, the Binder decomposition,
//! and the merge criterion.
//!
//! Loss and risk share one implementation: evaluating [`fold_loss`] on a
//! single-draw distance matrix gives the loss L(c, theta); evaluating it on
//! the posterior-expected matrix Delta gives the risk R(c), by linearity of
//! expectation.

use crate::delta::DeltaMatrix;
use crate::error::{FoldError, Result};
use crate::kernel::hellinger_gaussian;
use crate::mixture::MixtureDraw;
use crate::partition::Clustering;
use serde::{Deserialize, Serialize};

/// Loss parameter omega > 0 and the derived merge threshold
/// gamma = omega / (1 + omega) in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossParams {
    omega: f64,
    gamma: f64,
}

impl LossParams {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(FoldError::InvalidParam(format!(
                "omega must be positive and finite, got {omega}"
            )));
        }
        Ok(LossParams {
            omega,
            gamma: omega / (1.0 + omega),
        })
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// Risk of a clustering together with the pair count and omega used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskReport {
    pub risk: f64,
    pub n_pairs: usize,
    pub omega: f64,
}

/// sum over pairs i<j of 1{c_i = c_j} D_ij + omega 1{c_i != c_j}(1 - D_ij).
pub fn fold_loss(c: &Clustering, dmat: &DeltaMatrix, params: &LossParams) -> Result<f64> {
    if c.n() != dmat.n() {
        return Err(FoldError::SizeMismatch {
            expected: c.n(),
            got: dmat.n(),
        });
    }
    let n = c.n();
    let omega = params.omega();
    let mut loss = 0.0;
    for i in 0..n {
        let li = c.label(i);
        let row = dmat.row(i);
        for j in (i + 1)..n {
            let d = row[j];
            if li == c.label(j) {
                loss += d;
            } else {
                loss += omega * (1.0 - d);
            }
        }
    }
    Ok(loss)
}

/// Risk report for a clustering against Delta.
pub fn risk_report(c: &Clustering, dmat: &DeltaMatrix, params: &LossParams) -> Result<RiskReport> {
    let risk = fold_loss(c, dmat, params)?;
    Ok(RiskReport {
        risk,
        n_pairs: c.n() * (c.n() - 1) / 2,
        omega: params.omega(),
    })
}

/// Split the per-draw loss into Binder's loss against the draw's allocations
/// plus the kernel-overlap remainder, via the contingency-table closed form.
/// Their sum equals `fold_loss` on the draw's distance matrix.
///
/// Returns (binder_part, b_part).
pub fn binder_decomposition(
    c: &Clustering,
    draw: &MixtureDraw,
    params: &LossParams,
) -> Result<(f64, f64)> {
    if c.n() != draw.n() {
        return Err(FoldError::SizeMismatch {
            expected: c.n(),
            got: draw.n(),
        });
    }
    let omega = params.omega();
    let k = draw.k();
    let kc = c.k();
    // n_hk = |C_h intersect S_k| over raw component ids
    let mut table = vec![vec![0usize; k]; kc];
    for i in 0..c.n() {
        table[c.label(i)][draw.alloc()[i]] += 1;
    }
    let comp_sizes = draw.counts();
    let cluster_sizes = c.sizes();
    let choose2 = |x: usize| {
        let x = x as f64;
        x * (x - 1.0) / 2.0
    };

    let sum_rows: f64 = cluster_sizes.iter().map(|&x| choose2(x)).sum();
    let sum_cols: f64 = comp_sizes.iter().map(|&x| choose2(x)).sum();
    let sum_cells: f64 = table
        .iter()
        .flat_map(|r| r.iter())
        .map(|&x| choose2(x))
        .sum();
    let binder_part = sum_rows + omega * sum_cols - (1.0 + omega) * sum_cells;

    // eta_{kk'} only matters for component pairs that are both non-empty
    let mut b_part = 0.0;
    for k1 in 0..k {
        if comp_sizes[k1] == 0 {
            continue;
        }
        for k2 in (k1 + 1)..k {
            if comp_sizes[k2] == 0 {
                continue;
            }
            let eta = hellinger_gaussian(&draw.kernels()[k1], &draw.kernels()[k2])?;
            let one_minus = 1.0 - eta;
            b_part += omega * (comp_sizes[k1] * comp_sizes[k2]) as f64 * one_minus;
            let mut within = 0.0;
            for row in &table {
                within += (row[k1] * row[k2]) as f64;
            }
            b_part -= (1.0 + omega) * within * one_minus;
        }
    }
    Ok((binder_part, b_part))
}

/// Loss reduction from merging clusters h1 and h2:
/// omega sum_cross (1 - D_ij) - sum_cross D_ij.
/// Positive iff merging lowers the loss, equivalently iff the mean
/// cross-cluster distance is below gamma.
pub fn merge_gain(
    c: &Clustering,
    h1: usize,
    h2: usize,
    dmat: &DeltaMatrix,
    params: &LossParams,
) -> Result<f64> {
    if c.n() != dmat.n() {
        return Err(FoldError::SizeMismatch {
            expected: c.n(),
            got: dmat.n(),
        });
    }
    if h1 >= c.k() || h2 >= c.k() || h1 == h2 {
        return Err(FoldError::UnknownCluster {
            id: h1.max(h2),
            k: c.k(),
        });
    }
    let members = c.members();
    let omega = params.omega();
    let mut gain = 0.0;
    for &i in &members[h1] {
        let row = dmat.row(i);
        for &j in &members[h2] {
            let d = row[j];
            gain += omega * (1.0 - d) - d;
        }
    }
    Ok(gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::GaussianKernel;
    use nalgebra::{DMatrix, DVector};

    fn c(v: &[usize]) -> Clustering {
        Clustering::canonicalize(v).unwrap()
    }

    fn mat(vals: &[&[f64]]) -> DeltaMatrix {
        let n = vals.len();
        let flat: Vec<f64> = vals.iter().flat_map(|r| r.iter().copied()).collect();
        DeltaMatrix::new(flat, n).unwrap()
    }

    fn k1(m: f64) -> GaussianKernel {
        GaussianKernel::new(DVector::from_element(1, m), DMatrix::identity(1, 1)).unwrap()
    }

    #[test]
    fn hand_example_three_points() {
        let d = mat(&[
            &[0.0, 0.2, 0.9],
            &[0.2, 0.0, 0.8],
            &[0.9, 0.8, 0.0],
        ]);
        let params = LossParams::new(1.0).unwrap();
        let loss = fold_loss(&c(&[0, 0, 1]), &d, &params).unwrap();
        assert!((loss - 0.5).abs() < 1e-15);
    }

    #[test]
    fn one_cluster_loss_is_total_distance() {
        let d = mat(&[
            &[0.0, 0.2, 0.9],
            &[0.2, 0.0, 0.8],
            &[0.9, 0.8, 0.0],
        ]);
        let params = LossParams::new(2.5).unwrap();
        let loss = fold_loss(&Clustering::one_cluster(3), &d, &params).unwrap();
        assert!((loss - (0.2 + 0.9 + 0.8)).abs() < 1e-15);
    }

    #[test]
    fn singleton_loss_vanishes_as_omega_to_zero() {
        let d = mat(&[
            &[0.0, 0.2, 0.9],
            &[0.2, 0.0, 0.8],
            &[0.9, 0.8, 0.0],
        ]);
        let singletons = Clustering::singletons(3);
        let mut prev = f64::INFINITY;
        for omega in [1.0, 0.1, 0.01, 1e-6] {
            let params = LossParams::new(omega).unwrap();
            let loss = fold_loss(&singletons, &d, &params).unwrap();
            assert!(loss < prev);
            prev = loss;
            // singletons minimize: compare against a couple of alternatives
            for alt in [c(&[0, 0, 1]), Clustering::one_cluster(3)] {
                if omega < 0.05 {
                    assert!(loss <= fold_loss(&alt, &d, &params).unwrap());
                }
            }
        }
        let params = LossParams::new(1e-12).unwrap();
        assert!(fold_loss(&singletons, &d, &params).unwrap() < 1e-11);
    }

    #[test]
    fn loss_invariant_under_relabeling_and_index_permutation() {
        let mut rng = crate::rng::stream_rng(31, 0);
        use rand::Rng;
        for _ in 0..30 {
            let n = rng.gen_range(3..=9);
            let mut vals = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let v: f64 = rng.gen_range(0.0..1.0);
                    vals[i * n + j] = v;
                    vals[j * n + i] = v;
                }
            }
            let d = DeltaMatrix::new(vals.clone(), n).unwrap();
            let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            let params = LossParams::new(rng.gen_range(0.2..3.0)).unwrap();
            let base = fold_loss(&c(&labels), &d, &params).unwrap();
            // relabeled
            let relabeled: Vec<usize> = labels.iter().map(|&l| (l + 5) * 7 % 13).collect();
            let l2 = fold_loss(&c(&relabeled), &d, &params).unwrap();
            assert!((base - l2).abs() < 1e-12);
            // simultaneous index permutation
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                perm.swap(i, j);
            }
            let plabels: Vec<usize> = (0..n).map(|i| labels[perm[i]]).collect();
            let mut pvals = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    pvals[i * n + j] = vals[perm[i] * n + perm[j]];
                }
            }
            let pd = DeltaMatrix::new(pvals, n).unwrap();
            let l3 = fold_loss(&c(&plabels), &pd, &params).unwrap();
            assert!((base - l3).abs() < 1e-12);
        }
    }

    #[test]
    fn merge_gain_hand_examples() {
        // singleton clusters, omega = 1, D_ij = 0.3: gain = 0.7 - 0.3 = 0.4
        let d = mat(&[&[0.0, 0.3], &[0.3, 0.0]]);
        let params = LossParams::new(1.0).unwrap();
        let g = merge_gain(&c(&[0, 1]), 0, 1, &d, &params).unwrap();
        assert!((g - 0.4).abs() < 1e-15);

        // all cross distances at gamma exactly: gain = 0 (within float noise)
        let params = LossParams::new(1.7).unwrap();
        let gam = params.gamma();
        let d = mat(&[
            &[0.0, 0.0, gam, gam],
            &[0.0, 0.0, gam, gam],
            &[gam, gam, 0.0, 0.0],
            &[gam, gam, 0.0, 0.0],
        ]);
        let g = merge_gain(&c(&[0, 0, 1, 1]), 0, 1, &d, &params).unwrap();
        assert!(g.abs() < 1e-12);

        // distances 1 across: gain = -(#cross pairs), never merge
        let d = mat(&[&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0], &[1.0, 1.0, 0.0]]);
        let params = LossParams::new(3.0).unwrap();
        let g = merge_gain(&c(&[0, 0, 1]), 0, 1, &d, &params).unwrap();
        assert!((g - (-2.0)).abs() < 1e-15);
    }

    #[test]
    fn merge_gain_equals_loss_difference_and_sign_criterion() {
        let mut rng = crate::rng::stream_rng(32, 0);
        use rand::Rng;
        for _ in 0..50 {
            let n = rng.gen_range(4..=12);
            let mut vals = vec![0.0; n * n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let v: f64 = rng.gen_range(0.0..1.0);
                    vals[i * n + j] = v;
                    vals[j * n + i] = v;
                }
            }
            let d = DeltaMatrix::new(vals, n).unwrap();
            let labels: Vec<usize> = (0..n).map(|i| if i < 2 { i } else { rng.gen_range(0..3) }).collect();
            let cl = c(&labels);
            if cl.k() < 2 {
                continue;
            }
            let params = LossParams::new(rng.gen_range(0.2..4.0)).unwrap();
            let (h1, h2) = (0, 1);
            let gain = merge_gain(&cl, h1, h2, &d, &params).unwrap();
            let merged = cl.merge(h1, h2).unwrap();
            let diff = fold_loss(&cl, &d, &params).unwrap()
                - fold_loss(&merged, &d, &params).unwrap();
            assert!((gain - diff).abs() < 1e-10);
            // sign equivalence with the mean-cross-distance criterion
            let members = cl.members();
            let mut cross = 0.0;
            let mut count = 0.0;
            for &i in &members[h1] {
                for &j in &members[h2] {
                    cross += d.get(i, j);
                    count += 1.0;
                }
            }
            let mean_cross = cross / count;
            if gain > 1e-12 {
                assert!(mean_cross < params.gamma());
            } else if gain < -1e-12 {
                assert!(mean_cross > params.gamma());
            }
        }
    }

    #[test]
    fn merge_gain_rejects_unknown_ids() {
        let d = mat(&[&[0.0, 0.3], &[0.3, 0.0]]);
        let params = LossParams::new(1.0).unwrap();
        assert!(merge_gain(&c(&[0, 1]), 0, 5, &d, &params).is_err());
        assert!(merge_gain(&c(&[0, 1]), 1, 1, &d, &params).is_err());
    }

    #[test]
    fn decomposition_sums_to_per_draw_loss() {
        let mut rng = crate::rng::stream_rng(33, 0);
        use rand::Rng;
        for _ in 0..100 {
            let n = rng.gen_range(3..=8);
            let k = rng.gen_range(1..=3);
            let kernels: Vec<GaussianKernel> =
                (0..k).map(|_| k1(rng.gen_range(-4.0..4.0))).collect();
            let alloc: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
            let draw =
                MixtureDraw::new(vec![1.0 / k as f64; k], kernels, alloc).unwrap();
            let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            let cl = c(&labels);
            let params = LossParams::new(rng.gen_range(0.3..3.0)).unwrap();
            let (bp, rp) = binder_decomposition(&cl, &draw, &params).unwrap();
            let direct = fold_loss(
                &cl,
                &crate::delta::per_draw_distance_matrix(&draw).unwrap(),
                &params,
            )
            .unwrap();
            assert!(
                (bp + rp - direct).abs() < 1e-9,
                "{bp} + {rp} != {direct}"
            );
            // binder_part alone must equal the Binder distance to the draw's labels
            let alloc_c = Clustering::canonicalize(draw.alloc()).unwrap();
            let bd = crate::partition::binder_distance(&cl, &alloc_c, params.omega()).unwrap();
            assert!((bp - bd).abs() < 1e-9);
        }
    }

    #[test]
    fn decomposition_b_part_zero_iff_saturated() {
        // c = s, kernels far apart: eta ~= 1, so b_part ~= 0
        let kernels = vec![k1(0.0), k1(1e3)];
        let alloc = vec![0, 0, 1, 1];
        let draw = MixtureDraw::new(vec![0.5, 0.5], kernels, alloc.clone()).unwrap();
        let params = LossParams::new(1.0).unwrap();
        let cl = Clustering::canonicalize(&alloc).unwrap();
        let (bp, rp) = binder_decomposition(&cl, &draw, &params).unwrap();
        assert_eq!(bp, 0.0);
        assert!(rp.abs() < 1e-9);

        // K = 1: no kernel pairs, b_part = 0, binder reduces to omega * split pairs
        let draw = MixtureDraw::new(vec![1.0], vec![k1(0.0)], vec![0, 0, 0]).unwrap();
        let params = LossParams::new(2.0).unwrap();
        let (bp, rp) = binder_decomposition(&c(&[0, 1, 1]), &draw, &params).unwrap();
        assert_eq!(rp, 0.0);
        assert!((bp - 2.0 * 2.0).abs() < 1e-12); // two split pairs, omega = 2
    }
}
