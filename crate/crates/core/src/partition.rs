//! Partitions of `[n]` and the partition metrics used throughout.
//!
//! Cluster ids are dense 0-based integers renumbered by order of first
//! occurrence, so two label vectors describe the same partition iff their
//! canonical forms are equal.

use crate::error::{FoldError, Result};

/// A clustering of n observations into `k_hat` groups.
///
/// Invariant: labels are canonical — every id in `0..k_hat` occurs, and ids
/// appear in order of first occurrence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Clustering {
    labels: Vec<usize>,
    k_hat: usize,
}

impl Clustering {
    /// Canonicalize a raw label vector: renumber ids by first occurrence.
    /// Preserves the co-clustering relation exactly.
    pub fn canonicalize(raw: &[usize]) -> Result<Self> {
        if raw.is_empty() {
            return Err(FoldError::Empty("label vector".into()));
        }
        let mut map: Vec<(usize, usize)> = Vec::new(); // (raw id, new id), small k
        let mut labels = Vec::with_capacity(raw.len());
        for &r in raw {
            let id = match map.iter().find(|(old, _)| *old == r) {
                Some(&(_, new)) => new,
                None => {
                    let new = map.len();
                    map.push((r, new));
                    new
                }
            };
            labels.push(id);
        }
        Ok(Clustering {
            labels,
            k_hat: map.len(),
        })
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Number of distinct clusters.
    pub fn k(&self) -> usize {
        self.k_hat
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Cluster sizes, indexed by cluster id.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0usize; self.k_hat];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }

    /// Members of each cluster, indexed by cluster id.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.k_hat];
        for (i, &l) in self.labels.iter().enumerate() {
            m[l].push(i);
        }
        m
    }

    /// The one-cluster partition.
    pub fn one_cluster(n: usize) -> Self {
        Clustering {
            labels: vec![0; n],
            k_hat: 1,
        }
    }

    /// The all-singletons partition.
    pub fn singletons(n: usize) -> Self {
        Clustering {
            labels: (0..n).collect(),
            k_hat: n,
        }
    }

    /// Merge clusters `h1` and `h2`, returning the canonical result.
    pub fn merge(&self, h1: usize, h2: usize) -> Result<Self> {
        if h1 >= self.k_hat {
            return Err(FoldError::UnknownCluster {
                id: h1,
                k: self.k_hat,
            });
        }
        if h2 >= self.k_hat {
            return Err(FoldError::UnknownCluster {
                id: h2,
                k: self.k_hat,
            });
        }
        let raw: Vec<usize> = self
            .labels
            .iter()
            .map(|&l| if l == h2 { h1 } else { l })
            .collect();
        Self::canonicalize(&raw)
    }
}

fn check_equal_len(c1: &Clustering, c2: &Clustering) -> Result<()> {
    if c1.n() != c2.n() {
        return Err(FoldError::LengthMismatch {
            left: c1.n(),
            right: c2.n(),
        });
    }
    Ok(())
}

/// Contingency table between two clusterings: counts[h][k] = |C_h ∩ S_k|.
pub fn contingency(c1: &Clustering, c2: &Clustering) -> Vec<Vec<usize>> {
    let mut table = vec![vec![0usize; c2.k()]; c1.k()];
    for i in 0..c1.n() {
        table[c1.label(i)][c2.label(i)] += 1;
    }
    table
}

fn choose2(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Binder distance with unit costs (1, omega):
/// sum over pairs i<j of 1{c1 same}1{c2 diff} + omega * 1{c1 diff}1{c2 same}.
///
/// Zero iff the partitions are equal (for omega > 0); symmetric when omega = 1.
pub fn binder_distance(c1: &Clustering, c2: &Clustering, omega: f64) -> Result<f64> {
    check_equal_len(c1, c2)?;
    // Pair counting via the contingency table:
    //   same-in-c1 pairs      = sum_h C(n_h., 2)
    //   same-in-c2 pairs      = sum_k C(n_.k, 2)
    //   same-in-both pairs    = sum_hk C(n_hk, 2)
    let table = contingency(c1, c2);
    let row_sums: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let mut col_sums = vec![0usize; c2.k()];
    for row in &table {
        for (k, &v) in row.iter().enumerate() {
            col_sums[k] += v;
        }
    }
    let same1: f64 = row_sums.iter().map(|&x| choose2(x)).sum();
    let same2: f64 = col_sums.iter().map(|&x| choose2(x)).sum();
    let both: f64 = table
        .iter()
        .flat_map(|r| r.iter())
        .map(|&x| choose2(x))
        .sum();
    Ok((same1 - both) + omega * (same2 - both))
}

/// Variation of Information in bits (log base 2): H(c1) + H(c2) - 2 I(c1, c2).
///
/// This is the omega = 1 case of the generalized VI loss; it is a metric on
/// partitions. Credible-ball radii computed with this function are in bits.
pub fn vi_distance(c1: &Clustering, c2: &Clustering) -> Result<f64> {
    check_equal_len(c1, c2)?;
    // exact zero for equal partitions: the entropy and mutual-information
    // sums cancel only up to rounding otherwise
    if c1.labels() == c2.labels() {
        return Ok(0.0);
    }
    Ok(vi_loss(c1, c2, 1.0).max(0.0))
}

/// Generalized VI loss with parameter omega, in bits:
/// H(c1) + omega H(c2) - (1 + omega) I(c1, c2).
pub fn vi_loss(c1: &Clustering, c2: &Clustering, omega: f64) -> f64 {
    let n = c1.n() as f64;
    let table = contingency(c1, c2);
    let row_sums: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let mut col_sums = vec![0usize; c2.k()];
    for row in &table {
        for (k, &v) in row.iter().enumerate() {
            col_sums[k] += v;
        }
    }
    let ent = |counts: &[usize]| -> f64 {
        counts
            .iter()
            .filter(|&&x| x > 0)
            .map(|&x| {
                let p = x as f64 / n;
                -p * p.log2()
            })
            .sum()
    };
    let h1 = ent(&row_sums);
    let h2 = ent(&col_sums);
    let mut mi = 0.0;
    for (h, row) in table.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            if v > 0 {
                let p = v as f64 / n;
                mi += p * (v as f64 * n / (row_sums[h] as f64 * col_sums[k] as f64)).log2();
            }
        }
    }
    h1 + omega * h2 - (1.0 + omega) * mi
}

/// Hubert-Arabie adjusted Rand index, in [-1, 1]; 1 iff equal partitions.
pub fn adjusted_rand_index(c1: &Clustering, c2: &Clustering) -> Result<f64> {
    check_equal_len(c1, c2)?;
    let table = contingency(c1, c2);
    let row_sums: Vec<usize> = table.iter().map(|r| r.iter().sum()).collect();
    let mut col_sums = vec![0usize; c2.k()];
    for row in &table {
        for (k, &v) in row.iter().enumerate() {
            col_sums[k] += v;
        }
    }
    let sum_cells: f64 = table
        .iter()
        .flat_map(|r| r.iter())
        .map(|&x| choose2(x))
        .sum();
    let sum_rows: f64 = row_sums.iter().map(|&x| choose2(x)).sum();
    let sum_cols: f64 = col_sums.iter().map(|&x| choose2(x)).sum();
    let total = choose2(c1.n());
    let expected = sum_rows * sum_cols / total;
    let max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index - expected).abs() < 1e-300 {
        // Both partitions trivial (all-singletons vs all-singletons, or both
        // one cluster): define ARI = 1 when identical, matching convention.
        return Ok(1.0);
    }
    Ok((sum_cells - expected) / (max_index - expected))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: &[usize]) -> Clustering {
        Clustering::canonicalize(v).unwrap()
    }

    #[test]
    fn canonicalize_relabels_by_first_occurrence() {
        assert_eq!(c(&[5, 5, 2, 5, 2]).labels(), &[0, 0, 1, 0, 1]);
        assert_eq!(c(&[0, 1, 2]).labels(), &[0, 1, 2]);
        assert_eq!(c(&[3, 3, 3]).labels(), &[0, 0, 0]);
    }

    #[test]
    fn canonicalize_idempotent_preserves_coclustering() {
        let raw = [9usize, 4, 9, 1, 4, 4, 7];
        let c1 = c(&raw);
        let c2 = Clustering::canonicalize(c1.labels()).unwrap();
        assert_eq!(c1, c2);
        for i in 0..raw.len() {
            for j in 0..raw.len() {
                assert_eq!(raw[i] == raw[j], c1.label(i) == c1.label(j));
            }
        }
    }

    #[test]
    fn canonicalize_rejects_empty() {
        assert!(Clustering::canonicalize(&[]).is_err());
    }

    #[test]
    fn binder_identical_is_zero() {
        let x = c(&[0, 1, 1, 2, 0]);
        assert_eq!(binder_distance(&x, &x, 1.0).unwrap(), 0.0);
        assert_eq!(binder_distance(&x, &x, 3.5).unwrap(), 0.0);
    }

    #[test]
    fn binder_hand_examples() {
        // pairs (1,2) and (2,3) each contribute 1
        let v = binder_distance(&c(&[0, 0, 1]), &c(&[0, 1, 1]), 1.0).unwrap();
        assert_eq!(v, 2.0);
        // single pair: c1 same & c2 diff contributes 1 regardless of omega
        let v = binder_distance(&c(&[0, 0]), &c(&[0, 1]), 2.0).unwrap();
        assert_eq!(v, 1.0);
        // flipped roles: c1 diff & c2 same contributes omega
        let v = binder_distance(&c(&[0, 1]), &c(&[0, 0]), 2.0).unwrap();
        assert_eq!(v, 2.0);
    }

    #[test]
    fn binder_direct_pair_evaluation_agrees() {
        // Independent route: direct O(n^2) pair loop.
        let direct = |a: &Clustering, b: &Clustering, w: f64| -> f64 {
            let mut s = 0.0;
            for i in 0..a.n() {
                for j in (i + 1)..a.n() {
                    let s1 = a.label(i) == a.label(j);
                    let s2 = b.label(i) == b.label(j);
                    if s1 && !s2 {
                        s += 1.0;
                    }
                    if !s1 && s2 {
                        s += w;
                    }
                }
            }
            s
        };
        let mut rng = crate::rng::stream_rng(11, 0);
        use rand::Rng;
        for _ in 0..100 {
            let n = rng.gen_range(2..=10);
            let a: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            let b: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            let (ca, cb) = (c(&a), c(&b));
            for w in [0.5, 1.0, 2.0] {
                let fast = binder_distance(&ca, &cb, w).unwrap();
                let slow = direct(&ca, &cb, w);
                assert!((fast - slow).abs() < 1e-10, "{fast} vs {slow}");
            }
        }
    }

    #[test]
    fn binder_symmetric_at_omega_one() {
        let mut rng = crate::rng::stream_rng(12, 0);
        use rand::Rng;
        for _ in 0..100 {
            let n = rng.gen_range(2..=10);
            let a: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            let b: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            let (ca, cb) = (c(&a), c(&b));
            let d1 = binder_distance(&ca, &cb, 1.0).unwrap();
            let d2 = binder_distance(&cb, &ca, 1.0).unwrap();
            assert_eq!(d1, d2);
            assert_eq!(binder_distance(&ca, &ca, 1.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn vi_hand_examples() {
        let x = c(&[0, 1, 0, 2]);
        assert_eq!(vi_distance(&x, &x).unwrap(), 0.0);
        // H = 1 bit each, I = 0
        let v = vi_distance(&c(&[0, 0, 1, 1]), &c(&[0, 1, 0, 1])).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        // H(c1) = 0, H(c2) = 1, I = 0
        let v = vi_distance(&c(&[0, 0, 0, 0]), &c(&[0, 0, 1, 1])).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vi_triangle_inequality_on_random_triples() {
        let mut rng = crate::rng::stream_rng(13, 0);
        use rand::Rng;
        for _ in 0..200 {
            let n = rng.gen_range(2..=8);
            let parts: Vec<Clustering> = (0..3)
                .map(|_| {
                    let v: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                    c(&v)
                })
                .collect();
            let d01 = vi_distance(&parts[0], &parts[1]).unwrap();
            let d12 = vi_distance(&parts[1], &parts[2]).unwrap();
            let d02 = vi_distance(&parts[0], &parts[2]).unwrap();
            assert!(d02 <= d01 + d12 + 1e-9);
            assert!(d01 >= 0.0);
        }
    }

    #[test]
    fn ari_hand_examples() {
        let x = c(&[0, 0, 1, 2, 1]);
        assert_eq!(adjusted_rand_index(&x, &x).unwrap(), 1.0);
        // Contingency cells all 1; frozen from the pair-counting identity
        // 2(ad - bc) / ((a+b)(b+d) + (a+c)(c+d)) with (a,b,c,d) = (0,2,2,2).
        let v = adjusted_rand_index(&c(&[0, 0, 1, 1]), &c(&[0, 1, 0, 1])).unwrap();
        assert!((v - (-0.5)).abs() < 1e-12, "got {v}");
    }

    #[test]
    fn ari_pair_counting_oracle() {
        // Independent oracle: ARI = 2(ad - bc)/((a+b)(b+d) + (a+c)(c+d))
        // where a,b,c,d count pairs by (same,same),(same,diff),(diff,same),(diff,diff).
        let oracle = |x: &Clustering, y: &Clustering| -> f64 {
            let (mut a, mut b, mut cc, mut d) = (0f64, 0f64, 0f64, 0f64);
            for i in 0..x.n() {
                for j in (i + 1)..x.n() {
                    match (x.label(i) == x.label(j), y.label(i) == y.label(j)) {
                        (true, true) => a += 1.0,
                        (true, false) => b += 1.0,
                        (false, true) => cc += 1.0,
                        (false, false) => d += 1.0,
                    }
                }
            }
            let denom = (a + b) * (b + d) + (a + cc) * (cc + d);
            if denom == 0.0 {
                return 1.0;
            }
            2.0 * (a * d - b * cc) / denom
        };
        let mut rng = crate::rng::stream_rng(14, 0);
        use rand::Rng;
        for _ in 0..100 {
            let n = rng.gen_range(3..=12);
            let a: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            let b: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            let (ca, cb) = (c(&a), c(&b));
            let v1 = adjusted_rand_index(&ca, &cb).unwrap();
            let v2 = oracle(&ca, &cb);
            assert!((v1 - v2).abs() < 1e-10, "{v1} vs {v2}");
        }
    }

    #[test]
    fn ari_invariant_under_relabeling() {
        let mut rng = crate::rng::stream_rng(15, 0);
        use rand::Rng;
        for _ in 0..50 {
            let n = rng.gen_range(3..=12);
            let a: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            let b: Vec<usize> = (0..n).map(|_| rng.gen_range(0..4)).collect();
            // permute labels of a
            let shift = rng.gen_range(1..7);
            let a2: Vec<usize> = a.iter().map(|&l| (l * 3 + shift) % 11).collect();
            let v1 = adjusted_rand_index(&c(&a), &c(&b)).unwrap();
            let v2 = adjusted_rand_index(&c(&a2), &c(&b)).unwrap();
            assert!((v1 - v2).abs() < 1e-12);
            let self_v = adjusted_rand_index(&c(&a), &c(&a2)).unwrap();
            assert_eq!(self_v, 1.0);
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let a = c(&[0, 1]);
        let b = c(&[0, 1, 2]);
        assert!(binder_distance(&a, &b, 1.0).is_err());
        assert!(vi_distance(&a, &b).is_err());
        assert!(adjusted_rand_index(&a, &b).is_err());
    }
}
