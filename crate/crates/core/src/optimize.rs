//! Point-estimate search over partitions: average-linkage candidate trees on
//! a distance matrix, a greedy reallocation search with restarts, and
//! exhaustive enumeration for small n.
//!
//! All searches run on a weighted instance (items with multiplicities) so the
//! per-draw minimizers can collapse observations sharing a component into one
//! block; the public entry points use unit weights.

use crate::delta::DeltaMatrix;
use crate::error::{FoldError, Result};
use crate::loss::{fold_loss, LossParams};
use crate::partition::Clustering;
use crate::rng::stream_rng;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

/// Tree of nested clusterings from n singletons down to one cluster,
/// with the linkage dissimilarity of each merge.
#[derive(Debug, Clone)]
pub struct CandidatePath {
    clusterings: Vec<Clustering>,
    merge_heights: Vec<f64>,
}

impl CandidatePath {
    pub fn clusterings(&self) -> &[Clustering] {
        &self.clusterings
    }

    pub fn merge_heights(&self) -> &[f64] {
        &self.merge_heights
    }

    /// Member with exactly k clusters, if present (it is, for 1 <= k <= n).
    pub fn with_k(&self, k: usize) -> Option<&Clustering> {
        self.clusterings.iter().find(|c| c.k() == k)
    }
}

/// Restarted greedy search configuration.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct GreedyConfig {
    pub restarts: usize,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for GreedyConfig {
    fn default() -> Self {
        GreedyConfig {
            restarts: 16,
            max_sweeps: 100,
            seed: 0,
        }
    }
}

impl GreedyConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts < 1 || self.max_sweeps < 1 {
            return Err(FoldError::InvalidParam(
                "restarts and max_sweeps must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Standard agglomerative average-linkage (UPGMA) tree using the matrix as
/// dissimilarity. Ties broken by the lexicographically lowest slot pair.
pub fn average_linkage_path(dmat: &DeltaMatrix) -> CandidatePath {
    average_linkage_path_weighted(dmat, &vec![1usize; dmat.n()])
}

/// Weighted UPGMA over m items with multiplicities. Equivalent to running
/// unweighted UPGMA on the expanded matrix where item b is repeated sizes[b]
/// times (at zero self-distance), but O(m^3) instead of O(n^3).
pub fn average_linkage_path_weighted(dmat: &DeltaMatrix, sizes: &[usize]) -> CandidatePath {
    let m = dmat.n();
    assert_eq!(sizes.len(), m);
    // active[s] = Some(weight of cluster at slot s); labels map item -> slot
    let mut weight: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let mut active: Vec<bool> = vec![true; m];
    let mut dist: Vec<f64> = dmat.as_slice().to_vec();
    let mut labels: Vec<usize> = (0..m).collect();

    let mut clusterings = Vec::with_capacity(m);
    let mut merge_heights = Vec::with_capacity(m.saturating_sub(1));
    clusterings.push(Clustering::canonicalize(&labels).expect("nonempty"));

    for _step in 1..m {
        // lowest average distance among active slot pairs, lexicographic ties
        let mut best = (usize::MAX, usize::MAX);
        let mut best_d = f64::INFINITY;
        for a in 0..m {
            if !active[a] {
                continue;
            }
            for b in (a + 1)..m {
                if !active[b] {
                    continue;
                }
                let d = dist[a * m + b];
                if d < best_d {
                    best_d = d;
                    best = (a, b);
                }
            }
        }
        let (a, b) = best;
        // merged cluster occupies slot a; update average distances
        let (wa, wb) = (weight[a], weight[b]);
        for c in 0..m {
            if c != a && c != b && active[c] {
                let d = (wa * dist[a * m + c] + wb * dist[b * m + c]) / (wa + wb);
                dist[a * m + c] = d;
                dist[c * m + a] = d;
            }
        }
        weight[a] = wa + wb;
        active[b] = false;
        for l in labels.iter_mut() {
            if *l == b {
                *l = a;
            }
        }
        merge_heights.push(best_d);
        clusterings.push(Clustering::canonicalize(&labels).expect("nonempty"));
    }
    CandidatePath {
        clusterings,
        merge_heights,
    }
}

/// Per-level (within-cluster distance sum, split-pair complement sum) for a
/// path against a matrix, weighted by multiplicities. The loss of level t is
/// within[t] + omega * split[t].
pub fn path_pair_sums(
    path: &CandidatePath,
    dmat: &DeltaMatrix,
    sizes: &[usize],
) -> Result<Vec<(f64, f64)>> {
    let m = dmat.n();
    if path.clusterings[0].n() != m {
        return Err(FoldError::SizeMismatch {
            expected: path.clusterings[0].n(),
            got: m,
        });
    }
    // totals over all unordered item pairs, with multiplicities
    let mut total_d = 0.0;
    let mut total_pairs = 0.0;
    for i in 0..m {
        for j in (i + 1)..m {
            let w = (sizes[i] * sizes[j]) as f64;
            total_d += w * dmat.get(i, j);
            total_pairs += w;
        }
    }
    let mut out = Vec::with_capacity(path.clusterings.len());
    // level 0 is all singletons (within distinct items): within counts only
    // pairs inside one block, which have distance 0, so within = 0.
    let mut within = 0.0;
    let mut split_comp = total_pairs - total_d; // sum over split pairs of (1 - d)
    out.push((within, split_comp));
    for t in 1..path.clusterings.len() {
        let prev = &path.clusterings[t - 1];
        let cur = &path.clusterings[t];
        // identify the two previous clusters that merged
        let mut map = vec![usize::MAX; prev.k()];
        let mut merged_pair = (usize::MAX, usize::MAX);
        for i in 0..prev.n() {
            let (pl, cl) = (prev.label(i), cur.label(i));
            if map[pl] == usize::MAX {
                map[pl] = cl;
            }
        }
        'outer: for a in 0..prev.k() {
            for b in (a + 1)..prev.k() {
                if map[a] == map[b] {
                    merged_pair = (a, b);
                    break 'outer;
                }
            }
        }
        let members = prev.members();
        let (a, b) = merged_pair;
        let mut cross_d = 0.0;
        let mut cross_pairs = 0.0;
        for &i in &members[a] {
            for &j in &members[b] {
                let w = (sizes[i] * sizes[j]) as f64;
                cross_d += w * dmat.get(i, j);
                cross_pairs += w;
            }
        }
        within += cross_d;
        split_comp -= cross_pairs - cross_d;
        out.push((within, split_comp));
    }
    Ok(out)
}

/// The path member minimizing the loss on `dmat`; ties go to fewer clusters.
pub fn best_on_path(
    path: &CandidatePath,
    dmat: &DeltaMatrix,
    params: &LossParams,
) -> Result<Clustering> {
    let sizes = vec![1usize; dmat.n()];
    let sums = path_pair_sums(path, dmat, &sizes)?;
    let mut best_idx = 0;
    let mut best_risk = f64::INFINITY;
    for (t, &(w, x)) in sums.iter().enumerate() {
        let risk = w + params.omega() * x;
        if risk <= best_risk {
            best_risk = risk;
            best_idx = t;
        }
    }
    Ok(path.clusterings[best_idx].clone())
}

// ---------------------------------------------------------------------------
// Greedy search
// ---------------------------------------------------------------------------

struct GreedyProblem<'a> {
    dmat: &'a DeltaMatrix,
    sizes: &'a [f64],
    omega: f64,
}

impl<'a> GreedyProblem<'a> {
    fn m(&self) -> usize {
        self.dmat.n()
    }

    /// Full loss of an assignment, with multiplicities.
    fn loss(&self, assign: &[usize]) -> f64 {
        let m = self.m();
        let mut loss = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                let w = self.sizes[i] * self.sizes[j];
                let d = self.dmat.get(i, j);
                if assign[i] == assign[j] {
                    loss += w * d;
                } else {
                    loss += w * self.omega * (1.0 - d);
                }
            }
        }
        loss
    }

    /// One reallocation sweep in the given visit order. Each item moves to
    /// the cluster (or a fresh singleton) minimizing its score
    /// sum_{j in C} s_i s_j ((1 + omega) d_ij - omega); moves are accepted
    /// only on strict improvement. Returns whether any move was made.
    fn sweep(&self, assign: &mut [usize], n_clusters: &mut usize, order: &[usize]) -> bool {
        let m = self.m();
        let mut moved = false;
        let mut scores = vec![0.0f64; *n_clusters + 1];
        for &i in order {
            let k = *n_clusters;
            scores.clear();
            scores.resize(k + 1, 0.0);
            let row = self.dmat.row(i);
            let si = self.sizes[i];
            for j in 0..m {
                if j != i {
                    let mij = si * self.sizes[j] * ((1.0 + self.omega) * row[j] - self.omega);
                    scores[assign[j]] += mij;
                }
            }
            // scores[k] = 0 is the fresh-singleton option
            let cur = assign[i];
            let mut best = cur;
            let mut best_score = scores[cur];
            for (c, &s) in scores.iter().enumerate() {
                if s < best_score - 0.0 && c != cur {
                    best_score = s;
                    best = c;
                }
            }
            if best != cur && best_score < scores[cur] {
                assign[i] = best;
                moved = true;
                if best == k {
                    *n_clusters += 1;
                }
                // compact away a now-empty cluster
                if !assign.iter().any(|&a| a == cur) {
                    for a in assign.iter_mut() {
                        if *a == *n_clusters - 1 {
                            *a = cur;
                        }
                    }
                    // the moved item may itself sit in the relabeled slot
                    *n_clusters -= 1;
                }
            }
        }
        moved
    }

    fn sweeps_to_convergence(
        &self,
        assign: &mut [usize],
        n_clusters: &mut usize,
        rng: &mut rand_pcg::Pcg64Mcg,
        max_sweeps: usize,
    ) -> usize {
        let m = self.m();
        let mut order: Vec<usize> = (0..m).collect();
        let mut used = 0;
        while used < max_sweeps {
            order.shuffle(rng);
            used += 1;
            if !self.sweep(assign, n_clusters, &order) {
                break;
            }
        }
        used
    }
}

fn canonical_from_assign(assign: &[usize]) -> Clustering {
    Clustering::canonicalize(assign).expect("nonempty")
}

/// Greedy minimization over weighted items. Seeds the first restart from the
/// best average-linkage candidate, then singletons, one cluster, and random
/// initializations. Returns the lowest-loss clustering over all restarts.
pub fn greedy_minimize_weighted(
    dmat: &DeltaMatrix,
    sizes: &[usize],
    params: &LossParams,
    cfg: &GreedyConfig,
) -> Result<Clustering> {
    cfg.validate()?;
    let m = dmat.n();
    if sizes.len() != m {
        return Err(FoldError::SizeMismatch {
            expected: m,
            got: sizes.len(),
        });
    }
    if m == 1 {
        return Clustering::canonicalize(&[0]);
    }
    let fsizes: Vec<f64> = sizes.iter().map(|&s| s as f64).collect();
    let problem = GreedyProblem {
        dmat,
        sizes: &fsizes,
        omega: params.omega(),
    };

    let path = average_linkage_path_weighted(dmat, sizes);
    let sums = path_pair_sums(&path, dmat, sizes)?;
    let mut best_path_idx = 0;
    let mut best_path_risk = f64::INFINITY;
    for (t, &(w, x)) in sums.iter().enumerate() {
        let risk = w + params.omega() * x;
        if risk <= best_path_risk {
            best_path_risk = risk;
            best_path_idx = t;
        }
    }
    let path_best = &path.clusterings()[best_path_idx];

    let results: Vec<(f64, usize, Vec<usize>)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(cfg.seed, r as u64 + 1);
            let mut assign: Vec<usize>;
            match r {
                0 => assign = path_best.labels().to_vec(),
                1 => assign = (0..m).collect(),
                2 => assign = vec![0; m],
                _ => {
                    let k0 = rng.gen_range(2..=m.min(12));
                    assign = (0..m).map(|_| rng.gen_range(0..k0)).collect();
                    assign = canonical_from_assign(&assign).labels().to_vec();
                }
            }
            let mut k = canonical_from_assign(&assign).k();
            assign = canonical_from_assign(&assign).labels().to_vec();
            let mut budget = cfg.max_sweeps;
            let used = problem.sweeps_to_convergence(&mut assign, &mut k, &mut rng, budget);
            budget = budget.saturating_sub(used);

            // break phase: dissolve one cluster at a time and re-sweep
            let mut improved = true;
            while improved && budget > 0 {
                improved = false;
                let current_loss = problem.loss(&assign);
                let k_now = k;
                for h in 0..k_now {
                    if budget == 0 {
                        break;
                    }
                    let mut cand = assign.clone();
                    // members of h become fresh singletons
                    let mut next = k;
                    for a in cand.iter_mut() {
                        if *a == h {
                            *a = next;
                            next += 1;
                        }
                    }
                    let cand_c = canonical_from_assign(&cand);
                    let mut cand_assign = cand_c.labels().to_vec();
                    let mut cand_k = cand_c.k();
                    let used =
                        problem.sweeps_to_convergence(&mut cand_assign, &mut cand_k, &mut rng, budget);
                    budget = budget.saturating_sub(used.max(1));
                    if problem.loss(&cand_assign) < current_loss {
                        assign = cand_assign;
                        k = cand_k;
                        improved = true;
                        break;
                    }
                }
            }
            (problem.loss(&assign), r, assign)
        })
        .collect();

    let best = results
        .into_iter()
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)))
        .expect("at least one restart");
    Ok(canonical_from_assign(&best.2))
}

/// Greedy search over observations (unit weights).
pub fn greedy_minimize(
    dmat: &DeltaMatrix,
    params: &LossParams,
    cfg: &GreedyConfig,
) -> Result<Clustering> {
    greedy_minimize_weighted(dmat, &vec![1usize; dmat.n()], params, cfg)
}

/// Run both the path search and the greedy search, returning the lower-risk
/// result (the greedy already seeds itself with the best path candidate, so
/// its result is never worse).
pub fn point_estimate(
    dmat: &DeltaMatrix,
    params: &LossParams,
    cfg: &GreedyConfig,
) -> Result<Clustering> {
    greedy_minimize(dmat, params, cfg)
}

/// Global minimizer by enumerating all set partitions as restricted growth
/// strings, n <= 12. Ties broken by the lexicographically smallest labels.
pub fn exhaustive_minimize(dmat: &DeltaMatrix, params: &LossParams) -> Result<Clustering> {
    let n = dmat.n();
    if n > 12 {
        return Err(FoldError::TooLarge(format!(
            "exhaustive enumeration limited to n <= 12, got {n}"
        )));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut visit = |labels: &[usize]| {
        let c = Clustering::canonicalize(labels).expect("nonempty");
        let loss = fold_loss(&c, dmat, params).expect("sizes match");
        match &best {
            Some((b, _)) if loss >= *b => {}
            _ => best = Some((loss, labels.to_vec())),
        }
    };
    enumerate_partitions(n, &mut visit);
    let (_, labels) = best.expect("n >= 1");
    Clustering::canonicalize(&labels)
}

/// Enumerate restricted growth strings of length n in lexicographic order.
pub fn enumerate_partitions<F: FnMut(&[usize])>(n: usize, f: &mut F) {
    let mut a = vec![0usize; n];
    let mut maxes = vec![0usize; n]; // maxes[i] = max(a[0..=i])
    loop {
        f(&a);
        // find rightmost position we can increment
        let mut i = n;
        loop {
            if i <= 1 {
                return;
            }
            i -= 1;
            let cap = maxes[i - 1] + 1;
            if a[i] < cap {
                break;
            }
        }
        a[i] += 1;
        maxes[i] = maxes[i - 1].max(a[i]);
        for j in (i + 1)..n {
            a[j] = 0;
            maxes[j] = maxes[j - 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(vals: &[&[f64]]) -> DeltaMatrix {
        let n = vals.len();
        let flat: Vec<f64> = vals.iter().flat_map(|r| r.iter().copied()).collect();
        DeltaMatrix::new(flat, n).unwrap()
    }

    fn random_delta(n: usize, seed: u64) -> DeltaMatrix {
        // average of per-draw matrices from random kernels: always a valid
        // bounded metric
        use crate::kernel::GaussianKernel;
        use crate::mixture::MixtureDraw;
        use nalgebra::{DMatrix, DVector};
        let mut rng = stream_rng(seed, 5);
        let mut acc = vec![0.0; n * n];
        let reps = 3;
        for _ in 0..reps {
            let k = rng.gen_range(2..=4);
            let kernels: Vec<GaussianKernel> = (0..k)
                .map(|_| {
                    GaussianKernel::new(
                        DVector::from_element(1, rng.gen_range(-4.0..4.0)),
                        DMatrix::from_element(1, 1, rng.gen_range(0.2..2.0)),
                    )
                    .unwrap()
                })
                .collect();
            let alloc: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
            let draw = MixtureDraw::new(vec![1.0 / k as f64; k], kernels, alloc).unwrap();
            let d = crate::delta::per_draw_distance_matrix(&draw).unwrap();
            for (x, y) in acc.iter_mut().zip(d.as_slice()) {
                *x += y / reps as f64;
            }
        }
        DeltaMatrix::new(acc, n).unwrap()
    }

    #[test]
    fn bell_numbers_from_enumeration() {
        let mut counts = Vec::new();
        for n in 1..=8 {
            let mut c = 0usize;
            enumerate_partitions(n, &mut |_| c += 1);
            counts.push(c);
        }
        assert_eq!(counts, vec![1, 2, 5, 15, 52, 203, 877, 4140]);
    }

    #[test]
    fn path_n2() {
        let d = mat(&[&[0.0, 0.4], &[0.4, 0.0]]);
        let path = average_linkage_path(&d);
        assert_eq!(path.clusterings().len(), 2);
        assert_eq!(path.clusterings()[0].labels(), &[0, 1]);
        assert_eq!(path.clusterings()[1].labels(), &[0, 0]);
        assert_eq!(path.merge_heights(), &[0.4]);
    }

    #[test]
    fn path_counts_decrease_by_one_merge() {
        let d = random_delta(12, 3);
        let path = average_linkage_path(&d);
        assert_eq!(path.clusterings().len(), 12);
        for (t, c) in path.clusterings().iter().enumerate() {
            assert_eq!(c.k(), 12 - t);
        }
        // consecutive members differ by exactly one merge: the coarser one
        // never splits a cluster of the finer one
        for t in 1..12 {
            let fine = &path.clusterings()[t - 1];
            let coarse = &path.clusterings()[t];
            for i in 0..12 {
                for j in 0..12 {
                    if fine.label(i) == fine.label(j) {
                        assert_eq!(coarse.label(i), coarse.label(j));
                    }
                }
            }
        }
    }

    #[test]
    fn block_structured_matrix_recovered_at_two_clusters() {
        let d = mat(&[
            &[0.0, 0.1, 0.9, 0.9],
            &[0.1, 0.0, 0.9, 0.9],
            &[0.9, 0.9, 0.0, 0.1],
            &[0.9, 0.9, 0.1, 0.0],
        ]);
        let path = average_linkage_path(&d);
        let two = path.with_k(2).unwrap();
        assert_eq!(two.labels(), &[0, 0, 1, 1]);
        let params = LossParams::new(1.0).unwrap();
        let best = best_on_path(&path, &d, &params).unwrap();
        assert_eq!(best.labels(), &[0, 0, 1, 1]);
        // exhaustive agrees
        let opt = exhaustive_minimize(&d, &params).unwrap();
        assert_eq!(opt.labels(), &[0, 0, 1, 1]);
    }

    #[test]
    fn omega_limits_on_path() {
        let d = random_delta(10, 11);
        let path = average_linkage_path(&d);
        let huge = LossParams::new(1e9).unwrap();
        assert_eq!(best_on_path(&path, &d, &huge).unwrap().k(), 1);
        let tiny = LossParams::new(1e-9).unwrap();
        assert_eq!(best_on_path(&path, &d, &tiny).unwrap().k(), 10);
    }

    #[test]
    fn path_pair_sums_match_direct_loss() {
        let d = random_delta(9, 21);
        let path = average_linkage_path(&d);
        let sizes = vec![1usize; 9];
        let sums = path_pair_sums(&path, &d, &sizes).unwrap();
        for w in [0.4, 1.0, 2.7] {
            let params = LossParams::new(w).unwrap();
            for (t, c) in path.clusterings().iter().enumerate() {
                let direct = fold_loss(c, &d, &params).unwrap();
                let fast = sums[t].0 + w * sums[t].1;
                assert!((direct - fast).abs() < 1e-10, "level {t}: {direct} vs {fast}");
            }
        }
    }

    #[test]
    fn greedy_trivial_matrices() {
        // all off-diagonal distances 1: every merge has negative gain
        let n = 6;
        let mut vals = vec![1.0; n * n];
        for i in 0..n {
            vals[i * n + i] = 0.0;
        }
        let d = DeltaMatrix::new(vals, n).unwrap();
        let params = LossParams::new(5.0).unwrap();
        let cfg = GreedyConfig {
            restarts: 4,
            max_sweeps: 50,
            seed: 1,
        };
        let c = greedy_minimize(&d, &params, &cfg).unwrap();
        assert_eq!(c.k(), n);

        // zero matrix: one cluster for any omega > 0
        let d = DeltaMatrix::zeros(n);
        let params = LossParams::new(0.05).unwrap();
        let c = greedy_minimize(&d, &params, &cfg).unwrap();
        assert_eq!(c.k(), 1);
    }

    #[test]
    fn greedy_never_worse_than_path_and_exhaustive_never_worse_than_greedy() {
        for seed in 0..8u64 {
            let d = random_delta(9, 100 + seed);
            for omega in [0.5, 1.0, 2.0] {
                let params = LossParams::new(omega).unwrap();
                let path = average_linkage_path(&d);
                let on_path = best_on_path(&path, &d, &params).unwrap();
                let cfg = GreedyConfig {
                    restarts: 12,
                    max_sweeps: 60,
                    seed: seed * 7 + 1,
                };
                let greedy = greedy_minimize(&d, &params, &cfg).unwrap();
                let exact = exhaustive_minimize(&d, &params).unwrap();
                let lp = fold_loss(&on_path, &d, &params).unwrap();
                let lg = fold_loss(&greedy, &d, &params).unwrap();
                let le = fold_loss(&exact, &d, &params).unwrap();
                assert!(lg <= lp + 1e-12);
                assert!(le <= lg + 1e-12);
            }
        }
    }

    #[test]
    fn greedy_sweeps_monotonically_decrease_loss() {
        let d = random_delta(20, 55);
        let params = LossParams::new(1.0).unwrap();
        let sizes: Vec<f64> = vec![1.0; 20];
        let problem = GreedyProblem {
            dmat: &d,
            sizes: &sizes,
            omega: params.omega(),
        };
        let mut rng = stream_rng(4, 0);
        let mut assign: Vec<usize> = (0..20).map(|_| rng.gen_range(0..5)).collect();
        let c = canonical_from_assign(&assign);
        assign = c.labels().to_vec();
        let mut k = c.k();
        let mut order: Vec<usize> = (0..20).collect();
        let mut prev = problem.loss(&assign);
        for _ in 0..30 {
            order.shuffle(&mut rng);
            let moved = problem.sweep(&mut assign, &mut k, &order);
            let now = problem.loss(&assign);
            assert!(now <= prev + 1e-9, "loss increased: {prev} -> {now}");
            if !moved {
                break;
            }
            assert!(now < prev, "move accepted without strict decrease");
            prev = now;
        }
    }

    #[test]
    fn exhaustive_small_cases() {
        // n = 1: single cluster
        let d = DeltaMatrix::zeros(1);
        let params = LossParams::new(1.0).unwrap();
        assert_eq!(exhaustive_minimize(&d, &params).unwrap().k(), 1);

        // hand instance from the loss module
        let d = mat(&[
            &[0.0, 0.2, 0.9],
            &[0.2, 0.0, 0.8],
            &[0.9, 0.8, 0.0],
        ]);
        let c = exhaustive_minimize(&d, &params).unwrap();
        assert_eq!(c.labels(), &[0, 0, 1]);
        let loss = fold_loss(&c, &d, &params).unwrap();
        assert!((loss - 0.5).abs() < 1e-12);

        // too large rejected
        let d = DeltaMatrix::zeros(13);
        assert!(exhaustive_minimize(&d, &params).is_err());
    }

    #[test]
    fn weighted_collapse_matches_expanded_instance() {
        // 3 blocks with sizes (2, 1, 3) expanded to 6 observations
        let eta = mat(&[
            &[0.0, 0.3, 0.8],
            &[0.3, 0.0, 0.6],
            &[0.8, 0.6, 0.0],
        ]);
        let sizes = [2usize, 1, 3];
        let block_of = [0usize, 0, 1, 2, 2, 2];
        let n = 6;
        let mut vals = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    vals[i * n + j] = eta.get(block_of[i], block_of[j]);
                }
            }
        }
        let expanded = DeltaMatrix::new(vals, n).unwrap();
        for omega in [0.3, 1.0, 3.0] {
            let params = LossParams::new(omega).unwrap();
            let cfg = GreedyConfig {
                restarts: 8,
                max_sweeps: 50,
                seed: 9,
            };
            let collapsed = greedy_minimize_weighted(&eta, &sizes, &params, &cfg).unwrap();
            let full = exhaustive_minimize(&expanded, &params).unwrap();
            // expand the collapsed solution and compare losses
            let expanded_labels: Vec<usize> =
                block_of.iter().map(|&b| collapsed.label(b)).collect();
            let expanded_c = Clustering::canonicalize(&expanded_labels).unwrap();
            let lc = fold_loss(&expanded_c, &expanded, &params).unwrap();
            let lf = fold_loss(&full, &expanded, &params).unwrap();
            assert!(
                (lc - lf).abs() < 1e-10,
                "collapsed {lc} vs exhaustive {lf} at omega {omega}"
            );
        }
    }
}
