//! Oracle clustering: the risk under a known mixing measure, the limiting
//! match/merge rules, and the empirical convergence harness that fits chains
//! of growing size against the oracle.

use crate::dataset::Dataset;
use crate::delta::{allocation_disagreement, estimate_delta, DeltaMatrix};
use crate::error::{FoldError, Result};
use crate::gibbs::{run_gibbs, ChainConfig, GmmPrior};
use crate::kernel::{hellinger_gaussian, GaussianKernel};
use crate::loss::{fold_loss, LossParams};
use crate::optimize::{average_linkage_path, greedy_minimize, path_pair_sums, GreedyConfig};
use crate::partition::{adjusted_rand_index, Clustering};
use crate::rng::child_seed;
use crate::simgen::{gen_gaussian_mixture, GaussianComponent};
use crate::tuning::omega_avg;
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

/// A fixed mixture playing the role of the KL-minimizing measure. In the
/// well-specified harness it is simply the data-generating truth.
#[derive(Debug, Clone)]
pub struct OracleMixture {
    weights: Vec<f64>,
    kernels: Vec<GaussianKernel>,
}

impl OracleMixture {
    pub fn new(weights: Vec<f64>, kernels: Vec<GaussianKernel>) -> Result<Self> {
        if weights.len() != kernels.len() || weights.is_empty() {
            return Err(FoldError::InvalidParam(
                "weights and kernels must have equal nonzero length".into(),
            ));
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(FoldError::InvalidParam("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(FoldError::InvalidParam(format!(
                "weights sum to {total}"
            )));
        }
        Ok(OracleMixture { weights, kernels })
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kernels(&self) -> &[GaussianKernel] {
        &self.kernels
    }

    /// Mixture density at x.
    pub fn density(&self, x: &nalgebra::DVector<f64>) -> f64 {
        self.weights
            .iter()
            .zip(&self.kernels)
            .map(|(&a, g)| a * g.density(x))
            .sum()
    }

    /// Pairwise kernel distances eta_{mm'}.
    fn eta(&self) -> Result<Vec<Vec<f64>>> {
        let m = self.m();
        let mut eta = vec![vec![0.0; m]; m];
        for a in 0..m {
            for b in (a + 1)..m {
                let h = hellinger_gaussian(&self.kernels[a], &self.kernels[b])?;
                eta[a][b] = h;
                eta[b][a] = h;
            }
        }
        Ok(eta)
    }

    /// Per-observation component densities weighted by the mixture weights,
    /// and the mixture density; errors when the density vanishes at a point.
    fn weighted_densities(&self, data: &Dataset) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let n = data.n();
        let m = self.m();
        let mut wg = vec![vec![0.0; m]; n];
        let mut f = vec![0.0; n];
        for i in 0..n {
            let x = data.row(i);
            for mm in 0..m {
                wg[i][mm] = self.weights[mm] * self.kernels[mm].density(&x);
                f[i] += wg[i][mm];
            }
            if f[i] <= 0.0 {
                return Err(FoldError::ZeroDensity { index: i });
            }
        }
        Ok((wg, f))
    }
}

/// Symmetrized joint allocation probabilities under the oracle:
/// q^{mm'} = [a_m a_{m'} (g_m(x_i) g_{m'}(x_j) + g_{m'}(x_i) g_m(x_j))]
///           / (f*(x_i) f*(x_j)), filled for m < m'.
pub fn oracle_allocation_probs(
    data: &Dataset,
    oracle: &OracleMixture,
    i: usize,
    j: usize,
) -> Result<Vec<Vec<f64>>> {
    let (wg, f) = oracle.weighted_densities(data)?;
    let m = oracle.m();
    let denom = f[i] * f[j];
    let mut q = vec![vec![0.0; m]; m];
    for a in 0..m {
        for b in (a + 1)..m {
            q[a][b] = (wg[i][a] * wg[j][b] + wg[i][b] * wg[j][a]) / denom;
        }
    }
    Ok(q)
}

/// Oracle distance matrix: Delta*_ij = sum_{m<m'} eta_{mm'} q_ij^{mm'}.
pub fn oracle_delta(data: &Dataset, oracle: &OracleMixture) -> Result<DeltaMatrix> {
    let eta = oracle.eta()?;
    oracle_weighted_sum(data, oracle, &eta)
}

/// Oracle split probability matrix Pi(s_i != s_j | lambda*, X) — the
/// eta = 1 specialization, used for the oracle Binder estimate.
pub fn oracle_disagreement(data: &Dataset, oracle: &OracleMixture) -> Result<DeltaMatrix> {
    let m = oracle.m();
    let ones = vec![vec![1.0; m]; m];
    oracle_weighted_sum(data, oracle, &ones)
}

fn oracle_weighted_sum(
    data: &Dataset,
    oracle: &OracleMixture,
    eta: &[Vec<f64>],
) -> Result<DeltaMatrix> {
    let (wg, f) = oracle.weighted_densities(data)?;
    let n = data.n();
    let m = oracle.m();
    let mut d = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = 0.0;
            for a in 0..m {
                for b in (a + 1)..m {
                    acc += eta[a][b] * (wg[i][a] * wg[j][b] + wg[i][b] * wg[j][a]);
                }
            }
            let v = (acc / (f[i] * f[j])).clamp(0.0, 1.0);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    DeltaMatrix::new(d, n)
}

/// Which limiting rule applies to an oracle configuration.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleRule {
    /// All pairwise kernel distances saturate: the minimizer assigns each
    /// observation to its highest-posterior-density component.
    Match(Clustering),
    /// Two components closer than gamma: the minimizer is one cluster.
    Merge(Clustering),
    /// Neither premise holds.
    NoRule,
}

/// Check the two limiting rules. Saturation is declared at 1 - tol with
/// tol = 1e-6 (Gaussian supports overlap everywhere, so the match rule is
/// meaningful only in the saturated regime).
pub fn oracle_rules_check(
    oracle: &OracleMixture,
    data: &Dataset,
    params: &LossParams,
) -> Result<OracleRule> {
    const TOL: f64 = 1e-6;
    let m = oracle.m();
    let eta = oracle.eta()?;
    let all_saturated = (0..m)
        .flat_map(|a| ((a + 1)..m).map(move |b| (a, b)))
        .all(|(a, b)| eta[a][b] >= 1.0 - TOL);
    if m >= 2 && all_saturated {
        let (wg, _f) = oracle.weighted_densities(data)?;
        let labels: Vec<usize> = (0..data.n())
            .map(|i| {
                (0..m)
                    .max_by(|&a, &b| wg[i][a].partial_cmp(&wg[i][b]).unwrap())
                    .unwrap()
            })
            .collect();
        return Ok(OracleRule::Match(Clustering::canonicalize(&labels)?));
    }
    if m == 2 && eta[0][1] < params.gamma() {
        return Ok(OracleRule::Merge(Clustering::one_cluster(data.n())));
    }
    Ok(OracleRule::NoRule)
}

// ---------------------------------------------------------------------------
// Convergence harness
// ---------------------------------------------------------------------------

/// Configuration for the oracle-convergence experiment: the location-GMM
/// setting with four true components merging pairwise into two clusters.
#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub n_grid: Vec<usize>,
    pub seeds: Vec<u64>,
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub restarts: usize,
}

impl ConvergenceConfig {
    pub fn section_defaults(n_grid: Vec<usize>, seeds: Vec<u64>) -> Self {
        ConvergenceConfig {
            n_grid,
            seeds,
            iterations: 9000,
            burn_in: 1000,
            thin: 3,
            restarts: 8,
        }
    }

    /// True component means.
    pub fn true_means() -> [[f64; 2]; 4] {
        [[1.0, 1.0], [1.75, 1.75], [-1.75, -1.75], [-1.0, -1.0]]
    }

    /// The generator: four equal-weight Gaussians with covariance I/4.
    pub fn truth_components() -> Vec<GaussianComponent> {
        Self::true_means()
            .iter()
            .map(|m| GaussianComponent {
                mean: m.to_vec(),
                cov: vec![vec![0.25, 0.0], vec![0.0, 0.25]],
            })
            .collect()
    }

    pub fn truth_oracle() -> Result<OracleMixture> {
        let kernels = Self::truth_components()
            .iter()
            .map(|c| {
                GaussianKernel::new(
                    nalgebra::DVector::from_column_slice(&c.mean),
                    nalgebra::DMatrix::from_fn(2, 2, |i, j| c.cov[i][j]),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        OracleMixture::new(vec![0.25; 4], kernels)
    }

    /// Fitted model: K = 4 location GMM with covariance I/4, mean prior
    /// N(0, I) (kappa = 1/4 since the mean prior is cov/kappa), Dir(1/4).
    pub fn fitted_prior() -> GmmPrior {
        GmmPrior::location(
            4,
            0.25,
            vec![0.0, 0.0],
            0.25,
            vec![vec![0.25, 0.0], vec![0.0, 0.25]],
        )
    }
}

/// One candidate-level row of the convergence report.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub n: usize,
    pub seed: u64,
    pub candidate_k: usize,
    pub risk: f64,
    pub oracle_risk: f64,
    pub gap: f64,
    pub ari_fold_vs_oracle: f64,
    pub k_fold: usize,
    pub k_oracle: usize,
    pub k_binder: usize,
    pub k_oracle_binder: usize,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            out,
            "n,seed,candidate_k,risk,oracle_risk,gap,ari_fold_vs_oracle,k_fold,k_oracle,k_binder,k_oracle_binder"
        )?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.seed,
                r.candidate_k,
                r.risk,
                r.oracle_risk,
                r.gap,
                r.ari_fold_vs_oracle,
                r.k_fold,
                r.k_oracle,
                r.k_binder,
                r.k_oracle_binder
            )?;
        }
        Ok(())
    }

    /// Mean normalized risk gap over candidates and seeds, per n.
    pub fn mean_gap(&self, n: usize) -> f64 {
        let rows: Vec<&ConvergenceRow> = self.rows.iter().filter(|r| r.n == n).collect();
        rows.iter().map(|r| r.gap).sum::<f64>() / rows.len() as f64
    }

    /// Mean ARI between the fitted and oracle point estimates, per n.
    pub fn mean_ari(&self, n: usize) -> f64 {
        let mut seen = std::collections::BTreeSet::new();
        let mut total = 0.0;
        for r in self.rows.iter().filter(|r| r.n == n) {
            if seen.insert(r.seed) {
                total += r.ari_fold_vs_oracle;
            }
        }
        total / seen.len() as f64
    }
}

/// Fit chains over the n grid and seeds, compare fitted and oracle risks
/// along the candidate path, and report point-estimate agreement.
pub fn validate_convergence(cfg: &ConvergenceConfig) -> Result<ConvergenceReport> {
    if cfg.n_grid.is_empty() || cfg.seeds.is_empty() {
        return Err(FoldError::Empty("n grid or seeds".into()));
    }
    let oracle = ConvergenceConfig::truth_oracle()?;
    let truth_components = ConvergenceConfig::truth_components();
    let jobs: Vec<(usize, u64)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let mut results: Vec<(usize, u64, Vec<ConvergenceRow>)> = jobs
        .par_iter()
        .map(|&(n, seed)| -> Result<(usize, u64, Vec<ConvergenceRow>)> {
            let data_seed = child_seed(seed, n as u64);
            let labeled =
                gen_gaussian_mixture(&[0.25; 4], &truth_components, n, data_seed)?;
            let data = labeled.dataset()?;
            let chain = ChainConfig {
                iterations: cfg.iterations,
                burn_in: cfg.burn_in,
                thin: cfg.thin,
                seed: child_seed(seed, 1000 + n as u64),
            };
            let samples = run_gibbs(&data, &ConvergenceConfig::fitted_prior(), &chain)?;
            let delta = estimate_delta(&samples)?;
            let delta_star = oracle_delta(&data, &oracle)?;

            let params = omega_avg(&delta)?;
            let params_star = omega_avg(&delta_star)?;
            let greedy = GreedyConfig {
                restarts: cfg.restarts,
                max_sweeps: 100,
                seed: child_seed(seed, 2000 + n as u64),
            };

            let c_fold = greedy_minimize(&delta, &params, &greedy)?;
            let c_oracle = greedy_minimize(&delta_star, &params_star, &greedy)?;
            let ari = adjusted_rand_index(&c_fold, &c_oracle)?;

            let binder_params = LossParams::new(1.0)?;
            let c_binder =
                greedy_minimize(&allocation_disagreement(&samples)?, &binder_params, &greedy)?;
            let c_oracle_binder =
                greedy_minimize(&oracle_disagreement(&data, &oracle)?, &binder_params, &greedy)?;

            // risk curves along the fitted candidate path, both at omega_avg
            let path = average_linkage_path(&delta);
            let sizes = vec![1usize; n];
            let sums = path_pair_sums(&path, &delta, &sizes)?;
            let pairs = n as f64 * (n as f64 - 1.0) / 2.0;
            let mut rows = Vec::new();
            for (t, member) in path.clusterings().iter().enumerate() {
                let risk = sums[t].0 + params.omega() * sums[t].1;
                let oracle_risk = fold_loss(member, &delta_star, &params)?;
                rows.push(ConvergenceRow {
                    n,
                    seed,
                    candidate_k: member.k(),
                    risk,
                    oracle_risk,
                    gap: (risk - oracle_risk).abs() / pairs,
                    ari_fold_vs_oracle: ari,
                    k_fold: c_fold.k(),
                    k_oracle: c_oracle.k(),
                    k_binder: c_binder.k(),
                    k_oracle_binder: c_oracle_binder.k(),
                });
            }
            Ok((n, seed, rows))
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by_key(|(n, seed, _)| (*n, *seed));
    Ok(ConvergenceReport {
        rows: results.into_iter().flat_map(|(_, _, r)| r).collect(),
    })
}
