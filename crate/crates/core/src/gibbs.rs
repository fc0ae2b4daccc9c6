//! Conjugate Gibbs sampler for the Bayesian finite Gaussian mixture.
//!
//! Each sweep updates, in order: allocations from their categorical full
//! conditional, weights from the Dirichlet posterior, and per-component
//! parameters from the Normal-Inverse-Wishart posterior (or the conjugate
//! Gaussian posterior on the mean when a fixed covariance is supplied).
//! Component labels are never permuted or matched across sweeps; everything
//! downstream is label-invariant.

use crate::dataset::Dataset;
use crate::error::{FoldError, Result};
use crate::kernel::GaussianKernel;
use crate::mixture::MixtureDraw;
use crate::rng::stream_rng;
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, StandardNormal};
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"FOLDRWS1";

/// Prior for the K-component Gaussian mixture.
///
/// With `fixed_cov` unset, components follow (mu_k, Sigma_k) ~ NIW(mu, kappa,
/// nu, psi): Sigma_k ~ InverseWishart(nu, psi), mu_k | Sigma_k ~ N(mu,
/// Sigma_k / kappa). With `fixed_cov = Sigma` set, every component has
/// covariance Sigma and mu_k ~ N(mu, Sigma / kappa); nu and psi are unused.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GmmPrior {
    pub k: usize,
    pub alpha: f64,
    pub niw_mu: Vec<f64>,
    pub niw_kappa: f64,
    pub niw_nu: f64,
    pub niw_psi: Vec<Vec<f64>>,
    pub fixed_cov: Option<Vec<Vec<f64>>>,
}

impl GmmPrior {
    /// Location-scale default used by the synthetic experiments:
    /// K = 30, alpha = 1/2, mu = 0, kappa = 1, nu = p + 2, psi = I.
    pub fn benchmark_default(p: usize) -> Self {
        GmmPrior {
            k: 30,
            alpha: 0.5,
            niw_mu: vec![0.0; p],
            niw_kappa: 1.0,
            niw_nu: p as f64 + 2.0,
            niw_psi: identity(p),
            fixed_cov: None,
        }
    }

    /// Location-only model: fixed covariance, mean prior N(mu0, cov / kappa).
    pub fn location(k: usize, alpha: f64, mu0: Vec<f64>, kappa: f64, cov: Vec<Vec<f64>>) -> Self {
        let p = mu0.len();
        GmmPrior {
            k,
            alpha,
            niw_mu: mu0,
            niw_kappa: kappa,
            niw_nu: p as f64 + 2.0,
            niw_psi: identity(p),
            fixed_cov: Some(cov),
        }
    }

    pub fn p(&self) -> usize {
        self.niw_mu.len()
    }

    fn validate(&self, p: usize) -> Result<()> {
        if self.k < 1 {
            return Err(FoldError::InvalidParam("K must be >= 1".into()));
        }
        if !(self.alpha > 0.0) {
            return Err(FoldError::InvalidParam("alpha must be > 0".into()));
        }
        if self.niw_mu.len() != p {
            return Err(FoldError::SizeMismatch {
                expected: p,
                got: self.niw_mu.len(),
            });
        }
        if !(self.niw_kappa > 0.0) {
            return Err(FoldError::InvalidParam("kappa must be > 0".into()));
        }
        if let Some(cov) = &self.fixed_cov {
            let m = to_matrix(cov, p)?;
            Cholesky::new(m).ok_or_else(|| FoldError::Cholesky {
                context: "fixed covariance".into(),
            })?;
        } else {
            if self.niw_nu <= p as f64 - 1.0 {
                return Err(FoldError::InvalidParam(format!(
                    "nu must exceed p - 1 = {}",
                    p - 1
                )));
            }
            let m = to_matrix(&self.niw_psi, p)?;
            Cholesky::new(m).ok_or_else(|| FoldError::Cholesky {
                context: "prior scale matrix".into(),
            })?;
        }
        Ok(())
    }
}

fn identity(p: usize) -> Vec<Vec<f64>> {
    (0..p)
        .map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn to_matrix(rows: &[Vec<f64>], p: usize) -> Result<DMatrix<f64>> {
    if rows.len() != p || rows.iter().any(|r| r.len() != p) {
        return Err(FoldError::SizeMismatch {
            expected: p,
            got: rows.len(),
        });
    }
    Ok(DMatrix::from_fn(p, p, |i, j| rows[i][j]))
}

/// Sweep schedule: total sweeps, discarded burn-in, keep-every stride, seed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChainConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

impl ChainConfig {
    /// Benchmark defaults: 9,000 sweeps, 1,000 burn-in, keep every third.
    pub fn benchmark_default(seed: u64) -> Self {
        ChainConfig {
            iterations: 9000,
            burn_in: 1000,
            thin: 3,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(FoldError::InvalidParam(
                "burn_in must be below iterations".into(),
            ));
        }
        if self.thin < 1 {
            return Err(FoldError::InvalidParam("thin must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of retained draws.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in + self.thin - 1) / self.thin
    }
}

/// Retained, thinned draws from one chain. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    draws: Vec<MixtureDraw>,
    n: usize,
    p: usize,
    k: usize,
}

impl PosteriorSamples {
    pub fn from_draws(draws: Vec<MixtureDraw>) -> Result<Self> {
        if draws.is_empty() {
            return Err(FoldError::Empty("draws".into()));
        }
        let n = draws[0].n();
        let k = draws[0].k();
        let p = draws[0].kernels()[0].p();
        for d in &draws {
            if d.n() != n || d.k() != k || d.kernels()[0].p() != p {
                return Err(FoldError::InvalidParam(
                    "inconsistent draw shapes".into(),
                ));
            }
        }
        Ok(PosteriorSamples { draws, n, p, k })
    }

    pub fn draws(&self) -> &[MixtureDraw] {
        &self.draws
    }

    pub fn t(&self) -> usize {
        self.draws.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Binary draw file: magic, little-endian u64 (n, p, k, t), then per draw
    /// weights (k f64), means (k*p f64), lower Cholesky factors of the
    /// covariances (k*p*p f64, row-major), allocations (n u32). Kernels are
    /// rebuilt from their factors, so a round trip is bit-exact.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(MAGIC)?;
        for v in [self.n, self.p, self.k, self.t()] {
            out.write_all(&(v as u64).to_le_bytes())?;
        }
        for draw in &self.draws {
            for &w in draw.weights() {
                out.write_all(&w.to_le_bytes())?;
            }
            for kern in draw.kernels() {
                for v in kern.mean().iter() {
                    out.write_all(&v.to_le_bytes())?;
                }
            }
            for kern in draw.kernels() {
                let l = kern.chol_l();
                for i in 0..self.p {
                    for j in 0..self.p {
                        out.write_all(&l[(i, j)].to_le_bytes())?;
                    }
                }
            }
            for &s in draw.alloc() {
                out.write_all(&(s as u32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        file.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(FoldError::Parse("bad magic in draws file".into()));
        }
        let read_u64 = |f: &mut dyn Read| -> Result<u64> {
            let mut b = [0u8; 8];
            f.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let n = read_u64(&mut file)? as usize;
        let p = read_u64(&mut file)? as usize;
        let k = read_u64(&mut file)? as usize;
        let t = read_u64(&mut file)? as usize;
        let mut f64_buf = [0u8; 8];
        let mut u32_buf = [0u8; 4];
        let mut draws = Vec::with_capacity(t);
        for _ in 0..t {
            let mut weights = Vec::with_capacity(k);
            for _ in 0..k {
                file.read_exact(&mut f64_buf)?;
                weights.push(f64::from_le_bytes(f64_buf));
            }
            let mut means = Vec::with_capacity(k);
            for _ in 0..k {
                let mut m = DVector::zeros(p);
                for i in 0..p {
                    file.read_exact(&mut f64_buf)?;
                    m[i] = f64::from_le_bytes(f64_buf);
                }
                means.push(m);
            }
            let mut kernels = Vec::with_capacity(k);
            for mean in means {
                let mut l = DMatrix::zeros(p, p);
                for i in 0..p {
                    for j in 0..p {
                        file.read_exact(&mut f64_buf)?;
                        l[(i, j)] = f64::from_le_bytes(f64_buf);
                    }
                }
                kernels.push(GaussianKernel::from_cholesky(mean, l)?);
            }
            let mut alloc = Vec::with_capacity(n);
            for _ in 0..n {
                file.read_exact(&mut u32_buf)?;
                alloc.push(u32::from_le_bytes(u32_buf) as usize);
            }
            draws.push(MixtureDraw::new(weights, kernels, alloc)?);
        }
        Self::from_draws(draws)
    }
}

/// Full mixture state: weights, per-component kernels, allocations.
/// Exposed so joint-distribution (Geweke-style) tests can alternate
/// parameter sweeps with data regeneration.
#[derive(Debug, Clone)]
pub struct GibbsState {
    pub weights: Vec<f64>,
    pub kernels: Vec<GaussianKernel>,
    pub alloc: Vec<usize>,
}

impl GibbsState {
    /// Draw (a, kernels) from the prior and s | a from the weights.
    pub fn from_prior(prior: &GmmPrior, n: usize, rng: &mut Pcg64Mcg) -> Result<Self> {
        prior.validate(prior.p())?;
        let weights = sample_dirichlet(&vec![prior.alpha; prior.k], rng);
        let kernels: Vec<GaussianKernel> = (0..prior.k)
            .map(|_| sample_component_prior(prior, rng))
            .collect::<Result<Vec<_>>>()?;
        let alloc = (0..n)
            .map(|_| sample_categorical(&weights, rng))
            .collect();
        Ok(GibbsState {
            weights,
            kernels,
            alloc,
        })
    }

    /// Generate data from the current state: x_i ~ kernel[s_i].
    pub fn generate_data(&self, rng: &mut Pcg64Mcg) -> Result<Dataset> {
        let p = self.kernels[0].p();
        let mut x = DMatrix::zeros(self.alloc.len(), p);
        for (i, &s) in self.alloc.iter().enumerate() {
            let row = self.kernels[s].sample(rng);
            for j in 0..p {
                x[(i, j)] = row[j];
            }
        }
        Dataset::new(x)
    }

    /// One full sweep: allocations, weights, component parameters.
    pub fn sweep(&mut self, data: &Dataset, prior: &GmmPrior, rng: &mut Pcg64Mcg) -> Result<()> {
        let n = data.n();
        let p = data.p();
        let k = prior.k;

        // allocations from log weights + log densities
        let caches: Vec<CompCache> = self.kernels.iter().map(CompCache::new).collect();
        let log_w: Vec<f64> = self.weights.iter().map(|w| w.max(1e-300).ln()).collect();
        let mut logp = vec![0.0f64; k];
        let mut scratch = vec![0.0f64; p];
        let xm = data.matrix();
        for i in 0..n {
            for (c, cache) in caches.iter().enumerate() {
                logp[c] = log_w[c] + cache.log_density(xm, i, &mut scratch);
            }
            self.alloc[i] = sample_categorical_log(&logp, rng);
        }

        // weights from Dirichlet(alpha + n_1, ..., alpha + n_K)
        let mut counts = vec![0usize; k];
        for &s in &self.alloc {
            counts[s] += 1;
        }
        debug_assert_eq!(counts.iter().sum::<usize>(), n);
        let conc: Vec<f64> = counts.iter().map(|&c| prior.alpha + c as f64).collect();
        self.weights = sample_dirichlet(&conc, rng);

        // component parameters from conjugate posteriors
        for c in 0..k {
            self.kernels[c] = if counts[c] == 0 {
                sample_component_prior(prior, rng)?
            } else {
                sample_component_posterior(prior, data, &self.alloc, c, counts[c], rng)?
            };
        }
        Ok(())
    }
}

/// Per-component cache for fast log-density evaluation in the allocation
/// step: row-major lower factor and normalizing constant.
struct CompCache {
    mean: Vec<f64>,
    l: Vec<f64>,
    log_norm: f64,
    p: usize,
}

impl CompCache {
    fn new(kernel: &GaussianKernel) -> Self {
        let p = kernel.p();
        let lm = kernel.chol_l();
        let mut l = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..=i {
                l[i * p + j] = lm[(i, j)];
            }
        }
        const LN_2PI: f64 = 1.8378770664093453;
        let log_norm = -0.5 * (p as f64 * LN_2PI + kernel.log_det_cov());
        CompCache {
            mean: kernel.mean().iter().copied().collect(),
            l,
            log_norm,
            p,
        }
    }

    #[inline]
    fn log_density(&self, x: &DMatrix<f64>, row: usize, scratch: &mut [f64]) -> f64 {
        let p = self.p;
        // forward substitution of L y = (x - mean)
        let mut quad = 0.0;
        for i in 0..p {
            let mut v = x[(row, i)] - self.mean[i];
            for j in 0..i {
                v -= self.l[i * p + j] * scratch[j];
            }
            let y = v / self.l[i * p + i];
            scratch[i] = y;
            quad += y * y;
        }
        self.log_norm - 0.5 * quad
    }
}

fn sample_dirichlet(conc: &[f64], rng: &mut Pcg64Mcg) -> Vec<f64> {
    let mut draws: Vec<f64> = conc
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape").sample(rng))
        .collect();
    let total: f64 = draws.iter().sum();
    if total <= 0.0 {
        // all gamma draws underflowed; fall back to uniform
        return vec![1.0 / conc.len() as f64; conc.len()];
    }
    for d in draws.iter_mut() {
        *d /= total;
    }
    draws
}

fn sample_categorical(weights: &[f64], rng: &mut Pcg64Mcg) -> usize {
    let u: f64 = rng.gen::<f64>() * weights.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

fn sample_categorical_log(logp: &[f64], rng: &mut Pcg64Mcg) -> usize {
    let m = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    let probs: Vec<f64> = logp
        .iter()
        .map(|&lp| {
            let v = (lp - m).exp();
            total += v;
            v
        })
        .collect();
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in probs.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn standard_normal_vec(p: usize, rng: &mut Pcg64Mcg) -> DVector<f64> {
    DVector::from_iterator(p, (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Lower Bartlett factor A for a Wishart with nu degrees of freedom.
fn bartlett(p: usize, nu: f64, rng: &mut Pcg64Mcg) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(p, p);
    for i in 0..p {
        let chi = ChiSquared::new(nu - i as f64).expect("df > 0");
        a[(i, i)] = chi.sample(rng).sqrt();
        for j in 0..i {
            a[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    a
}

/// Draw Sigma ~ InverseWishart(nu, psi) and return its lower factor.
fn sample_inverse_wishart(
    psi: &DMatrix<f64>,
    nu: f64,
    rng: &mut Pcg64Mcg,
    context: &str,
) -> Result<DMatrix<f64>> {
    let p = psi.nrows();
    let chol_psi = Cholesky::new(psi.clone()).ok_or_else(|| FoldError::Cholesky {
        context: format!("{context}: posterior scale"),
    })?;
    let psi_inv = chol_psi.inverse();
    let lv = Cholesky::new(psi_inv).ok_or_else(|| FoldError::Cholesky {
        context: format!("{context}: inverted scale"),
    })?;
    let t = lv.l() * bartlett(p, nu, rng);
    // Sigma = (T T^T)^{-1} = B^T B with B = T^{-1}
    let b = t
        .solve_lower_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| FoldError::Cholesky {
            context: format!("{context}: singular Bartlett factor"),
        })?;
    let sigma = b.transpose() * b;
    let chol_sigma = Cholesky::new(sigma).ok_or_else(|| FoldError::Cholesky {
        context: format!("{context}: sampled covariance"),
    })?;
    Ok(chol_sigma.l())
}

fn sample_component_prior(prior: &GmmPrior, rng: &mut Pcg64Mcg) -> Result<GaussianKernel> {
    let p = prior.p();
    let mu0 = DVector::from_column_slice(&prior.niw_mu);
    if let Some(cov) = &prior.fixed_cov {
        let cov = to_matrix(cov, p)?;
        let chol = Cholesky::new(cov.clone()).ok_or_else(|| FoldError::Cholesky {
            context: "fixed covariance".into(),
        })?;
        let l = chol.l();
        let mean = &mu0 + &l * standard_normal_vec(p, rng) / prior.niw_kappa.sqrt();
        GaussianKernel::from_cholesky(mean, l)
    } else {
        let psi = to_matrix(&prior.niw_psi, p)?;
        let l = sample_inverse_wishart(&psi, prior.niw_nu, rng, "prior")?;
        let mean = &mu0 + &l * standard_normal_vec(p, rng) / prior.niw_kappa.sqrt();
        GaussianKernel::from_cholesky(mean, l)
    }
}

fn sample_component_posterior(
    prior: &GmmPrior,
    data: &Dataset,
    alloc: &[usize],
    comp: usize,
    count: usize,
    rng: &mut Pcg64Mcg,
) -> Result<GaussianKernel> {
    let p = data.p();
    let xm = data.matrix();
    let nk = count as f64;
    let mut sum = DVector::zeros(p);
    for (i, &s) in alloc.iter().enumerate() {
        if s == comp {
            for j in 0..p {
                sum[j] += xm[(i, j)];
            }
        }
    }
    let xbar = &sum / nk;
    let mu0 = DVector::from_column_slice(&prior.niw_mu);
    let kappa_n = prior.niw_kappa + nk;
    let mu_n = (&mu0 * prior.niw_kappa + &sum) / kappa_n;

    if let Some(cov) = &prior.fixed_cov {
        // mean posterior N(mu_n, cov / kappa_n)
        let cov = to_matrix(cov, p)?;
        let chol = Cholesky::new(cov).ok_or_else(|| FoldError::Cholesky {
            context: "fixed covariance".into(),
        })?;
        let l = chol.l();
        let mean = &mu_n + &l * standard_normal_vec(p, rng) / kappa_n.sqrt();
        return GaussianKernel::from_cholesky(mean, l);
    }

    // scatter about the component sample mean
    let mut scatter = DMatrix::zeros(p, p);
    let mut diff = DVector::zeros(p);
    for (i, &s) in alloc.iter().enumerate() {
        if s == comp {
            for j in 0..p {
                diff[j] = xm[(i, j)] - xbar[j];
            }
            scatter.syger(1.0, &diff, &diff, 1.0);
        }
    }
    let psi = to_matrix(&prior.niw_psi, p)?;
    let dm = &xbar - &mu0;
    let psi_n = psi
        + scatter
        + (&dm * dm.transpose()) * (prior.niw_kappa * nk / kappa_n);
    let nu_n = prior.niw_nu + nk;
    let l = sample_inverse_wishart(&psi_n, nu_n, rng, "component posterior")?;
    let mean = &mu_n + &l * standard_normal_vec(p, rng) / kappa_n.sqrt();
    GaussianKernel::from_cholesky(mean, l)
}

/// Run one chain and return the retained, thinned draws.
pub fn run_gibbs(data: &Dataset, prior: &GmmPrior, cfg: &ChainConfig) -> Result<PosteriorSamples> {
    prior.validate(data.p())?;
    cfg.validate()?;
    let mut rng = stream_rng(cfg.seed, 0);
    let mut state = GibbsState::from_prior(prior, data.n(), &mut rng)?;
    let mut draws = Vec::with_capacity(cfg.retained());
    for sweep in 1..=cfg.iterations {
        state.sweep(data, prior, &mut rng)?;
        if sweep > cfg.burn_in && (sweep - cfg.burn_in - 1) % cfg.thin == 0 {
            draws.push(MixtureDraw::new(
                state.weights.clone(),
                state.kernels.clone(),
                state.alloc.clone(),
            )?);
        }
    }
    PosteriorSamples::from_draws(draws)
}
