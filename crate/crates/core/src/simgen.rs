//! Seeded generators for the synthetic scenarios used in the experiments.

use crate::dataset::Dataset;
use crate::error::{FoldError, Result};
use crate::kernel::GaussianKernel;
use crate::partition::Clustering;
use crate::rng::stream_rng;
use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rand_pcg::Pcg64Mcg;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// A Gaussian mixture component given as plain vectors for serialization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

/// Skew-Gaussian component: location xi, scale matrix, skewness vector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkewGaussianParams {
    pub xi: Vec<f64>,
    pub omega_mat: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
}

/// Scenario descriptor, serializable as the sidecar spec JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "kebab-case")]
pub enum ScenarioSpec {
    Gaussian {
        weights: Vec<f64>,
        components: Vec<GaussianComponent>,
    },
    SkewGaussian {
        weights: Vec<f64>,
        components: Vec<SkewGaussianParams>,
    },
    SkewSymmetric,
    Moons {
        noise_sd: f64,
    },
    Spirals {
        noise_sd: f64,
    },
}

impl ScenarioSpec {
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "gaussian" => Ok(Self::gaussian_default()),
            "skew-gaussian" => Ok(Self::skew_gaussian_default()),
            "skew-symmetric" => Ok(ScenarioSpec::SkewSymmetric),
            "moons" => Ok(ScenarioSpec::Moons { noise_sd: 0.08 }),
            "spirals" => Ok(ScenarioSpec::Spirals { noise_sd: 0.05 }),
            other => Err(FoldError::InvalidParam(format!(
                "unknown scenario '{other}'"
            ))),
        }
    }

    /// Three well-separated bivariate Gaussians.
    pub fn gaussian_default() -> Self {
        ScenarioSpec::Gaussian {
            weights: vec![0.45, 0.25, 0.3],
            components: vec![
                GaussianComponent {
                    mean: vec![6.5, 5.0],
                    cov: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                },
                GaussianComponent {
                    mean: vec![0.0, 0.0],
                    cov: vec![vec![5.0, 0.0], vec![0.0, 2.0]],
                },
                GaussianComponent {
                    mean: vec![-5.0, -5.0],
                    cov: vec![vec![3.0, 0.0], vec![0.0, 1.0]],
                },
            ],
        }
    }

    /// Same locations and scales with skewness added.
    pub fn skew_gaussian_default() -> Self {
        ScenarioSpec::SkewGaussian {
            weights: vec![0.45, 0.25, 0.3],
            components: vec![
                SkewGaussianParams {
                    xi: vec![6.5, 5.0],
                    omega_mat: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                    alpha: vec![1.0, 1.0],
                },
                SkewGaussianParams {
                    xi: vec![0.0, 0.0],
                    omega_mat: vec![vec![5.0, 0.0], vec![0.0, 2.0]],
                    alpha: vec![-10.0, 15.0],
                },
                SkewGaussianParams {
                    xi: vec![-5.0, -5.0],
                    omega_mat: vec![vec![3.0, 0.0], vec![0.0, 1.0]],
                    alpha: vec![4.0, -17.0],
                },
            ],
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn generate(&self, n: usize, seed: u64) -> Result<LabeledDataset> {
        match self {
            ScenarioSpec::Gaussian {
                weights,
                components,
            } => gen_gaussian_mixture(weights, components, n, seed),
            ScenarioSpec::SkewGaussian {
                weights,
                components,
            } => gen_skew_gaussian_mixture(weights, components, n, seed),
            ScenarioSpec::SkewSymmetric => gen_skew_symmetric_mixture(n, seed),
            ScenarioSpec::Moons { noise_sd } => gen_moons(n, *noise_sd, seed),
            ScenarioSpec::Spirals { noise_sd } => gen_spirals(n, *noise_sd, seed),
        }
    }
}

/// Generated observations with their true component labels. Rows are kept
/// raw so the n = 0 and n = 1 cases remain representable; [`dataset`] view
/// enforces the modeling invariants.
///
/// [`dataset`]: LabeledDataset::dataset
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub rows: Vec<Vec<f64>>,
    pub truth: Vec<usize>,
    pub generator: String,
}

impl LabeledDataset {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn dataset(&self) -> Result<Dataset> {
        Dataset::from_rows(&self.rows)
    }

    pub fn truth_clustering(&self) -> Result<Clustering> {
        Clustering::canonicalize(&self.truth)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        use std::io::Write;
        let p = self.rows.first().map(|r| r.len()).unwrap_or(0);
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut header: Vec<String> = (1..=p).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        writeln!(out, "{}", header.join(","))?;
        for (row, &t) in self.rows.iter().zip(&self.truth) {
            let mut fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            fields.push(format!("{t}"));
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(FoldError::Empty("mixture weights".into()));
    }
    if weights.iter().any(|&w| w <= 0.0) {
        return Err(FoldError::InvalidParam("weights must be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(FoldError::InvalidParam(format!(
            "weights sum to {total}"
        )));
    }
    Ok(())
}

fn sample_component(weights: &[f64], rng: &mut Pcg64Mcg) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (m, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return m;
        }
    }
    weights.len() - 1
}

/// i.i.d. draws from a Gaussian mixture with truth labels recorded.
pub fn gen_gaussian_mixture(
    weights: &[f64],
    components: &[GaussianComponent],
    n: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    validate_weights(weights)?;
    if components.len() != weights.len() {
        return Err(FoldError::LengthMismatch {
            left: weights.len(),
            right: components.len(),
        });
    }
    let kernels: Vec<GaussianKernel> = components
        .iter()
        .map(|c| {
            let p = c.mean.len();
            GaussianKernel::new(
                DVector::from_column_slice(&c.mean),
                DMatrix::from_fn(p, p, |i, j| c.cov[i][j]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rng = stream_rng(seed, 0);
    let mut rows = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for _ in 0..n {
        let m = sample_component(weights, &mut rng);
        let x = kernels[m].sample(&mut rng);
        rows.push(x.iter().copied().collect());
        truth.push(m);
    }
    Ok(LabeledDataset {
        rows,
        truth,
        generator: "gaussian".into(),
    })
}

/// One draw from SN_p(xi, Omega, alpha) by hidden truncation: sample (U0, U)
/// jointly Gaussian with unit-variance U0 and cross-covariance
/// delta = Obar alpha / sqrt(1 + alpha' Obar alpha) on the correlation scale,
/// reflect U when U0 <= 0, then scale and shift.
pub fn sample_skew_normal(
    xi: &DVector<f64>,
    omega_mat: &DMatrix<f64>,
    alpha: &DVector<f64>,
    rng: &mut Pcg64Mcg,
) -> Result<DVector<f64>> {
    let p = xi.len();
    let scale_diag: DVector<f64> = DVector::from_iterator(p, (0..p).map(|i| omega_mat[(i, i)].sqrt()));
    let mut obar = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            obar[(i, j)] = omega_mat[(i, j)] / (scale_diag[i] * scale_diag[j]);
        }
    }
    let oa = &obar * alpha;
    let denom = (1.0 + alpha.dot(&oa)).sqrt();
    let delta = oa / denom;
    let mut joint = DMatrix::zeros(p + 1, p + 1);
    joint[(0, 0)] = 1.0;
    for i in 0..p {
        joint[(0, i + 1)] = delta[i];
        joint[(i + 1, 0)] = delta[i];
        for j in 0..p {
            joint[(i + 1, j + 1)] = obar[(i, j)];
        }
    }
    let chol = Cholesky::new(joint).ok_or_else(|| FoldError::Cholesky {
        context: "skew-normal joint covariance".into(),
    })?;
    let z = DVector::from_iterator(p + 1, (0..p + 1).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let u = chol.l() * z;
    let sign = if u[0] > 0.0 { 1.0 } else { -1.0 };
    let mut x = DVector::zeros(p);
    for i in 0..p {
        x[i] = xi[i] + scale_diag[i] * sign * u[i + 1];
    }
    Ok(x)
}

/// Mean of SN_p(xi, Omega, alpha): xi + diag(Omega)^{1/2} delta sqrt(2/pi).
pub fn skew_normal_mean(
    xi: &DVector<f64>,
    omega_mat: &DMatrix<f64>,
    alpha: &DVector<f64>,
) -> DVector<f64> {
    let p = xi.len();
    let scale_diag: DVector<f64> = DVector::from_iterator(p, (0..p).map(|i| omega_mat[(i, i)].sqrt()));
    let mut obar = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..p {
            obar[(i, j)] = omega_mat[(i, j)] / (scale_diag[i] * scale_diag[j]);
        }
    }
    let oa = &obar * alpha;
    let delta = &oa / (1.0 + alpha.dot(&oa)).sqrt();
    let c = (2.0 / std::f64::consts::PI).sqrt();
    DVector::from_iterator(p, (0..p).map(|i| xi[i] + scale_diag[i] * delta[i] * c))
}

/// i.i.d. draws from a skew-Gaussian mixture.
pub fn gen_skew_gaussian_mixture(
    weights: &[f64],
    components: &[SkewGaussianParams],
    n: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    validate_weights(weights)?;
    if components.len() != weights.len() {
        return Err(FoldError::LengthMismatch {
            left: weights.len(),
            right: components.len(),
        });
    }
    let parsed: Vec<(DVector<f64>, DMatrix<f64>, DVector<f64>)> = components
        .iter()
        .map(|c| {
            let p = c.xi.len();
            (
                DVector::from_column_slice(&c.xi),
                DMatrix::from_fn(p, p, |i, j| c.omega_mat[i][j]),
                DVector::from_column_slice(&c.alpha),
            )
        })
        .collect();
    let mut rng = stream_rng(seed, 0);
    let mut rows = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for _ in 0..n {
        let m = sample_component(weights, &mut rng);
        let (xi, om, al) = &parsed[m];
        let x = sample_skew_normal(xi, om, al, &mut rng)?;
        rows.push(x.iter().copied().collect());
        truth.push(m);
    }
    Ok(LabeledDataset {
        rows,
        truth,
        generator: "skew-gaussian".into(),
    })
}

/// The skew-symmetric mixture: three outer clusters with weights
/// (0.55, 0.3, 0.15); the first is itself a three-part sub-mixture, the
/// second a skew Gaussian, the third a Gaussian. Truth labels are the outer
/// components.
pub fn gen_skew_symmetric_mixture(n: usize, seed: u64) -> Result<LabeledDataset> {
    let outer = [0.55, 0.3, 0.15];
    let sub_weights = [0.364, 0.212, 0.424];
    let mut rng = stream_rng(seed, 0);
    let mut rows = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);

    let g1_sn_xi = DVector::from_column_slice(&[2.50, 3.50]);
    let g1_sn_omega = DMatrix::identity(2, 2);
    let g1_sn_alpha = DVector::from_column_slice(&[-10.0, 15.0]);
    let g1_n1 = GaussianKernel::new(
        DVector::from_column_slice(&[2.325, 4.381]),
        DMatrix::from_diagonal(&DVector::from_column_slice(&[0.20, 0.80])),
    )?;
    let g1_n2 = GaussianKernel::new(
        DVector::from_column_slice(&[1.085, 2.009]),
        DMatrix::from_diagonal(&DVector::from_column_slice(&[0.70, 0.60])),
    )?;
    let g2_xi = DVector::from_column_slice(&[0.0, -3.50]);
    let g2_omega = DMatrix::from_diagonal(&DVector::from_column_slice(&[5.0, 2.0]));
    let g2_alpha = DVector::from_column_slice(&[4.0, -17.0]);
    let g3 = GaussianKernel::new(
        DVector::from_column_slice(&[-4.0, -2.50]),
        DMatrix::from_fn(2, 2, |i, j| [[0.50, 0.50], [0.50, 2.50]][i][j]),
    )?;

    for _ in 0..n {
        let m = sample_component(&outer, &mut rng);
        let x = match m {
            0 => match sample_component(&sub_weights, &mut rng) {
                0 => sample_skew_normal(&g1_sn_xi, &g1_sn_omega, &g1_sn_alpha, &mut rng)?,
                1 => g1_n1.sample(&mut rng),
                _ => g1_n2.sample(&mut rng),
            },
            1 => sample_skew_normal(&g2_xi, &g2_omega, &g2_alpha, &mut rng)?,
            _ => g3.sample(&mut rng),
        };
        rows.push(x.iter().copied().collect());
        truth.push(m);
    }
    Ok(LabeledDataset {
        rows,
        truth,
        generator: "skew-symmetric".into(),
    })
}

/// Two interlocking half-circle arcs with isotropic Gaussian noise.
/// Unit radius, horizontal offset 0.5, vertical offset 0.25; classes are
/// balanced with |n1 - n2| <= 1.
pub fn gen_moons(n: usize, noise_sd: f64, seed: u64) -> Result<LabeledDataset> {
    if noise_sd < 0.0 {
        return Err(FoldError::InvalidParam("noise_sd must be >= 0".into()));
    }
    let mut rng = stream_rng(seed, 0);
    let n1 = n / 2 + n % 2;
    let n2 = n / 2;
    let mut rows = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for arc in 0..2 {
        let count = if arc == 0 { n1 } else { n2 };
        for i in 0..count {
            let theta = std::f64::consts::PI * (i as f64 + 0.5) / count as f64;
            let (mut x, mut y) = if arc == 0 {
                (theta.cos(), theta.sin())
            } else {
                (0.5 + theta.cos(), 0.25 - theta.sin())
            };
            x += noise_sd * rng.sample::<f64, _>(StandardNormal);
            y += noise_sd * rng.sample::<f64, _>(StandardNormal);
            rows.push(vec![x, y]);
            truth.push(arc);
        }
    }
    Ok(LabeledDataset {
        rows,
        truth,
        generator: "moons".into(),
    })
}

/// Three interlocked Archimedean spiral arms with coordinate noise.
pub fn gen_spirals(n: usize, noise_sd: f64, seed: u64) -> Result<LabeledDataset> {
    if noise_sd < 0.0 {
        return Err(FoldError::InvalidParam("noise_sd must be >= 0".into()));
    }
    let arms = 3usize;
    let mut rng = stream_rng(seed, 0);
    let mut rows = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for arm in 0..arms {
        let count = n / arms + usize::from(arm < n % arms);
        let offset = 2.0 * std::f64::consts::PI * arm as f64 / arms as f64;
        for i in 0..count {
            let t = (i as f64 + 0.5) / count as f64; // position along the arm
            let theta = offset + 3.5 * t * std::f64::consts::PI;
            let r = 0.2 + 1.3 * t;
            let x = r * theta.cos() + noise_sd * rng.sample::<f64, _>(StandardNormal);
            let y = r * theta.sin() + noise_sd * rng.sample::<f64, _>(StandardNormal);
            rows.push(vec![x, y]);
            truth.push(arm);
        }
    }
    Ok(LabeledDataset {
        rows,
        truth,
        generator: "spirals".into(),
    })
}
