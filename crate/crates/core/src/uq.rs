//! Uncertainty quantification: per-draw loss minimizers, credible balls with
//! horizontal and vertical bounds, and the co-clustering similarity matrix.

use crate::delta::draw_blocks;
use crate::error::{FoldError, Result};
use crate::gibbs::PosteriorSamples;
use crate::loss::LossParams;
use crate::optimize::{greedy_minimize_weighted, GreedyConfig};
use crate::partition::{binder_distance, vi_distance, Clustering};
use crate::rng::child_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

/// Distance used for credible-ball geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartitionMetric {
    Vi,
    Binder,
}

impl PartitionMetric {
    pub fn distance(&self, a: &Clustering, b: &Clustering) -> Result<f64> {
        match self {
            PartitionMetric::Vi => vi_distance(a, b),
            PartitionMetric::Binder => binder_distance(a, b, 1.0),
        }
    }
}

impl std::str::FromStr for PartitionMetric {
    type Err = FoldError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vi" => Ok(PartitionMetric::Vi),
            "binder" => Ok(PartitionMetric::Binder),
            other => Err(FoldError::InvalidParam(format!("unknown metric '{other}'"))),
        }
    }
}

/// Approximate the per-draw loss minimizer for every retained draw.
///
/// Each draw's distance matrix is constant on allocation blocks (observations
/// sharing a component have identical localized densities), and with omega >
/// 0 some optimal clustering never splits a block: blocks are exchangeable
/// and separating two zero-distance items always costs omega per pair. The
/// search therefore runs on the collapsed block instance.
pub fn per_draw_minimizers(
    samples: &PosteriorSamples,
    params: &LossParams,
    cfg: &GreedyConfig,
) -> Result<Vec<Clustering>> {
    samples
        .draws()
        .par_iter()
        .enumerate()
        .map(|(t, draw)| {
            let (sizes, eta, block_of) = draw_blocks(draw)?;
            let draw_cfg = GreedyConfig {
                seed: child_seed(cfg.seed, t as u64),
                ..*cfg
            };
            let collapsed = greedy_minimize_weighted(&eta, &sizes, params, &draw_cfg)?;
            let labels: Vec<usize> = block_of.iter().map(|&b| collapsed.label(b)).collect();
            Clustering::canonicalize(&labels)
        })
        .collect()
}

/// Credible ball around a point estimate: smallest radius holding at least
/// `level` of the draws, with the bound clusterings characterizing it.
#[derive(Debug, Clone)]
pub struct CredibleBall {
    pub center: Clustering,
    pub radius: f64,
    pub level: f64,
    pub metric: PartitionMetric,
    pub horizontal: Vec<Clustering>,
    pub vertical_upper: Vec<Clustering>,
    pub vertical_lower: Vec<Clustering>,
}

#[derive(Serialize, Deserialize)]
struct CredibleBallFile {
    center: Vec<usize>,
    radius: f64,
    level: f64,
    metric: PartitionMetric,
    horizontal: Vec<Vec<usize>>,
    vertical_upper: Vec<Vec<usize>>,
    vertical_lower: Vec<Vec<usize>>,
}

impl CredibleBall {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let file = CredibleBallFile {
            center: self.center.labels().to_vec(),
            radius: self.radius,
            level: self.level,
            metric: self.metric,
            horizontal: self.horizontal.iter().map(|c| c.labels().to_vec()).collect(),
            vertical_upper: self
                .vertical_upper
                .iter()
                .map(|c| c.labels().to_vec())
                .collect(),
            vertical_lower: self
                .vertical_lower
                .iter()
                .map(|c| c.labels().to_vec())
                .collect(),
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut out, &file)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: CredibleBallFile = serde_json::from_str(&text)?;
        let conv = |vs: Vec<Vec<usize>>| -> Result<Vec<Clustering>> {
            vs.iter().map(|v| Clustering::canonicalize(v)).collect()
        };
        Ok(CredibleBall {
            center: Clustering::canonicalize(&file.center)?,
            radius: file.radius,
            level: file.level,
            metric: file.metric,
            horizontal: conv(file.horizontal)?,
            vertical_upper: conv(file.vertical_upper)?,
            vertical_lower: conv(file.vertical_lower)?,
        })
    }
}

fn dedup_sorted(mut cs: Vec<Clustering>) -> Vec<Clustering> {
    cs.sort_by(|a, b| a.labels().cmp(b.labels()));
    cs.dedup();
    cs
}

/// Compute the credible ball. The radius grid is the set of observed
/// distances, so the radius is exactly the smallest achievable value with
/// empirical coverage >= level.
pub fn credible_ball(
    center: &Clustering,
    draws_c: &[Clustering],
    level: f64,
    metric: PartitionMetric,
) -> Result<CredibleBall> {
    if draws_c.is_empty() {
        return Err(FoldError::Empty("per-draw clusterings".into()));
    }
    if !(0.0 < level && level < 1.0) {
        return Err(FoldError::InvalidParam(format!(
            "level must be in (0,1), got {level}"
        )));
    }
    let t = draws_c.len() as f64;
    let dists: Vec<f64> = draws_c
        .iter()
        .map(|c| metric.distance(c, center))
        .collect::<Result<Vec<_>>>()?;
    let mut grid: Vec<f64> = dists.clone();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    let mut radius = *grid.last().unwrap();
    for &g in &grid {
        let coverage = dists.iter().filter(|&&d| d <= g).count() as f64 / t;
        if coverage >= level {
            radius = g;
            break;
        }
    }
    let in_ball: Vec<usize> = (0..draws_c.len()).filter(|&i| dists[i] <= radius).collect();
    let max_dist = in_ball
        .iter()
        .map(|&i| dists[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let horizontal = dedup_sorted(
        in_ball
            .iter()
            .filter(|&&i| dists[i] == max_dist)
            .map(|&i| draws_c[i].clone())
            .collect(),
    );
    let k_min = in_ball.iter().map(|&i| draws_c[i].k()).min().unwrap();
    let k_max = in_ball.iter().map(|&i| draws_c[i].k()).max().unwrap();
    let extremal = |k_target: usize| -> Vec<Clustering> {
        let best = in_ball
            .iter()
            .filter(|&&i| draws_c[i].k() == k_target)
            .map(|&i| dists[i])
            .fold(f64::NEG_INFINITY, f64::max);
        dedup_sorted(
            in_ball
                .iter()
                .filter(|&&i| draws_c[i].k() == k_target && dists[i] == best)
                .map(|&i| draws_c[i].clone())
                .collect(),
        )
    };
    Ok(CredibleBall {
        center: center.clone(),
        radius,
        level,
        metric,
        horizontal,
        vertical_upper: extremal(k_min),
        vertical_lower: extremal(k_max),
    })
}

/// Symmetric co-clustering frequency matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    p: Vec<f64>,
    n: usize,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    /// Same file layout as the distance-matrix CSV.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|j| format!("{}", self.get(i, j))).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Same binary layout as the distance matrix: magic, n, n^2 doubles.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(b"FOLDDMAT")?;
        out.write_all(&(self.n as u64).to_le_bytes())?;
        for v in &self.p {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Fraction of draws co-clustering each pair.
pub fn fold_psm(draws_c: &[Clustering]) -> Result<SimilarityMatrix> {
    if draws_c.is_empty() {
        return Err(FoldError::Empty("per-draw clusterings".into()));
    }
    let n = draws_c[0].n();
    for c in draws_c {
        if c.n() != n {
            return Err(FoldError::LengthMismatch {
                left: n,
                right: c.n(),
            });
        }
    }
    let t = draws_c.len() as f64;
    let mut p = vec![0.0f64; n * n];
    for c in draws_c {
        for i in 0..n {
            let li = c.label(i);
            let row = &mut p[i * n..(i + 1) * n];
            for j in 0..n {
                if c.label(j) == li {
                    row[j] += 1.0;
                }
            }
        }
    }
    for v in p.iter_mut() {
        *v /= t;
    }
    Ok(SimilarityMatrix { p, n })
}
