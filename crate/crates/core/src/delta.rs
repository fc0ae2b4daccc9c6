//! Pairwise distance matrices between localized densities and their
//! Monte-Carlo posterior expectation.
//!
//! Within one draw only K(K-1)/2 distinct kernel-pair distances exist; they
//! are computed once per draw and broadcast to observation pairs. Draws are
//! accumulated in fixed-size chunks reduced in index order, so results do not
//! depend on thread count or scheduling.

use crate::error::{FoldError, Result};
use crate::gibbs::PosteriorSamples;
use crate::kernel::hellinger_gaussian;
use crate::mixture::MixtureDraw;
use rayon::prelude::*;
use std::io::{BufRead, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 8] = b"FOLDDMAT";
const CHUNK: usize = 64;

/// Symmetric n x n matrix of pairwise distances in [0, 1] with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaMatrix {
    d: Vec<f64>, // row-major, dense
    n: usize,
}

impl DeltaMatrix {
    /// Validates bounds, symmetry, and zero diagonal. The triangle inequality
    /// is checked separately by [`DeltaMatrix::max_triangle_violation`]
    /// because it costs O(n^3).
    pub fn new(d: Vec<f64>, n: usize) -> Result<Self> {
        if d.len() != n * n {
            return Err(FoldError::SizeMismatch {
                expected: n * n,
                got: d.len(),
            });
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(FoldError::InvalidParam(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = d[i * n + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(FoldError::InvalidParam(format!(
                        "entry ({i},{j}) = {v} outside [0,1]"
                    )));
                }
                if v != d[j * n + i] {
                    return Err(FoldError::InvalidParam(format!(
                        "asymmetry at ({i},{j})"
                    )));
                }
            }
        }
        Ok(DeltaMatrix { d, n })
    }

    pub fn zeros(n: usize) -> Self {
        DeltaMatrix {
            d: vec![0.0; n * n],
            n,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.d[i * self.n + j] = v;
        self.d[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }

    /// Mean of the upper-triangular entries (i < j).
    pub fn mean_off_diagonal(&self) -> f64 {
        let n = self.n;
        let mut sum = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += self.get(i, j);
            }
        }
        sum / (n as f64 * (n as f64 - 1.0) / 2.0)
    }

    /// Largest violation of d_il <= d_ij + d_jl over all triples.
    pub fn max_triangle_violation(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let dij = self.get(i, j);
                for l in 0..n {
                    let v = self.get(i, l) - dij - self.get(j, l);
                    if v > worst {
                        worst = v;
                    }
                }
            }
        }
        worst
    }

    /// CSV: one row per line, comma-separated, full matrix. Floats are
    /// written in shortest round-trip form so read(write(m)) == m exactly.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v}")).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let mut d = Vec::new();
        let mut n = 0usize;
        for line in std::io::BufReader::new(file).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|f| f.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| FoldError::Parse(format!("bad matrix entry: {e}")))?;
            if n == 0 {
                n = row.len();
            } else if row.len() != n {
                return Err(FoldError::Parse("ragged matrix csv".into()));
            }
            d.extend(row);
        }
        if d.len() != n * n {
            return Err(FoldError::Parse(format!(
                "matrix csv is {} x {}, expected square",
                d.len() / n.max(1),
                n
            )));
        }
        DeltaMatrix::new(d, n)
    }

    /// Binary: 8-byte magic, little-endian u64 n, then n^2 little-endian f64.
    pub fn write_binary(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        out.write_all(MAGIC)?;
        out.write_all(&(self.n as u64).to_le_bytes())?;
        for v in &self.d {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(path: &Path) -> Result<Self> {
        let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut magic = [0u8; 8];
        file.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(FoldError::Parse("bad magic in matrix file".into()));
        }
        let mut nb = [0u8; 8];
        file.read_exact(&mut nb)?;
        let n = u64::from_le_bytes(nb) as usize;
        let mut d = vec![0.0f64; n * n];
        let mut buf = [0u8; 8];
        for v in d.iter_mut() {
            file.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        DeltaMatrix::new(d, n)
    }
}

/// Kernel-pair Hellinger distances among the occupied components of a draw,
/// with each observation mapped to its occupied-component index.
///
/// Returns (sizes, eta, block_of): `sizes[b]` is the number of observations
/// in block b, `eta` the m x m distance matrix among blocks, `block_of[i]`
/// the block of observation i.
pub fn draw_blocks(draw: &MixtureDraw) -> Result<(Vec<usize>, DeltaMatrix, Vec<usize>)> {
    let occ = draw.occupied();
    let m = occ.len();
    let mut index_of = vec![usize::MAX; draw.k()];
    for (b, &k) in occ.iter().enumerate() {
        index_of[k] = b;
    }
    let mut eta = DeltaMatrix::zeros(m);
    for a in 0..m {
        for b in (a + 1)..m {
            let h = hellinger_gaussian(&draw.kernels()[occ[a]], &draw.kernels()[occ[b]])?;
            eta.set_sym(a, b, h);
        }
    }
    let block_of: Vec<usize> = draw.alloc().iter().map(|&s| index_of[s]).collect();
    let counts = draw.counts();
    let sizes: Vec<usize> = occ.iter().map(|&k| counts[k]).collect();
    Ok((sizes, eta, block_of))
}

/// The single-draw distance matrix D^{(t)} over observations.
pub fn per_draw_distance_matrix(draw: &MixtureDraw) -> Result<DeltaMatrix> {
    let n = draw.n();
    let (_, eta, block_of) = draw_blocks(draw)?;
    let mut d = vec![0.0f64; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = eta.get(block_of[i], block_of[j]);
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    DeltaMatrix::new(d, n)
}

fn accumulate_chunk(draws: &[MixtureDraw], with_disagreement: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = draws[0].n();
    let mut acc = vec![0.0f64; n * n];
    let mut dis = if with_disagreement {
        vec![0.0f64; n * n]
    } else {
        Vec::new()
    };
    for draw in draws {
        let (_, eta, block_of) = draw_blocks(draw)?;
        for i in 0..n {
            let bi = block_of[i];
            let row = &mut acc[i * n..(i + 1) * n];
            for (j, &bj) in block_of.iter().enumerate() {
                if j != i {
                    row[j] += eta.get(bi, bj);
                }
            }
            if with_disagreement {
                let drow = &mut dis[i * n..(i + 1) * n];
                for (j, &bj) in block_of.iter().enumerate() {
                    if j != i && bi != bj {
                        drow[j] += 1.0;
                    }
                }
            }
        }
    }
    Ok((acc, dis))
}

fn reduce_draws(samples: &PosteriorSamples, with_disagreement: bool) -> Result<(DeltaMatrix, Option<DeltaMatrix>)> {
    let draws = samples.draws();
    if draws.is_empty() {
        return Err(FoldError::Empty("posterior draws".into()));
    }
    let n = draws[0].n();
    let t = draws.len() as f64;
    let chunks: Vec<(Vec<f64>, Vec<f64>)> = draws
        .par_chunks(CHUNK)
        .map(|c| accumulate_chunk(c, with_disagreement))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = vec![0.0f64; n * n];
    let mut dis = vec![0.0f64; n * n];
    for (a, b) in &chunks {
        for (x, y) in acc.iter_mut().zip(a.iter()) {
            *x += y;
        }
        if with_disagreement {
            for (x, y) in dis.iter_mut().zip(b.iter()) {
                *x += y;
            }
        }
    }
    for v in acc.iter_mut() {
        *v /= t;
    }
    let delta = DeltaMatrix::new(acc, n)?;
    let dmat = if with_disagreement {
        for v in dis.iter_mut() {
            *v /= t;
        }
        Some(DeltaMatrix::new(dis, n)?)
    } else {
        None
    };
    Ok((delta, dmat))
}

/// Monte-Carlo estimate of the posterior-expected distance matrix:
/// Delta_ij = (1/T) sum_t D_ij^{(t)}.
pub fn estimate_delta(samples: &PosteriorSamples) -> Result<DeltaMatrix> {
    Ok(reduce_draws(samples, false)?.0)
}

/// Delta together with the Monte-Carlo estimate of Pi(s_i != s_j | X),
/// both accumulated in the same order so Delta_ij <= disagreement_ij holds
/// entrywise in floating point exactly.
pub fn estimate_delta_and_disagreement(
    samples: &PosteriorSamples,
) -> Result<(DeltaMatrix, DeltaMatrix)> {
    let (d, dis) = reduce_draws(samples, true)?;
    Ok((d, dis.expect("disagreement requested")))
}

/// Co-clustering disagreement of the allocation vectors only; equals
/// 1 - PSM of the component labels. Minimizing Binder's risk is risk
/// minimization on this matrix with the same machinery as the main loss.
pub fn allocation_disagreement(samples: &PosteriorSamples) -> Result<DeltaMatrix> {
    let draws = samples.draws();
    if draws.is_empty() {
        return Err(FoldError::Empty("posterior draws".into()));
    }
    let n = draws[0].n();
    let t = draws.len() as f64;
    let chunks: Vec<Vec<f64>> = draws
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0f64; n * n];
            for draw in chunk {
                let alloc = draw.alloc();
                for i in 0..n {
                    let si = alloc[i];
                    let row = &mut acc[i * n..(i + 1) * n];
                    for (j, &sj) in alloc.iter().enumerate() {
                        if j != i && si != sj {
                            row[j] += 1.0;
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let mut acc = vec![0.0f64; n * n];
    for a in &chunks {
        for (x, y) in acc.iter_mut().zip(a.iter()) {
            *x += y;
        }
    }
    for v in acc.iter_mut() {
        *v /= t;
    }
    DeltaMatrix::new(acc, n)
}
