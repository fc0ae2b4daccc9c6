//! Loss-parameter selection: the grand-mean default and the elbow statistic.

use crate::delta::DeltaMatrix;
use crate::error::{FoldError, Result};
use crate::loss::LossParams;
use crate::optimize::{average_linkage_path, path_pair_sums, CandidatePath};
use serde::{Deserialize, Serialize};

/// One elbow-curve point: omega, the cluster count of its point estimate,
/// and the normalized within-cluster distance sum r in [0, 1].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ElbowPoint {
    pub omega: f64,
    pub k_star: usize,
    pub r_omega: f64,
}

/// Default loss parameter: gamma equals the grand mean of the distances,
/// omega = gamma / (1 - gamma). Candidate clusters then merge exactly when
/// their mean cross distance falls below the sample-wide mean.
pub fn omega_avg(dmat: &DeltaMatrix) -> Result<LossParams> {
    if dmat.n() < 2 {
        return Err(FoldError::InvalidParam("need n >= 2".into()));
    }
    let gamma = dmat.mean_off_diagonal();
    if gamma <= 0.0 {
        return Err(FoldError::Degenerate(
            "all pairwise distances are zero; every merge is trivially favored".into(),
        ));
    }
    if gamma >= 1.0 {
        return Err(FoldError::Degenerate(
            "all pairwise distances saturated at one".into(),
        ));
    }
    LossParams::new(gamma / (1.0 - gamma))
}

/// Elbow curve over a grid of omega values, restricted to average-linkage
/// path candidates. For each omega the path-restricted minimizer c* is found
/// and r = (sum of within-cluster distances of c*) / (sum over all pairs).
/// Along one path r is nondecreasing in omega.
pub fn elbow_curve(dmat: &DeltaMatrix, omegas: &[f64]) -> Result<Vec<ElbowPoint>> {
    if omegas.is_empty() {
        return Err(FoldError::Empty("omega grid".into()));
    }
    let path = average_linkage_path(dmat);
    elbow_curve_on_path(&path, dmat, omegas)
}

/// Elbow curve against a caller-supplied candidate path.
pub fn elbow_curve_on_path(
    path: &CandidatePath,
    dmat: &DeltaMatrix,
    omegas: &[f64],
) -> Result<Vec<ElbowPoint>> {
    let sizes = vec![1usize; dmat.n()];
    let sums = path_pair_sums(path, dmat, &sizes)?;
    let total = sums.last().expect("path nonempty").0; // within-sum of one cluster
    if total <= 0.0 {
        return Err(FoldError::Degenerate(
            "all pairwise distances are zero; elbow statistic undefined".into(),
        ));
    }
    let mut out = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        let params = LossParams::new(omega)?;
        let mut best_idx = 0;
        let mut best_risk = f64::INFINITY;
        for (t, &(w, x)) in sums.iter().enumerate() {
            let risk = w + params.omega() * x;
            if risk <= best_risk {
                best_risk = risk;
                best_idx = t;
            }
        }
        out.push(ElbowPoint {
            omega,
            k_star: path.clusterings()[best_idx].k(),
            r_omega: sums[best_idx].0 / total,
        });
    }
    Ok(out)
}

/// Write an elbow curve as CSV with header omega,k,r_omega.
pub fn write_elbow_csv(points: &[ElbowPoint], path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "omega,k,r_omega")?;
    for p in points {
        writeln!(out, "{},{},{}", p.omega, p.k_star, p.r_omega)?;
    }
    Ok(())
}
