//! Observation matrix with CSV reading and writing.

use crate::error::{FoldError, Result};
use nalgebra::{DMatrix, DVector};
use std::io::{BufRead, Write};
use std::path::Path;

/// n x p matrix of real observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() < 2 {
            return Err(FoldError::InvalidParam(format!(
                "dataset needs n >= 2 rows, got {}",
                x.nrows()
            )));
        }
        if x.ncols() < 1 {
            return Err(FoldError::InvalidParam("dataset needs p >= 1".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FoldError::NonFinite {
                context: "dataset entries".into(),
            });
        }
        Ok(Dataset { x })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(FoldError::Empty("dataset rows".into()));
        }
        let p = rows[0].len();
        if rows.iter().any(|r| r.len() != p) {
            return Err(FoldError::Parse("ragged rows in dataset".into()));
        }
        let x = DMatrix::from_row_iterator(rows.len(), p, rows.iter().flatten().copied());
        Self::new(x)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// Observation i as a column vector.
    pub fn row(&self, i: usize) -> DVector<f64> {
        self.x.row(i).transpose()
    }

    /// Center each coordinate and scale it to unit sample variance. The
    /// mixture priors place component means near zero at unit scale, so
    /// fitting standardized data is the usual protocol.
    pub fn standardized(&self) -> Dataset {
        let (n, p) = (self.n(), self.p());
        let mut x = self.x.clone();
        for j in 0..p {
            let mean: f64 = (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64;
            let var: f64 =
                (0..n).map(|i| (x[(i, j)] - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            for i in 0..n {
                x[(i, j)] = (x[(i, j)] - mean) / sd;
            }
        }
        Dataset { x }
    }

    /// Read a dataset from CSV. A header is required; a column named `label`
    /// is skipped (and returned separately when present).
    pub fn read_csv(path: &Path) -> Result<(Self, Option<Vec<usize>>)> {
        let file = std::fs::File::open(path)?;
        let mut lines = std::io::BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| FoldError::Parse("empty csv".into()))??;
        let cols: Vec<&str> = header.split(',').map(|s| s.trim()).collect();
        let label_col = cols.iter().position(|&c| c == "label");
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut row = Vec::with_capacity(cols.len());
            for (j, field) in line.split(',').enumerate() {
                if Some(j) == label_col {
                    let l: usize = field
                        .trim()
                        .parse()
                        .map_err(|_| FoldError::Parse(format!("bad label '{field}'")))?;
                    labels.push(l);
                } else {
                    let v: f64 = field
                        .trim()
                        .parse()
                        .map_err(|_| FoldError::Parse(format!("bad number '{field}'")))?;
                    row.push(v);
                }
            }
            rows.push(row);
        }
        let ds = Self::from_rows(&rows)?;
        let labels = label_col.map(|_| labels);
        if let Some(ref l) = labels {
            if l.len() != ds.n() {
                return Err(FoldError::Parse("label column length mismatch".into()));
            }
        }
        Ok((ds, labels))
    }

    /// Write as CSV with header x1..xp, plus a trailing `label` column when
    /// truth labels are given. Floats use shortest round-trip formatting.
    pub fn write_csv(&self, path: &Path, truth: Option<&[usize]>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let mut header: Vec<String> = (1..=self.p()).map(|j| format!("x{j}")).collect();
        if truth.is_some() {
            header.push("label".into());
        }
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.n() {
            let mut fields: Vec<String> = (0..self.p()).map(|j| format!("{}", self.x[(i, j)])).collect();
            if let Some(t) = truth {
                fields.push(format!("{}", t[i]));
            }
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_nonfinite() {
        assert!(Dataset::from_rows(&[vec![1.0]]).is_err());
        assert!(Dataset::from_rows(&[vec![1.0], vec![f64::NAN]]).is_err());
        assert!(Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn standardized_has_zero_mean_unit_variance() {
        let ds = Dataset::from_rows(&[
            vec![1.0, 10.0],
            vec![2.0, 30.0],
            vec![3.0, 20.0],
            vec![4.0, 40.0],
        ])
        .unwrap();
        let z = ds.standardized();
        for j in 0..2 {
            let mean: f64 = (0..4).map(|i| z.matrix()[(i, j)]).sum::<f64>() / 4.0;
            let var: f64 =
                (0..4).map(|i| (z.matrix()[(i, j)] - mean).powi(2)).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-12);
            assert!((var - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_roundtrip_exact() {
        let ds = Dataset::from_rows(&[
            vec![0.1, -2.5e-17],
            vec![1.0 / 3.0, 4.0],
            vec![6.02e23, -1.0],
        ])
        .unwrap();
        let dir = std::env::temp_dir().join("fold_ds_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ds.csv");
        ds.write_csv(&path, Some(&[0, 1, 1])).unwrap();
        let (back, labels) = Dataset::read_csv(&path).unwrap();
        assert_eq!(ds, back);
        assert_eq!(labels.unwrap(), vec![0, 1, 1]);
    }
}
