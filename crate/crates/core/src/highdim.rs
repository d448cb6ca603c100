//! Correlation matrices assembled from pairwise bivariate estimates.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::data::DataMatrix;
use crate::distributions::SeedSpec;
use crate::error::{Error, Result};
use crate::estimators::{estimate, EstimatorId};

/// Eigenvalue floor used by [`psd_repair`].
pub const PSD_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairWarning {
    pub i: usize,
    pub j: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrMatrix {
    pub values: DMatrix<f64>,
    pub estimator: EstimatorId,
    /// Set by [`psd_repair`].
    pub psd: bool,
    pub warnings: Vec<PairWarning>,
    pub pairs_evaluated: usize,
    pub min_eigenvalue_before: Option<f64>,
}

impl CorrMatrix {
    pub fn p(&self) -> usize {
        self.values.nrows()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.values)
    }

    /// Plain CSV, one matrix row per line, with an optional header.
    pub fn write_csv<W: Write>(&self, w: W, header: Option<&[String]>) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        if let Some(h) = header {
            if h.len() != self.p() {
                return Err(Error::domain("header length differs from the matrix size"));
            }
            wr.write_record(h)?;
        }
        for i in 0..self.p() {
            wr.write_record(self.values.row(i).iter().map(|v| v.to_string()))?;
        }
        wr.flush()?;
        Ok(())
    }

    /// JSON sidecar with degeneracy warnings and eigenvalue diagnostics.
    pub fn sidecar_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Sidecar<'a> {
            p: usize,
            estimator: EstimatorId,
            pairs_evaluated: usize,
            psd_repaired: bool,
            min_eigenvalue_before: f64,
            min_eigenvalue_after: f64,
            warnings: &'a [PairWarning],
        }
        let now = self.min_eigenvalue();
        Ok(serde_json::to_string_pretty(&Sidecar {
            p: self.p(),
            estimator: self.estimator,
            pairs_evaluated: self.pairs_evaluated,
            psd_repaired: self.psd,
            min_eigenvalue_before: self.min_eigenvalue_before.unwrap_or(now),
            min_eigenvalue_after: now,
            warnings: &self.warnings,
        })?)
    }
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Entry `(i, j)` is the bivariate estimate on columns `i` and `j`. Pairs
/// that fail are set to 0 and listed in `warnings`.
pub fn pairwise_corr_matrix(data: &DataMatrix, id: EstimatorId, seed: &SeedSpec, parallel: bool) -> Result<CorrMatrix> {
    let p = data.ncols();
    if p < 2 {
        return Err(Error::domain("pairwise correlation needs at least two columns"));
    }
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| (i + 1..p).map(move |j| (i, j))).collect();
    let eval = |&(i, j): &(usize, usize)| estimate(id, &data.select_pair(i, j), seed).map(|e| e.value);
    let results: Vec<Result<f64>> = if parallel {
        pairs.par_iter().map(eval).collect()
    } else {
        pairs.iter().map(eval).collect()
    };
    let mut values = DMatrix::identity(p, p);
    let mut warnings = Vec::new();
    for (&(i, j), r) in pairs.iter().zip(results) {
        let v = match r {
            Ok(v) if v.is_finite() => v.clamp(-1.0, 1.0),
            Ok(v) => {
                warnings.push(PairWarning {
                    i,
                    j,
                    message: format!("non-finite estimate {v}"),
                });
                0.0
            }
            Err(e) => {
                warnings.push(PairWarning {
                    i,
                    j,
                    message: e.to_string(),
                });
                0.0
            }
        };
        values[(i, j)] = v;
        values[(j, i)] = v;
    }
    Ok(CorrMatrix {
        values,
        estimator: id,
        psd: false,
        warnings,
        pairs_evaluated: pairs.len(),
        min_eigenvalue_before: None,
    })
}

/// Clips eigenvalues below [`PSD_EPS`], reconstructs and rescales to unit
/// diagonal. Input with a nonnegative spectrum is returned unchanged.
pub fn psd_repair(r: &CorrMatrix) -> CorrMatrix {
    let before = r.min_eigenvalue();
    let mut out = r.clone();
    out.psd = true;
    out.min_eigenvalue_before = Some(before);
    if before >= 0.0 {
        return out;
    }
    let p = r.p();
    let eig = SymmetricEigen::new(r.values.clone());
    let clipped = eig.eigenvalues.map(|l| l.max(PSD_EPS));
    let q = &eig.eigenvectors;
    let m = q * DMatrix::from_diagonal(&clipped) * q.transpose();
    let d: Vec<f64> = (0..p).map(|i| m[(i, i)].sqrt()).collect();
    for i in 0..p {
        out.values[(i, i)] = 1.0;
        for j in i + 1..p {
            let v = (0.5 * (m[(i, j)] + m[(j, i)]) / (d[i] * d[j])).clamp(-1.0, 1.0);
            out.values[(i, j)] = v;
            out.values[(j, i)] = v;
        }
    }
    out
}
