use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `n × p` matrix of observations stored row major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix {
    n: usize,
    p: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    /// Builds a matrix from row-major values. All entries must be finite.
    pub fn new(n: usize, p: usize, values: Vec<f64>) -> Result<Self> {
        if p == 0 {
            return Err(Error::domain("data matrix needs at least one column"));
        }
        if values.len() != n * p {
            return Err(Error::domain(format!(
                "expected {} values for a {n}x{p} matrix, got {}",
                n * p,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite entry at row {}, column {}",
                pos / p,
                pos % p
            )));
        }
        Ok(Self { n, p, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let p = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut values = Vec::with_capacity(rows.len() * p);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != p {
                return Err(Error::domain(format!("row {i} has {} columns, expected {p}", r.len())));
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), p, values)
    }

    /// Bivariate data from two columns of equal length.
    pub fn from_columns(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::domain("columns differ in length"));
        }
        let values = x.iter().zip(y).flat_map(|(a, b)| [*a, *b]).collect();
        Self::new(x.len(), 2, values)
    }

    pub(crate) fn from_points(points: &[[f64; 2]]) -> Self {
        Self {
            n: points.len(),
            p: 2,
            values: points.iter().flatten().copied().collect(),
        }
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.p)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Rows as fixed-size points. Errors unless `p == 2`.
    pub fn points2(&self) -> Result<Vec<[f64; 2]>> {
        self.require_bivariate()?;
        Ok(self.rows().map(|r| [r[0], r[1]]).collect())
    }

    pub fn require_bivariate(&self) -> Result<()> {
        if self.p != 2 {
            return Err(Error::domain(format!(
                "bivariate estimator applied to {}-column data",
                self.p
            )));
        }
        Ok(())
    }

    /// The two-column submatrix `(i, j)`.
    pub fn select_pair(&self, i: usize, j: usize) -> DataMatrix {
        let values = self.rows().flat_map(|r| [r[i], r[j]]).collect();
        DataMatrix {
            n: self.n,
            p: 2,
            values,
        }
    }

    /// Applies `f` to every value of column `j`.
    pub fn map_column(&self, j: usize, f: impl Fn(f64) -> f64) -> DataMatrix {
        let mut out = self.clone();
        for i in 0..out.n {
            let v = &mut out.values[i * out.p + j];
            *v = f(*v);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks() {
        assert!(DataMatrix::new(2, 2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(DataMatrix::new(1, 2, vec![1.0, f64::INFINITY]).is_err());
        assert!(DataMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        let d = DataMatrix::from_columns(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(d.row(1), &[2.0, 4.0]);
        assert_eq!(d.column(1), vec![3.0, 4.0]);
    }

    #[test]
    fn pair_selection() {
        let d = DataMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let s = d.select_pair(2, 0);
        assert_eq!(s.as_slice(), &[3.0, 1.0, 6.0, 4.0]);
    }
}
