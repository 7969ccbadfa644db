use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest eigenvalue tolerated before a matrix is rejected as not PSD.
pub const PSD_TOLERANCE: f64 = -1e-10;

/// Correlation matrix among comparison test statistics: symmetric, unit
/// diagonal, entries in `[-1, 1]`, positive semi-definite. Stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct CorrelationMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} matrix",
                data.len()
            )));
        }
        for i in 0..dim {
            if (data[i * dim + i] - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidCorrelation(format!(
                    "diagonal entry ({i},{i}) is {}",
                    data[i * dim + i]
                )));
            }
            for j in 0..dim {
                let v = data[i * dim + j];
                if !v.is_finite() || v.abs() > 1.0 {
                    return Err(Error::InvalidCorrelation(format!(
                        "entry ({i},{j}) = {v} outside [-1, 1]"
                    )));
                }
                if (v - data[j * dim + i]).abs() > 1e-12 {
                    return Err(Error::InvalidCorrelation(format!(
                        "not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let m = Self { dim, data };
        let min_eigenvalue = m.min_eigenvalue();
        if min_eigenvalue < PSD_TOLERANCE {
            return Err(Error::NotPositiveSemiDefinite { min_eigenvalue });
        }
        Ok(m)
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    /// Builds a matrix from off-diagonal entries `(i, j, ρ)`; unlisted pairs
    /// are zero.
    pub fn from_pairs(dim: usize, pairs: &[(usize, usize, f64)]) -> Result<Self> {
        let mut data = Self::identity(dim).data;
        for &(i, j, r) in pairs {
            if i >= dim || j >= dim || i == j {
                return Err(Error::DimensionMismatch(format!(
                    "pair ({i},{j}) for a {dim}x{dim} matrix"
                )));
            }
            data[i * dim + j] = r;
            data[j * dim + i] = r;
        }
        Self::new(dim, data)
    }

    /// Two-dimensional matrix with off-diagonal `rho`.
    pub fn pair(rho: f64) -> Result<Self> {
        Self::new(2, vec![1.0, rho, rho, 1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim.max(1)).map(<[f64]>::to_vec).collect()
    }

    /// Upper-triangle entries `(i, j, ρᵢⱼ)` with `i < j`.
    pub fn off_diagonal(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| ((i + 1)..self.dim).map(move |j| (i, j, self.get(i, j))))
    }

    pub fn max_off_diagonal(&self) -> f64 {
        self.off_diagonal().map(|(_, _, r)| r).fold(0.0, f64::max)
    }

    /// The matrix with row and column `index` removed.
    pub fn without(&self, index: usize) -> Result<Self> {
        if index >= self.dim {
            return Err(Error::DimensionMismatch(format!(
                "index {index} for a {0}x{0} matrix",
                self.dim
            )));
        }
        let keep: Vec<usize> = (0..self.dim).filter(|&i| i != index).collect();
        let data = keep
            .iter()
            .flat_map(|&i| keep.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        Ok(Self {
            dim: keep.len(),
            data,
        })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        if self.dim == 0 {
            return 1.0;
        }
        let m = DMatrix::from_row_slice(self.dim, self.dim, &self.data);
        SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Lower Cholesky factor, row-major. Pivots that vanish (rank deficiency)
    /// leave a zero column.
    pub fn cholesky_lower(&self) -> Vec<f64> {
        let n = self.dim;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    l[i * n + i] = if s > 1e-14 { s.sqrt() } else { 0.0 };
                } else {
                    let d = l[j * n + j];
                    l[i * n + j] = if d > 0.0 { s / d } else { 0.0 };
                }
            }
        }
        l
    }
}

impl TryFrom<Vec<Vec<f64>>> for CorrelationMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch("ragged correlation rows".into()));
        }
        Self::new(dim, rows.into_iter().flatten().collect())
    }
}

impl From<CorrelationMatrix> for Vec<Vec<f64>> {
    fn from(m: CorrelationMatrix) -> Self {
        m.rows()
    }
}

impl fmt::Display for CorrelationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:5.2}")).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}
