//! Small dense matrices used for coefficient values and homogenized tensors.

use std::fmt;
use std::ops::{Index, IndexMut};

/// A `dim x dim` real matrix with `dim` in `{1, 2}`.
#[derive(Clone, Copy, PartialEq)]
pub struct Mat {
    dim: usize,
    m: [[f64; 2]; 2],
}

impl Mat {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim == 1 || dim == 2, "dimension must be 1 or 2");
        Mat {
            dim,
            m: [[0.0; 2]; 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut out = Mat::zeros(dim);
        for i in 0..dim {
            out.m[i][i] = 1.0;
        }
        out
    }

    pub fn from_row_major(dim: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), dim * dim);
        let mut out = Mat::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                out.m[i][j] = values[i * dim + j];
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn transpose(&self) -> Self {
        let mut out = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.m[i][j] = self.m[j][i];
            }
        }
        out
    }

    /// Extreme eigenvalues of the symmetric part, i.e. the min and max of
    /// `xi . A xi` over unit vectors.
    pub fn sym_eigen_range(&self) -> (f64, f64) {
        if self.dim == 1 {
            return (self.m[0][0], self.m[0][0]);
        }
        let a = self.m[0][0];
        let d = self.m[1][1];
        let b = 0.5 * (self.m[0][1] + self.m[1][0]);
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        (mid - rad, mid + rad)
    }

    pub fn max_abs(&self) -> f64 {
        let mut out = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out = out.max(self.m[i][j].abs());
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!(self.dim, other.dim);
        let mut out = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                out = out.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> [f64; 2] {
        let mut out = [0.0; 2];
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[i] += self.m[i][j] * v[j];
            }
        }
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.dim == 1 || (self.m[0][1] - self.m[1][0]).abs() <= tol
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.push(self.m[i][j]);
            }
        }
        out
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.dim && j < self.dim);
        &self.m[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.dim && j < self.dim);
        &mut self.m[i][j]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<f64>> = (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.m[i][j]).collect())
            .collect();
        write!(f, "Mat{rows:?}")
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|j| format!("{:.12}", self.m[i][j]))
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_range_of_diagonal() {
        let m = Mat::from_row_major(2, &[3.0, 0.0, 0.0, 1.0]);
        assert_eq!(m.sym_eigen_range(), (1.0, 3.0));
    }

    #[test]
    fn eigen_range_ignores_skew_part() {
        let m = Mat::from_row_major(2, &[2.0, 5.0, -5.0, 2.0]);
        let (lo, hi) = m.sym_eigen_range();
        assert!((lo - 2.0).abs() < 1e-15 && (hi - 2.0).abs() < 1e-15);
    }
}
