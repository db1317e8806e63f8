//! Compressed sparse rows and a modified incomplete LU preconditioner.

/// CSR matrix with sorted column indices per row.
#[derive(Clone, Debug)]
pub struct Csr {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl Csr {
    /// Empty pattern from sorted, deduplicated column lists.
    pub fn from_pattern(rows: Vec<Vec<usize>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col = Vec::new();
        for r in rows {
            debug_assert!(r.windows(2).all(|w| w[0] < w[1]));
            col.extend(r);
            row_ptr.push(col.len());
        }
        let val = vec![0.0; col.len()];
        Csr { n, row_ptr, col, val }
    }

    /// Position of `(i, j)` in `val`; the entry must be in the pattern.
    #[inline]
    pub fn position(&self, i: usize, j: usize) -> usize {
        let row = &self.col[self.row_ptr[i]..self.row_ptr[i + 1]];
        self.row_ptr[i] + row.iter().position(|&c| c == j).expect("entry outside the sparsity pattern")
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let p = self.position(i, j);
        self.val[p] += v;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, out) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[p] * x[self.col[p]];
            }
            *out = s;
        }
    }

    /// Whether the matrix equals its transpose to `tol` relative to the
    /// largest entry.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let scale = self.val.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (0..self.n).all(|i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).all(|p| {
                let j = self.col[p];
                let q = self.col[self.row_ptr[j]..self.row_ptr[j + 1]].iter().position(|&c| c == i);
                q.is_some_and(|q| (self.val[self.row_ptr[j] + q] - self.val[p]).abs() <= tol * scale)
            })
        })
    }
}

/// Incomplete LU factors on the pattern of `A`; unit-lower `L` and `U` share
/// storage. With `omega = 1` the dropped fill is moved onto the diagonal,
/// which keeps row sums of `LU` equal to those of `A`.
pub struct Ilu {
    factors: Csr,
    diag: Vec<usize>,
}

impl Ilu {
    pub fn new(a: &Csr, omega: f64) -> Self {
        let mut f = a.clone();
        let n = a.n;
        let diag: Vec<usize> = (0..n).map(|i| f.position(i, i)).collect();
        let mut marker = vec![usize::MAX; n];
        for i in 0..n {
            let (start, end) = (f.row_ptr[i], f.row_ptr[i + 1]);
            for p in start..end {
                marker[f.col[p]] = p;
            }
            for p in start..diag[i] {
                let k = f.col[p];
                let lik = f.val[p] / f.val[diag[k]];
                f.val[p] = lik;
                for q in diag[k] + 1..f.row_ptr[k + 1] {
                    let j = f.col[q];
                    let update = lik * f.val[q];
                    match marker[j] {
                        m if m != usize::MAX => f.val[m] -= update,
                        _ => f.val[diag[i]] -= omega * update,
                    }
                }
            }
            for p in start..end {
                marker[f.col[p]] = usize::MAX;
            }
        }
        Ilu { factors: f, diag }
    }

    /// `y = (LU)^{-1} x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let f = &self.factors;
        for i in 0..f.n {
            let mut s = x[i];
            for p in f.row_ptr[i]..self.diag[i] {
                s -= f.val[p] * y[f.col[p]];
            }
            y[i] = s;
        }
        for i in (0..f.n).rev() {
            let mut s = y[i];
            for p in self.diag[i] + 1..f.row_ptr[i + 1] {
                s -= f.val[p] * y[f.col[p]];
            }
            y[i] = s / f.val[self.diag[i]];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> Csr {
        let rows = (0..n)
            .map(|i| (i.saturating_sub(1)..(i + 2).min(n)).collect())
            .collect();
        let mut a = Csr::from_pattern(rows);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i > 0 {
                a.add(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn ilu_is_exact_for_tridiagonal() {
        let a = laplace_1d(10);
        let ilu = Ilu::new(&a, 1.0);
        let x: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
        let mut b = vec![0.0; 10];
        a.matvec(&x, &mut b);
        let mut y = vec![0.0; 10];
        ilu.apply(&b, &mut y);
        for i in 0..10 {
            assert!((x[i] - y[i]).abs() < 1e-12);
        }
        assert!(a.is_symmetric(0.0));
    }
}
