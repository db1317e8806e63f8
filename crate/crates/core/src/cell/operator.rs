//! Fourier-Galerkin discretization of `-div(C grad u)` on a periodic grid.
//!
//! Unknowns are Fourier coefficients; `C` is applied pointwise in physical
//! space. The zero mode and every mode with a Nyquist component are held at
//! zero, which pins the mean and removes the operator's kernel.

use num_complex::Complex64;

use crate::krylov::{bicgstab, pcg, SolveStats};
use crate::spectral::TorusGrid;
use crate::Result;

/// Periodic divergence-form operator with a tabulated coefficient.
pub struct PeriodicOperator<'a> {
    grid: &'a TorusGrid,
    /// Row-major `dim x dim` component fields, each of length `grid.len()`.
    coef: &'a [Vec<f64>],
    symmetric: bool,
    precond: Vec<f64>,
}

impl<'a> PeriodicOperator<'a> {
    pub fn new(grid: &'a TorusGrid, coef: &'a [Vec<f64>], symmetric: bool) -> Self {
        let d = grid.dim();
        debug_assert_eq!(coef.len(), d * d);
        let len = grid.len() as f64;
        let mut mean = [[0.0; 2]; 2];
        for i in 0..d {
            for j in 0..d {
                let m_ij = coef[i * d + j].iter().sum::<f64>() / len;
                let m_ji = coef[j * d + i].iter().sum::<f64>() / len;
                mean[i][j] = 0.5 * (m_ij + m_ji);
            }
        }
        let precond = (0..grid.len())
            .map(|idx| {
                if !grid.is_active(idx) {
                    return 0.0;
                }
                let k = grid.mode(idx);
                let mut q = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        q += k[i] as f64 * mean[i][j] * k[j] as f64;
                    }
                }
                1.0 / (4.0 * std::f64::consts::PI.powi(2) * q)
            })
            .collect();
        PeriodicOperator {
            grid,
            coef,
            symmetric,
            precond,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        self.grid
    }

    /// Physical gradient components of a spectral field.
    pub fn gradient(&self, x: &[Complex64]) -> Vec<Vec<f64>> {
        let g = self.grid;
        let sym = |axis: usize| -> Vec<Complex64> {
            x.iter()
                .enumerate()
                .map(|(idx, c)| c * g.derivative_symbol(idx, axis))
                .collect()
        };
        if g.dim() == 1 {
            vec![g.inverse_real(&sym(0))]
        } else {
            let (a, b) = g.inverse_pair(&sym(0), &sym(1));
            vec![a, b]
        }
    }

    /// Spectral divergence `sum_i d_i q_i` of physical component fields.
    pub fn divergence(&self, q: &[Vec<f64>]) -> Vec<Complex64> {
        let g = self.grid;
        let spectra = if g.dim() == 1 {
            vec![g.forward_real(&q[0])]
        } else {
            let (a, b) = g.forward_pair(&q[0], &q[1]);
            vec![a, b]
        };
        (0..g.len())
            .map(|idx| {
                spectra
                    .iter()
                    .enumerate()
                    .map(|(i, s)| s[idx] * g.derivative_symbol(idx, i))
                    .sum()
            })
            .collect()
    }

    /// `C grad` in physical space.
    pub fn flux(&self, grad: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let d = self.grid.dim();
        (0..d)
            .map(|i| {
                (0..self.grid.len())
                    .map(|p| (0..d).map(|j| self.coef[i * d + j][p] * grad[j][p]).sum())
                    .collect()
            })
            .collect()
    }

    /// `y = -div(C grad x)` on spectral vectors, with one inverse and one
    /// forward FFT by packing two real fields into one complex field.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let g = self.grid;
        let sym = g.symbols();
        let mut buf: Vec<Complex64> = if g.dim() == 1 {
            x.iter().zip(sym).map(|(c, s)| c * Complex64::new(0.0, s[0])).collect()
        } else {
            x.iter().zip(sym).map(|(c, s)| c * Complex64::new(-s[1], s[0])).collect()
        };
        g.inverse(&mut buf);
        if g.dim() == 1 {
            for (v, c) in buf.iter_mut().zip(&self.coef[0]) {
                *v = Complex64::new(c * v.re, 0.0);
            }
        } else {
            let (c00, c01, c10, c11) = (&self.coef[0], &self.coef[1], &self.coef[2], &self.coef[3]);
            for (p, v) in buf.iter_mut().enumerate() {
                let (g0, g1) = (v.re, v.im);
                *v = Complex64::new(c00[p] * g0 + c01[p] * g1, c10[p] * g0 + c11[p] * g1);
            }
        }
        g.forward(&mut buf);
        let neg = g.negated();
        for (idx, out) in y.iter_mut().enumerate() {
            let s = sym[idx];
            let f = buf[idx];
            let fc = buf[neg[idx] as usize].conj();
            let q0 = 0.5 * (f + fc);
            // -div: -(i s0 q0 + i s1 q1) with q1 = (f - fc) / 2i.
            let mut acc = Complex64::new(0.0, s[0]) * q0;
            if g.dim() == 2 {
                acc += 0.5 * s[1] * (f - fc);
            }
            *out = -acc;
        }
    }

    /// Spectral right-hand side `-div(C e_k)` of the corrector equation.
    pub fn corrector_rhs(&self, k: usize) -> Vec<Complex64> {
        let d = self.grid.dim();
        let cols: Vec<Vec<f64>> = (0..d).map(|i| self.coef[i * d + k].clone()).collect();
        self.divergence(&cols).into_iter().map(|c| -c).collect()
    }

    /// Solve `-div(C grad x) = rhs` with `x` mean-zero.
    pub fn solve(&self, rhs: &[Complex64], tol: f64, max_iter: usize) -> Result<(Vec<Complex64>, SolveStats)> {
        let n = rhs.len();
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        let op = |a: &[f64], b: &mut [f64]| {
            self.apply(bytemuck::cast_slice(a), bytemuck::cast_slice_mut(b));
        };
        let pre = |a: &[f64], b: &mut [f64]| {
            let a: &[Complex64] = bytemuck::cast_slice(a);
            let b: &mut [Complex64] = bytemuck::cast_slice_mut(b);
            for ((out, v), w) in b.iter_mut().zip(a).zip(&self.precond) {
                *out = v * *w;
            }
        };
        let rhs_f: &[f64] = bytemuck::cast_slice(rhs);
        let x_f: &mut [f64] = bytemuck::cast_slice_mut(&mut x);
        let stats = if self.symmetric {
            pcg(op, pre, rhs_f, x_f, tol, max_iter)?
        } else {
            bicgstab(op, pre, rhs_f, x_f, tol, max_iter)?
        };
        Ok((x, stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_coefficient_gives_zero_corrector() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let coef = vec![vec![2.0; 64], vec![0.5; 64], vec![0.5; 64], vec![1.0; 64]];
        let op = PeriodicOperator::new(&grid, &coef, true);
        for k in 0..2 {
            let rhs = op.corrector_rhs(k);
            assert!(rhs.iter().all(|c| c.norm() < 1e-12));
        }
    }

    #[test]
    fn laplacian_inverse_of_single_mode() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let coef = vec![vec![1.0; 256], vec![0.0; 256], vec![0.0; 256], vec![1.0; 256]];
        let op = PeriodicOperator::new(&grid, &coef, true);
        let f: Vec<f64> = (0..256)
            .map(|i| {
                let p = grid.point(i);
                (2.0 * PI * p[0]).cos() * (2.0 * PI * 2.0 * p[1]).cos()
            })
            .collect();
        let (u, stats) = op.solve(&grid.forward_real(&f), 1e-13, 50).unwrap();
        assert!(stats.iterations <= 2);
        let u = grid.inverse_real(&u);
        for i in 0..256 {
            assert!((u[i] - f[i] / (4.0 * PI * PI * 5.0)).abs() < 1e-14);
        }
    }
}
