//! Uniform periodic grids on `(0,1)^dim` and their discrete Fourier transforms.
//!
//! Grid values are stored row-major with index `i0 * n + i1` (axis 0 slowest).
//! The forward transform is unnormalized, the inverse divides by `n^dim`, so
//! the zeroth coefficient of a forward transform is `n^dim` times the mean.
//! Modes carrying the Nyquist index on any axis are treated as inactive:
//! derivative symbols vanish there and solvers keep them at zero.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

/// FFT plans and index helpers for an `n^dim` periodic grid.
#[derive(Clone)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `2 pi k` per flat index and axis, zero on inactive modes except zero.
    symbols: Arc<Vec<[f64; 2]>>,
    negated: Arc<Vec<u32>>,
}

impl std::fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.dim)
            .field("n", &self.n)
            .finish()
    }
}

impl TorusGrid {
    /// `n` must be even and at least 4; `dim` is 1 or 2.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::Dimension(format!("torus dimension {dim}")));
        }
        if n < 4 || n % 2 != 0 {
            return Err(Error::Resolution {
                resolution: n,
                reason: "periodic grids need an even resolution of at least 4".into(),
            });
        }
        let mut planner = FftPlanner::new();
        let mut grid = TorusGrid {
            dim,
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            symbols: Arc::new(Vec::new()),
            negated: Arc::new(Vec::new()),
        };
        let len = grid.len();
        let symbols = (0..len)
            .map(|idx| {
                if idx != 0 && !grid.is_active(idx) {
                    return [0.0; 2];
                }
                let k = grid.mode(idx);
                [2.0 * PI * k[0] as f64, 2.0 * PI * k[1] as f64]
            })
            .collect();
        let negated = (0..len).map(|idx| grid.negate(idx) as u32).collect();
        grid.symbols = Arc::new(symbols);
        grid.negated = Arc::new(negated);
        Ok(grid)
    }

    /// Real factors `2 pi k` of the derivative symbols, see [`Self::derivative_symbol`].
    #[inline]
    pub fn symbols(&self) -> &[[f64; 2]] {
        &self.symbols
    }

    /// Table of [`Self::negate`].
    #[inline]
    pub fn negated(&self) -> &[u32] {
        &self.negated
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points, `n^dim`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Per-axis indices of a flat index.
    #[inline]
    pub fn axes(&self, idx: usize) -> [usize; 2] {
        if self.dim == 1 {
            [idx, 0]
        } else {
            [idx / self.n, idx % self.n]
        }
    }

    /// Physical coordinates of a grid point.
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let a = self.axes(idx);
        let h = 1.0 / self.n as f64;
        [a[0] as f64 * h, a[1] as f64 * h]
    }

    /// Signed wavenumber of an axis index; the Nyquist index maps to `+n/2`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Wavenumber vector of a flat index.
    #[inline]
    pub fn mode(&self, idx: usize) -> [i64; 2] {
        let a = self.axes(idx);
        if self.dim == 1 {
            [self.wavenumber(a[0]), 0]
        } else {
            [self.wavenumber(a[0]), self.wavenumber(a[1])]
        }
    }

    /// False for the zero mode and every mode with a Nyquist component.
    #[inline]
    pub fn is_active(&self, idx: usize) -> bool {
        if idx == 0 {
            return false;
        }
        let a = self.axes(idx);
        a[..self.dim].iter().all(|&i| i != self.n / 2)
    }

    /// Flat index of the mode `-k`.
    #[inline]
    pub fn negate(&self, idx: usize) -> usize {
        let a = self.axes(idx);
        let neg = |i: usize| (self.n - i) % self.n;
        if self.dim == 1 {
            neg(a[0])
        } else {
            neg(a[0]) * self.n + neg(a[1])
        }
    }

    /// Symbol `2 pi i k_axis` of `d/dx_axis`, zero on inactive modes.
    #[inline]
    pub fn derivative_symbol(&self, idx: usize, axis: usize) -> Complex64 {
        Complex64::new(0.0, self.symbols[idx][axis])
    }

    /// `4 pi^2 |k|^2`, the symbol of `-Laplace`.
    #[inline]
    pub fn neg_laplace_symbol(&self, idx: usize) -> f64 {
        let k = self.mode(idx);
        4.0 * PI * PI * (k[0] * k[0] + k[1] * k[1]) as f64
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(data.len(), self.len());
        plan.process(data);
        if self.dim == 2 {
            transpose_square(data, self.n);
            plan.process(data);
            transpose_square(data, self.n);
        }
    }

    /// In-place unnormalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// In-place inverse transform, normalized by `1 / n^dim`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let s = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// Inverse transform keeping the real part.
    pub fn inverse_real(&self, spectrum: &[Complex64]) -> Vec<f64> {
        let mut buf = spectrum.to_vec();
        self.inverse(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Forward transforms of two real fields with one complex FFT.
    pub fn forward_pair(&self, a: &[f64], b: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut buf: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.forward(&mut buf);
        let mut fa = vec![Complex64::new(0.0, 0.0); buf.len()];
        let mut fb = fa.clone();
        for idx in 0..buf.len() {
            let p = buf[idx];
            let q = buf[self.negated[idx] as usize].conj();
            fa[idx] = 0.5 * (p + q);
            fb[idx] = Complex64::new(0.0, -0.5) * (p - q);
        }
        (fa, fb)
    }

    /// Inverse transforms of two Hermitian spectra with one complex FFT.
    pub fn inverse_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let i = Complex64::new(0.0, 1.0);
        let mut buf: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| x + i * y).collect();
        self.inverse(&mut buf);
        buf.into_iter().map(|c| (c.re, c.im)).unzip()
    }

    /// Spectral derivative of a real field along `axis`.
    pub fn derivative(&self, values: &[f64], axis: usize) -> Vec<f64> {
        let mut s = self.forward_real(values);
        for (idx, c) in s.iter_mut().enumerate() {
            *c *= self.derivative_symbol(idx, axis);
        }
        self.inverse_real(&s)
    }

    /// Evaluate the trigonometric interpolant of `spectrum` (a forward
    /// transform) at an arbitrary point, skipping inactive modes except zero.
    pub fn evaluate(&self, spectrum: &[Complex64], x: &[f64]) -> f64 {
        let n = self.n;
        let scale = 1.0 / self.len() as f64;
        let phases: Vec<Vec<Complex64>> = (0..self.dim)
            .map(|d| {
                (0..n)
                    .map(|i| {
                        let k = self.wavenumber(i) as f64;
                        Complex64::from_polar(1.0, 2.0 * PI * k * x[d])
                    })
                    .collect()
            })
            .collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, c) in spectrum.iter().enumerate() {
            if idx != 0 && !self.is_active(idx) {
                continue;
            }
            let a = self.axes(idx);
            let mut e = phases[0][a[0]];
            if self.dim == 2 {
                e *= phases[1][a[1]];
            }
            acc += c * e;
        }
        acc.re * scale
    }
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Real values of a scalar field on a uniform periodic grid. Vector and
/// matrix fields are `Vec<TorusField>` in row-major component order.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusField {
    pub dim: usize,
    pub n: usize,
    pub values: Vec<f64>,
}

impl TorusField {
    pub fn zeros(dim: usize, n: usize) -> Self {
        TorusField {
            dim,
            n,
            values: vec![0.0; n.pow(dim as u32)],
        }
    }

    /// Sample `f` at every grid point.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        TorusField {
            dim: grid.dim(),
            n: grid.n(),
            values: (0..grid.len()).map(|i| f(grid.point(i))).collect(),
        }
    }

    /// Trapezoid mean, equal to the zeroth Fourier coefficient over `n^dim`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Root mean square, the `L^2` norm on the unit torus.
    pub fn rms(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    pub fn spectrum(&self, grid: &TorusGrid) -> Vec<Complex64> {
        grid.forward_real(&self.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeroth_coefficient_is_scaled_mean() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let f = TorusField::from_fn(&grid, |p| 1.5 + (2.0 * PI * p[0]).sin() * (2.0 * PI * p[1]).cos());
        let s = f.spectrum(&grid);
        assert!((s[0].re / 64.0 - f.mean()).abs() < 1e-14);
        assert!((f.mean() - 1.5).abs() < 1e-14);
    }

    #[test]
    fn spectrum_of_real_field_is_hermitian() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let f = TorusField::from_fn(&grid, |p| (2.0 * PI * (p[0] + 2.0 * p[1])).sin() + p[0] * p[1]);
        let s = f.spectrum(&grid);
        for idx in 0..grid.len() {
            assert!((s[idx] - s[grid.negate(idx)].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn pair_transforms_match_single() {
        let grid = TorusGrid::new(2, 8).unwrap();
        let a = TorusField::from_fn(&grid, |p| (2.0 * PI * p[0]).cos() + p[1]);
        let b = TorusField::from_fn(&grid, |p| (2.0 * PI * 3.0 * p[1]).sin() - p[0]);
        let (fa, fb) = grid.forward_pair(&a.values, &b.values);
        let (sa, sb) = (a.spectrum(&grid), b.spectrum(&grid));
        for i in 0..grid.len() {
            assert!((fa[i] - sa[i]).norm() < 1e-12);
            assert!((fb[i] - sb[i]).norm() < 1e-12);
        }
        let (ra, rb) = grid.inverse_pair(&sa, &sb);
        for i in 0..grid.len() {
            assert!((ra[i] - a.values[i]).abs() < 1e-13);
            assert!((rb[i] - b.values[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_is_exact_on_resolved_modes() {
        let grid = TorusGrid::new(1, 16).unwrap();
        let f = TorusField::from_fn(&grid, |p| (2.0 * PI * 3.0 * p[0]).sin());
        let d = grid.derivative(&f.values, 0);
        for i in 0..16 {
            let x = grid.point(i)[0];
            assert!((d[i] - 6.0 * PI * (6.0 * PI * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolant_reproduces_off_grid_values() {
        let grid = TorusGrid::new(2, 16).unwrap();
        let g = |p: [f64; 2]| (2.0 * PI * p[0]).cos() * (2.0 * PI * 2.0 * p[1]).sin() + 0.25;
        let s = TorusField::from_fn(&grid, g).spectrum(&grid);
        let x = [0.123, 0.789];
        assert!((grid.evaluate(&s, &x) - g(x)).abs() < 1e-13);
    }

    #[test]
    fn rejects_odd_resolution() {
        assert!(TorusGrid::new(1, 7).is_err());
        assert!(TorusGrid::new(3, 8).is_err());
    }
}
