//! Inner and outer cell problems and the homogenized tensor.
//!
//! The inner problem `-div_z(A(y,.) grad_z(chi_y^k - z_k)) = 0` is solved on
//! the z-torus at every point of a uniform y-grid; z-averaging the resulting
//! flux gives `b(y)`, and the outer problem
//! `-div_y(b grad_y(chi^k - y_k)) = 0` is solved on the y-torus.

mod cache;
mod diagnostics;
mod operator;

use num_complex::Complex64;

use crate::coeff::CoefficientSpec;
use crate::linalg::Mat;
use crate::spectral::{TorusField, TorusGrid};
use crate::{Error, Result};

pub use cache::{load_corrector_set, save_corrector_set, CacheFormat};
pub use diagnostics::{corrector_diagnostics, CellDiagnostics};
pub use operator::PeriodicOperator;

/// Solver settings shared by both cell problems.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellOptions {
    /// Relative residual target of the Krylov iteration.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CellOptions {
    fn default() -> Self {
        CellOptions {
            tol: 1e-12,
            max_iter: 2000,
        }
    }
}

/// Inner correctors at one point `y`.
#[derive(Clone, Debug)]
pub struct InnerSolution {
    /// `chi_y^k` on the z-grid, one field per `k`.
    pub chi: Vec<TorusField>,
    /// `grad_z chi_y^k`, indexed `[k][axis]`.
    pub grad: Vec<Vec<TorusField>>,
    /// Row-major components of `A(y, .)` on the z-grid.
    pub coef: Vec<Vec<f64>>,
    /// Worst relative residual over the `k` solves.
    pub residual: f64,
    pub iterations: usize,
}

/// Solve the inner cell problem at `y` on an `n_z^dim` grid.
pub fn solve_inner_cell(
    spec: &CoefficientSpec,
    y: &[f64],
    grid: &TorusGrid,
    opts: CellOptions,
) -> Result<InnerSolution> {
    let d = spec.dim();
    if grid.dim() != d {
        return Err(Error::Dimension(format!(
            "z-grid has dimension {}, spec has {d}",
            grid.dim()
        )));
    }
    let freq = spec.max_freq(crate::coeff::Scale::Fast) as usize;
    if grid.n() < 4 * freq {
        return Err(Error::Resolution {
            resolution: grid.n(),
            reason: format!("z-grid needs at least 4 x max z-frequency = {}", 4 * freq),
        });
    }
    let coef = spec.sample_z_grid(y, grid.n());
    let op = PeriodicOperator::new(grid, &coef, spec.is_symmetric());
    let mut out = InnerSolution {
        chi: Vec::with_capacity(d),
        grad: Vec::with_capacity(d),
        coef: Vec::new(),
        residual: 0.0,
        iterations: 0,
    };
    for k in 0..d {
        let rhs = op.corrector_rhs(k);
        let (x, stats) = op.solve(&rhs, opts.tol, opts.max_iter)?;
        out.residual = out.residual.max(stats.relative_residual);
        out.iterations = out.iterations.max(stats.iterations);
        let field = |values| TorusField {
            dim: d,
            n: grid.n(),
            values,
        };
        out.chi.push(field(grid.inverse_real(&x)));
        out.grad
            .push(op.gradient(&x).into_iter().map(field).collect());
    }
    out.coef = coef;
    Ok(out)
}

/// `z`-means `(mean_z a_ij, b_ij)` at `y`; errors if `b(y)` is not elliptic.
pub fn average_inner(inner: &InnerSolution, y: &[f64], grid: &TorusGrid) -> Result<(Mat, Mat)> {
    let d = grid.dim();
    let len = grid.len() as f64;
    let mut mean_a = Mat::zeros(d);
    let mut b = Mat::zeros(d);
    let a = &inner.coef;
    for i in 0..d {
        for j in 0..d {
            let (mut sa, mut sb) = (0.0, 0.0);
            for p in 0..grid.len() {
                let flux: f64 = (0..d).map(|k| a[i * d + k][p] * inner.grad[j][k].values[p]).sum();
                sa += a[i * d + j][p];
                sb += a[i * d + j][p] - flux;
            }
            mean_a[(i, j)] = sa / len;
            b[(i, j)] = sb / len;
        }
    }
    let (lo, _) = b.sym_eigen_range();
    if lo <= 0.0 {
        return Err(Error::Ellipticity {
            context: format!("averaged coefficient b at y = {:?}", &y[..d]),
            min_eigenvalue: lo,
        });
    }
    Ok((mean_a, b))
}

/// Solve the outer cell problem for a tabulated `b` (row-major components).
/// Returns `(chi^k, grad_y chi^k, worst relative residual)`.
pub fn solve_outer_cell(
    b_field: &[TorusField],
    grid: &TorusGrid,
    symmetric: bool,
    opts: CellOptions,
) -> Result<(Vec<TorusField>, Vec<Vec<TorusField>>, f64)> {
    let d = grid.dim();
    for p in 0..grid.len() {
        let vals: Vec<f64> = b_field.iter().map(|f| f.values[p]).collect();
        let (lo, _) = Mat::from_row_major(d, &vals).sym_eigen_range();
        if lo <= 0.0 {
            return Err(Error::Ellipticity {
                context: format!("b field at y-gridpoint {p}"),
                min_eigenvalue: lo,
            });
        }
    }
    let mut coef: Vec<Vec<f64>> = b_field.iter().map(|f| f.values.clone()).collect();
    if symmetric && d == 2 {
        // b is symmetric for symmetric A up to the inner solver tolerance;
        // drop that residue so the outer operator is exactly self-adjoint.
        for p in 0..grid.len() {
            let m = 0.5 * (coef[1][p] + coef[2][p]);
            coef[1][p] = m;
            coef[2][p] = m;
        }
    }
    let op = PeriodicOperator::new(grid, &coef, symmetric);
    let mut chi = Vec::with_capacity(d);
    let mut grad = Vec::with_capacity(d);
    let mut residual: f64 = 0.0;
    for k in 0..d {
        let (x, stats) = op.solve(&op.corrector_rhs(k), opts.tol, opts.max_iter)?;
        residual = residual.max(stats.relative_residual);
        let field = |values| TorusField {
            dim: d,
            n: grid.n(),
            values,
        };
        chi.push(field(grid.inverse_real(&x)));
        grad.push(op.gradient(&x).into_iter().map(field).collect());
    }
    Ok((chi, grad, residual))
}

/// Tabulated correctors for one spec on an `n_y^dim x n_z^dim` grid.
#[derive(Clone, Debug)]
pub struct CorrectorSet {
    pub dim: usize,
    pub n_y: usize,
    pub n_z: usize,
    pub spec_hash: String,
    /// `chi_y^k(z)` physical values, layout `[(y_index * dim + k) * n_z^dim + z_index]`.
    pub inner: Vec<f64>,
    /// `mean_z a_ij(y, .)`, row-major components on the y-grid.
    pub mean_a: Vec<TorusField>,
    /// `b_ij(y)`, row-major components on the y-grid.
    pub b_field: Vec<TorusField>,
    /// `chi^k(y)`.
    pub outer: Vec<TorusField>,
    /// `grad_y chi^k`, indexed `[k][axis]`.
    pub outer_grad: Vec<Vec<TorusField>>,
    pub a_hat: Mat,
    /// Worst relative residual over every inner and outer solve.
    pub max_residual: f64,
}

impl CorrectorSet {
    pub fn y_grid(&self) -> TorusGrid {
        TorusGrid::new(self.dim, self.n_y).expect("validated at construction")
    }

    pub fn z_grid(&self) -> TorusGrid {
        TorusGrid::new(self.dim, self.n_z).expect("validated at construction")
    }

    pub fn y_len(&self) -> usize {
        self.n_y.pow(self.dim as u32)
    }

    pub fn z_len(&self) -> usize {
        self.n_z.pow(self.dim as u32)
    }

    /// `chi_y^k` at y-gridpoint `y_index`.
    pub fn inner_values(&self, y_index: usize, k: usize) -> &[f64] {
        let l = self.z_len();
        let start = (y_index * self.dim + k) * l;
        &self.inner[start..start + l]
    }

    /// `grad_z chi_y^k` at y-gridpoint `y_index`, by spectral differentiation.
    pub fn inner_gradient(&self, z_grid: &TorusGrid, y_index: usize, k: usize) -> Vec<Vec<f64>> {
        let s = z_grid.forward_real(self.inner_values(y_index, k));
        (0..self.dim)
            .map(|axis| {
                let ds: Vec<Complex64> = s
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c * z_grid.derivative_symbol(i, axis))
                    .collect();
                z_grid.inverse_real(&ds)
            })
            .collect()
    }

    /// `d chi_y^k / d y_axis` on the full table, by spectral differentiation
    /// in `y` at every fixed z-gridpoint. Same layout as `inner`.
    pub fn inner_y_derivative(&self, axis: usize) -> Vec<f64> {
        let (ly, lz, d) = (self.y_len(), self.z_len(), self.dim);
        let yg = self.y_grid();
        let mut out = vec![0.0; self.inner.len()];
        let mut column = vec![0.0; ly];
        for k in 0..d {
            for zi in 0..lz {
                for (yi, c) in column.iter_mut().enumerate() {
                    *c = self.inner[(yi * d + k) * lz + zi];
                }
                let dc = yg.derivative(&column, axis);
                for (yi, v) in dc.into_iter().enumerate() {
                    out[(yi * d + k) * lz + zi] = v;
                }
            }
        }
        out
    }

    /// Matrix value of a row-major field list at a y-gridpoint.
    pub fn mat_at(fields: &[TorusField], dim: usize, index: usize) -> Mat {
        let vals: Vec<f64> = fields.iter().map(|f| f.values[index]).collect();
        Mat::from_row_major(dim, &vals)
    }
}

struct InnerRow {
    chi: Vec<Vec<f64>>,
    mean_a: Mat,
    b: Mat,
    residual: f64,
}

fn inner_row(spec: &CoefficientSpec, y_grid: &TorusGrid, z_grid: &TorusGrid, yi: usize, opts: CellOptions) -> Result<InnerRow> {
    let y = y_grid.point(yi);
    let y = &y[..spec.dim()];
    let inner = solve_inner_cell(spec, y, z_grid, opts)?;
    let (mean_a, b) = average_inner(&inner, y, z_grid)?;
    Ok(InnerRow {
        chi: inner.chi.into_iter().map(|f| f.values).collect(),
        mean_a,
        b,
        residual: inner.residual,
    })
}

/// Tabulate inner correctors on the y-grid, solve the outer problem and
/// assemble the homogenized tensor.
pub fn build_corrector_set(
    spec: &CoefficientSpec,
    n_y: usize,
    n_z: usize,
    opts: CellOptions,
) -> Result<CorrectorSet> {
    let d = spec.dim();
    let y_grid = TorusGrid::new(d, n_y)?;
    let z_grid = TorusGrid::new(d, n_z)?;
    let fy = spec.max_freq(crate::coeff::Scale::Slow) as usize;
    if n_y < 4 * fy {
        return Err(Error::Resolution {
            resolution: n_y,
            reason: format!("y-grid needs at least 4 x max y-frequency = {}", 4 * fy),
        });
    }
    let ly = y_grid.len();

    #[cfg(feature = "parallel")]
    let rows: Vec<InnerRow> = {
        use rayon::prelude::*;
        (0..ly)
            .into_par_iter()
            .map(|yi| inner_row(spec, &y_grid, &z_grid, yi, opts))
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<InnerRow> = (0..ly)
        .map(|yi| inner_row(spec, &y_grid, &z_grid, yi, opts))
        .collect::<Result<_>>()?;

    let lz = z_grid.len();
    let mut inner = Vec::with_capacity(ly * d * lz);
    let mut mean_a = vec![TorusField::zeros(d, n_y); d * d];
    let mut b_field = vec![TorusField::zeros(d, n_y); d * d];
    let mut max_residual: f64 = 0.0;
    let symmetric = spec.is_symmetric();
    for (yi, row) in rows.into_iter().enumerate() {
        for chi in &row.chi {
            inner.extend_from_slice(chi);
        }
        for i in 0..d {
            for j in 0..d {
                mean_a[i * d + j].values[yi] = row.mean_a[(i, j)];
                b_field[i * d + j].values[yi] = row.b[(i, j)];
            }
        }
        max_residual = max_residual.max(row.residual);
    }
    let (outer, outer_grad, outer_res) = solve_outer_cell(&b_field, &y_grid, symmetric, opts)?;
    max_residual = max_residual.max(outer_res);

    let mut set = CorrectorSet {
        dim: d,
        n_y,
        n_z,
        spec_hash: spec.hash_hex(),
        inner,
        mean_a,
        b_field,
        outer,
        outer_grad,
        a_hat: Mat::zeros(d),
        max_residual,
    };
    set.a_hat = homogenized_tensor(&set)?;
    Ok(set)
}

/// The four-term homogenized tensor
/// `mean_{Y x Z}[a_ij - a_ik dz_k chi_y^j - a_ik dy_k chi^j + a_ik dz_k chi_y^l dy_l chi^j]`.
///
/// Since `grad_y chi^j` does not depend on `z`, each term reduces to a product
/// of z-means: `mean_z(a_ik dz_k chi_y^l) = mean_a_il - b_il`.
pub fn homogenized_tensor(set: &CorrectorSet) -> Result<Mat> {
    let d = set.dim;
    let ly = set.y_len();
    let mut a_hat = Mat::zeros(d);
    for yi in 0..ly {
        let abar = CorrectorSet::mat_at(&set.mean_a, d, yi);
        let b = CorrectorSet::mat_at(&set.b_field, d, yi);
        for i in 0..d {
            for j in 0..d {
                let t1 = abar[(i, j)];
                let t2 = -(abar[(i, j)] - b[(i, j)]);
                let mut t3 = 0.0;
                let mut t4 = 0.0;
                for k in 0..d {
                    let dchi = set.outer_grad[j][k].values[yi];
                    t3 -= abar[(i, k)] * dchi;
                    t4 += (abar[(i, k)] - b[(i, k)]) * dchi;
                }
                a_hat[(i, j)] += (t1 + t2 + t3 + t4) / ly as f64;
            }
        }
    }
    let (lo, _) = a_hat.sym_eigen_range();
    if lo <= 0.0 {
        return Err(Error::Ellipticity {
            context: "homogenized tensor".into(),
            min_eigenvalue: lo,
        });
    }
    Ok(a_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::builtin_family;
    use std::f64::consts::PI;

    #[test]
    fn identity_has_zero_correctors() {
        let set = build_corrector_set(&CoefficientSpec::identity(2), 8, 8, CellOptions::default()).unwrap();
        assert!(set.inner.iter().all(|v| *v == 0.0));
        assert_eq!(set.a_hat, Mat::identity(2));
    }

    #[test]
    fn one_dimensional_inner_gradient_closed_form() {
        let spec = builtin_family("trig_product", &[2.0, 1.0, 2.0, 1.0]).unwrap();
        let grid = TorusGrid::new(1, 64).unwrap();
        let sol = solve_inner_cell(&spec, &[0.3], &grid, CellOptions::default()).unwrap();
        for p in 0..64 {
            let z = grid.point(p)[0];
            let want = 1.0 - 3f64.sqrt() / (2.0 + (2.0 * PI * z).cos());
            assert!((sol.grad[0][0].values[p] - want).abs() < 1e-11);
        }
        assert!(sol.chi[0].mean().abs() < 1e-15);
    }

    #[test]
    fn one_dimensional_tensor_is_three() {
        let spec = builtin_family("trig_product", &[2.0, 1.0, 2.0, 1.0]).unwrap();
        let set = build_corrector_set(&spec, 32, 32, CellOptions::default()).unwrap();
        assert!((set.a_hat[(0, 0)] - 3.0).abs() < 1e-10, "{}", set.a_hat);
    }

    #[test]
    fn wraparound_is_periodic_by_construction() {
        let spec = builtin_family("trig_product", &[2.0, 1.0, 2.0, 1.0]).unwrap();
        let grid = TorusGrid::new(1, 16).unwrap();
        let a = solve_inner_cell(&spec, &[0.0], &grid, CellOptions::default()).unwrap();
        let b = solve_inner_cell(&spec, &[1.0], &grid, CellOptions::default()).unwrap();
        for p in 0..16 {
            assert!((a.chi[0].values[p] - b.chi[0].values[p]).abs() < 1e-13);
        }
    }
}
