//! Divergence-free flux fields and their antisymmetric potentials.
//!
//! For a mean-zero, divergence-free matrix field `I_ij` on a torus the
//! potential is `E_kij = d_k f_ij - d_i f_kj` with `Laplace f_ij = I_ij`, built
//! entirely in Fourier space. Antisymmetry `E_kij = -E_ikj` holds bit for bit
//! because both components are formed from the same two stored derivatives.

use num_complex::Complex64;

use crate::cell::CorrectorSet;
use crate::coeff::CoefficientSpec;
use crate::spectral::{TorusField, TorusGrid};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FluxKind {
    /// Fast flux discrepancy at fixed `y`, a field on `Z`.
    I1,
    /// Slow flux discrepancy, a field on `Y`.
    I2,
    /// Cross-scale flux discrepancy at fixed `y`, a field on `Z`.
    I3,
}

/// A matrix field `I_ij` on a torus, row-major components.
#[derive(Clone, Debug)]
pub struct FluxField {
    pub which: FluxKind,
    pub dim: usize,
    pub n: usize,
    pub components: Vec<TorusField>,
}

impl FluxField {
    fn component(&self, i: usize, j: usize) -> &TorusField {
        &self.components[i * self.dim + j]
    }

    /// Largest absolute component mean.
    pub fn max_abs_mean(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.mean().abs()))
    }

    /// Largest absolute value over all components and grid points.
    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.max_abs()))
    }

    /// `max_j max_x |sum_i d_i I_ij|` by spectral differentiation.
    pub fn divergence_residual(&self, grid: &TorusGrid) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for j in 0..d {
            let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
            for i in 0..d {
                let s = grid.forward_real(&self.component(i, j).values);
                for (idx, a) in acc.iter_mut().enumerate() {
                    *a += s[idx] * grid.derivative_symbol(idx, i);
                }
            }
            let div = grid.inverse_real(&acc);
            worst = div.iter().fold(worst, |m, v| m.max(v.abs()));
        }
        worst
    }
}

/// The potential `E_kij` together with the scalar potentials `f_ij`.
#[derive(Clone, Debug)]
pub struct FluxPotential {
    pub which: FluxKind,
    pub dim: usize,
    pub n: usize,
    /// `f_ij` with `Laplace f_ij = I_ij` and zero mean, row-major.
    pub f: Vec<TorusField>,
    /// `E_kij`, flat index `(k * dim + i) * dim + j`.
    pub e: Vec<TorusField>,
    /// `max |d_k E_kij - I_ij|`.
    pub reconstruction_error: f64,
    /// `reconstruction_error / max |I|`, absolute when `I` vanishes.
    pub reconstruction_residual: f64,
}

impl FluxPotential {
    pub fn component(&self, k: usize, i: usize, j: usize) -> &TorusField {
        &self.e[(k * self.dim + i) * self.dim + j]
    }

    /// Whether `E_kij == -E_ikj` holds bit for bit at every grid point.
    pub fn is_exactly_antisymmetric(&self) -> bool {
        let d = self.dim;
        (0..d).all(|k| {
            (0..d).all(|i| {
                (0..d).all(|j| {
                    let a = &self.component(k, i, j).values;
                    let b = &self.component(i, k, j).values;
                    a.iter().zip(b).all(|(x, y)| x.to_bits() == (-y).to_bits() || (*x == 0.0 && *y == 0.0))
                })
            })
        })
    }

    /// `|mean(d_k E_kij phi) + mean(E_kij d_k phi)|` maximized over `(i, j)`
    /// for a periodic test field `phi` on the same grid.
    pub fn integration_by_parts_defect(&self, grid: &TorusGrid, phi: &[f64]) -> f64 {
        let d = self.dim;
        let dphi: Vec<Vec<f64>> = (0..d).map(|k| grid.derivative(phi, k)).collect();
        let len = grid.len() as f64;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let mut lhs = 0.0;
                let mut rhs = 0.0;
                for k in 0..d {
                    let e = &self.component(k, i, j).values;
                    let de = grid.derivative(e, k);
                    for p in 0..grid.len() {
                        lhs += de[p] * phi[p];
                        rhs += e[p] * dphi[k][p];
                    }
                }
                worst = worst.max((lhs + rhs).abs() / len);
            }
        }
        worst
    }
}

/// Tolerances of the potential builder.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxTolerances {
    /// Mean-zero pre-check, relative to `max |I|`.
    pub mean: f64,
    /// Divergence-free pre-check, absolute.
    pub divergence: f64,
    /// Reconstruction post-check, relative.
    pub reconstruction: f64,
}

impl Default for FluxTolerances {
    fn default() -> Self {
        FluxTolerances {
            mean: 1e-10,
            divergence: 1e-8,
            reconstruction: 1e-10,
        }
    }
}

fn field(dim: usize, n: usize, values: Vec<f64>) -> TorusField {
    TorusField { dim, n, values }
}

/// Per-y z-fields shared by `I1` and `I3`.
struct FastSlice {
    coef: Vec<Vec<f64>>,
    /// `grad_z chi_y^l`, indexed `[l][axis][point]`.
    grad: Vec<Vec<Vec<f64>>>,
}

fn fast_slice(spec: &CoefficientSpec, set: &CorrectorSet, z_grid: &TorusGrid, yi: usize) -> FastSlice {
    let y = set.y_grid().point(yi);
    let d = set.dim;
    FastSlice {
        coef: spec.sample_z_grid(&y[..d], set.n_z),
        grad: (0..d).map(|l| set.inner_gradient(z_grid, yi, l)).collect(),
    }
}

fn subtract_means(components: &mut [TorusField]) {
    for c in components {
        let m = c.mean();
        c.values.iter_mut().for_each(|v| *v -= m);
    }
}

fn check_spec(spec: &CoefficientSpec, set: &CorrectorSet) -> Result<()> {
    if spec.hash_hex() != set.spec_hash {
        return Err(Error::Invalid("corrector set was built for a different spec".into()));
    }
    Ok(())
}

/// `I1_ij(y, z) = -a_ij + a_ik dz_k chi_y^j + mean_z(a_ij - a_ik dz_k chi_y^j)` at
/// y-gridpoint `yi`.
pub fn assemble_i1(spec: &CoefficientSpec, set: &CorrectorSet, yi: usize) -> Result<FluxField> {
    check_spec(spec, set)?;
    let zg = set.z_grid();
    let s = fast_slice(spec, set, &zg, yi);
    let d = set.dim;
    let mut comps = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let v = (0..zg.len())
                .map(|p| {
                    let flux: f64 = (0..d).map(|k| s.coef[i * d + k][p] * s.grad[j][k][p]).sum();
                    flux - s.coef[i * d + j][p]
                })
                .collect();
            comps.push(field(d, set.n_z, v));
        }
    }
    subtract_means(&mut comps);
    Ok(FluxField {
        which: FluxKind::I1,
        dim: d,
        n: set.n_z,
        components: comps,
    })
}

/// `I2_ij(y) = a_hat_ij + mean_z(a_ik dy_k chi^j - a_ik dz_k chi_y^l dy_l chi^j)
/// - mean_z(a_ij - a_ik dz_k chi_y^j)`, from the tabulated z-means.
pub fn assemble_i2(spec: &CoefficientSpec, set: &CorrectorSet) -> Result<FluxField> {
    check_spec(spec, set)?;
    let d = set.dim;
    let ly = set.y_len();
    let mut comps = vec![TorusField::zeros(d, set.n_y); d * d];
    for yi in 0..ly {
        let abar = CorrectorSet::mat_at(&set.mean_a, d, yi);
        let b = CorrectorSet::mat_at(&set.b_field, d, yi);
        for i in 0..d {
            for j in 0..d {
                let mut cross = 0.0;
                for k in 0..d {
                    let dchi = set.outer_grad[j][k].values[yi];
                    // mean_z(a_ik dz_k chi_y^l) = abar_il - b_il
                    cross += abar[(i, k)] * dchi - (abar[(i, k)] - b[(i, k)]) * dchi;
                }
                comps[i * d + j].values[yi] = set.a_hat[(i, j)] + cross - b[(i, j)];
            }
        }
    }
    Ok(FluxField {
        which: FluxKind::I2,
        dim: d,
        n: set.n_y,
        components: comps,
    })
}

/// `I3_ij(y, z) = a_ik dy_k chi^j - a_ik dz_k chi_y^l dy_l chi^j - mean_z(same)`
/// at y-gridpoint `yi`.
pub fn assemble_i3(spec: &CoefficientSpec, set: &CorrectorSet, yi: usize) -> Result<FluxField> {
    check_spec(spec, set)?;
    let zg = set.z_grid();
    let s = fast_slice(spec, set, &zg, yi);
    let d = set.dim;
    let dchi = |j: usize, k: usize| set.outer_grad[j][k].values[yi];
    let mut comps = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let v = (0..zg.len())
                .map(|p| {
                    let mut acc = 0.0;
                    for k in 0..d {
                        acc += s.coef[i * d + k][p] * dchi(j, k);
                        for l in 0..d {
                            acc -= s.coef[i * d + k][p] * s.grad[l][k][p] * dchi(j, l);
                        }
                    }
                    acc
                })
                .collect();
            comps.push(field(d, set.n_z, v));
        }
    }
    subtract_means(&mut comps);
    Ok(FluxField {
        which: FluxKind::I3,
        dim: d,
        n: set.n_z,
        components: comps,
    })
}

fn relative(err: f64, scale: f64) -> f64 {
    if scale > 1e-10 {
        err / scale
    } else {
        err
    }
}

/// Build `E` from `I` in Fourier space and verify the reconstruction.
pub fn fourier_flux_potential(flux: &FluxField, grid: &TorusGrid, tol: FluxTolerances) -> Result<FluxPotential> {
    fourier_flux_potential_scaled(flux, grid, tol, flux.max_abs())
}

/// As [`fourier_flux_potential`] with the reconstruction measured against
/// `scale`, the sup norm of the full field when `flux` is one slice of it.
pub fn fourier_flux_potential_scaled(flux: &FluxField, grid: &TorusGrid, tol: FluxTolerances, scale: f64) -> Result<FluxPotential> {
    let d = flux.dim;
    if grid.dim() != d || grid.n() != flux.n {
        return Err(Error::Dimension("flux field and grid disagree".into()));
    }
    let mean = flux.max_abs_mean();
    if mean > tol.mean * scale.max(1.0) {
        return Err(Error::NonZeroMean { mean });
    }
    let div = flux.divergence_residual(grid);
    if div > tol.divergence {
        return Err(Error::Identity(format!(
            "{:?} divergence residual {div:e} exceeds {:e}; the upstream cell solve is inaccurate",
            flux.which, tol.divergence
        )));
    }
    let len = grid.len();
    let spectra: Vec<Vec<Complex64>> = flux.components.iter().map(|c| c.spectrum(grid)).collect();
    let f_hat: Vec<Vec<Complex64>> = spectra
        .iter()
        .map(|s| {
            (0..len)
                .map(|idx| {
                    if idx == 0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        let l = grid.neg_laplace_symbol(idx);
                        -s[idx] / l
                    }
                })
                .collect()
        })
        .collect();
    // df[k][i*d + j] = d_k f_ij
    let df: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|k| {
            f_hat
                .iter()
                .map(|fh| {
                    let s: Vec<Complex64> = fh.iter().enumerate().map(|(idx, c)| c * grid.derivative_symbol(idx, k)).collect();
                    grid.inverse_real(&s)
                })
                .collect()
        })
        .collect();
    let mut e = Vec::with_capacity(d * d * d);
    for k in 0..d {
        for i in 0..d {
            for j in 0..d {
                let a = &df[k][i * d + j];
                let b = &df[i][k * d + j];
                e.push(field(d, flux.n, a.iter().zip(b).map(|(x, y)| x - y).collect()));
            }
        }
    }
    let mut err: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let mut acc = vec![0.0; len];
            for k in 0..d {
                let de = grid.derivative(&e[(k * d + i) * d + j].values, k);
                acc.iter_mut().zip(de).for_each(|(a, v)| *a += v);
            }
            let target = &flux.components[i * d + j].values;
            err = acc.iter().zip(target).fold(err, |m, (a, t)| m.max((a - t).abs()));
        }
    }
    let rel = relative(err, scale);
    if rel > tol.reconstruction {
        return Err(Error::Identity(format!(
            "{:?} reconstruction residual {rel:e} exceeds {:e}",
            flux.which, tol.reconstruction
        )));
    }
    Ok(FluxPotential {
        which: flux.which,
        dim: d,
        n: flux.n,
        f: f_hat.iter().map(|fh| field(d, flux.n, grid.inverse_real(fh))).collect(),
        e,
        reconstruction_error: err,
        reconstruction_residual: rel,
    })
}

/// Worst-case identity residuals over the whole y-grid.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FluxReport {
    pub i1_mean: f64,
    pub i2_mean: f64,
    pub i3_mean: f64,
    pub i1_divergence: f64,
    pub i2_divergence: f64,
    pub i3_divergence: f64,
    pub e1_reconstruction: f64,
    pub e2_reconstruction: f64,
    pub e3_reconstruction: f64,
    pub antisymmetric: bool,
    pub integration_by_parts: f64,
}

fn test_field(grid: &TorusGrid) -> Vec<f64> {
    use std::f64::consts::PI;
    (0..grid.len())
        .map(|p| {
            let x = grid.point(p);
            (2.0 * PI * x[0]).sin() + 0.5 * (2.0 * PI * (x[0] + 2.0 * x[1])).cos()
        })
        .collect()
}

struct SliceReport {
    mean: [f64; 2],
    div: [f64; 2],
    scale: [f64; 2],
    antisymmetric: bool,
    ibp: f64,
}

fn slice_report(
    spec: &CoefficientSpec,
    set: &CorrectorSet,
    zg: &TorusGrid,
    yi: usize,
    tol: FluxTolerances,
    scale: Option<[f64; 2]>,
) -> Result<(SliceReport, [f64; 2])> {
    let phi = test_field(zg);
    let mut out = SliceReport {
        mean: [0.0; 2],
        div: [0.0; 2],
        scale: [0.0; 2],
        antisymmetric: true,
        ibp: 0.0,
    };
    let mut rec = [0.0; 2];
    for (n, flux) in [assemble_i1(spec, set, yi)?, assemble_i3(spec, set, yi)?].iter().enumerate() {
        out.mean[n] = flux.max_abs_mean();
        out.scale[n] = flux.max_abs();
        let Some(scale) = scale else { continue };
        out.div[n] = flux.divergence_residual(zg);
        let pot = fourier_flux_potential_scaled(flux, zg, tol, scale[n])?;
        rec[n] = pot.reconstruction_residual;
        out.antisymmetric &= pot.is_exactly_antisymmetric();
        out.ibp = out.ibp.max(pot.integration_by_parts_defect(zg, &phi));
    }
    Ok((out, rec))
}

fn all_slices(
    spec: &CoefficientSpec,
    set: &CorrectorSet,
    zg: &TorusGrid,
    tol: FluxTolerances,
    scale: Option<[f64; 2]>,
) -> Result<Vec<(SliceReport, [f64; 2])>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..set.y_len())
            .into_par_iter()
            .map(|yi| slice_report(spec, set, zg, yi, tol, scale))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    (0..set.y_len()).map(|yi| slice_report(spec, set, zg, yi, tol, scale)).collect()
}

/// Assemble every flux field, build every potential and collect the worst
/// identity residuals. Reconstruction is measured against the sup norm of
/// each field over `Y x Z`, floored at `max |a_hat|`: the fields are
/// differences of fluxes of that size and may vanish up to solver noise.
/// Fails on the first pre- or post-check violation.
pub fn flux_identity_suite(spec: &CoefficientSpec, set: &CorrectorSet, tol: FluxTolerances) -> Result<FluxReport> {
    check_spec(spec, set)?;
    let zg = set.z_grid();
    let yg = set.y_grid();
    let mut report = FluxReport {
        antisymmetric: true,
        ..FluxReport::default()
    };

    let i2 = assemble_i2(spec, set)?;
    report.i2_mean = i2.max_abs_mean();
    report.i2_divergence = i2.divergence_residual(&yg);
    let tol2 = FluxTolerances {
        mean: f64::INFINITY,
        ..tol
    };
    let floor = set.a_hat.max_abs();
    let pot2 = fourier_flux_potential_scaled(&i2, &yg, tol2, i2.max_abs().max(floor))?;
    report.e2_reconstruction = pot2.reconstruction_residual;
    report.antisymmetric &= pot2.is_exactly_antisymmetric();
    report.integration_by_parts = pot2.integration_by_parts_defect(&yg, &test_field(&yg));

    let scale = all_slices(spec, set, &zg, tol, None)?
        .iter()
        .fold([floor; 2], |m, (s, _)| [m[0].max(s.scale[0]), m[1].max(s.scale[1])]);
    for (s, rec) in all_slices(spec, set, &zg, tol, Some(scale))? {
        report.i1_mean = report.i1_mean.max(s.mean[0]);
        report.i3_mean = report.i3_mean.max(s.mean[1]);
        report.i1_divergence = report.i1_divergence.max(s.div[0]);
        report.i3_divergence = report.i3_divergence.max(s.div[1]);
        report.e1_reconstruction = report.e1_reconstruction.max(rec[0]);
        report.e3_reconstruction = report.e3_reconstruction.max(rec[1]);
        report.antisymmetric &= s.antisymmetric;
        report.integration_by_parts = report.integration_by_parts.max(s.ibp);
    }
    Ok(report)
}

/// Fitted constant `C` in `|E1(y) - E1(y')|_{L2} + |grad_z(E1(y) - E1(y'))|_{L2} <= C |y - y'|`,
/// sampled over pairs of neighbouring y-gridpoints along each axis, every
/// `stride`-th base point.
pub fn e1_lipschitz_constant(spec: &CoefficientSpec, set: &CorrectorSet, stride: usize) -> Result<f64> {
    let zg = set.z_grid();
    let yg = set.y_grid();
    let d = set.dim;
    // Reconstruction is the suite's concern; this only measures E1.
    let tol = FluxTolerances {
        reconstruction: f64::INFINITY,
        ..FluxTolerances::default()
    };
    let potential = |yi: usize| -> Result<FluxPotential> { fourier_flux_potential(&assemble_i1(spec, set, yi)?, &zg, tol) };
    let mut best: f64 = 0.0;
    for base in (0..set.y_len()).step_by(stride.max(1)) {
        let e0 = potential(base)?;
        for axis in 0..d {
            let a = yg.axes(base);
            let mut b = a;
            b[axis] = (a[axis] + 1) % set.n_y;
            let other = if d == 1 { b[0] } else { b[0] * set.n_y + b[1] };
            let e1 = potential(other)?;
            let mut l2 = 0.0;
            let mut h1 = 0.0;
            for (c0, c1) in e0.e.iter().zip(&e1.e) {
                let diff: Vec<f64> = c0.values.iter().zip(&c1.values).map(|(x, y)| x - y).collect();
                l2 += diff.iter().map(|v| v * v).sum::<f64>() / zg.len() as f64;
                for k in 0..d {
                    h1 += zg.derivative(&diff, k).iter().map(|v| v * v).sum::<f64>() / zg.len() as f64;
                }
            }
            let dy = 1.0 / set.n_y as f64;
            best = best.max((l2.sqrt() + h1.sqrt()) / dy);
        }
    }
    Ok(best)
}

/// Fourier coefficients in `z` of the tabulated inner correctors,
/// `chi_y^j(z) = sum_k chi_hat^j_k(y) e^{2 pi i k.z}`.
#[derive(Clone, Debug)]
pub struct FourierCorrectorTable {
    pub dim: usize,
    pub n_y: usize,
    pub n_z: usize,
    /// Normalized coefficients, layout `[(y_index * dim + j) * n_z^dim + mode]`.
    pub coeffs: Vec<Complex64>,
}

/// Summary checks on a [`FourierCorrectorTable`].
#[derive(Clone, Debug, PartialEq)]
pub struct FourierTableReport {
    /// `sum_k |chi_hat_k|^2_{L2(Y)}` per `j`.
    pub mode_energy: Vec<f64>,
    /// `mean_{Y x Z} |chi|^2` per `j`.
    pub physical_energy: Vec<f64>,
    /// `sum_k 4 pi^2 |k|^2 |grad_y chi_hat_k|^2_{L2(Y)}` per `j`, equal to
    /// `mean |grad_z grad_y chi_y^j|^2`.
    pub weighted_gradient_sum: Vec<f64>,
    /// Max amplitude `|chi_hat_k|` over `y` and `j` on each shell `|k|_inf = m`.
    pub shell_amplitude: Vec<f64>,
    /// Least-squares slope of `-ln(shell_amplitude)` against `m` over shells
    /// above `1e-14`: an exponential decay rate.
    pub decay_rate: f64,
}

pub fn fourier_corrector_table(set: &CorrectorSet) -> FourierCorrectorTable {
    let zg = set.z_grid();
    let norm = 1.0 / set.z_len() as f64;
    let mut coeffs = Vec::with_capacity(set.inner.len());
    for yi in 0..set.y_len() {
        for j in 0..set.dim {
            coeffs.extend(zg.forward_real(set.inner_values(yi, j)).into_iter().map(|c| c * norm));
        }
    }
    FourierCorrectorTable {
        dim: set.dim,
        n_y: set.n_y,
        n_z: set.n_z,
        coeffs,
    }
}

impl FourierCorrectorTable {
    pub fn report(&self, set: &CorrectorSet) -> FourierTableReport {
        let d = self.dim;
        let zg = set.z_grid();
        let yg = set.y_grid();
        let (ly, lz) = (set.y_len(), set.z_len());
        let mut mode_energy = vec![0.0; d];
        let mut physical_energy = vec![0.0; d];
        let mut shell = vec![0.0f64; self.n_z / 2 + 1];
        for yi in 0..ly {
            for j in 0..d {
                let start = (yi * d + j) * lz;
                for (mode, c) in self.coeffs[start..start + lz].iter().enumerate() {
                    mode_energy[j] += c.norm_sqr() / ly as f64;
                    let k = zg.mode(mode);
                    let m = k[0].unsigned_abs().max(k[1].unsigned_abs()) as usize;
                    shell[m] = shell[m].max(c.norm());
                }
                physical_energy[j] += set.inner_values(yi, j).iter().map(|v| v * v).sum::<f64>() / (ly * lz) as f64;
            }
        }
        let mut weighted = vec![0.0; d];
        let mut column = vec![Complex64::new(0.0, 0.0); ly];
        for j in 0..d {
            for mode in 0..lz {
                let w = zg.neg_laplace_symbol(mode);
                if w == 0.0 || !zg.is_active(mode) {
                    continue;
                }
                for (yi, c) in column.iter_mut().enumerate() {
                    *c = self.coeffs[(yi * d + j) * lz + mode];
                }
                let mut s = column.clone();
                yg.forward(&mut s);
                // Parseval on Y for each gradient component of this mode.
                for (idx, c) in s.iter().enumerate() {
                    let sym = yg.symbols()[idx];
                    let g2 = (sym[0] * sym[0] + sym[1] * sym[1]) * c.norm_sqr();
                    weighted[j] += w * g2 / (ly * ly) as f64;
                }
            }
        }
        let pts: Vec<(f64, f64)> = shell
            .iter()
            .enumerate()
            .skip(1)
            .filter(|(_, a)| **a > 1e-14)
            .map(|(m, a)| (m as f64, -a.ln()))
            .collect();
        let decay_rate = if pts.len() >= 2 {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            sxy / sxx
        } else {
            f64::INFINITY
        };
        FourierTableReport {
            mode_energy,
            physical_energy,
            weighted_gradient_sum: weighted,
            shell_amplitude: shell,
            decay_rate,
        }
    }
}
