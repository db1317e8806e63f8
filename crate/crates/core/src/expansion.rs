//! The first-order two-scale approximation and its energy estimates.
//!
//! With `y = x/eps`, `z = x/eps^2` and `P_j = psi S(d_j u0)`,
//!
//! ```text
//! w = u_eps - u0 + eps chi^j(y) P_j + eps^2 chi_y^j(z) (P_j - d_{y_j} chi^k(y) P_k)
//! ```
//!
//! Correctors are evaluated at wrapped arguments: trigonometric interpolation
//! of the tabulated set in `y`, Fourier evaluation in `z`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::cell::CorrectorSet;
use crate::domain::{h2_oracle, CoefficientSource, GridFunction, NodeKind, ScalarFn};
use crate::mollifier::{cutoff_unchecked, smooth};
use crate::spectral::TorusGrid;
use crate::{Error, Result};

/// Wrapped coordinates are keyed on a `2^-40` lattice.
const KEY_SCALE: f64 = (1u64 << 40) as f64;

/// Table resolution above which the mesh demand is considered met.
const TABLE_SATURATION: usize = 16;

fn wrap_key(t: f64) -> u64 {
    let f = t - t.floor();
    ((f * KEY_SCALE).round() as u64) % (1u64 << 40)
}

fn key_coord(k: u64) -> f64 {
    k as f64 / KEY_SCALE
}

/// `e^{2 pi i k x} / len` for every mode of `grid`. The Nyquist factor on
/// each axis is `cos(pi n x)`, which keeps the interpolant real and exact at
/// grid points.
fn phases(grid: &TorusGrid, x: [f64; 2]) -> Vec<Complex64> {
    let n = grid.n();
    let per_axis: Vec<Vec<Complex64>> = (0..grid.dim())
        .map(|a| {
            (0..n)
                .map(|i| {
                    let arg = 2.0 * PI * grid.wavenumber(i) as f64 * x[a];
                    if 2 * i == n {
                        Complex64::new(arg.cos(), 0.0)
                    } else {
                        Complex64::from_polar(1.0, arg)
                    }
                })
                .collect()
        })
        .collect();
    let s = 1.0 / grid.len() as f64;
    (0..grid.len())
        .map(|idx| {
            let a = grid.axes(idx);
            let mut e = per_axis[0][a[0]] * s;
            if grid.dim() == 2 {
                e *= per_axis[1][a[1]];
            }
            e
        })
        .collect()
}

fn dot_re(spectrum: &[Complex64], ph: &[Complex64]) -> f64 {
    spectrum.iter().zip(ph).map(|(c, e)| c.re * e.re - c.im * e.im).sum()
}

/// Point evaluation of the tabulated correctors at arbitrary `(y, z)`.
pub struct CorrectorEvaluator {
    dim: usize,
    y_grid: TorusGrid,
    z_grid: TorusGrid,
    /// Per `k`: `[y_mode * z_len + z_mode]`, forward transforms in both.
    inner: Vec<Vec<Complex64>>,
    outer: Vec<Vec<Complex64>>,
    /// `[k][axis]`.
    outer_grad: Vec<Vec<Vec<Complex64>>>,
}

/// Slow-variable corrector values at one `y`.
pub struct SlowValues {
    /// `chi^k(y)`.
    pub chi: [f64; 2],
    /// `d_{y_axis} chi^k(y)`, indexed `[k][axis]`.
    pub grad: [[f64; 2]; 2],
    /// Forward z-transforms of `chi_y^k`, scaled for [`CorrectorEvaluator::inner_at`].
    z_spectra: Vec<Vec<Complex64>>,
}

impl CorrectorEvaluator {
    pub fn new(set: &CorrectorSet) -> Self {
        let d = set.dim;
        let y_grid = set.y_grid();
        let z_grid = set.z_grid();
        let (ly, lz) = (set.y_len(), set.z_len());
        let inner = (0..d)
            .map(|k| {
                let mut full = vec![Complex64::new(0.0, 0.0); ly * lz];
                for yi in 0..ly {
                    let s = z_grid.forward_real(set.inner_values(yi, k));
                    full[yi * lz..(yi + 1) * lz].copy_from_slice(&s);
                }
                let mut column = vec![Complex64::new(0.0, 0.0); ly];
                for zm in 0..lz {
                    for (yi, c) in column.iter_mut().enumerate() {
                        *c = full[yi * lz + zm];
                    }
                    y_grid.forward(&mut column);
                    for (ym, c) in column.iter().enumerate() {
                        full[ym * lz + zm] = *c;
                    }
                }
                full
            })
            .collect();
        let outer = set.outer.iter().map(|f| y_grid.forward_real(&f.values)).collect();
        let outer_grad = set
            .outer_grad
            .iter()
            .map(|g| g.iter().map(|f| y_grid.forward_real(&f.values)).collect())
            .collect();
        CorrectorEvaluator {
            dim: d,
            y_grid,
            z_grid,
            inner,
            outer,
            outer_grad,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Everything that depends on `y` only; `y` is wrapped into the cell.
    pub fn slow(&self, y: [f64; 2]) -> SlowValues {
        let y = [y[0] - y[0].floor(), y[1] - y[1].floor()];
        let ph = phases(&self.y_grid, y);
        let d = self.dim;
        let mut chi = [0.0; 2];
        let mut grad = [[0.0; 2]; 2];
        for k in 0..d {
            chi[k] = dot_re(&self.outer[k], &ph);
            for a in 0..d {
                grad[k][a] = dot_re(&self.outer_grad[k][a], &ph);
            }
        }
        let lz = self.z_grid.len();
        let z_spectra = self
            .inner
            .iter()
            .map(|full| {
                let mut s = vec![Complex64::new(0.0, 0.0); lz];
                for (ym, e) in ph.iter().enumerate() {
                    for (acc, c) in s.iter_mut().zip(&full[ym * lz..(ym + 1) * lz]) {
                        *acc += c * e;
                    }
                }
                s
            })
            .collect();
        SlowValues { chi, grad, z_spectra }
    }

    /// `chi_y^k(z)` for every `k`, with `slow` computed at `y`.
    pub fn inner_at(&self, slow: &SlowValues, z: [f64; 2]) -> [f64; 2] {
        let z = [z[0] - z[0].floor(), z[1] - z[1].floor()];
        let ph = phases(&self.z_grid, z);
        let mut out = [0.0; 2];
        for (k, s) in slow.z_spectra.iter().enumerate() {
            out[k] = dot_re(s, &ph);
        }
        out
    }
}

/// Inputs of [`build_w_epsilon`]. `u_eps` and `u0` live on the same mesh and
/// share Dirichlet data.
#[derive(Clone)]
pub struct ExpansionInputs {
    pub u_eps: GridFunction,
    pub u0: GridFunction,
    pub set: Arc<CorrectorSet>,
    pub eps: f64,
    /// `r` of the cutoff `psi_r`; defaults to `2 eps`.
    pub cutoff_width: Option<f64>,
    /// Scale of `S`; defaults to `eps`.
    pub smoothing_scale: Option<f64>,
}

impl ExpansionInputs {
    pub fn new(u_eps: GridFunction, u0: GridFunction, set: Arc<CorrectorSet>, eps: f64) -> Self {
        ExpansionInputs {
            u_eps,
            u0,
            set,
            eps,
            cutoff_width: None,
            smoothing_scale: None,
        }
    }

    /// Cutoff `psi_{2 eps^lambda}` and smoothing `S_{eps^lambda}`.
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        let s = self.eps.powf(lambda);
        self.cutoff_width = Some(2.0 * s);
        self.smoothing_scale = Some(s);
        self
    }
}

/// `w_eps` with its three corrector terms kept apart.
#[derive(Clone, Debug)]
pub struct ExpansionBundle {
    pub u_eps: GridFunction,
    pub u0: GridFunction,
    pub set: Arc<CorrectorSet>,
    pub eps: f64,
    pub cutoff_width: f64,
    pub smoothing_scale: f64,
    pub w: GridFunction,
    /// `eps chi^j P_j`, `eps^2 chi_y^j P_j` and `-eps^2 chi_y^j d_{y_j} chi^k P_k`.
    pub terms: [GridFunction; 3],
}

fn check_table(set: &CorrectorSet, eps: f64, h: f64) -> Result<()> {
    let need_z = ((eps * eps / h).ceil() as usize).min(TABLE_SATURATION);
    let need_y = ((eps / h).ceil() as usize).min(TABLE_SATURATION);
    if set.n_z < need_z {
        return Err(Error::Resolution {
            resolution: set.n_z,
            reason: format!("the mesh samples {need_z} points per fast period"),
        });
    }
    if set.n_y < need_y {
        return Err(Error::Resolution {
            resolution: set.n_y,
            reason: format!("the mesh samples {need_y} points per slow period"),
        });
    }
    Ok(())
}

/// Assemble `w_eps` nodewise.
pub fn build_w_epsilon(inputs: ExpansionInputs) -> Result<ExpansionBundle> {
    let ExpansionInputs {
        u_eps,
        u0,
        set,
        eps,
        cutoff_width,
        smoothing_scale,
    } = inputs;
    let mesh = u0.mesh().clone();
    if !u_eps.mesh().same_as(&mesh) {
        return Err(Error::Geometry("u_eps and u0 live on different meshes".into()));
    }
    let d = mesh.dim();
    if set.dim != d {
        return Err(Error::Dimension(format!("{}-D correctors on a {d}-D mesh", set.dim)));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Invalid(format!("eps = {eps} outside (0, 1]")));
    }
    if mesh.h > eps * eps * (1.0 + 1e-12) {
        return Err(Error::MeshRule {
            h: mesh.h,
            limit: eps * eps,
            rule: "h <= eps^2".into(),
        });
    }
    check_table(&set, eps, mesh.h)?;
    let width = cutoff_width.unwrap_or(2.0 * eps);
    let scale = smoothing_scale.unwrap_or(eps);

    let psi = cutoff_unchecked(&mesh, width).values;
    let p: Vec<GridFunction> = (0..d)
        .map(|j| Ok(smooth(&u0.nodal_gradient(j), scale)?.zip_map(&psi, |g, c| g * c)))
        .collect::<Result<_>>()?;

    // Group supported nodes by wrapped slow coordinate so each distinct `y`
    // is interpolated once.
    let mut groups: BTreeMap<(u64, u64), Vec<usize>> = BTreeMap::new();
    for v in 0..mesh.num_nodes() {
        if mesh.node_kind(v) == NodeKind::Exterior || psi.values()[v] == 0.0 {
            continue;
        }
        let x = mesh.point(v);
        let key = (wrap_key(x[0] / eps), if d == 2 { wrap_key(x[1] / eps) } else { 0 });
        groups.entry(key).or_default().push(v);
    }
    let groups: Vec<((u64, u64), Vec<usize>)> = groups.into_iter().collect();
    let eval = CorrectorEvaluator::new(&set);
    let e2 = eps * eps;
    let node_terms = |(key, nodes): &((u64, u64), Vec<usize>)| -> Vec<(usize, [f64; 3])> {
        let slow = eval.slow([key_coord(key.0), key_coord(key.1)]);
        nodes
            .iter()
            .map(|&v| {
                let x = mesh.point(v);
                let z = [key_coord(wrap_key(x[0] / e2)), key_coord(wrap_key(x[1] / e2))];
                let inner = eval.inner_at(&slow, z);
                let pv: Vec<f64> = p.iter().map(|f| f.values()[v]).collect();
                let (mut t1, mut t2, mut t3) = (0.0, 0.0, 0.0);
                for j in 0..d {
                    t1 += slow.chi[j] * pv[j];
                    t2 += inner[j] * pv[j];
                    for k in 0..d {
                        t3 -= inner[j] * slow.grad[k][j] * pv[k];
                    }
                }
                (v, [eps * t1, e2 * t2, e2 * t3])
            })
            .collect()
    };
    #[cfg(feature = "parallel")]
    let rows: Vec<Vec<(usize, [f64; 3])>> = {
        use rayon::prelude::*;
        groups.par_iter().map(node_terms).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let rows: Vec<Vec<(usize, [f64; 3])>> = groups.iter().map(node_terms).collect();

    let n = mesh.num_nodes();
    let mut t = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for (v, vals) in rows.into_iter().flatten() {
        for i in 0..3 {
            t[i][v] = vals[i];
        }
    }
    let w: Vec<f64> = (0..n)
        .map(|v| u_eps.values()[v] - u0.values()[v] + t[0][v] + t[1][v] + t[2][v])
        .collect();
    let [t0, t1, t2] = t;
    Ok(ExpansionBundle {
        w: GridFunction::new(mesh.clone(), w),
        terms: [
            GridFunction::new(mesh.clone(), t0),
            GridFunction::new(mesh.clone(), t1),
            GridFunction::new(mesh, t2),
        ],
        u_eps,
        u0,
        set,
        eps,
        cutoff_width: width,
        smoothing_scale: scale,
    })
}

/// `||grad u0||_{L2(Omega \ Sigma_width)}`.
pub fn boundary_layer_norm(u0: &GridFunction, width: f64) -> f64 {
    u0.boundary_layer_norm(width)
}

/// `|int A(x/eps, x/eps^2) grad w . grad phi|` with the coefficient sampled
/// at element centroids, matching the domain solver.
pub fn weak_form_residual(bundle: &ExpansionBundle, coefficient: &CoefficientSource, phi: &GridFunction) -> Result<f64> {
    let mesh = bundle.w.mesh();
    if !phi.mesh().same_as(mesh) {
        return Err(Error::Geometry("test function lives on a different mesh".into()));
    }
    let on_boundary = (0..mesh.num_nodes()).find(|&v| mesh.node_kind(v) != NodeKind::Interior && phi.values()[v] != 0.0);
    if let Some(v) = on_boundary {
        return Err(Error::Invalid(format!(
            "test function is {} at boundary node {v}",
            phi.values()[v]
        )));
    }
    let meas = mesh.element_measure();
    let d = mesh.dim();
    let mut s = 0.0;
    for t in 0..mesh.num_elements() {
        if !mesh.is_active(t) {
            continue;
        }
        let a = coefficient.at(mesh.centroid(t));
        let gw = bundle.w.element_gradient(t);
        let gp = phi.element_gradient(t);
        for i in 0..d {
            for j in 0..d {
                s += meas * a[(i, j)] * gw[j] * gp[i];
            }
        }
    }
    Ok(s.abs())
}

/// Norms entering the energy estimates at one `eps`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyRow {
    pub eps: f64,
    pub h: f64,
    pub grad_w: f64,
    /// `||u_eps - u0||_{L2}`.
    pub l2_err: f64,
    pub grad_u0: f64,
    /// `||grad u0||` on the layer of width `5 eps`.
    pub layer: f64,
    pub hess_u0: f64,
    /// `eps ||grad u0|| + layer + eps ||grad^2 u0||`.
    pub bracket: f64,
    /// `||grad w|| / bracket`.
    pub grad_ratio: f64,
    /// `||u_eps - u0|| / (r0 bracket)` with `r0` the domain diameter.
    pub l2_ratio: f64,
    /// `L2` norms of the three corrector terms.
    pub term_norms: [f64; 3],
}

pub fn energy_row(bundle: &ExpansionBundle, load: &ScalarFn) -> Result<EnergyRow> {
    let eps = bundle.eps;
    let mesh = bundle.u0.mesh();
    let h2 = h2_oracle(&bundle.u0, load);
    let layer = boundary_layer_norm(&bundle.u0, 5.0 * eps);
    let bracket = eps * h2.grad_norm + layer + eps * h2.hess_norm;
    if !(bracket > 0.0) {
        return Err(Error::Invalid("u0 has no gradient; the energy bracket vanishes".into()));
    }
    let grad_w = bundle.w.h1_seminorm();
    let l2_err = bundle.u_eps.sub(&bundle.u0)?.l2_norm();
    Ok(EnergyRow {
        eps,
        h: mesh.h,
        grad_w,
        l2_err,
        grad_u0: h2.grad_norm,
        layer,
        hess_u0: h2.hess_norm,
        bracket,
        grad_ratio: grad_w / bracket,
        l2_ratio: l2_err / (mesh.shape.diameter() * bracket),
        term_norms: [
            bundle.terms[0].l2_norm(),
            bundle.terms[1].l2_norm(),
            bundle.terms[2].l2_norm(),
        ],
    })
}

/// One row of the cutoff/smoothing exponent comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaRow {
    pub lambda: f64,
    pub cutoff_width: f64,
    pub smoothing_scale: f64,
    pub grad_w: f64,
    pub l2_w: f64,
}

/// `||grad w||` with cutoff `psi_{2 eps^lambda}` and smoothing `S_{eps^lambda}`
/// for each `lambda`, all at the same `eps`. Requires `lambda <= 2`.
pub fn lambda_study(base: &ExpansionInputs, lambdas: &[f64]) -> Result<Vec<LambdaRow>> {
    lambdas
        .iter()
        .map(|&lambda| {
            if !(lambda > 0.0 && lambda <= 2.0) {
                return Err(Error::InvalidParams(format!("lambda = {lambda} outside (0, 2]")));
            }
            let b = build_w_epsilon(base.clone().with_lambda(lambda))?;
            Ok(LambdaRow {
                lambda,
                cutoff_width: b.cutoff_width,
                smoothing_scale: b.smoothing_scale,
                grad_w: b.w.h1_seminorm(),
                l2_w: b.w.l2_norm(),
            })
        })
        .collect()
}
