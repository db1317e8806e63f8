//! The `eps`-smoothing operator `S_eps f = rho_eps * f` and boundary cutoffs.
//!
//! `rho(x) = c exp(-1 / (1 - |2x|^2))` on `|x| < 1/2`. On a grid the kernel
//! weights are renormalized to sum to one, so constants are reproduced
//! exactly away from the boundary. Functions on bounded domains are extended
//! by zero before convolving.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::coeff::CoefficientSpec;
use crate::domain::{GridFunction, Mesh, NodeKind};
use crate::spectral::TorusGrid;
use crate::{Error, Result};

/// Unnormalized radial profile `exp(-1 / (1 - |2x|^2))`, zero for `|x| >= 1/2`.
pub fn bump_profile(r: f64) -> f64 {
    let s = 4.0 * r * r;
    if s < 1.0 {
        (-1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}

/// The continuous kernel `rho` with its normalization constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MollifierKernel {
    pub dim: usize,
    /// `int bump_profile` over `R^dim`.
    pub normalization: f64,
    /// Midpoint cells per unit length used for the normalization.
    pub resolution: usize,
}

impl MollifierKernel {
    pub fn new(dim: usize, resolution: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Dimension(format!("mollifier dimension {dim} is not 1 or 2")));
        }
        let m = resolution.max(2);
        let h = 1.0 / m as f64;
        let centre = |i: usize| -0.5 + (i as f64 + 0.5) * h;
        let normalization = if dim == 1 {
            (0..m).map(|i| bump_profile(centre(i).abs())).sum::<f64>() * h
        } else {
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    s += bump_profile(centre(i).hypot(centre(j)));
                }
            }
            s * h * h
        };
        Ok(MollifierKernel {
            dim,
            normalization,
            resolution: m,
        })
    }

    /// `rho(x)` for `|x| = r`.
    pub fn density(&self, r: f64) -> f64 {
        bump_profile(r) / self.normalization
    }
}

/// Grid weights of `rho_eps` on offsets `-radius..=radius` per axis, summing
/// to one. Row-major in 2-D.
#[derive(Clone, Debug, PartialEq)]
pub struct GridKernel {
    pub dim: usize,
    pub radius: usize,
    pub weights: Vec<f64>,
}

impl GridKernel {
    /// Requires `h <= eps / 8` so the kernel spans at least eight cells.
    pub fn new(dim: usize, eps: f64, h: f64) -> Result<Self> {
        if !(eps > 0.0) || !(h > 0.0) {
            return Err(Error::Invalid(format!("eps = {eps} and h = {h} must be positive")));
        }
        if h > eps / 8.0 * (1.0 + 1e-12) {
            return Err(Error::Resolution {
                resolution: (1.0 / h).round() as usize,
                reason: format!("smoothing at eps = {eps} needs h <= eps/8"),
            });
        }
        let radius = (0.5 * eps / h).floor() as usize;
        let side = 2 * radius + 1;
        let off = |i: usize| (i as f64 - radius as f64) * h / eps;
        let mut weights: Vec<f64> = if dim == 1 {
            (0..side).map(|i| bump_profile(off(i).abs())).collect()
        } else {
            (0..side * side).map(|k| bump_profile(off(k / side).hypot(off(k % side)))).collect()
        };
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(GridKernel { dim, radius, weights })
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }
}

/// Direct convolution is used while the kernel has at most this many taps.
const DIRECT_TAPS: usize = 1024;

/// `S_eps f` at the mesh nodes, `f` extended by zero outside the domain.
/// Exterior nodes of the result are zero.
pub fn smooth(f: &GridFunction, eps: f64) -> Result<GridFunction> {
    let mesh = f.mesh();
    let kernel = GridKernel::new(mesh.dim(), eps, mesh.h)?;
    let values = if mesh.dim() == 1 || kernel.weights.len() <= DIRECT_TAPS {
        convolve_direct(mesh, f.values(), &kernel)
    } else {
        convolve_fft(mesh, f.values(), &kernel)
    };
    Ok(restrict(mesh, values))
}

/// Same as [`smooth`] with the convolution route forced.
pub fn smooth_with(f: &GridFunction, eps: f64, fft: bool) -> Result<GridFunction> {
    let mesh = f.mesh();
    let kernel = GridKernel::new(mesh.dim(), eps, mesh.h)?;
    let values = if fft && mesh.dim() == 2 {
        convolve_fft(mesh, f.values(), &kernel)
    } else {
        convolve_direct(mesh, f.values(), &kernel)
    };
    Ok(restrict(mesh, values))
}

fn restrict(mesh: &Arc<Mesh>, mut values: Vec<f64>) -> GridFunction {
    for (v, val) in values.iter_mut().enumerate() {
        if mesh.node_kind(v) == NodeKind::Exterior {
            *val = 0.0;
        }
    }
    GridFunction::new(mesh.clone(), values)
}

fn convolve_direct(mesh: &Mesh, f: &[f64], k: &GridKernel) -> Vec<f64> {
    let m = mesh.side();
    let r = k.radius as isize;
    let ks = k.side();
    if mesh.dim() == 1 {
        return (0..m as isize)
            .map(|i| {
                let mut s = 0.0;
                for d in -r..=r {
                    let j = i - d;
                    if (0..m as isize).contains(&j) {
                        s += k.weights[(d + r) as usize] * f[j as usize];
                    }
                }
                s
            })
            .collect();
    }
    let mut out = vec![0.0; m * m];
    for i0 in 0..m as isize {
        for i1 in 0..m as isize {
            let mut s = 0.0;
            for d0 in -r..=r {
                let j0 = i0 - d0;
                if !(0..m as isize).contains(&j0) {
                    continue;
                }
                let row = &k.weights[(d0 + r) as usize * ks..][..ks];
                for d1 in -r..=r {
                    let j1 = i1 - d1;
                    if (0..m as isize).contains(&j1) {
                        s += row[(d1 + r) as usize] * f[j0 as usize * m + j1 as usize];
                    }
                }
            }
            out[(i0 * m as isize + i1) as usize] = s;
        }
    }
    out
}

/// Smallest `2^a 3^b 5^c >= n`.
fn fft_size(n: usize) -> usize {
    (n..)
        .find(|&k| {
            let mut k = k;
            for p in [2, 3, 5] {
                while k % p == 0 {
                    k /= p;
                }
            }
            k == 1
        })
        .expect("smooth numbers are unbounded")
}

/// 2-D linear convolution by zero-padded FFTs; the padded size exceeds the
/// support of the full convolution, so no wraparound reaches the mesh.
fn convolve_fft(mesh: &Mesh, f: &[f64], k: &GridKernel) -> Vec<f64> {
    let m = mesh.side();
    let r = k.radius;
    let p = fft_size(m + 2 * r);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(p);
    let inv = planner.plan_fft_inverse(p);
    let fft2 = |data: &mut Vec<Complex64>, plan: &Arc<dyn rustfft::Fft<f64>>| {
        plan.process(data);
        transpose(data, p);
        plan.process(data);
        transpose(data, p);
    };
    let mut a = vec![Complex64::new(0.0, 0.0); p * p];
    for i0 in 0..m {
        for i1 in 0..m {
            a[i0 * p + i1] = Complex64::new(f[i0 * m + i1], 0.0);
        }
    }
    let mut b = vec![Complex64::new(0.0, 0.0); p * p];
    let ks = k.side();
    for d0 in 0..ks {
        for d1 in 0..ks {
            let j0 = (d0 + p - r) % p;
            let j1 = (d1 + p - r) % p;
            b[j0 * p + j1] = Complex64::new(k.weights[d0 * ks + d1], 0.0);
        }
    }
    fft2(&mut a, &fwd);
    fft2(&mut b, &fwd);
    a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
    fft2(&mut a, &inv);
    let scale = 1.0 / (p * p) as f64;
    let mut out = vec![0.0; m * m];
    for i0 in 0..m {
        for i1 in 0..m {
            out[i0 * m + i1] = a[i0 * p + i1].re * scale;
        }
    }
    out
}

fn transpose(data: &mut [Complex64], p: usize) {
    for i in 0..p {
        for j in i + 1..p {
            data.swap(i * p + j, j * p + i);
        }
    }
}

/// `S_eps f` on the unit torus, by multiplication with the kernel spectrum.
/// Requires `eps < 1` so the kernel support does not wrap onto itself.
pub fn smooth_periodic(grid: &TorusGrid, values: &[f64], eps: f64) -> Result<Vec<f64>> {
    if !(eps < 1.0) {
        return Err(Error::Invalid(format!("periodic smoothing needs eps < 1, got {eps}")));
    }
    let n = grid.n();
    let k = GridKernel::new(grid.dim(), eps, 1.0 / n as f64)?;
    let mut kw = vec![Complex64::new(0.0, 0.0); grid.len()];
    let ks = k.side();
    let wrap = |d: usize| (d + n - k.radius % n) % n;
    if grid.dim() == 1 {
        for d in 0..ks {
            kw[wrap(d)] += k.weights[d];
        }
    } else {
        for d0 in 0..ks {
            for d1 in 0..ks {
                kw[wrap(d0) * n + wrap(d1)] += k.weights[d0 * ks + d1];
            }
        }
    }
    grid.forward(&mut kw);
    let mut s = grid.forward_real(values);
    s.iter_mut().zip(&kw).for_each(|(a, b)| *a *= b);
    let mut out = s;
    grid.inverse(&mut out);
    Ok(out.into_iter().map(|c| c.re).collect())
}

/// Quintic smoothstep: 0 below 0, 1 above 1, `C^2` in between, slope at most 15/8.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

/// Maximum slope of [`smoothstep`].
pub const SMOOTHSTEP_SLOPE: f64 = 15.0 / 8.0;

/// `psi_r = 1` on `{dist > 2r}`, `0` on `{dist <= r}`, with a quintic ramp
/// in the distance to the boundary in between.
#[derive(Clone, Debug)]
pub struct CutoffField {
    pub width: f64,
    pub values: GridFunction,
}

/// Cutoff of width `r`; requires `0 < r < inradius / 4`.
pub fn cutoff(mesh: &Arc<Mesh>, r: f64) -> Result<CutoffField> {
    let limit = mesh.shape.inradius() / 4.0;
    if !(r > 0.0 && r < limit) {
        return Err(Error::Geometry(format!("cutoff width {r} must lie in (0, {limit})")));
    }
    Ok(cutoff_unchecked(mesh, r))
}

/// Cutoff without the width precondition; for wide cutoffs the region
/// `{dist > 2r}` may be empty and `psi_r` never reaches one.
pub fn cutoff_unchecked(mesh: &Arc<Mesh>, r: f64) -> CutoffField {
    let shape = mesh.shape;
    let values = GridFunction::from_fn(mesh.clone(), |x| smoothstep((shape.boundary_distance(x) - r) / r));
    CutoffField { width: r, values }
}

/// One row of the smoothing scaling study.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothingRow {
    pub eps: f64,
    /// `||g(./eps) S_eps f|| / (||g|| ||f||)` with smooth `f`.
    pub product: f64,
    /// `eps ||g(./eps) grad S_eps f|| / (||g|| ||f||)` with near-critical `f`.
    pub gradient: f64,
    /// `||g(./eps^2) S_eps f|| / (||g|| ||f||)` with smooth `f`.
    pub fast_product: f64,
    /// `||S_eps f - f|| / (eps ||grad f||)` with near-critical `f`.
    pub approximation: f64,
    /// `||g(./eps) S_{eps^2} f|| / (||g|| ||f||)`, recorded only.
    pub slow_factor_fine_smoothing: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothingReport {
    pub rows: Vec<SmoothingRow>,
    /// `max / min - 1` of each ratio column over the sweep, in the field
    /// order of [`SmoothingRow`] without `eps` and the recorded column.
    pub drift: [f64; 4],
    pub max_ratio: [f64; 4],
}

/// Fixture parameters of the smoothing study, run on the 1-D unit torus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingOptions {
    /// Grid points of the torus.
    pub n: usize,
    /// Exponent of the `L2`-near-critical fixture `|x - 1/2|^{-alpha}`.
    pub alpha: f64,
    /// Exponent of the `H1`-near-critical fixture `|x - 1/2|^{beta}`.
    pub beta: f64,
}

impl Default for SmoothingOptions {
    fn default() -> Self {
        SmoothingOptions {
            n: 1 << 16,
            alpha: 0.49,
            beta: 0.51,
        }
    }
}

/// The periodic factor `g(t) = mean_y a_11(y, t e_1)` of a spec, tabulated
/// on `n` points of the unit interval.
pub fn periodic_factor(spec: &CoefficientSpec, n: usize) -> Vec<f64> {
    let d = spec.dim();
    let m = 4 * (spec.max_freq(crate::coeff::Scale::Slow) as usize + 1);
    let ly = m.pow(d as u32);
    (0..n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let mut z = [0.0; 2];
            z[0] = t;
            let mut s = 0.0;
            for k in 0..ly {
                let y = [(k % m) as f64 / m as f64, (k / m) as f64 / m as f64];
                s += spec.eval(&y[..d], &z[..d])[(0, 0)];
            }
            s / ly as f64
        })
        .collect()
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// Ratios of the smoothing estimates over an `eps` sweep. Each `eps` must
/// be the reciprocal of an integer so `g(x/eps)` and `g(x/eps^2)` stay
/// periodic on the torus, and the grid must resolve `eps^2 / 8`.
pub fn smoothing_bounds_report(spec: &CoefficientSpec, eps_list: &[f64], opts: SmoothingOptions) -> Result<SmoothingReport> {
    let n = opts.n;
    let grid = TorusGrid::new(1, n)?;
    let g_tab = periodic_factor(spec, n);
    let g_norm = rms(&g_tab);
    if g_norm == 0.0 {
        return Err(Error::Invalid("periodic factor vanishes".into()));
    }
    let dist = |i: usize| ((i as f64 + 0.5) / n as f64 - 0.5).abs();
    let smooth_f: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * i as f64 / n as f64).sin()).collect();
    // The singular fixtures sit at a cell centre, between grid points.
    let rough: Vec<f64> = (0..n).map(|i| dist(i).powf(-opts.alpha)).collect();
    let kink: Vec<f64> = (0..n).map(|i| dist(i).powf(opts.beta)).collect();
    let grad_kink_norm = rms(&(0..n).map(|i| (kink[(i + 1) % n] - kink[i]) * n as f64).collect::<Vec<_>>());
    let g_at = |x_over: f64| -> f64 {
        // g is 1-periodic and tabulated on the same grid; x_over is an exact
        // grid multiple whenever 1/eps is an integer.
        let idx = (x_over.rem_euclid(1.0) * n as f64).round() as usize % n;
        g_tab[idx]
    };
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let inv = 1.0 / eps;
        if (inv - inv.round()).abs() > 1e-9 {
            return Err(Error::Invalid(format!("eps = {eps} is not the reciprocal of an integer")));
        }
        if 8.0 / n as f64 > eps * eps * (1.0 + 1e-12) {
            return Err(Error::Resolution {
                resolution: n,
                reason: format!("g(x/eps^2) at eps = {eps} needs h <= eps^2/8"),
            });
        }
        let x = |i: usize| i as f64 / n as f64;
        let s_smooth = smooth_periodic(&grid, &smooth_f, eps)?;
        let s_rough = smooth_periodic(&grid, &rough, eps)?;
        let grad_rough = grid.derivative(&s_rough, 0);
        let s_kink = smooth_periodic(&grid, &kink, eps)?;
        let s_fine = smooth_periodic(&grid, &smooth_f, eps * eps)?;
        let weighted = |vals: &[f64], scale: f64| -> f64 {
            rms(&vals.iter().enumerate().map(|(i, v)| g_at(x(i) / scale) * v).collect::<Vec<_>>())
        };
        let diff: Vec<f64> = s_kink.iter().zip(&kink).map(|(a, b)| a - b).collect();
        rows.push(SmoothingRow {
            eps,
            product: weighted(&s_smooth, eps) / (g_norm * rms(&smooth_f)),
            gradient: eps * weighted(&grad_rough, eps) / (g_norm * rms(&rough)),
            fast_product: weighted(&s_smooth, eps * eps) / (g_norm * rms(&smooth_f)),
            approximation: rms(&diff) / (eps * grad_kink_norm),
            slow_factor_fine_smoothing: weighted(&s_fine, eps) / (g_norm * rms(&smooth_f)),
        });
    }
    let column = |r: &SmoothingRow, k: usize| [r.product, r.gradient, r.fast_product, r.approximation][k];
    let mut drift = [0.0; 4];
    let mut max_ratio = [0.0; 4];
    for k in 0..4 {
        let (lo, hi) = rows
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(column(r, k)), hi.max(column(r, k))));
        if !rows.is_empty() {
            drift[k] = hi / lo - 1.0;
            max_ratio[k] = hi;
        }
    }
    Ok(SmoothingReport { rows, drift, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Shape;

    #[test]
    fn kernel_has_unit_mass_and_support_inside_half_ball() {
        let k = MollifierKernel::new(2, 400).unwrap();
        assert_eq!(k.density(0.5), 0.0);
        assert!(k.density(0.499) >= 0.0);
        let k1 = MollifierKernel::new(1, 4000).unwrap();
        let h = 1e-4;
        let mass: f64 = (0..10_000).map(|i| k1.density((-0.5 + (i as f64 + 0.5) * h).abs()) * h).sum();
        assert!((mass - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constants_and_linear_functions_are_preserved_inside() {
        let mesh = Arc::new(Mesh::new(Shape::Square, 64).unwrap());
        let eps = 0.125;
        let lin = GridFunction::from_fn(mesh.clone(), |x| 2.0 + x[0] - 3.0 * x[1]);
        let s = smooth(&lin, eps).unwrap();
        for v in 0..mesh.num_nodes() {
            if mesh.shape.boundary_distance(mesh.point(v)) > eps / 2.0 {
                assert!((s.values()[v] - lin.values()[v]).abs() < 1e-12);
            }
        }
        assert!(s.l2_norm() <= lin.l2_norm());
    }

    #[test]
    fn direct_and_fft_routes_agree() {
        let mesh = Arc::new(Mesh::new(Shape::Square, 48).unwrap());
        let f = GridFunction::from_fn(mesh, |x| (7.0 * x[0]).sin() * (3.0 * x[1]).cos() + x[0]);
        let a = smooth_with(&f, 0.25, false).unwrap();
        let b = smooth_with(&f, 0.25, true).unwrap();
        let diff = a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-12, "{diff}");
    }

    #[test]
    fn under_resolved_kernel_is_rejected() {
        let mesh = Arc::new(Mesh::new(Shape::Interval { a: 0.0, b: 1.0 }, 16).unwrap());
        let f = GridFunction::from_fn(mesh, |_| 1.0);
        assert!(matches!(smooth(&f, 0.25), Err(Error::Resolution { .. })));
    }

    #[test]
    fn periodic_smoothing_commutes_with_grid_translation() {
        let grid = TorusGrid::new(1, 256).unwrap();
        let f: Vec<f64> = (0..256).map(|i| ((i * i) % 17) as f64).collect();
        let shifted: Vec<f64> = (0..256).map(|i| f[(i + 256 - 5) % 256]).collect();
        let a = smooth_periodic(&grid, &f, 0.25).unwrap();
        let b = smooth_periodic(&grid, &shifted, 0.25).unwrap();
        for i in 0..256 {
            assert!((b[i] - a[(i + 256 - 5) % 256]).abs() < 1e-12);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!((mean(&a) - mean(&f)).abs() < 1e-12);
    }

    #[test]
    fn cutoff_meets_its_three_conditions() {
        let mesh = Arc::new(Mesh::new(Shape::Square, 64).unwrap());
        let r = 0.125;
        assert!(cutoff(&mesh, r).is_err());
        let r = 0.1;
        let psi = cutoff(&mesh, r).unwrap().values;
        let mut max_grad: f64 = 0.0;
        for v in 0..mesh.num_nodes() {
            let d = mesh.shape.boundary_distance(mesh.point(v));
            if d >= 2.0 * r {
                assert_eq!(psi.values()[v], 1.0);
            }
            if d <= r {
                assert_eq!(psi.values()[v], 0.0);
            }
        }
        for t in 0..mesh.num_elements() {
            let g = psi.element_gradient(t);
            max_grad = max_grad.max(g[0].hypot(g[1]));
        }
        assert!(max_grad * r <= 4.0);
    }
}
