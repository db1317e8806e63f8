//! Ball functionals: the affine defect `G(r, v)` and the oscillation `Phi(r)`.

use crate::domain::{check_ball, for_each_in_region, GridFunction, ScalarFn};
use crate::{Error, Result};

fn ball_level(dim: usize, x0: [f64; 2], r: f64) -> impl Fn([f64; 2]) -> f64 {
    move |x| {
        if dim == 1 {
            (x[0] - x0[0]).abs() - r
        } else {
            (x[0] - x0[0]).hypot(x[1] - x0[1]) - r
        }
    }
}

/// `(mean_{B(x0, r)} |f|^p)^{1/p}` by quadrature on the mesh of `u`.
pub fn ball_mean_power(u: &GridFunction, x0: [f64; 2], r: f64, f: &ScalarFn, p: f64) -> Result<f64> {
    let mesh = u.mesh();
    check_ball(mesh, x0, r)?;
    let (mut s, mut area) = (0.0, 0.0);
    for_each_in_region(mesh, &ball_level(mesh.dim(), x0, r), |_, x, w| {
        s += w * f(x).abs().powf(p);
        area += w;
    });
    Ok((s / area).powf(1.0 / p))
}

/// Minimizer of `G(r, v)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineDefect {
    pub g: f64,
    /// `M_r`; the second entry is zero in 1-D.
    pub m: [f64; 2],
    /// `c_r`, so that the fit is `M_r . x + c_r`.
    pub c: f64,
    /// `(mean |v - M_r x - c_r|^2)^{1/2}`.
    pub fit_error: f64,
}

/// Solve the small SPD system `a x = b` by Cholesky.
fn cholesky_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= a[j][k] * a[j][k];
        }
        if !(d > 0.0) {
            return Err(Error::Geometry("affine Gram matrix is singular; the ball is too small for the mesh".into()));
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    for i in 0..n {
        for k in 0..i {
            b[i] -= a[i][k] * b[k];
        }
        b[i] /= a[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            b[i] -= a[k][i] * b[k];
        }
        b[i] /= a[i][i];
    }
    Ok(b)
}

/// `G(r, v) = (1/r) inf_{M, c} { (mean |v - M x - c|^2)^{1/2} + r^2 (mean |f|^p)^{1/p} }`
/// over `B(x0, r)`. The infimum is the `L2(B)` projection onto affine
/// functions, found from the normal equations in coordinates centred at `x0`.
pub fn affine_defect(u: &GridFunction, x0: [f64; 2], r: f64, f: &ScalarFn, p: f64) -> Result<AffineDefect> {
    let mesh = u.mesh();
    check_ball(mesh, x0, r)?;
    let d = mesh.dim();
    let level = ball_level(d, x0, r);
    let n = d + 1;
    // Basis 1, (x - x0) / r keeps the Gram matrix well conditioned.
    let basis = |x: [f64; 2]| -> [f64; 3] { [1.0, (x[0] - x0[0]) / r, (x[1] - x0[1]) / r] };
    let mut gram = vec![vec![0.0; n]; n];
    let mut rhs = vec![0.0; n];
    let mut area = 0.0;
    for_each_in_region(mesh, &level, |t, x, w| {
        let b = basis(x);
        let v = u.value_in(t, x);
        for i in 0..n {
            rhs[i] += w * b[i] * v;
            for j in 0..n {
                gram[i][j] += w * b[i] * b[j];
            }
        }
        area += w;
    });
    let coef = cholesky_solve(gram, rhs)?;
    let mut err = 0.0;
    for_each_in_region(mesh, &level, |t, x, w| {
        let b = basis(x);
        let fit: f64 = (0..n).map(|i| coef[i] * b[i]).sum();
        err += w * (u.value_in(t, x) - fit).powi(2);
    });
    let fit_error = (err / area).sqrt();
    let load = ball_mean_power(u, x0, r, f, p)?;
    let mut m = [0.0; 2];
    for a in 0..d {
        m[a] = coef[a + 1] / r;
    }
    let c = coef[0] - m[0] * x0[0] - m[1] * x0[1];
    Ok(AffineDefect {
        g: (fit_error + r * r * load) / r,
        m,
        c,
        fit_error,
    })
}

/// `Phi(r) = (1/r) inf_c { (mean |u - c|^2)^{1/2} + r^2 (mean |f|^p)^{1/p} }`,
/// attained at the ball mean of `u`.
pub fn phi_functional(u: &GridFunction, x0: [f64; 2], r: f64, f: &ScalarFn, p: f64) -> Result<f64> {
    let mesh = u.mesh();
    check_ball(mesh, x0, r)?;
    let level = ball_level(mesh.dim(), x0, r);
    let (mut s, mut area) = (0.0, 0.0);
    for_each_in_region(mesh, &level, |t, x, w| {
        s += w * u.value_in(t, x);
        area += w;
    });
    let mean = s / area;
    let mut err = 0.0;
    for_each_in_region(mesh, &level, |t, x, w| {
        err += w * (u.value_in(t, x) - mean).powi(2);
    });
    let load = ball_mean_power(u, x0, r, f, p)?;
    Ok(((err / area).sqrt() + r * r * load) / r)
}

/// One radius of a geometric chain `r_k = r0 theta^k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainStep {
    pub r: f64,
    pub g: f64,
    /// `G(r_k) / G(r_{k-1})`; NaN for the first radius.
    pub contraction: f64,
}

pub fn theta_chain(u: &GridFunction, x0: [f64; 2], r0: f64, theta: f64, count: usize, f: &ScalarFn, p: f64) -> Result<Vec<ChainStep>> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParams(format!("chain ratio {theta} outside (0, 1)")));
    }
    let mut out: Vec<ChainStep> = Vec::with_capacity(count);
    let mut r = r0;
    for _ in 0..count {
        let g = affine_defect(u, x0, r, f, p)?.g;
        let contraction = out.last().map_or(f64::NAN, |prev| g / prev.g);
        out.push(ChainStep { r, g, contraction });
        r *= theta;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Mesh, Shape};
    use std::sync::Arc;

    fn zero() -> ScalarFn {
        Arc::new(|_| 0.0)
    }

    #[test]
    fn affine_functions_have_no_defect() {
        let mesh = Arc::new(Mesh::new(Shape::Square, 64).unwrap());
        let u = GridFunction::from_fn(mesh, |x| 2.0 * x[0] - 0.5 * x[1] + 0.3);
        let a = affine_defect(&u, [0.5, 0.5], 0.3, &zero(), 4.0).unwrap();
        assert!(a.g < 1e-12);
        assert!((a.m[0] - 2.0).abs() < 1e-12 && (a.m[1] + 0.5).abs() < 1e-12);
        assert!((a.c - 0.3).abs() < 1e-12);
        let c = GridFunction::from_fn(u.mesh().clone(), |_| 1.5);
        let phi = phi_functional(&c, [0.5, 0.5], 0.3, &zero(), 4.0).unwrap();
        // relative to the scale |u| / r = 5
        assert!(phi < 5e-12, "{phi}");
    }

    #[test]
    fn escaping_balls_are_rejected() {
        let mesh = Arc::new(Mesh::new(Shape::Square, 16).unwrap());
        let u = GridFunction::from_fn(mesh, |x| x[0]);
        assert!(matches!(affine_defect(&u, [0.2, 0.5], 0.3, &zero(), 4.0), Err(Error::Geometry(_))));
    }
}
