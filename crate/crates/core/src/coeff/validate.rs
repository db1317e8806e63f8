//! Sampled ellipticity and smoothness certificates.

use super::{CoefficientSpec, Scale};
use crate::{Error, Result};

/// Sampled structural constants of a spec.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    /// Minimum over samples of the smallest eigenvalue of `sym(A)`.
    pub alpha: f64,
    /// Maximum over samples of the largest eigenvalue of `sym(A)`.
    pub beta: f64,
    /// Maximum over samples of `|grad_y A|` (Frobenius over `(i, j, k)`).
    pub lipschitz_y: f64,
    /// `alpha` minus the worst variation between a sample and the nearest
    /// point of the continuum; positive means ellipticity holds everywhere.
    pub alpha_lower: f64,
}

/// Sample `A` on a `resolution^dim x resolution^dim` grid of `Y x Z`.
///
/// Fails with [`Error::Resolution`] below four samples per period of the
/// highest frequency, and with [`Error::Ellipticity`] if the sampled minimum
/// eigenvalue is not positive.
pub fn validate_conditions(spec: &CoefficientSpec, resolution: usize) -> Result<Certificate> {
    let freq = spec.max_freq(Scale::Slow).max(spec.max_freq(Scale::Fast)) as usize;
    if resolution == 0 || resolution < 4 * freq {
        return Err(Error::Resolution {
            resolution,
            reason: format!("need at least 4 x max frequency = {}", 4 * freq),
        });
    }
    let dim = spec.dim();
    let per = resolution.pow(dim as u32);
    let point = |idx: usize, out: &mut [f64]| {
        let mut r = idx;
        for v in out.iter_mut().take(dim) {
            *v = (r % resolution) as f64 / resolution as f64;
            r /= resolution;
        }
    };
    let (mut alpha, mut beta, mut lip, mut grad_all) =
        (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, 0.0f64);
    let (mut y, mut z) = ([0.0; 2], [0.0; 2]);
    for iy in 0..per {
        point(iy, &mut y);
        for iz in 0..per {
            point(iz, &mut z);
            let (lo, hi) = spec.eval(&y[..dim], &z[..dim]).sym_eigen_range();
            alpha = alpha.min(lo);
            beta = beta.max(hi);
            let mut gy = 0.0;
            let mut gz = 0.0;
            for k in 0..dim {
                let dy = spec.derivative(Scale::Slow, k, &y[..dim], &z[..dim]);
                let dz = spec.derivative(Scale::Fast, k, &y[..dim], &z[..dim]);
                gy += frob2(&dy);
                gz += frob2(&dz);
            }
            lip = lip.max(gy.sqrt());
            grad_all = grad_all.max((gy + gz).sqrt());
        }
    }
    // Every continuum point lies within half a cell diagonal of a sample in
    // the 2*dim dimensional product torus; eigenvalues are 1-Lipschitz in A.
    let half_diag = 0.5 * (2.0 * dim as f64).sqrt() / resolution as f64;
    let cert = Certificate {
        alpha,
        beta,
        lipschitz_y: lip,
        alpha_lower: alpha - half_diag * grad_all,
    };
    if alpha <= 0.0 {
        return Err(Error::Ellipticity {
            context: "sampled coefficient".into(),
            min_eigenvalue: alpha,
        });
    }
    Ok(cert)
}

fn frob2(m: &crate::linalg::Mat) -> f64 {
    let d = m.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += m[(i, j)] * m[(i, j)];
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{builtin_family, parse_coefficient};

    #[test]
    fn identity_certificate() {
        let c = validate_conditions(&CoefficientSpec::identity(2), 4).unwrap();
        assert_eq!((c.alpha, c.beta, c.lipschitz_y), (1.0, 1.0, 0.0));
    }

    #[test]
    fn trig_product_extrema() {
        let spec = builtin_family("trig_product", &[2.0, 1.0, 2.0, 1.0]).unwrap();
        let c = validate_conditions(&spec, 64).unwrap();
        assert!((c.alpha - 1.0).abs() < 1e-12);
        assert!((c.beta - 9.0).abs() < 1e-12);
        let m = spec.bounds.lipschitz_y.unwrap();
        assert!(c.lipschitz_y <= m + 1e-12 && c.lipschitz_y > 0.99 * m);
    }

    #[test]
    fn indefinite_entry_is_rejected() {
        let spec = parse_coefficient("a11 = cos(2*pi*y1)").unwrap();
        assert!(matches!(
            validate_conditions(&spec, 8),
            Err(Error::Ellipticity { .. })
        ));
    }

    #[test]
    fn under_resolved_grid_is_rejected() {
        let spec = parse_coefficient("a11 = 3 + cos(2*pi*4*z1)").unwrap();
        assert!(matches!(
            validate_conditions(&spec, 8),
            Err(Error::Resolution { .. })
        ));
    }
}
