//! Norms of tabulated correctors.

use super::CorrectorSet;

/// Corrector norms, one entry per corrector index `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct CellDiagnostics {
    /// `mean |grad_y chi_y^k|^2 + mean |grad_z grad_y chi_y^k|^2` over `Y x Z`.
    pub grad_y_energy: Vec<f64>,
    /// `W^{2,p}` surrogate of `chi^k`, as `(p, norm)` for `p` in `{2, 4}`.
    pub outer_w2p: Vec<[(f64, f64); 2]>,
    /// `(mean |grad_z chi_y^k|^2)^{1/2}` over `Y x Z`.
    pub grad_z_l2: Vec<f64>,
    /// `(mean |grad_z chi_y^k|^3)^{1/3}` over `Y x Z` (integrability probe).
    pub grad_z_l3: Vec<f64>,
}

/// Compute the diagnostics of a tabulated corrector set.
pub fn corrector_diagnostics(set: &CorrectorSet) -> CellDiagnostics {
    let d = set.dim;
    let (ly, lz) = (set.y_len(), set.z_len());
    let zg = set.z_grid();
    let yg = set.y_grid();
    let total = (ly * lz) as f64;

    let mut grad_y_energy = vec![0.0; d];
    for axis in 0..d {
        let table = set.inner_y_derivative(axis);
        for yi in 0..ly {
            for (k, energy) in grad_y_energy.iter_mut().enumerate() {
                let start = (yi * d + k) * lz;
                let slice = &table[start..start + lz];
                *energy += slice.iter().map(|v| v * v).sum::<f64>() / total;
                for zaxis in 0..d {
                    let dz = zg.derivative(slice, zaxis);
                    *energy += dz.iter().map(|v| v * v).sum::<f64>() / total;
                }
            }
        }
    }

    let mut grad_z_l2 = vec![0.0; d];
    let mut grad_z_l3 = vec![0.0; d];
    for yi in 0..ly {
        for k in 0..d {
            let g = set.inner_gradient(&zg, yi, k);
            for p in 0..lz {
                let m2: f64 = g.iter().map(|c| c[p] * c[p]).sum();
                grad_z_l2[k] += m2 / total;
                grad_z_l3[k] += m2.powf(1.5) / total;
            }
        }
    }

    let outer_w2p = (0..d)
        .map(|k| {
            let hess: Vec<Vec<f64>> = (0..d)
                .flat_map(|a| {
                    let yg = &yg;
                    let g = &set.outer_grad[k][a].values;
                    (0..d).map(move |b| yg.derivative(g, b))
                })
                .collect();
            let norm = |p: f64| {
                let mut s = 0.0;
                for i in 0..ly {
                    let c = set.outer[k].values[i].abs();
                    let g: f64 = (0..d).map(|a| set.outer_grad[k][a].values[i].powi(2)).sum();
                    let h: f64 = hess.iter().map(|f| f[i] * f[i]).sum();
                    s += c.powf(p) + g.powf(p / 2.0) + h.powf(p / 2.0);
                }
                (s / ly as f64).powf(1.0 / p)
            };
            [(2.0, norm(2.0)), (4.0, norm(4.0))]
        })
        .collect();

    CellDiagnostics {
        grad_y_energy,
        outer_w2p,
        grad_z_l2: grad_z_l2.into_iter().map(f64::sqrt).collect(),
        grad_z_l3: grad_z_l3.into_iter().map(f64::cbrt).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::{build_corrector_set, CellOptions};
    use crate::coeff::{parse_coefficient, CoefficientSpec};

    #[test]
    fn identity_norms_vanish() {
        let set = build_corrector_set(&CoefficientSpec::identity(1), 8, 8, CellOptions::default()).unwrap();
        let diag = corrector_diagnostics(&set);
        assert_eq!(diag.grad_y_energy, vec![0.0]);
        assert_eq!(diag.grad_z_l3, vec![0.0]);
        assert_eq!(diag.outer_w2p[0][1].1, 0.0);
    }

    #[test]
    fn norms_self_converge() {
        let spec = parse_coefficient("a11 = 3 + cos(2*pi*y1)*cos(2*pi*z1) + sin(2*pi*z1)").unwrap();
        let a = corrector_diagnostics(&build_corrector_set(&spec, 16, 16, CellOptions::default()).unwrap());
        let b = corrector_diagnostics(&build_corrector_set(&spec, 32, 32, CellOptions::default()).unwrap());
        let rel = |x: f64, y: f64| (x - y).abs() / y.abs();
        assert!(rel(a.grad_y_energy[0], b.grad_y_energy[0]) < 0.01);
        assert!(rel(a.grad_z_l3[0], b.grad_z_l3[0]) < 0.01);
        assert!(rel(a.outer_w2p[0][1].1, b.outer_w2p[0][1].1) < 0.01);
        // Lyapunov: the L^3 norm dominates the L^2 norm on a probability space.
        assert!(b.grad_z_l3[0] >= b.grad_z_l2[0]);
    }
}
