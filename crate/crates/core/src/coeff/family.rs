//! Named fixture generators.

use std::f64::consts::PI;

use super::{CoefficientSpec, DeclaredBounds, Scale, Term, Trig, TrigFactor, TrigPoly};
use crate::linalg::Mat;
use crate::{Error, Result};

fn factor(scale: Scale, axis: usize, kind: Trig) -> TrigFactor {
    TrigFactor {
        scale,
        axis,
        freq: 1,
        kind,
    }
}

fn term(coeff: f64, factors: Vec<TrigFactor>) -> Term {
    Term { coeff, factors }
}

/// `(a + b F_y)(c + d F_z)` where `F_y`, `F_z` are products of unit cosines.
fn product(a: f64, b: f64, fy: &[TrigFactor], c: f64, d: f64, fz: &[TrigFactor]) -> TrigPoly {
    let mut both = fy.to_vec();
    both.extend_from_slice(fz);
    TrigPoly {
        terms: vec![
            term(a * c, vec![]),
            term(b * c, fy.to_vec()),
            term(a * d, fz.to_vec()),
            term(b * d, both),
        ],
    }
    .canonicalize()
}

fn positive_pair(name: &str, a: f64, b: f64) -> Result<()> {
    if a > b.abs() && a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "{name}: need a > |b| for a positive factor, got a = {a}, b = {b}"
        )))
    }
}

fn product_bounds(a: f64, b: f64, c: f64, d: f64) -> (f64, f64, f64) {
    (
        (a - b.abs()) * (c - d.abs()),
        (a + b.abs()) * (c + d.abs()),
        2.0 * PI * b.abs() * (c + d.abs()),
    )
}

/// Build one of the fixture families:
///
/// - `constant`: `[c]` (1-D) or `[a11, a12, a21, a22]` (2-D).
/// - `trig_product`: `[a, b, c, d]` gives `(a + b cos 2πy1)(c + d cos 2πz1)` in
///   1-D; a fifth parameter `2` gives `(a + b cos 2πy1 cos 2πy2)(c + d cos 2πz1 cos 2πz2) Id`.
/// - `laminate_x1`: diagonal 2-D spec depending on `(y1, z1)` only;
///   `[a, b, c, d]` sets both diagonal entries to `(a + b cos 2πy1)(c + d cos 2πz1)`,
///   eight parameters set `a22` from the second four.
/// - `trig_general`: `[amp, skew]`, a full non-separable 2-D matrix with both
///   slow-only and two-scale terms, whose antisymmetric part is `skew cos 2πz2`.
pub fn builtin_family(name: &str, params: &[f64]) -> Result<CoefficientSpec> {
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidParams(format!("{name}: non-finite parameter")));
    }
    match name {
        "constant" => {
            let (dim, m) = match params {
                [c] => (1, Mat::from_row_major(1, &[*c])),
                [_, _, _, _] => (2, Mat::from_row_major(2, params)),
                _ => {
                    return Err(Error::InvalidParams(
                        "constant: expected 1 or 4 entries".into(),
                    ))
                }
            };
            let (lo, hi) = m.sym_eigen_range();
            if lo <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "constant: matrix is not positive definite (min eigenvalue {lo})"
                )));
            }
            let entries = params.iter().map(|&c| TrigPoly::constant(c)).collect();
            let mut spec = CoefficientSpec::new(dim, entries)?;
            spec.bounds = DeclaredBounds {
                alpha: Some(lo),
                beta: Some(hi.max(m.max_abs())),
                lipschitz_y: Some(0.0),
            };
            Ok(spec)
        }
        "trig_product" => {
            let (a, b, c, d, dim) = match params {
                [a, b, c, d] => (*a, *b, *c, *d, 1),
                [a, b, c, d, n] if *n == 1.0 || *n == 2.0 => (*a, *b, *c, *d, *n as usize),
                _ => {
                    return Err(Error::InvalidParams(
                        "trig_product: expected [a, b, c, d] or [a, b, c, d, dim]".into(),
                    ))
                }
            };
            positive_pair("trig_product", a, b)?;
            positive_pair("trig_product", c, d)?;
            let fy: Vec<_> = (0..dim).map(|k| factor(Scale::Slow, k, Trig::Cos)).collect();
            let fz: Vec<_> = (0..dim).map(|k| factor(Scale::Fast, k, Trig::Cos)).collect();
            let p = product(a, b, &fy, c, d, &fz);
            let entries = (0..dim * dim)
                .map(|n| {
                    if n % (dim + 1) == 0 {
                        p.clone()
                    } else {
                        TrigPoly::default()
                    }
                })
                .collect();
            let mut spec = CoefficientSpec::new(dim, entries)?;
            let (alpha, beta, lip) = product_bounds(a, b, c, d);
            spec.bounds = DeclaredBounds {
                alpha: Some(alpha),
                beta: Some(beta),
                lipschitz_y: Some(lip),
            };
            Ok(spec)
        }
        "laminate_x1" => {
            let (p, q) = match params {
                [a, b, c, d] => ([*a, *b, *c, *d], [*a, *b, *c, *d]),
                [a, b, c, d, e, f, g, h] => ([*a, *b, *c, *d], [*e, *f, *g, *h]),
                _ => {
                    return Err(Error::InvalidParams(
                        "laminate_x1: expected 4 or 8 parameters".into(),
                    ))
                }
            };
            for v in [p, q] {
                positive_pair("laminate_x1", v[0], v[1])?;
                positive_pair("laminate_x1", v[2], v[3])?;
            }
            let fy = [factor(Scale::Slow, 0, Trig::Cos)];
            let fz = [factor(Scale::Fast, 0, Trig::Cos)];
            let entries = vec![
                product(p[0], p[1], &fy, p[2], p[3], &fz),
                TrigPoly::default(),
                TrigPoly::default(),
                product(q[0], q[1], &fy, q[2], q[3], &fz),
            ];
            let mut spec = CoefficientSpec::new(2, entries)?;
            let bp = product_bounds(p[0], p[1], p[2], p[3]);
            let bq = product_bounds(q[0], q[1], q[2], q[3]);
            spec.bounds = DeclaredBounds {
                alpha: Some(bp.0.min(bq.0)),
                beta: Some(bp.1.max(bq.1)),
                lipschitz_y: Some(bp.2.max(bq.2)),
            };
            Ok(spec)
        }
        "trig_general" => {
            let (amp, skew) = match params {
                [] => (1.0, 0.5),
                [amp] => (*amp, 0.0),
                [amp, skew] => (*amp, *skew),
                _ => {
                    return Err(Error::InvalidParams(
                        "trig_general: expected [amp, skew]".into(),
                    ))
                }
            };
            // Gershgorin on the symmetric part: 4 - 2|amp| on the diagonal,
            // 0.5|amp| off it. The skew part does not enter the quadratic form.
            if amp.abs() >= 1.6 {
                return Err(Error::InvalidParams(format!(
                    "trig_general: |amp| must be below 1.6, got {amp}"
                )));
            }
            let cy1 = factor(Scale::Slow, 0, Trig::Cos);
            let sy2 = factor(Scale::Slow, 1, Trig::Sin);
            let cz1 = factor(Scale::Fast, 0, Trig::Cos);
            let sz1 = factor(Scale::Fast, 0, Trig::Sin);
            let cz2 = factor(Scale::Fast, 1, Trig::Cos);
            let a11 = TrigPoly {
                terms: vec![
                    term(4.0, vec![]),
                    term(amp, vec![cy1, cz2]),
                    term(0.5 * amp, vec![sz1]),
                    term(0.5 * amp, vec![sy2.clone()]),
                ],
            };
            let a22 = TrigPoly {
                terms: vec![
                    term(4.0, vec![]),
                    term(amp, vec![sy2, cz1]),
                    term(0.5 * amp, vec![cy1.clone(), cz2.clone()]),
                    term(0.5 * amp, vec![cy1]),
                ],
            };
            let off = |s: f64| TrigPoly {
                terms: vec![term(0.5 * amp, vec![sy2, cz1]), term(s * skew, vec![cz2])],
            };
            let mut spec = CoefficientSpec::new(2, vec![a11, off(1.0), off(-1.0), a22])?;
            spec.bounds = DeclaredBounds {
                alpha: Some(4.0 - 2.5 * amp.abs()),
                beta: None,
                lipschitz_y: None,
            };
            Ok(spec)
        }
        other => Err(Error::UnknownFamily(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::parse_coefficient;

    #[test]
    fn constant_identity_matches_dsl() {
        let a = builtin_family("constant", &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(a.to_dsl(), CoefficientSpec::identity(2).to_dsl());
    }

    #[test]
    fn trig_product_matches_dsl() {
        let a = builtin_family("trig_product", &[2.0, 1.0, 2.0, 1.0]).unwrap();
        let b = parse_coefficient("a11 = (2 + cos(2*pi*y1))*(2 + cos(2*pi*z1))").unwrap();
        assert_eq!(a.to_dsl(), b.to_dsl());
        assert_eq!(a.bounds.alpha, Some(1.0));
        assert_eq!(a.bounds.beta, Some(9.0));
    }

    #[test]
    fn laminate_ignores_second_axis() {
        let spec = builtin_family("laminate_x1", &[2.0, 1.0, 2.0, 1.0]).unwrap();
        for (y, z) in [([0.1, 0.2], [0.3, 0.4]), ([0.7, 0.9], [0.05, 0.55])] {
            assert_eq!(spec.derivative(Scale::Slow, 1, &y, &z).max_abs(), 0.0);
            assert_eq!(spec.derivative(Scale::Fast, 1, &y, &z).max_abs(), 0.0);
        }
    }

    #[test]
    fn trig_general_is_nonsymmetric_with_skew() {
        let spec = builtin_family("trig_general", &[1.0, 0.5]).unwrap();
        assert!(!spec.is_symmetric());
        assert!(builtin_family("trig_general", &[1.0, 0.0]).unwrap().is_symmetric());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            builtin_family("checkerboard", &[]),
            Err(Error::UnknownFamily(_))
        ));
        assert!(matches!(
            builtin_family("trig_product", &[1.0, 2.0, 2.0, 1.0]),
            Err(Error::InvalidParams(_))
        ));
    }
}
