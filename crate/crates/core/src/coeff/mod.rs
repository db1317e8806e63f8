//! Two-scale periodic coefficient fields `A(y, z)`.
//!
//! Every entry `a_ij` is a trigonometric polynomial in the slow variable `y`
//! and the fast variable `z` with integer frequencies, so `Y-Z` periodicity
//! (with `Y = Z = (0,1)^n`) holds by construction and derivatives are exact.

mod family;
mod parse;
mod validate;

use std::f64::consts::PI;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::linalg::Mat;

pub use family::builtin_family;
pub use parse::parse_coefficient;
pub use validate::{validate_conditions, Certificate};

/// Which argument a trigonometric factor depends on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scale {
    /// The slow cell variable `y = x / eps`.
    Slow,
    /// The fast cell variable `z = x / eps^2`.
    Fast,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trig {
    Cos,
    Sin,
}

/// `cos(2 pi freq v)` or `sin(2 pi freq v)` where `v` is `y_axis` or `z_axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrigFactor {
    pub scale: Scale,
    pub axis: usize,
    pub freq: u32,
    pub kind: Trig,
}

impl TrigFactor {
    #[inline]
    fn phase(&self, y: &[f64], z: &[f64]) -> f64 {
        let v = match self.scale {
            Scale::Slow => y[self.axis],
            Scale::Fast => z[self.axis],
        };
        2.0 * PI * self.freq as f64 * v
    }

    #[inline]
    fn value(&self, y: &[f64], z: &[f64]) -> f64 {
        let t = self.phase(y, z);
        match self.kind {
            Trig::Cos => t.cos(),
            Trig::Sin => t.sin(),
        }
    }

    #[inline]
    fn derivative(&self, y: &[f64], z: &[f64]) -> f64 {
        let t = self.phase(y, z);
        let w = 2.0 * PI * self.freq as f64;
        match self.kind {
            Trig::Cos => -w * t.sin(),
            Trig::Sin => w * t.cos(),
        }
    }
}

/// `coeff * prod(factors)`; factors are kept sorted so like terms compare equal.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub factors: Vec<TrigFactor>,
}

/// A finite sum of [`Term`]s.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrigPoly {
    pub terms: Vec<Term>,
}

impl TrigPoly {
    pub fn constant(c: f64) -> Self {
        let mut p = TrigPoly::default();
        if c != 0.0 {
            p.terms.push(Term {
                coeff: c,
                factors: Vec::new(),
            });
        }
        p
    }

    /// Merge like terms and drop zeros.
    pub fn canonicalize(mut self) -> Self {
        for t in &mut self.terms {
            t.factors.sort();
        }
        self.terms.sort_by(|a, b| a.factors.cmp(&b.factors));
        let mut out: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms {
            match out.last_mut() {
                Some(last) if last.factors == t.factors => last.coeff += t.coeff,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.coeff != 0.0);
        TrigPoly { terms: out }
    }

    pub fn eval(&self, y: &[f64], z: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * t.factors.iter().map(|f| f.value(y, z)).product::<f64>())
            .sum()
    }

    /// Exact partial derivative with respect to `scale_axis`.
    pub fn derivative(&self, scale: Scale, axis: usize, y: &[f64], z: &[f64]) -> f64 {
        let mut total = 0.0;
        for t in &self.terms {
            for (idx, f) in t.factors.iter().enumerate() {
                if f.scale != scale || f.axis != axis {
                    continue;
                }
                let mut prod = t.coeff * f.derivative(y, z);
                for (jdx, g) in t.factors.iter().enumerate() {
                    if jdx != idx {
                        prod *= g.value(y, z);
                    }
                }
                total += prod;
            }
        }
        total
    }

    /// Largest combined frequency along one axis of one scale over all terms.
    pub fn max_freq(&self, scale: Scale, axis: usize) -> u32 {
        self.terms
            .iter()
            .map(|t| {
                t.factors
                    .iter()
                    .filter(|f| f.scale == scale && f.axis == axis)
                    .map(|f| f.freq)
                    .sum::<u32>()
            })
            .max()
            .unwrap_or(0)
    }

    pub fn depends_on(&self, scale: Scale) -> bool {
        self.terms
            .iter()
            .any(|t| t.factors.iter().any(|f| f.scale == scale))
    }

    fn to_dsl(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (n, t) in self.terms.iter().enumerate() {
            if n > 0 {
                out.push_str(" + ");
            }
            write!(out, "{:?}", t.coeff).unwrap();
            for f in &t.factors {
                let name = match f.kind {
                    Trig::Cos => "cos",
                    Trig::Sin => "sin",
                };
                let var = match f.scale {
                    Scale::Slow => 'y',
                    Scale::Fast => 'z',
                };
                write!(out, "*{name}(2*pi*{}*{var}{})", f.freq, f.axis + 1).unwrap();
            }
        }
        out
    }
}

/// Analytically known structural constants, when a family provides them.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DeclaredBounds {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lipschitz_y: Option<f64>,
}

/// Symbolic description of `A(y, z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientSpec {
    dim: usize,
    entries: Vec<TrigPoly>,
    pub bounds: DeclaredBounds,
}

impl CoefficientSpec {
    /// Build from row-major entries. Fails on a dimension outside `{1, 2}` or
    /// a factor referencing an axis beyond `dim`.
    pub fn new(dim: usize, entries: Vec<TrigPoly>) -> crate::Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(crate::Error::Dimension(format!(
                "dimension {dim} not supported (1 or 2)"
            )));
        }
        if entries.len() != dim * dim {
            return Err(crate::Error::Dimension(format!(
                "expected {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        for e in &entries {
            for t in &e.terms {
                if let Some(f) = t.factors.iter().find(|f| f.axis >= dim) {
                    return Err(crate::Error::Dimension(format!(
                        "variable axis {} exceeds dimension {dim}",
                        f.axis + 1
                    )));
                }
            }
        }
        Ok(CoefficientSpec {
            dim,
            entries: entries.into_iter().map(TrigPoly::canonicalize).collect(),
            bounds: DeclaredBounds::default(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        let entries = (0..dim * dim)
            .map(|n| TrigPoly::constant(if n % (dim + 1) == 0 { 1.0 } else { 0.0 }))
            .collect();
        let mut spec = CoefficientSpec::new(dim, entries).expect("identity is valid");
        spec.bounds = DeclaredBounds {
            alpha: Some(1.0),
            beta: Some(1.0),
            lipschitz_y: Some(0.0),
        };
        spec
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> &TrigPoly {
        &self.entries[i * self.dim + j]
    }

    pub fn eval(&self, y: &[f64], z: &[f64]) -> Mat {
        let mut out = Mat::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = self.entry(i, j).eval(y, z);
            }
        }
        out
    }

    /// Row-major component fields of `A(y, .)` on the uniform `n^dim` z-grid
    /// (flat index `i0 * n + i1`, `z = i / n`). Phases are reduced modulo `n`
    /// before evaluation, so the samples are exactly periodic.
    pub fn sample_z_grid(&self, y: &[f64], n: usize) -> Vec<Vec<f64>> {
        let d = self.dim;
        let len = n.pow(d as u32);
        let cos_table: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).cos()).collect();
        let sin_table: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 / n as f64).sin()).collect();
        let mut out = vec![vec![0.0; len]; d * d];
        let no_z = [0.0; 2];
        for (e, field) in self.entries.iter().zip(out.iter_mut()) {
            for t in &e.terms {
                let mut c = t.coeff;
                let mut fast = Vec::new();
                for f in &t.factors {
                    match f.scale {
                        Scale::Slow => c *= f.value(y, &no_z),
                        Scale::Fast => fast.push(*f),
                    }
                }
                for (p, v) in field.iter_mut().enumerate() {
                    let axes = if d == 1 { [p, 0] } else { [p / n, p % n] };
                    let mut prod = c;
                    for f in &fast {
                        let r = (f.freq as usize * axes[f.axis]) % n;
                        prod *= match f.kind {
                            Trig::Cos => cos_table[r],
                            Trig::Sin => sin_table[r],
                        };
                    }
                    *v += prod;
                }
            }
        }
        out
    }

    /// `dA / d y_axis` or `dA / d z_axis`, exact.
    pub fn derivative(&self, scale: Scale, axis: usize, y: &[f64], z: &[f64]) -> Mat {
        let mut out = Mat::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = self.entry(i, j).derivative(scale, axis, y, z);
            }
        }
        out
    }

    /// The adjoint coefficient `A^*(y, z) = A(y, z)^T`.
    pub fn transpose(&self) -> Self {
        let d = self.dim;
        let entries = (0..d * d)
            .map(|n| self.entries[(n % d) * d + n / d].clone())
            .collect();
        CoefficientSpec {
            dim: d,
            entries,
            bounds: self.bounds,
        }
    }

    /// Structural symmetry: `a_ij` and `a_ji` are the same polynomial.
    pub fn is_symmetric(&self) -> bool {
        self.dim == 1 || self.entries[1] == self.entries[2]
    }

    pub fn max_freq(&self, scale: Scale) -> u32 {
        let mut m = 0;
        for e in &self.entries {
            for axis in 0..self.dim {
                m = m.max(e.max_freq(scale, axis));
            }
        }
        m
    }

    pub fn depends_on(&self, scale: Scale) -> bool {
        self.entries.iter().any(|e| e.depends_on(scale))
    }

    /// Coefficient that does not vary at all (both cell problems are trivial).
    pub fn is_constant(&self) -> bool {
        !self.depends_on(Scale::Slow) && !self.depends_on(Scale::Fast)
    }

    /// Canonical DSL text; `parse_coefficient(spec.to_dsl())` reproduces the
    /// same spec.
    pub fn to_dsl(&self) -> String {
        let mut out = format!("dim = {}\n", self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                writeln!(out, "a{}{} = {}", i + 1, j + 1, self.entry(i, j).to_dsl()).unwrap();
            }
        }
        out
    }

    /// SHA-256 of the canonical DSL, hex encoded. Used to key caches.
    pub fn hash_hex(&self) -> String {
        let digest = Sha256::digest(self.to_dsl().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
