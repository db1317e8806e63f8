//! Browser bindings: cell solve, 1-D rate sweep and slow corrector profile.
//!
//! Each operation has a plain Rust form returning a serializable struct and a
//! `wasm_bindgen` wrapper returning JSON. Sweeps use the 1-D closed forms, so
//! nothing here needs threads or a clock.

use std::sync::Arc;

use serde::Serialize;
use twoscale::cell::{build_corrector_set, corrector_diagnostics, CellOptions, CorrectorSet};
use twoscale::coeff::{parse_coefficient, validate_conditions, CoefficientSpec};
use twoscale::domain::{cells_for, closed_form_1d, CoefficientSource, DirichletProblem, Shape};
use twoscale::harness::fit_loglog;
use twoscale::{Error, Result};
use wasm_bindgen::prelude::*;

/// Largest table resolution accepted from the page.
pub const MAX_RESOLUTION: usize = 64;

/// Smallest `eps` of the browser sweep; below it the closed form needs
/// more than a few hundred thousand cells.
pub const MIN_EPS: f64 = 1.0 / 128.0;

#[derive(Clone, Debug, Serialize)]
pub struct CellSummary {
    pub dim: usize,
    /// Row-major `a_hat`.
    pub a_hat: Vec<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub max_residual: f64,
    pub grad_y_energy: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RatePoint {
    pub eps: f64,
    pub cells: usize,
    pub l2_err: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateSummary {
    pub a_hat: f64,
    pub points: Vec<RatePoint>,
    pub slope: f64,
    pub constant: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Profile {
    /// Sample points along the first slow axis.
    pub y: Vec<f64>,
    /// Outer correctors `chi^k(y)`, one row per `k`.
    pub chi: Vec<Vec<f64>>,
    /// `b_11(y)`.
    pub b11: Vec<f64>,
}

fn resolution(n: usize) -> Result<usize> {
    if (4..=MAX_RESOLUTION).contains(&n) {
        Ok(n)
    } else {
        Err(Error::Resolution {
            resolution: n,
            reason: format!("the demo accepts 4..={MAX_RESOLUTION} points per period"),
        })
    }
}

fn corrector_set(dsl: &str, n: usize) -> Result<(CoefficientSpec, CorrectorSet)> {
    let spec = parse_coefficient(dsl)?;
    let n = resolution(n)?;
    validate_conditions(&spec, n)?;
    let set = build_corrector_set(&spec, n, n, CellOptions::default())?;
    Ok((spec, set))
}

pub fn cell_summary(dsl: &str, n: usize) -> Result<CellSummary> {
    let spec = parse_coefficient(dsl)?;
    let n = resolution(n)?;
    let cert = validate_conditions(&spec, n)?;
    let set = build_corrector_set(&spec, n, n, CellOptions::default())?;
    let d = set.dim;
    let a_hat = (0..d * d).map(|k| set.a_hat[(k / d, k % d)]).collect();
    Ok(CellSummary {
        dim: d,
        a_hat,
        alpha: cert.alpha,
        beta: cert.beta,
        max_residual: set.max_residual,
        grad_y_energy: corrector_diagnostics(&set).grad_y_energy,
    })
}

/// `||u_eps - u0||` on `(0, 1)` with `f = 1`, `g = 0` from the closed forms.
pub fn rate_sweep(dsl: &str, n: usize, eps: &[f64]) -> Result<RateSummary> {
    let (spec, set) = corrector_set(dsl, n)?;
    if spec.dim() != 1 {
        return Err(Error::Dimension("the browser sweep runs in 1-D".into()));
    }
    let spec = Arc::new(spec);
    let shape = Shape::Interval { a: 0.0, b: 1.0 };
    let mut points = Vec::with_capacity(eps.len());
    for &e in eps {
        if !(MIN_EPS..=1.0).contains(&e) {
            return Err(Error::Invalid(format!("eps = {e} outside [{MIN_EPS}, 1]")));
        }
        let cells = cells_for(shape, e, 8.0);
        let problem = |coefficient| DirichletProblem {
            shape,
            n: cells,
            coefficient,
            load: Arc::new(|_| 1.0),
            boundary: Arc::new(|_| 0.0),
        };
        let u_eps = closed_form_1d(&problem(CoefficientSource::Oscillatory { spec: spec.clone(), eps: e }), 2)?;
        let u0 = closed_form_1d(&problem(CoefficientSource::Constant(set.a_hat)), 2)?;
        points.push(RatePoint {
            eps: e,
            cells,
            l2_err: u_eps.sub(&u0)?.l2_norm(),
        });
    }
    let fit = fit_loglog(&points.iter().map(|p| (p.eps, p.l2_err)).collect::<Vec<_>>())?;
    Ok(RateSummary {
        a_hat: set.a_hat[(0, 0)],
        points,
        slope: fit.slope,
        constant: fit.constant(),
        residual: fit.residual,
    })
}

/// Outer correctors and `b_11` along the first slow axis (second axis at 0).
pub fn slow_profile(dsl: &str, n: usize) -> Result<Profile> {
    let (_, set) = corrector_set(dsl, n)?;
    let yg = set.y_grid();
    let idx: Vec<usize> = (0..set.y_len()).filter(|&p| set.dim == 1 || yg.axes(p)[1] == 0).collect();
    Ok(Profile {
        y: idx.iter().map(|&p| yg.point(p)[0]).collect(),
        chi: (0..set.dim).map(|k| idx.iter().map(|&p| set.outer[k].values[p]).collect()).collect(),
        b11: idx.iter().map(|&p| set.b_field[0].values[p]).collect(),
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn homogenize(dsl: &str, n: usize) -> std::result::Result<String, JsError> {
    to_js(cell_summary(dsl, n))
}

#[wasm_bindgen(js_name = rateSweep)]
pub fn rate_sweep_js(dsl: &str, n: usize, eps: Vec<f64>) -> std::result::Result<String, JsError> {
    to_js(rate_sweep(dsl, n, &eps))
}

#[wasm_bindgen(js_name = slowProfile)]
pub fn slow_profile_js(dsl: &str, n: usize) -> std::result::Result<String, JsError> {
    to_js(slow_profile(dsl, n))
}
