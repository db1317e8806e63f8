//! Epsilon sweeps: paired solves of the oscillatory and homogenized problems,
//! the fitted convergence rate and the large-scale Lipschitz ratio.

use std::sync::Arc;
use std::time::Instant;

use super::functionals::{affine_defect, ball_mean_power, phi_functional};
use super::{fit_loglog, median, LogFit, Verdict};
use crate::cell::CorrectorSet;
use crate::coeff::CoefficientSpec;
use crate::domain::{cells_for, closed_form_1d, h2_oracle, solve_dirichlet, CoefficientSource, DirichletProblem, GridFunction, ScalarFn, Shape, SolverOptions};
use crate::expansion::{build_w_epsilon, ExpansionInputs};
use crate::{Error, Result};

/// Pass thresholds; every number a verdict depends on lives here.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub slope_min: f64,
    pub slope_max: f64,
    /// Largest admissible RMS log residual of the rate fit.
    pub fit_residual: f64,
    /// The Lipschitz ratio passes when `max <= factor * median`.
    pub lipschitz_factor: f64,
    /// Successive errors may grow by at most this factor.
    pub monotone_slack: f64,
    /// Errors below this fraction of `||u0||` count as zero.
    pub degenerate: f64,
    /// Minimum number of sweep points for a verdict.
    pub min_points: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            slope_min: 0.9,
            slope_max: f64::INFINITY,
            fit_residual: 0.1,
            lipschitz_factor: 2.0,
            monotone_slack: 1.2,
            degenerate: 1e-8,
            min_points: 4,
        }
    }
}

/// Everything a sweep needs besides the corrector set.
#[derive(Clone)]
pub struct SweepSpec {
    pub spec: Arc<CoefficientSpec>,
    pub shape: Shape,
    pub eps: Vec<f64>,
    pub load: ScalarFn,
    pub boundary: ScalarFn,
    pub solver: SolverOptions,
    /// 1-D only: use the closed-form solutions instead of finite elements.
    pub closed_form: bool,
    /// Largest admissible cell count per axis.
    pub max_cells: usize,
    /// Assemble `w_eps` for the gradient column.
    pub expansion: bool,
    /// Centre and radius of the large ball of the Lipschitz estimate.
    pub center: [f64; 2],
    pub radius: f64,
    /// Exponent of the load average.
    pub p: f64,
    pub thresholds: Thresholds,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

/// Paired solutions at one `eps`.
#[derive(Clone, Debug)]
pub struct SweepCase {
    pub eps: f64,
    pub u_eps: GridFunction,
    pub u0: GridFunction,
    pub iterations: usize,
    pub runtime_s: f64,
}

fn solve_case(s: &SweepSpec, a_hat: CoefficientSource, eps: f64) -> Result<SweepCase> {
    let start = Instant::now();
    let n = cells_for(s.shape, eps, s.solver.mesh_divisor);
    let problem = |coefficient| DirichletProblem {
        shape: s.shape,
        n,
        coefficient,
        load: s.load.clone(),
        boundary: s.boundary.clone(),
    };
    let osc = problem(CoefficientSource::Oscillatory { spec: s.spec.clone(), eps });
    let hom = problem(a_hat);
    let (u_eps, u0, iterations) = if s.closed_form {
        (closed_form_1d(&osc, 2)?, closed_form_1d(&hom, 2)?, 0)
    } else {
        let a = solve_dirichlet(&osc, &s.solver)?;
        let b = solve_dirichlet(&hom, &s.solver)?;
        (a.u, b.u, a.iterations + b.iterations)
    };
    Ok(SweepCase {
        eps,
        u_eps,
        u0,
        iterations,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

fn run_jobs<T: Send>(jobs: usize, count: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Invalid(format!("worker pool: {e}")))?;
        pool.install(|| (0..count).into_par_iter().map(&f).collect())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        (0..count).map(f).collect()
    }
}

/// Solve `u_eps` and `u0` for every `eps`, checking the mesh rule first.
pub fn solve_sweep(s: &SweepSpec, set: &CorrectorSet) -> Result<Vec<SweepCase>> {
    if set.dim != s.shape.dim() || s.spec.dim() != s.shape.dim() {
        return Err(Error::Dimension(format!(
            "{}-D coefficient with {}-D correctors on a {}-D domain",
            s.spec.dim(),
            set.dim,
            s.shape.dim()
        )));
    }
    if set.spec_hash != s.spec.hash_hex() {
        return Err(Error::Invalid("corrector set was tabulated for a different coefficient".into()));
    }
    if s.closed_form && s.shape.dim() != 1 {
        return Err(Error::Dimension("closed-form solutions exist only in 1-D".into()));
    }
    for &eps in &s.eps {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Invalid(format!("eps = {eps} outside (0, 1]")));
        }
        let n = cells_for(s.shape, eps, s.solver.mesh_divisor);
        if n > s.max_cells {
            return Err(Error::MeshRule {
                h: shape_side(s.shape) / s.max_cells as f64,
                limit: eps * eps / s.solver.mesh_divisor,
                rule: format!("eps = {eps} needs {n} cells per axis, the budget is {}", s.max_cells),
            });
        }
    }
    let a_hat = CoefficientSource::Constant(set.a_hat);
    run_jobs(s.jobs, s.eps.len(), |i| solve_case(s, a_hat.clone(), s.eps[i]))
}

/// One row of a rate sweep; absent quantities are `None`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateRow {
    pub eps: f64,
    pub h: f64,
    pub l2_err: f64,
    pub grad_w_norm: Option<f64>,
    pub layer_norm: f64,
    pub hess_norm: f64,
    pub lhs_lip: Option<f64>,
    pub rhs_lip: Option<f64>,
    pub runtime_s: f64,
}

#[derive(Clone, Debug)]
pub struct RateReport {
    pub spec_id: String,
    pub domain: String,
    pub rows: Vec<RateRow>,
    pub fit: Option<LogFit>,
    /// Errors decrease along the sweep up to the monotonicity slack.
    pub monotone: bool,
    pub verdict: Verdict,
    pub thresholds: Thresholds,
}

fn shape_side(shape: Shape) -> f64 {
    match shape {
        Shape::Interval { a, b } => b - a,
        Shape::Square => 1.0,
        Shape::Ball { radius, .. } => 2.0 * radius,
    }
}

pub(crate) fn shape_label(shape: Shape) -> String {
    match shape {
        Shape::Interval { a, b } => format!("interval[{a},{b}]"),
        Shape::Square => "unit_square".into(),
        Shape::Ball { center, radius } => format!("ball(({},{}),{radius})", center[0], center[1]),
    }
}

/// LHS and RHS of the large-scale Lipschitz estimate at one `eps`.
fn lipschitz_pair(s: &SweepSpec, u: &GridFunction, eps: f64) -> Result<(f64, f64, f64)> {
    let lhs = u.local_gradient_average(s.center, eps)?;
    let grad = u.local_gradient_average(s.center, s.radius)?;
    let load = ball_mean_power(u, s.center, s.radius, &s.load, s.p)?;
    Ok((lhs, grad, load))
}

/// Norms, fit and verdict of a solved sweep.
pub fn rate_report(s: &SweepSpec, set: &CorrectorSet, cases: &[SweepCase]) -> Result<RateReport> {
    let set = Arc::new(set.clone());
    let mut rows = Vec::with_capacity(cases.len());
    let mut scale: f64 = 0.0;
    for c in cases {
        let diff = c.u_eps.sub(&c.u0)?;
        scale = scale.max(c.u0.l2_norm());
        let grad_w_norm = if s.expansion {
            let b = build_w_epsilon(ExpansionInputs::new(c.u_eps.clone(), c.u0.clone(), set.clone(), c.eps))?;
            Some(b.w.h1_seminorm())
        } else {
            None
        };
        let lip = lipschitz_pair(s, &c.u_eps, c.eps).ok();
        rows.push(RateRow {
            eps: c.eps,
            h: c.u0.mesh().h,
            l2_err: diff.l2_norm(),
            grad_w_norm,
            layer_norm: c.u0.boundary_layer_norm(5.0 * c.eps),
            hess_norm: h2_oracle(&c.u0, &s.load).hess_norm,
            lhs_lip: lip.map(|l| l.0),
            rhs_lip: lip.map(|l| l.1 + l.2),
            runtime_s: c.runtime_s,
        });
    }
    let t = s.thresholds;
    let monotone = rows.windows(2).all(|w| w[1].l2_err <= t.monotone_slack * w[0].l2_err);
    let negligible = rows.iter().all(|r| r.l2_err <= t.degenerate * scale.max(f64::MIN_POSITIVE));
    let (fit, verdict) = if rows.len() < t.min_points.max(2) || negligible {
        (None, Verdict::Degenerate)
    } else {
        let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.eps, r.l2_err)).collect();
        let fit = fit_loglog(&pairs)?;
        let ok = fit.slope >= t.slope_min && fit.slope <= t.slope_max && fit.residual <= t.fit_residual;
        (Some(fit), if ok { Verdict::Pass } else { Verdict::Fail })
    };
    Ok(RateReport {
        spec_id: s.spec.hash_hex()[..16].to_string(),
        domain: shape_label(s.shape),
        rows,
        fit,
        monotone,
        verdict,
        thresholds: t,
    })
}

pub fn run_rate_sweep(s: &SweepSpec, set: &CorrectorSet) -> Result<RateReport> {
    let cases = solve_sweep(s, set)?;
    rate_report(s, set, &cases)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzRow {
    pub eps: f64,
    pub h: f64,
    /// `(mean_{B(x0, eps)} |grad u_eps|^2)^{1/2}`.
    pub lhs: f64,
    /// `(mean_{B(x0, R)} |grad u_eps|^2)^{1/2}`.
    pub rhs_grad: f64,
    /// `(mean_{B(x0, R)} |f|^p)^{1/p}`.
    pub rhs_load: f64,
    pub ratio: f64,
    /// The same ratio with the small ball at scale `eps^2`, where no
    /// estimate is claimed; `None` when the mesh cannot resolve it.
    pub probe_ratio: Option<f64>,
    pub runtime_s: f64,
}

/// Functionals on one ball of the radius ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct RadiusRow {
    pub r: f64,
    pub grad_avg: f64,
    pub g: f64,
    pub phi: f64,
    pub m: [f64; 2],
}

#[derive(Clone, Debug)]
pub struct LipschitzScan {
    pub spec_id: String,
    pub domain: String,
    pub center: [f64; 2],
    pub radius: f64,
    pub rows: Vec<LipschitzRow>,
    /// Radii `R 2^-k >= eps_min` on the finest solve.
    pub radii: Vec<RadiusRow>,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub verdict: Verdict,
}

/// Smallest admissible scan radius, in mesh cells.
const MIN_RADIUS_CELLS: f64 = 2.0;

pub fn lipschitz_report(s: &SweepSpec, cases: &[SweepCase]) -> Result<LipschitzScan> {
    let mut rows = Vec::with_capacity(cases.len());
    for c in cases {
        let h = c.u_eps.mesh().h;
        if c.eps < MIN_RADIUS_CELLS * h {
            return Err(Error::Resolution {
                resolution: c.u_eps.mesh().n,
                reason: format!("scan radius {} is below {MIN_RADIUS_CELLS} cells", c.eps),
            });
        }
        let (lhs, rhs_grad, rhs_load) = lipschitz_pair(s, &c.u_eps, c.eps)?;
        let rhs = rhs_grad + rhs_load;
        let probe_r = c.eps * c.eps;
        let probe_ratio = if probe_r >= MIN_RADIUS_CELLS * h {
            Some(c.u_eps.local_gradient_average(s.center, probe_r)? / rhs)
        } else {
            None
        };
        rows.push(LipschitzRow {
            eps: c.eps,
            h,
            lhs,
            rhs_grad,
            rhs_load,
            ratio: lhs / rhs,
            probe_ratio,
            runtime_s: c.runtime_s,
        });
    }
    let mut radii = Vec::new();
    if let Some(fine) = cases.iter().min_by(|a, b| a.eps.total_cmp(&b.eps)) {
        let mut r = s.radius;
        while r >= fine.eps * (1.0 - 1e-12) {
            let a = affine_defect(&fine.u_eps, s.center, r, &s.load, s.p)?;
            radii.push(RadiusRow {
                r,
                grad_avg: fine.u_eps.local_gradient_average(s.center, r)?,
                g: a.g,
                phi: phi_functional(&fine.u_eps, s.center, r, &s.load, s.p)?,
                m: a.m,
            });
            r *= 0.5;
        }
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let (max_ratio, median_ratio) = if ratios.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (ratios.iter().cloned().fold(f64::MIN, f64::max), median(&ratios))
    };
    let verdict = if rows.len() < 3 || !(median_ratio > 0.0) {
        Verdict::Degenerate
    } else if max_ratio <= s.thresholds.lipschitz_factor * median_ratio {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(LipschitzScan {
        spec_id: s.spec.hash_hex()[..16].to_string(),
        domain: shape_label(s.shape),
        center: s.center,
        radius: s.radius,
        rows,
        radii,
        max_ratio,
        median_ratio,
        verdict,
    })
}

pub fn lipschitz_scan(s: &SweepSpec, set: &CorrectorSet) -> Result<LipschitzScan> {
    let cases = solve_sweep(s, set)?;
    lipschitz_report(s, &cases)
}
