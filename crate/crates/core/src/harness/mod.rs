//! Convergence sweeps, affine-defect functionals, large-scale Lipschitz
//! scans and their reports.

mod functionals;
mod report;
mod sweep;

pub use functionals::{affine_defect, ball_mean_power, phi_functional, theta_chain, AffineDefect, ChainStep};
pub use report::{emit_report, write_csv, CsvRow, ReportFiles, Reportable, CSV_HEADER};
pub use sweep::{
    lipschitz_report, lipschitz_scan, rate_report, run_rate_sweep, solve_sweep, LipschitzRow, LipschitzScan, RadiusRow, RateReport,
    RateRow, SweepCase, SweepSpec, Thresholds,
};

use crate::{Error, Result};

/// Outcome of a sweep, mapped to process exit codes 0, 1 and 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Too few points, or errors indistinguishable from zero.
    Degenerate,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
            Verdict::Degenerate => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Degenerate => "DEGENERATE",
        }
    }

    /// Pass when every part passes, degenerate when any part is.
    pub fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Degenerate, _) | (_, Verdict::Degenerate) => Verdict::Degenerate,
            (Verdict::Pass, Verdict::Pass) => Verdict::Pass,
            _ => Verdict::Fail,
        }
    }
}

/// Least-squares line `log e = slope log eps + intercept`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in natural-log units.
    pub residual: f64,
}

impl LogFit {
    /// `exp(intercept)`, the constant of `e ~ C eps^slope`.
    pub fn constant(&self) -> f64 {
        self.intercept.exp()
    }
}

pub fn fit_loglog(pairs: &[(f64, f64)]) -> Result<LogFit> {
    if pairs.len() < 2 {
        return Err(Error::Invalid(format!("a log-log fit needs at least 2 points, got {}", pairs.len())));
    }
    if let Some((x, y)) = pairs.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::Invalid(format!("log-log fit needs positive values, got ({x}, {y})")));
    }
    let n = pairs.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.iter().map(|(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("log-log fit needs at least two distinct abscissae".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - slope * x - intercept).powi(2)).sum();
    Ok(LogFit {
        slope,
        intercept,
        residual: (ss / n).sqrt(),
    })
}

/// Median of a nonempty list.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws_fit_exactly() {
        let eps = [0.25, 0.125, 0.0625, 0.03125];
        let f = fit_loglog(&eps.map(|e| (e, 3.0 * e))).unwrap();
        assert!((f.slope - 1.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        assert!((f.constant() - 3.0).abs() < 1e-12);
        let f = fit_loglog(&eps.map(|e| (e, 0.7 * e.sqrt()))).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_values_are_rejected() {
        assert!(fit_loglog(&[(0.5, 1.0), (0.25, 0.0)]).is_err());
        assert!(fit_loglog(&[(0.5, 1.0)]).is_err());
    }

    #[test]
    fn median_of_even_and_odd_lists() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
