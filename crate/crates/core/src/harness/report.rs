//! CSV, SVG and text summaries of sweep reports.
//!
//! The CSV carries only quantities that are deterministic given the inputs;
//! wall-clock times go to the summary and the `runtime_s` column reads `NA`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::sweep::{LipschitzScan, RateReport};
use super::{LogFit, Verdict};
use crate::{Error, Result};

pub const CSV_HEADER: &str = "eps,h,l2_err,grad_w_norm,layer_norm,hess_norm,lhs_lip,rhs_lip,runtime_s";

/// One CSV line; `None` is written as `NA`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvRow {
    pub eps: f64,
    pub h: f64,
    pub l2_err: Option<f64>,
    pub grad_w_norm: Option<f64>,
    pub layer_norm: Option<f64>,
    pub hess_norm: Option<f64>,
    pub lhs_lip: Option<f64>,
    pub rhs_lip: Option<f64>,
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), num)
}

fn unwritable(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(std::io::Error::other(format!("{}: {e}", path.display())))
}

pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let cells = [
            num(r.eps),
            num(r.h),
            opt(r.l2_err),
            opt(r.grad_w_norm),
            opt(r.layer_norm),
            opt(r.hess_norm),
            opt(r.lhs_lip),
            opt(r.rhs_lip),
            "NA".to_string(),
        ];
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| unwritable(path, e))
}

/// Points and an optional fitted line for the log-log plot.
struct Plot {
    title: String,
    y_label: &'static str,
    points: Vec<(f64, f64)>,
    fit: Option<LogFit>,
}

fn svg(plot: &Plot) -> String {
    let (w, h, m) = (640.0, 440.0, 60.0);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, plot.title);
    let pts: Vec<(f64, f64)> = plot.points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.log10(), y.log10())).collect();
    if pts.is_empty() {
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">no data</text>"#, w / 2.0, h / 2.0);
        out.push_str("</svg>\n");
        return out;
    }
    let bounds = |f: fn(&(f64, f64)) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min).floor();
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max).ceil();
        if hi > lo {
            (lo, hi)
        } else {
            (lo - 1.0, hi + 1.0)
        }
    };
    let (x0, x1) = bounds(|p| p.0);
    let (y0, y1) = bounds(|p| p.1);
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let _ = writeln!(
        out,
        r#"<rect x="{m}" y="{m}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * m,
        h - 2.0 * m
    );
    for k in (x0 as i64)..=(x1 as i64) {
        let x = sx(k as f64);
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{}" text-anchor="middle">1e{k}</text>"#, h - m + 18.0);
    }
    for k in (y0 as i64)..=(y1 as i64) {
        let y = sy(k as f64);
        let _ = writeln!(out, r#"<text x="{}" y="{y:.2}" text-anchor="end">1e{k}</text>"#, m - 6.0);
    }
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">eps</text>"#, w / 2.0, h - 16.0);
    let _ = writeln!(
        out,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        plot.y_label
    );
    if let Some(f) = plot.fit {
        // log10 y = slope log10 x + intercept / ln 10
        let line = |x: f64| f.slope * x + f.intercept / std::f64::consts::LN_10;
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c33" stroke-dasharray="6 4"/>"##,
            sx(x0),
            sy(line(x0)),
            sx(x1),
            sy(line(x1))
        );
        let _ = writeln!(out, r##"<text x="{}" y="{}" fill="#c33">slope {:.3}</text>"##, m + 8.0, m + 18.0, f.slope);
    }
    for (x, y) in &pts {
        let _ = writeln!(out, r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#236"/>"##, sx(*x), sy(*y));
    }
    out.push_str("</svg>\n");
    out
}

/// Anything [`emit_report`] can write.
pub trait Reportable {
    fn csv_rows(&self) -> Vec<CsvRow>;
    fn summary(&self) -> Vec<String>;
    fn verdict(&self) -> Verdict;
    fn plot(&self) -> (String, &'static str, Vec<(f64, f64)>, Option<LogFit>);
}

impl Reportable for RateReport {
    fn csv_rows(&self) -> Vec<CsvRow> {
        self.rows
            .iter()
            .map(|r| CsvRow {
                eps: r.eps,
                h: r.h,
                l2_err: Some(r.l2_err),
                grad_w_norm: r.grad_w_norm,
                layer_norm: Some(r.layer_norm),
                hess_norm: Some(r.hess_norm),
                lhs_lip: r.lhs_lip,
                rhs_lip: r.rhs_lip,
            })
            .collect()
    }

    fn summary(&self) -> Vec<String> {
        let mut lines = vec![
            format!("rate sweep: spec {} on {}", self.spec_id, self.domain),
            format!("points: {}", self.rows.len()),
        ];
        for r in &self.rows {
            lines.push(format!("  eps {:.6} h {:.3e} l2_err {:.4e} runtime {:.2}s", r.eps, r.h, r.l2_err, r.runtime_s));
        }
        match self.fit {
            Some(f) => lines.push(format!(
                "slope {:.4} intercept {:.4} (C = {:.4e}) residual {:.4}",
                f.slope,
                f.intercept,
                f.constant(),
                f.residual
            )),
            None => lines.push("slope undefined".into()),
        }
        let t = self.thresholds;
        lines.push(format!(
            "thresholds: slope in [{}, {}], residual <= {}",
            t.slope_min, t.slope_max, t.fit_residual
        ));
        lines.push(format!("monotone: {}", if self.monotone { "yes" } else { "no" }));
        lines.push(format!("{} rate", self.verdict.label()));
        lines
    }

    fn verdict(&self) -> Verdict {
        self.verdict
    }

    fn plot(&self) -> (String, &'static str, Vec<(f64, f64)>, Option<LogFit>) {
        (
            format!("||u_eps - u0|| on {}", self.domain),
            "L2 error",
            self.rows.iter().map(|r| (r.eps, r.l2_err)).collect(),
            self.fit,
        )
    }
}

impl Reportable for LipschitzScan {
    fn csv_rows(&self) -> Vec<CsvRow> {
        self.rows
            .iter()
            .map(|r| CsvRow {
                eps: r.eps,
                h: r.h,
                lhs_lip: Some(r.lhs),
                rhs_lip: Some(r.rhs_grad + r.rhs_load),
                ..CsvRow::default()
            })
            .collect()
    }

    fn summary(&self) -> Vec<String> {
        let mut lines = vec![format!(
            "lipschitz scan: spec {} on {}, centre ({}, {}), radius {}",
            self.spec_id, self.domain, self.center[0], self.center[1], self.radius
        )];
        for r in &self.rows {
            let probe = r.probe_ratio.map_or("NA".to_string(), |p| format!("{p:.4}"));
            lines.push(format!(
                "  eps {:.6} lhs {:.4e} rhs {:.4e} ratio {:.4} probe(eps^2) {probe} runtime {:.2}s",
                r.eps,
                r.lhs,
                r.rhs_grad + r.rhs_load,
                r.ratio,
                r.runtime_s
            ));
        }
        for r in &self.radii {
            lines.push(format!(
                "  r {:.6} grad_avg {:.4e} G {:.4e} Phi {:.4e} |M| {:.4e}",
                r.r,
                r.grad_avg,
                r.g,
                r.phi,
                r.m[0].hypot(r.m[1])
            ));
        }
        lines.push(format!("max ratio {:.4} median {:.4}", self.max_ratio, self.median_ratio));
        lines.push(format!("{} lipschitz", self.verdict.label()));
        lines
    }

    fn verdict(&self) -> Verdict {
        self.verdict
    }

    fn plot(&self) -> (String, &'static str, Vec<(f64, f64)>, Option<LogFit>) {
        (
            format!("Lipschitz ratio on {}", self.domain),
            "LHS / RHS",
            self.rows.iter().map(|r| (r.eps, r.ratio)).collect(),
            None,
        )
    }
}

/// Paths written by [`emit_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct ReportFiles {
    pub csv: PathBuf,
    pub plot: PathBuf,
    pub summary: PathBuf,
}

/// Write `<stem>.csv`, `<stem>.svg` and `<stem>.txt` into `dir`.
pub fn emit_report(report: &dyn Reportable, dir: &Path, stem: &str) -> Result<ReportFiles> {
    std::fs::create_dir_all(dir).map_err(|e| unwritable(dir, e))?;
    let files = ReportFiles {
        csv: dir.join(format!("{stem}.csv")),
        plot: dir.join(format!("{stem}.svg")),
        summary: dir.join(format!("{stem}.txt")),
    };
    write_csv(&files.csv, &report.csv_rows())?;
    let (title, y_label, points, fit) = report.plot();
    let image = svg(&Plot {
        title,
        y_label,
        points,
        fit,
    });
    std::fs::write(&files.plot, image).map_err(|e| unwritable(&files.plot, e))?;
    let mut text = report.summary().join("\n");
    text.push('\n');
    std::fs::write(&files.summary, text).map_err(|e| unwritable(&files.summary, e))?;
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_csv_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        write_csv(&path, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn missing_values_are_na() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let row = CsvRow {
            eps: 0.5,
            h: 0.25,
            l2_err: Some(1.0),
            ..CsvRow::default()
        };
        write_csv(&path, &[row]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let line = text.lines().nth(1).unwrap();
        assert_eq!(line.split(',').count(), 9);
        assert!(line.starts_with("5.000000000000e-1,2.500000000000e-1,1.000000000000e0,NA"));
    }
}
