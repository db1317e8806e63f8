//! Command-line entry points. Each subcommand reads a [`RunConfig`], writes
//! deterministic CSV artifacts into the output directory and maps its outcome
//! to an exit code: 0 pass, 1 fail, 2 degenerate or error.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use crate::cell::{
    build_corrector_set, corrector_diagnostics, load_corrector_set, save_corrector_set, CacheFormat, CorrectorSet,
};
use crate::coeff::{validate_conditions, CoefficientSpec};
use crate::config::{RunConfig, CACHE_ENV};
use crate::expansion::{lambda_study, ExpansionInputs};
use crate::flux::flux_identity_suite;
use crate::harness::{emit_report, lipschitz_report, rate_report, solve_sweep, theta_chain, Reportable, Verdict};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "twoscale", version, about = "Reiterated periodic homogenization experiments")]
pub struct Cli {
    /// Run configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Corrector cache directory.
    #[arg(long, global = true, env = CACHE_ENV)]
    pub cache: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Binary,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the cell problems, cache the correctors and print the homogenized tensor.
    Cell {
        #[arg(long, value_enum, default_value_t = Format::Binary)]
        format: Format,
    },
    /// Check the flux-corrector identities on cached correctors.
    Flux,
    /// Convergence-rate sweep of `||u_eps - u0||`.
    Rates,
    /// Large-scale Lipschitz scan and affine-defect chain.
    Lipschitz,
    /// Compare cutoff and smoothing exponents at one `eps`.
    LambdaStudy,
}

/// Parse `args` (including the program name) and run; errors go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match run_with(&cli, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Run a parsed command, printing progress to `out`.
pub fn run_with(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    let ctx = Context {
        spec: Arc::new(cfg.coefficient_spec()?),
        hash: cfg.config_hash()?,
        cache: cfg.cache_dir(cli.cache.as_deref()),
        dir: cfg.output.dir.clone(),
        jobs: cli.jobs,
        cfg,
    };
    std::fs::create_dir_all(&ctx.dir)?;
    std::fs::write(ctx.dir.join("config.toml"), format!("# config hash {}\n{}", ctx.hash, ctx.cfg.to_toml()))?;
    writeln!(out, "config hash {}", ctx.hash)?;
    match cli.command {
        Command::Cell { format } => cmd_cell(&ctx, format, out),
        Command::Flux => cmd_flux(&ctx, out),
        Command::Rates => cmd_rates(&ctx, out),
        Command::Lipschitz => cmd_lipschitz(&ctx, out),
        Command::LambdaStudy => cmd_lambda(&ctx, out),
    }
}

struct Context {
    cfg: RunConfig,
    spec: Arc<CoefficientSpec>,
    hash: String,
    cache: PathBuf,
    dir: PathBuf,
    jobs: usize,
}

impl Context {
    fn cached(&self) -> Result<Option<CorrectorSet>> {
        load_corrector_set(&self.cache, &self.spec.hash_hex(), self.cfg.cell.n_y, self.cfg.cell.n_z)
    }

    fn build(&self) -> Result<CorrectorSet> {
        validate_conditions(&self.spec, self.cfg.cell.n_y.min(self.cfg.cell.n_z))?;
        build_corrector_set(&self.spec, self.cfg.cell.n_y, self.cfg.cell.n_z, self.cfg.cell_options())
    }

    fn cached_or_built(&self) -> Result<CorrectorSet> {
        match self.cached()? {
            Some(set) => Ok(set),
            None => {
                let set = self.build()?;
                save_corrector_set(&set, &self.cache, CacheFormat::Binary)?;
                Ok(set)
            }
        }
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, text)?;
        Ok(path)
    }

    /// Append the config hash to a report summary.
    fn stamp_summary(&self, path: &Path) -> Result<()> {
        let mut text = std::fs::read_to_string(path)?;
        text.push_str(&format!("config hash {}\n", self.hash));
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn num(v: f64) -> String {
    format!("{v:.12e}")
}

fn cmd_cell(ctx: &Context, format: Format, out: &mut dyn Write) -> Result<i32> {
    let cert = validate_conditions(&ctx.spec, ctx.cfg.cell.n_y.min(ctx.cfg.cell.n_z))?;
    let set = build_corrector_set(&ctx.spec, ctx.cfg.cell.n_y, ctx.cfg.cell.n_z, ctx.cfg.cell_options())?;
    let format = match format {
        Format::Binary => CacheFormat::Binary,
        Format::Csv => CacheFormat::Csv,
    };
    let path = save_corrector_set(&set, &ctx.cache, format)?;
    let diag = corrector_diagnostics(&set);
    let d = set.dim;

    let mut csv = String::from("quantity,i,j,value\n");
    let mut row = |q: &str, i: usize, j: usize, v: f64| {
        let _ = writeln!(csv, "{q},{i},{j},{}", num(v));
    };
    for i in 0..d {
        for j in 0..d {
            row("a_hat", i, j, set.a_hat[(i, j)]);
        }
    }
    row("alpha", 0, 0, cert.alpha);
    row("beta", 0, 0, cert.beta);
    row("max_residual", 0, 0, set.max_residual);
    for k in 0..d {
        row("grad_y_energy", k, 0, diag.grad_y_energy[k]);
        row("grad_z_l2", k, 0, diag.grad_z_l2[k]);
        row("grad_z_l3", k, 0, diag.grad_z_l3[k]);
        for (p, v) in diag.outer_w2p[k] {
            row("outer_w2p", k, p as usize, v);
        }
    }
    ctx.write("cell.csv", &csv)?;

    writeln!(out, "spec {} ({}-D), N_y = {}, N_z = {}", &ctx.spec.hash_hex()[..16], d, set.n_y, set.n_z)?;
    writeln!(out, "ellipticity: alpha {:.6e}, beta {:.6e}", cert.alpha, cert.beta)?;
    writeln!(out, "homogenized tensor:")?;
    for i in 0..d {
        let cells: Vec<String> = (0..d).map(|j| format!("{:.12}", set.a_hat[(i, j)])).collect();
        writeln!(out, "  [{}]", cells.join(", "))?;
    }
    writeln!(out, "max cell residual {:.3e}", set.max_residual)?;
    writeln!(out, "cache {}", path.display())?;
    Ok(0)
}

fn cmd_flux(ctx: &Context, out: &mut dyn Write) -> Result<i32> {
    let set = ctx.cached()?.ok_or_else(|| {
        Error::Cache(format!(
            "no correctors for spec {} at N_y = {}, N_z = {} in {}; run `twoscale cell` first",
            &ctx.spec.hash_hex()[..16],
            ctx.cfg.cell.n_y,
            ctx.cfg.cell.n_z,
            ctx.cache.display()
        ))
    })?;
    let report = match flux_identity_suite(&ctx.spec, &set, ctx.cfg.flux_tolerances()) {
        Ok(r) => r,
        Err(e @ (Error::Identity(_) | Error::NonZeroMean { .. })) => {
            writeln!(out, "FAIL flux: {e}")?;
            return Ok(1);
        }
        Err(e) => return Err(e),
    };
    let checks = [
        ("i1_mean", report.i1_mean),
        ("i2_mean", report.i2_mean),
        ("i3_mean", report.i3_mean),
        ("i1_divergence", report.i1_divergence),
        ("i2_divergence", report.i2_divergence),
        ("i3_divergence", report.i3_divergence),
        ("e1_reconstruction", report.e1_reconstruction),
        ("e2_reconstruction", report.e2_reconstruction),
        ("e3_reconstruction", report.e3_reconstruction),
        ("antisymmetric", if report.antisymmetric { 1.0 } else { 0.0 }),
        ("integration_by_parts", report.integration_by_parts),
    ];
    let mut csv = String::from("check,value\n");
    for (name, v) in checks {
        let _ = writeln!(csv, "{name},{}", num(v));
        writeln!(out, "{name:>22} {v:.3e}")?;
    }
    ctx.write("flux.csv", &csv)?;
    let verdict = if report.antisymmetric { Verdict::Pass } else { Verdict::Fail };
    writeln!(out, "{} flux", verdict.label())?;
    Ok(verdict.exit_code())
}

fn finish(ctx: &Context, report: &dyn Reportable, stem: &str, out: &mut dyn Write) -> Result<i32> {
    let files = emit_report(report, &ctx.dir, stem)?;
    ctx.stamp_summary(&files.summary)?;
    for line in report.summary() {
        writeln!(out, "{line}")?;
    }
    Ok(report.verdict().exit_code())
}

fn cmd_rates(ctx: &Context, out: &mut dyn Write) -> Result<i32> {
    let set = ctx.cached_or_built()?;
    let s = ctx.cfg.sweep_spec(ctx.spec.clone(), ctx.jobs);
    let cases = solve_sweep(&s, &set)?;
    let report = rate_report(&s, &set, &cases)?;
    finish(ctx, &report, "rates", out)
}

fn cmd_lipschitz(ctx: &Context, out: &mut dyn Write) -> Result<i32> {
    let set = ctx.cached_or_built()?;
    let s = ctx.cfg.sweep_spec(ctx.spec.clone(), ctx.jobs);
    let cases = solve_sweep(&s, &set)?;
    let scan = lipschitz_report(&s, &cases)?;
    let code = finish(ctx, &scan, "lipschitz", out)?;

    // The affine-defect chain runs on the homogenized solution of the finest case.
    let fine = cases.iter().min_by(|a, b| a.eps.total_cmp(&b.eps)).expect("nonempty sweep");
    let l = &ctx.cfg.lipschitz;
    let chain = theta_chain(&fine.u0, s.center, s.radius, l.theta, l.chain, &s.load, s.p)?;
    let mut csv = String::from("r,g,contraction\n");
    for step in &chain {
        let c = if step.contraction.is_nan() { "NA".to_string() } else { num(step.contraction) };
        let _ = writeln!(csv, "{},{},{c}", num(step.r), num(step.g));
        writeln!(out, "  chain r {:.6} G {:.4e} contraction {c}", step.r, step.g)?;
    }
    ctx.write("chain.csv", &csv)?;
    Ok(code)
}

fn cmd_lambda(ctx: &Context, out: &mut dyn Write) -> Result<i32> {
    let set = Arc::new(ctx.cached_or_built()?);
    let mut s = ctx.cfg.sweep_spec(ctx.spec.clone(), ctx.jobs);
    s.eps = vec![ctx.cfg.lambda.eps];
    let case = solve_sweep(&s, &set)?.pop().expect("one case");
    let base = ExpansionInputs::new(case.u_eps, case.u0, set, case.eps);
    let rows = lambda_study(&base, &ctx.cfg.lambda.values)?;
    let mut csv = String::from("lambda,cutoff_width,smoothing_scale,grad_w,l2_w\n");
    writeln!(out, "lambda study at eps = {}", case.eps)?;
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            num(r.lambda),
            num(r.cutoff_width),
            num(r.smoothing_scale),
            num(r.grad_w),
            num(r.l2_w)
        );
        writeln!(out, "  lambda {:.3} ||grad w|| {:.4e} ||w|| {:.4e}", r.lambda, r.grad_w, r.l2_w)?;
    }
    ctx.write("lambda.csv", &csv)?;
    Ok(0)
}
