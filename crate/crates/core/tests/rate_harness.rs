use std::sync::Arc;

use proptest::prelude::*;
use twoscale::cell::build_corrector_set;
use twoscale::config::{BoundaryFixture, RunConfig};
use twoscale::domain::{GridFunction, Mesh, ScalarFn, Shape};
use twoscale::harness::{
    affine_defect, emit_report, fit_loglog, lipschitz_report, phi_functional, rate_report, solve_sweep, theta_chain,
    Verdict, CSV_HEADER,
};

fn zero() -> ScalarFn {
    Arc::new(|_| 0.0)
}

fn one() -> ScalarFn {
    Arc::new(|_| 1.0)
}

fn interval(n: usize) -> Arc<Mesh> {
    Arc::new(Mesh::new(Shape::Interval { a: 0.0, b: 1.0 }, n).unwrap())
}

/// The default 1-D fixture with `f = 1` and `g = 0`.
fn product_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.sweep.boundary = BoundaryFixture::Zero;
    cfg.sweep.eps = vec![0.25, 0.125, 0.0625, 0.03125, 0.015625];
    cfg
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounded_log_noise_moves_the_slope_little(noise in proptest::collection::vec(-0.1..0.1f64, 5), c in 0.01..10.0f64) {
        // Slope error is at most sum |x - mean x| |noise| / Sxx = 0.87 * 0.1.
        let eps = [0.25, 0.125, 0.0625, 0.03125, 0.015625];
        let pairs: Vec<(f64, f64)> = eps.iter().zip(&noise).map(|(e, n)| (*e, c * e * n.exp())).collect();
        let fit = fit_loglog(&pairs).unwrap();
        prop_assert!((0.85..=1.15).contains(&fit.slope), "{}", fit.slope);
    }

    #[test]
    fn scaling_the_errors_moves_only_the_intercept(s in 0.3..2.5f64, k in 1e-3..1e3f64) {
        let pairs: Vec<(f64, f64)> = [0.5, 0.3, 0.1, 0.07].iter().map(|e: &f64| (*e, 2.0 * e.powf(s) * (1.0 + 0.3 * e))).collect();
        let scaled: Vec<(f64, f64)> = pairs.iter().map(|(e, v)| (*e, k * v)).collect();
        let (a, b) = (fit_loglog(&pairs).unwrap(), fit_loglog(&scaled).unwrap());
        prop_assert!((a.slope - b.slope).abs() < 1e-10);
        prop_assert!((b.intercept - a.intercept - k.ln()).abs() < 1e-10);
        prop_assert!((a.residual - b.residual).abs() < 1e-10);
    }

    #[test]
    fn affine_defect_of_a_parabola(x0 in 0.35..0.65f64, r in 0.05..0.3f64) {
        // The L2 projection of x^2 onto affines on [x0 - r, x0 + r] leaves
        // r^2 (t^2 - 1/3), whose RMS is 2 r^2 / (3 sqrt 5).
        let u = GridFunction::from_fn(interval(4096), |x| x[0] * x[0]);
        let g = affine_defect(&u, [x0, 0.0], r, &zero(), 4.0).unwrap().g;
        let expect = 2.0 * r / (3.0 * 5f64.sqrt());
        prop_assert!((g - expect).abs() < 1e-3 * expect + 1e-6, "{g} vs {expect}");
        let with_load = affine_defect(&u, [x0, 0.0], r, &one(), 4.0).unwrap().g;
        prop_assert!((with_load - g - r).abs() < 1e-9);
    }

    #[test]
    fn oscillation_of_a_coordinate(x0 in 0.35..0.65f64, y0 in 0.35..0.65f64, r in 0.1..0.3f64) {
        // mean of (x1 - x0)^2 over a disk is r^2 / 4, so Phi = 1/2.
        let mesh = Arc::new(Mesh::new(Shape::Square, 256).unwrap());
        let u = GridFunction::from_fn(mesh, |x| x[0]);
        let phi = phi_functional(&u, [x0, y0], r, &zero(), 4.0).unwrap();
        prop_assert!((phi - 0.5).abs() < 5e-3, "{phi}");
        let u1 = GridFunction::from_fn(interval(2048), |x| x[0]);
        let phi1 = phi_functional(&u1, [x0, 0.0], r, &zero(), 4.0).unwrap();
        // Ball ends fall inside elements: O(h / r) quadrature error.
        prop_assert!((phi1 - 1.0 / 3f64.sqrt()).abs() < 2e-4, "{phi1}");
    }
}

#[test]
fn one_dimensional_rate_passes_and_tracks_its_constant() {
    let cfg = product_config();
    let spec = Arc::new(cfg.coefficient_spec().unwrap());
    let set = build_corrector_set(&spec, 32, 32, cfg.cell_options()).unwrap();
    let s = cfg.sweep_spec(spec, 1);
    let cases = solve_sweep(&s, &set).unwrap();
    let r = rate_report(&s, &set, &cases).unwrap();
    let fit = r.fit.unwrap();
    assert_eq!(r.verdict, Verdict::Pass, "{fit:?}");
    assert!(r.monotone);
    for row in &r.rows {
        let c = row.l2_err / row.eps.powf(fit.slope);
        assert!((c / fit.constant() - 1.0).abs() < 0.25, "eps {}: {c} vs {}", row.eps, fit.constant());
    }
}

#[test]
fn constant_coefficient_sweep_is_degenerate() {
    let mut cfg = product_config();
    cfg.coefficient.family = Some("constant".into());
    cfg.coefficient.params = vec![2.0];
    let spec = Arc::new(cfg.coefficient_spec().unwrap());
    let set = build_corrector_set(&spec, 16, 16, cfg.cell_options()).unwrap();
    let s = cfg.sweep_spec(spec, 1);
    let r = rate_report(&s, &set, &solve_sweep(&s, &set).unwrap()).unwrap();
    assert_eq!(r.verdict, Verdict::Degenerate);
    assert!(r.fit.is_none());
}

#[test]
fn large_scale_ratio_is_flat_for_the_product_fixture() {
    let mut cfg = product_config();
    cfg.sweep.boundary = BoundaryFixture::Linear;
    let spec = Arc::new(cfg.coefficient_spec().unwrap());
    let set = build_corrector_set(&spec, 32, 32, cfg.cell_options()).unwrap();
    let s = cfg.sweep_spec(spec, 1);
    let scan = lipschitz_report(&s, &solve_sweep(&s, &set).unwrap()).unwrap();
    assert_eq!(scan.verdict, Verdict::Pass);
    assert!(scan.max_ratio <= 2.0 * scan.median_ratio);
    assert!(scan.radii.windows(2).all(|w| w[1].r < w[0].r));
}

#[test]
fn parabola_contracts_exactly_along_a_chain() {
    // -u'' = 1: G(r) is linear in r, so every contraction equals theta.
    let u = GridFunction::from_fn(interval(8192), |x| x[0] * (1.0 - x[0]) / 2.0);
    let chain = theta_chain(&u, [0.5, 0.0], 0.4, 0.125, 3, &one(), 4.0).unwrap();
    assert!(chain[0].contraction.is_nan());
    for step in &chain[1..] {
        assert!((step.contraction - 0.125).abs() < 1e-3, "{}", step.contraction);
    }
}

#[test]
fn emitted_csv_has_one_row_per_eps() {
    let cfg = product_config();
    let spec = Arc::new(cfg.coefficient_spec().unwrap());
    let set = build_corrector_set(&spec, 16, 16, cfg.cell_options()).unwrap();
    let s = cfg.sweep_spec(spec, 1);
    let r = rate_report(&s, &set, &solve_sweep(&s, &set).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&r, dir.path(), "rates").unwrap();
    let text = std::fs::read_to_string(&files.csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 1 + s.eps.len());
    assert!(lines[1..].iter().all(|l| l.ends_with(",NA")));
    assert!(std::fs::read_to_string(&files.plot).unwrap().starts_with("<svg"));
    assert!(std::fs::read_to_string(&files.summary).unwrap().contains("PASS"));
}
