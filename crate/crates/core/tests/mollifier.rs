use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use twoscale::coeff::builtin_family;
use twoscale::domain::{GridFunction, Mesh, Shape};
use twoscale::mollifier::{
    bump_profile, cutoff, smooth, smooth_periodic, smooth_with, smoothing_bounds_report, SmoothingOptions,
};
use twoscale::spectral::TorusGrid;

/// `int rho(x) cos(2 pi k x) dx` by midpoint quadrature of the bare profile.
fn kernel_symbol(k: f64) -> f64 {
    let m = 200_000;
    let h = 1.0 / m as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..m {
        let x = -0.5 + (i as f64 + 0.5) * h;
        let w = bump_profile(x.abs());
        num += w * (2.0 * PI * k * x).cos();
        den += w;
    }
    num / den
}

fn rms(v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

#[test]
fn smoothing_ratios_are_bounded_without_drift() {
    let spec = builtin_family("trig_product", &[2.0, 1.0, 2.0, 1.0]).unwrap();
    let eps = [0.25, 0.125, 0.0625, 0.03125];
    let r = smoothing_bounds_report(&spec, &eps, SmoothingOptions::default()).unwrap();
    for (k, d) in r.drift.iter().enumerate() {
        assert!(*d <= 0.10, "column {k} drifts by {d}: {:?}", r.rows);
    }
    assert!(r.max_ratio.iter().all(|m| m.is_finite() && *m > 0.0));
}

#[test]
fn product_ratio_matches_the_kernel_symbol() {
    // g = mean_y a11(y, .) = 2 (2 + cos 2 pi t) and f = sin 2 pi x: the two
    // frequencies are orthogonal, so |g(./s) S_eps f| = 3 symbol(eps) / sqrt 2
    // for s = eps and s = eps^2, against |g| |f| = sqrt 18 / sqrt 2.
    let spec = builtin_family("trig_product", &[2.0, 1.0, 2.0, 1.0]).unwrap();
    let eps = [0.25, 0.125];
    let r = smoothing_bounds_report(&spec, &eps, SmoothingOptions::default()).unwrap();
    for row in &r.rows {
        let expect = kernel_symbol(row.eps);
        assert!((row.product - expect).abs() < 1e-6, "{} vs {expect}", row.product);
        assert!((row.fast_product - expect).abs() < 1e-6, "{} vs {expect}", row.fast_product);
    }
}

#[test]
fn report_rejects_non_reciprocal_eps() {
    let spec = builtin_family("trig_product", &[2.0, 1.0, 2.0, 1.0]).unwrap();
    assert!(smoothing_bounds_report(&spec, &[0.3], SmoothingOptions::default()).is_err());
}

#[test]
fn smoothing_is_bounded_by_the_zero_extended_range() {
    let mesh = Arc::new(Mesh::new(Shape::Interval { a: 0.0, b: 1.0 }, 256).unwrap());
    let f = GridFunction::from_fn(mesh.clone(), |x| 1.0 + 0.5 * (9.0 * x[0]).sin());
    let s = smooth(&f, 0.1).unwrap();
    for v in 0..mesh.num_nodes() {
        assert!(s.values()[v] >= -1e-14 && s.values()[v] <= 1.5 + 1e-14);
    }
}

#[test]
fn cutoff_is_monotone_in_the_boundary_distance() {
    let mesh = Arc::new(Mesh::new(Shape::Ball { center: [0.5, 0.5], radius: 0.5 }, 64).unwrap());
    let psi = cutoff(&mesh, 0.06).unwrap().values;
    let mut pairs: Vec<(f64, f64)> = (0..mesh.num_nodes())
        .map(|v| (mesh.shape.boundary_distance(mesh.point(v)), psi.values()[v]))
        .filter(|(d, _)| *d >= 0.0)
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert!(pairs.windows(2).all(|w| w[1].1 >= w[0].1));
    assert!(pairs.iter().all(|(_, p)| (0.0..=1.0).contains(p)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn periodic_smoothing_preserves_mean_and_contracts(vals in proptest::collection::vec(-5.0..5.0f64, 128), inv in 2usize..16) {
        let grid = TorusGrid::new(1, 128).unwrap();
        let eps = 1.0 / inv as f64;
        prop_assume!(eps >= 8.0 / 128.0);
        let s = smooth_periodic(&grid, &vals, eps).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        prop_assert!((mean(&s) - mean(&vals)).abs() < 1e-12);
        prop_assert!(rms(&s) <= rms(&vals) * (1.0 + 1e-12));
    }

    #[test]
    fn direct_and_fft_convolution_agree(seed in 0u64..1000, eps in 0.2..0.4f64) {
        let mesh = Arc::new(Mesh::new(Shape::Square, 40).unwrap());
        let f = GridFunction::from_fn(mesh, |x| ((seed as f64 + 13.0 * x[0]) * (1.0 + 7.0 * x[1])).sin());
        let a = smooth_with(&f, eps, false).unwrap();
        let b = smooth_with(&f, eps, true).unwrap();
        let diff = a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        prop_assert!(diff < 1e-12);
    }
}
