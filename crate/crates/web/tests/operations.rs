use twoscale_web::{cell_summary, rate_sweep, slow_profile, MAX_RESOLUTION};

const PRODUCT: &str = "a11 = (2 + cos(2*pi*y1))*(2 + cos(2*pi*z1))";

#[test]
fn product_coefficient_homogenizes_to_three() {
    let s = cell_summary(PRODUCT, 32).unwrap();
    assert_eq!(s.dim, 1);
    assert!((s.a_hat[0] - 3.0).abs() < 1e-10);
    assert!((s.alpha - 1.0).abs() < 1e-12 && (s.beta - 9.0).abs() < 1e-12);
}

#[test]
fn browser_sweep_is_first_order() {
    let r = rate_sweep(PRODUCT, 32, &[0.25, 0.125, 0.0625, 0.03125]).unwrap();
    assert_eq!(r.points.len(), 4);
    assert!((0.9..=1.3).contains(&r.slope), "{}", r.slope);
}

#[test]
fn slow_profile_follows_the_closed_form_gradient_sign() {
    // b(y) = sqrt3 (2 + cos 2 pi y), so chi' = 1 - sqrt3 / (2 + cos 2 pi y) is
    // positive at y = 0 and chi increases from there with zero mean.
    let p = slow_profile(PRODUCT, 32).unwrap();
    assert_eq!(p.y.len(), 32);
    let chi = &p.chi[0];
    assert!(chi[1] > chi[0]);
    assert!(chi.iter().sum::<f64>().abs() < 1e-12);
    let b_expected = 3f64.sqrt() * 3.0;
    assert!((p.b11[0] - b_expected).abs() < 1e-10);
}

#[test]
fn page_inputs_are_checked() {
    assert!(cell_summary("a11 = 2 + cos(pi*y1)", 16).is_err());
    assert!(cell_summary(PRODUCT, MAX_RESOLUTION + 1).is_err());
    assert!(rate_sweep(PRODUCT, 16, &[0.001]).is_err());
    assert!(rate_sweep("a11 = 2; a22 = 2; a12 = 0; a21 = 0", 16, &[0.25, 0.125]).is_err());
}

#[test]
fn two_dimensional_profile_has_one_row_per_corrector() {
    let p = slow_profile("a11 = 3 + cos(2*pi*y1)*cos(2*pi*z2); a22 = 2 + sin(2*pi*z1); a12 = 0; a21 = 0", 8).unwrap();
    assert_eq!(p.chi.len(), 2);
    assert_eq!(p.y.len(), 8);
}
