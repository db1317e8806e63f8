use proptest::prelude::*;
use twoscale::coeff::{builtin_family, parse_coefficient, validate_conditions, CoefficientSpec, Scale};
use twoscale::Error;

/// A random elliptic 2-D spec in the DSL: a dominant diagonal plus bounded
/// trigonometric perturbations with integer frequencies.
fn dsl_2d() -> impl Strategy<Value = String> {
    let term = (0.0..0.4f64, 1u32..4, 1u32..4, 0usize..4, 0usize..4);
    proptest::collection::vec(term, 1..5).prop_map(|terms| {
        let vars = ["y1", "y2", "z1", "z2"];
        let mut diag = String::from("3");
        let mut off = String::from("0");
        for (i, (c, k, l, v, w)) in terms.iter().enumerate() {
            let t = format!(
                " + {c}*cos(2*pi*{k}*{})*sin(2*pi*{l}*{})",
                vars[*v],
                vars[*w]
            );
            if i % 2 == 0 {
                diag.push_str(&t);
            } else {
                off.push_str(&t);
            }
        }
        format!("a11 = {diag}\na22 = {diag} + 0.5\na12 = {off}\na21 = {off}")
    })
}

fn unit_point() -> impl Strategy<Value = [f64; 4]> {
    [0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evaluation_is_periodic_in_both_variables(text in dsl_2d(), p in unit_point(), shift in 0usize..4) {
        let spec = parse_coefficient(&text).unwrap();
        let (y, z) = ([p[0], p[1]], [p[2], p[3]]);
        let base = spec.eval(&y, &z);
        let (mut y2, mut z2) = (y, z);
        if shift < 2 { y2[shift] += 1.0 } else { z2[shift - 2] += 1.0 }
        let moved = spec.eval(&y2, &z2);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((base[(i, j)] - moved[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn printed_spec_reparses_to_the_same_values(text in dsl_2d(), p in unit_point()) {
        let spec = parse_coefficient(&text).unwrap();
        let again = parse_coefficient(&spec.to_dsl()).unwrap();
        let (a, b) = (spec.eval(&p[..2], &p[2..]), again.eval(&p[..2], &p[2..]));
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((a[(i, j)] - b[(i, j)]).abs() < 1e-13);
            }
        }
        prop_assert_eq!(spec.hash_hex(), again.hash_hex());
    }

    #[test]
    fn certificate_brackets_the_product_extrema(a in 2.0..4.0f64, b in 0.1..1.9f64, c in 2.0..4.0f64, d in 0.1..1.9f64) {
        // Extrema of (a + b cos)(c + d cos) are attained on the sampling grid.
        let spec = builtin_family("trig_product", &[a, b, c, d]).unwrap();
        let cert = validate_conditions(&spec, 16).unwrap();
        prop_assert!((cert.alpha - (a - b) * (c - d)).abs() < 1e-12);
        prop_assert!((cert.beta - (a + b) * (c + d)).abs() < 1e-12);
    }
}

#[test]
fn cross_term_example_values() {
    let spec = parse_coefficient("a11 = 2 + cos(2*pi*y1)*cos(2*pi*z1)").unwrap();
    assert_eq!(spec.dim(), 1);
    assert!((spec.eval(&[0.0], &[0.0])[(0, 0)] - 3.0).abs() < 1e-15);
    for z in [0.0, 0.3, 0.77] {
        assert!((spec.eval(&[0.25], &[z])[(0, 0)] - 2.0).abs() < 1e-15);
    }
}

#[test]
fn half_period_is_a_frequency_error() {
    assert!(matches!(parse_coefficient("a11 = cos(pi*y1)"), Err(Error::Frequency { .. })));
}

#[test]
fn identity_dsl_matches_the_identity_spec() {
    let spec = parse_coefficient("a11 = 1; a12 = 0; a21 = 0; a22 = 1").unwrap();
    assert_eq!(spec.hash_hex(), CoefficientSpec::identity(2).hash_hex());
    let cert = validate_conditions(&spec, 8).unwrap();
    assert_eq!((cert.alpha, cert.beta, cert.lipschitz_y), (1.0, 1.0, 0.0));
}

#[test]
fn sign_changing_entry_fails_ellipticity() {
    let spec = parse_coefficient("a11 = cos(2*pi*y1)").unwrap();
    assert!(matches!(validate_conditions(&spec, 8), Err(Error::Ellipticity { .. })));
}

#[test]
fn builtin_families() {
    let c = builtin_family("constant", &[1.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(c.hash_hex(), CoefficientSpec::identity(2).hash_hex());
    let t = builtin_family("trig_product", &[2.0, 1.0, 2.0, 1.0]).unwrap();
    let x = 0.3f64;
    let expect = (2.0 + (2.0 * std::f64::consts::PI * x).cos()) * (2.0 + (2.0 * std::f64::consts::PI * 0.6).cos());
    assert!((t.eval(&[x], &[0.6])[(0, 0)] - expect).abs() < 1e-14);
    let lam = builtin_family("laminate_x1", &[2.0, 1.0, 3.0, 1.0]).unwrap();
    for axis in 0..2 {
        let dy = lam.derivative(Scale::Slow, 1, &[0.2, 0.7], &[0.4, 0.9]);
        let dz = lam.derivative(Scale::Fast, 1, &[0.2, 0.7], &[0.4, 0.9]);
        assert_eq!(dy[(axis, axis)], 0.0);
        assert_eq!(dz[(axis, axis)], 0.0);
    }
    assert!(matches!(builtin_family("checkerboard", &[]), Err(Error::UnknownFamily(_))));
    assert!(matches!(builtin_family("trig_product", &[1.0, 2.0, 2.0, 1.0]), Err(Error::InvalidParams(_))));
}

#[test]
fn certificate_tightens_with_resolution() {
    // alpha = 1 is attained at y = z = 1/2 for every even resolution; at odd
    // resolutions the sampled minimum sits above it and approaches from above.
    let spec = builtin_family("trig_product", &[2.0, 1.0, 2.0, 1.0]).unwrap();
    let coarse = validate_conditions(&spec, 4).unwrap();
    let fine = validate_conditions(&spec, 64).unwrap();
    assert!(coarse.alpha >= 1.0 - 1e-12 && fine.alpha >= 1.0 - 1e-12);
    assert!(fine.beta <= 9.0 + 1e-12);
    assert!(fine.alpha_lower <= fine.alpha && fine.alpha_lower > 0.0);
}
