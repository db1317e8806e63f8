use std::sync::Arc;

use proptest::prelude::*;
use twoscale::coeff::{builtin_family, parse_coefficient};
use twoscale::domain::{
    closed_form_1d, h2_oracle, read_grid_function, solve_dirichlet, write_grid_function, CoefficientSource,
    DirichletProblem, DumpFormat, GridFunction, NodeKind, ScalarFn, Shape, SolverOptions,
};
use twoscale::linalg::Mat;
use twoscale::Error;

const UNIT: Shape = Shape::Interval { a: 0.0, b: 1.0 };

/// Diagonal coefficients keep the right-triangle stiffness matrix an M-matrix.
fn diagonal_spec() -> Arc<twoscale::coeff::CoefficientSpec> {
    Arc::new(
        parse_coefficient("a11 = 2 + cos(2*pi*y1)*cos(2*pi*z2)\na22 = 3 + sin(2*pi*z1)\na12 = 0\na21 = 0").unwrap(),
    )
}

fn problem(coefficient: CoefficientSource, shape: Shape, n: usize, load: ScalarFn, boundary: ScalarFn) -> DirichletProblem {
    DirichletProblem {
        shape,
        n,
        coefficient,
        load,
        boundary,
    }
}

fn max_diff(a: &GridFunction, b: &GridFunction) -> f64 {
    a.values().iter().zip(b.values()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn homogeneous_solution_obeys_the_maximum_principle() {
    let g: ScalarFn = Arc::new(|x| (5.0 * x[0]).sin() + x[1] * x[1]);
    let p = problem(
        CoefficientSource::Oscillatory { spec: diagonal_spec(), eps: 0.5 },
        Shape::Square,
        32,
        Arc::new(|_| 0.0),
        g.clone(),
    );
    let u = solve_dirichlet(&p, &SolverOptions::default()).unwrap().u;
    let mesh = u.mesh().clone();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in 0..mesh.num_nodes() {
        if mesh.node_kind(v) == NodeKind::Boundary {
            lo = lo.min(u.values()[v]);
            hi = hi.max(u.values()[v]);
        }
    }
    for v in 0..mesh.num_nodes() {
        assert!(u.values()[v] >= lo - 1e-9 && u.values()[v] <= hi + 1e-9);
    }
}

#[test]
fn solution_is_affine_in_the_data() {
    let coef = CoefficientSource::Oscillatory {
        spec: Arc::new(builtin_family("trig_general", &[]).unwrap()),
        eps: 0.5,
    };
    let solve = |f: ScalarFn, g: ScalarFn| {
        solve_dirichlet(&problem(coef.clone(), Shape::Square, 32, f, g), &SolverOptions::default())
            .unwrap()
            .u
    };
    let both = solve(Arc::new(|x| 1.0 + x[0]), Arc::new(|x| x[0] - x[1]));
    let load_only = solve(Arc::new(|x| 1.0 + x[0]), Arc::new(|_| 0.0));
    let data_only = solve(Arc::new(|_| 0.0), Arc::new(|x| x[0] - x[1]));
    let sum = load_only.zip_map(&data_only, |a, b| a + b);
    assert!(max_diff(&both, &sum) < 1e-8);
}

#[test]
fn swap_symmetric_data_give_a_swap_symmetric_solution() {
    let p = problem(
        CoefficientSource::Constant(Mat::identity(2)),
        Shape::Square,
        24,
        Arc::new(|x| 1.0 + x[0] * x[1]),
        Arc::new(|x| x[0] * x[1]),
    );
    let u = solve_dirichlet(&p, &SolverOptions::default()).unwrap().u;
    let mesh = u.mesh().clone();
    for i in 0..=24 {
        for j in 0..=24 {
            let (a, b) = (u.values()[mesh.node_index(i, j)], u.values()[mesh.node_index(j, i)]);
            assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn constant_one_dimensional_closed_form_is_the_parabola() {
    // -3 u'' = 1, u(0) = u(1) = 0.
    let p = problem(
        CoefficientSource::Constant(Mat::from_row_major(1, &[3.0])),
        UNIT,
        16,
        Arc::new(|_| 1.0),
        Arc::new(|_| 0.0),
    );
    let u = closed_form_1d(&p, 1).unwrap();
    let fe = solve_dirichlet(&p, &SolverOptions::default()).unwrap().u;
    for v in 0..=16 {
        let x = v as f64 / 16.0;
        assert!((u.values()[v] - x * (1.0 - x) / 6.0).abs() < 1e-14);
        // P1 nodal values are exact in 1-D for polynomial loads.
        assert!((fe.values()[v] - u.values()[v]).abs() < 1e-13);
    }
}

#[test]
fn unit_eps_is_an_ordinary_variable_coefficient_problem() {
    let spec = Arc::new(builtin_family("trig_product", &[2.0, 1.0, 2.0, 1.0]).unwrap());
    let p = |n| {
        problem(
            CoefficientSource::Oscillatory { spec: spec.clone(), eps: 1.0 },
            UNIT,
            n,
            Arc::new(|_| 1.0),
            Arc::new(|x| x[0]),
        )
    };
    let exact = closed_form_1d(&p(256), 4).unwrap();
    let fe = solve_dirichlet(&p(256), &SolverOptions::default()).unwrap().u;
    assert!(max_diff(&exact, &fe) < 1e-5);
}

#[test]
fn dimension_mismatch_is_reported() {
    let p = problem(
        CoefficientSource::Constant(Mat::identity(2)),
        UNIT,
        8,
        Arc::new(|_| 1.0),
        Arc::new(|_| 0.0),
    );
    assert!(matches!(solve_dirichlet(&p, &SolverOptions::default()), Err(Error::Dimension(_))));
}

#[test]
fn indefinite_constant_coefficient_is_rejected() {
    let p = problem(
        CoefficientSource::Constant(Mat::from_row_major(2, &[1.0, 0.0, 0.0, -1.0])),
        Shape::Square,
        8,
        Arc::new(|_| 1.0),
        Arc::new(|_| 0.0),
    );
    assert!(matches!(solve_dirichlet(&p, &SolverOptions::default()), Err(Error::Ellipticity { .. })));
}

#[test]
fn second_derivative_oracle_on_the_parabola() {
    // u = x (1 - x) / 2: |u''| = 1, |u'|^2 integrates to 1/12.
    let p = problem(
        CoefficientSource::Constant(Mat::identity(1)),
        UNIT,
        64,
        Arc::new(|_| 1.0),
        Arc::new(|_| 0.0),
    );
    let u = closed_form_1d(&p, 1).unwrap();
    let r = h2_oracle(&u, &p.load);
    assert!((r.grad_norm - (1.0f64 / 12.0).sqrt()).abs() < 1e-3);
    // One cell of weight h per interior node: 63 of 64 cells.
    assert!((r.hess_norm - (63.0 / 64.0f64).sqrt()).abs() < 1e-10, "{}", r.hess_norm);
}

#[test]
fn dumps_round_trip_a_disk_solution() {
    let p = problem(
        CoefficientSource::Constant(Mat::identity(2)),
        Shape::Ball { center: [0.5, 0.5], radius: 0.5 },
        20,
        Arc::new(|_| 1.0),
        Arc::new(|_| 0.0),
    );
    let u = solve_dirichlet(&p, &SolverOptions::default()).unwrap().u;
    let dir = tempfile::tempdir().unwrap();
    for (name, fmt) in [("u.bin", DumpFormat::Binary), ("u.csv", DumpFormat::Csv)] {
        let path = dir.path().join(name);
        write_grid_function(&path, &u, fmt).unwrap();
        let back = read_grid_function(&path).unwrap();
        assert!(back.mesh().same_as(u.mesh()));
        assert_eq!(back.values(), u.values());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn affine_data_are_reproduced_for_any_constant_coefficient(
        a in 1.0..3.0f64, b in -0.8..0.8f64, c in -0.8..0.8f64, d in 1.0..3.0f64,
        p0 in -2.0..2.0f64, p1 in -2.0..2.0f64, p2 in -2.0..2.0f64,
    ) {
        let g: ScalarFn = Arc::new(move |x| p0 + p1 * x[0] + p2 * x[1]);
        let pr = problem(CoefficientSource::Constant(Mat::from_row_major(2, &[a, b, c, d])), Shape::Square, 12, Arc::new(|_| 0.0), g.clone());
        let u = solve_dirichlet(&pr, &SolverOptions::default()).unwrap().u;
        for v in 0..u.mesh().num_nodes() {
            prop_assert!((u.values()[v] - g(u.mesh().point(v))).abs() < 1e-8);
        }
    }
}
