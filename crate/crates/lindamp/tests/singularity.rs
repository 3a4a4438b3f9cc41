use lindamp::density::{solve_boundary_response, solve_density_at, Sign, SolveGrid};
use lindamp::flow::{build_cutoffs, build_flow, build_vorticity, FlowSpec, Profile, VorticitySpec};
use lindamp::grid::UniformGrid;
use lindamp::singularity::{
    analytic_boundary_coefficient_w, analytic_log_coefficient_v, compare_log_coefficient, fit_log_coefficient,
    vanishing_report, wall_trace, wall_trace_interpolated, FitWindow,
};
use lindamp::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn couette_log_coefficient_is_minus_the_vorticity() {
    let fl = build_flow(&FlowSpec::Couette, &UniformGrid::extended(1024)).unwrap();
    let cut = build_cutoffs(&fl, 1, 0.05).unwrap();
    let vort = build_vorticity(&VorticitySpec::new(Profile::Gaussian { center: 0.4, width: 0.2 }), &fl, 1).unwrap();
    let grid = SolveGrid::new(64, cut.margin());
    let f = solve_density_at(1, Sign::Plus, 0.1, &grid, &[0.3, 0.6], &vort, &fl, &cut).unwrap();
    let a = analytic_log_coefficient_v(&f, &vort, &fl);
    for (i, &y) in grid.y.iter().enumerate() {
        for j in 0..2 {
            assert!((a[(i, j)] + vort.eval(y)).norm() < 1e-14);
        }
    }
}

#[test]
fn couette_boundary_coefficient_follows_the_wall_vorticity() {
    let fl = build_flow(&FlowSpec::Couette, &UniformGrid::extended(1024)).unwrap();
    let cut = build_cutoffs(&fl, 1, 0.05).unwrap();
    let grid = SolveGrid::new(64, cut.margin());
    let ws = [0.2, 0.5];
    let on = VorticitySpec::new(Profile::Constant { value: 1.0 });
    let off = on.clone().vanishing(1, 0);
    let phi = solve_boundary_response(1, Sign::Minus, 0.1, &grid, &ws, &fl, &cut, 0).unwrap();
    for (spec, wall) in [(on, 1.0), (off, 0.0)] {
        let v = build_vorticity(&spec, &fl, 1).unwrap();
        let th = solve_density_at(1, Sign::Minus, 0.1, &grid, &ws, &v, &fl, &cut).unwrap();
        let d = analytic_boundary_coefficient_w(&th, &phi, &v, &fl).unwrap();
        // b'' = 0 and b' = 1 leave D0 = -omega0(0) Phi0.
        for i in 0..d.nrows() {
            for m in 0..ws.len() {
                assert!((d[(i, m)] + phi.phi[(i, m)] * wall).norm() < 1e-14);
            }
        }
    }
}

#[test]
fn wall_traces_agree() {
    let spec = FlowSpec::PerturbedCouette { amplitude: 0.05, center: 0.5, width: 1.0 };
    let fl = build_flow(&spec, &UniformGrid::extended(2048)).unwrap();
    let cut = build_cutoffs(&fl, 1, 0.05).unwrap();
    let v = build_vorticity(&VorticitySpec::new(Profile::Gaussian { center: 0.5, width: 0.3 }), &fl, 1).unwrap();
    let grid = SolveGrid::new(128, cut.margin());
    let f = solve_density_at(1, Sign::Plus, 0.05, &grid, &[0.2, 0.5, 0.8], &v, &fl, &cut).unwrap();
    for side in 0..2 {
        let a = wall_trace(&f, side);
        let b = wall_trace_interpolated(&f, &fl, side).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-12 * (1.0 + x.norm()));
        }
    }
}

#[test]
fn fitted_log_coefficient_tracks_the_analytic_one() {
    let spec = FlowSpec::PerturbedCouette { amplitude: 0.05, center: 0.5, width: 1.0 };
    let fl = build_flow(&spec, &UniformGrid::extended(2048)).unwrap();
    let cut = build_cutoffs(&fl, 1, 0.05).unwrap();
    let v = build_vorticity(&VorticitySpec::new(Profile::Gaussian { center: 0.5, width: 0.3 }), &fl, 1).unwrap();
    let eps = 0.0125;
    let grid = SolveGrid::new(320, cut.margin());
    let ws = [fl.b_at(0.4), fl.b_at(0.5), fl.b_at(0.6)];
    let f = solve_density_at(1, Sign::Plus, eps, &grid, &ws, &v, &fl, &cut).unwrap();
    for j in 0..ws.len() {
        let cmp = compare_log_coefficient(&f, &v, &fl, j, FitWindow::default()).unwrap();
        assert!(cmp.relative_error < 0.1, "column {j}: {cmp:?}");
    }
}

#[test]
fn narrow_windows_are_refused() {
    // Only six samples fall in 2 eps <= |v| <= 10 eps.
    let v: Vec<f64> = (0..21).map(|i| -0.3 + 0.03 * i as f64).collect();
    let d = vec![c(1.0, 0.0); v.len()];
    let e = fit_log_coefficient(&v, &d, 0.01, Sign::Plus, FitWindow::default()).unwrap_err();
    assert!(matches!(e, Error::InsufficientData(_)), "{e}");
}

#[test]
fn vanishing_report_ratios() {
    let a = DMatrix::from_element(2, 2, c(3.0, 4.0));
    let z = DMatrix::from_element(2, 2, c(0.0, 0.0));
    let r = vanishing_report(&a, &z, Some((2.0, 0.5)));
    assert_eq!(r.d0_reference, 5.0);
    assert_eq!(r.d0_ratio, f64::INFINITY);
    assert_eq!(r.beta1_ratio, Some(4.0));
    let r = vanishing_report(&z, &z, None);
    assert_eq!(r.d0_ratio, 1.0);
    assert_eq!(r.beta1_ratio, None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_fit_recovers_synthetic_data(
        c1r in -3.0f64..3.0, c1i in -3.0f64..3.0, c0r in -3.0f64..3.0, c2r in -30.0f64..30.0,
        eps in 1e-3f64..5e-2, plus in any::<bool>(),
    ) {
        let sign = if plus { Sign::Plus } else { Sign::Minus };
        let (c1, c0, c2) = (c(c1r, c1i), c(c0r, -c0r), c(c2r, 0.5));
        let v: Vec<f64> = (0..401).map(|i| -12.0 * eps + 24.0 * eps * i as f64 / 400.0).collect();
        let data: Vec<Complex64> =
            v.iter().map(|&x| c1 * c(x, sign.value() * eps).ln() + c0 + c2 * x).collect();
        let fit = fit_log_coefficient(&v, &data, eps, sign, FitWindow::default()).unwrap();
        prop_assert!((fit.c1 - c1).norm() < 1e-9 * (1.0 + c1.norm()));
        prop_assert!((fit.c0 - c0).norm() < 1e-8 * (1.0 + c0.norm()));
        prop_assert!((fit.c2 - c2).norm() < 1e-6 * (1.0 + c2.norm()));
        prop_assert!(fit.residual < 1e-10);
    }
}
