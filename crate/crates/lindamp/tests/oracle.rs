use lindamp::flow::{build_flow, build_vorticity, FlowSpec, Profile, ShearFlow, VorticitySpec};
use lindamp::grid::UniformGrid;
use lindamp::oracle::{
    channel_grid, couette_reference, dt_limit, elliptic_solve, elliptic_solve_chebyshev, embedded_eigenvalue_scan,
    evolve_vorticity, green_quadrature, rayleigh_matrix, EvolveOptions, ScanOptions,
};
use lindamp::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn flow(spec: FlowSpec) -> ShearFlow {
    build_flow(&spec, &UniformGrid::extended(1024)).unwrap()
}

fn perturbed(a: f64, c: f64, w: f64) -> FlowSpec {
    FlowSpec::PerturbedCouette { amplitude: a, center: c, width: w }
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn elliptic_solve_recovers_a_sine_mode() {
    let k = 3.0;
    for n in [64, 128, 256] {
        let ys = channel_grid(n);
        let omega: Vec<Complex64> = ys.iter().map(|&y| Complex64::new(-(PI * PI + k * k) * (PI * y).sin(), 0.0)).collect();
        let psi = elliptic_solve(&omega, k);
        let exact: Vec<Complex64> = ys.iter().map(|&y| Complex64::new((PI * y).sin(), 0.0)).collect();
        let h = 1.0 / n as f64;
        // Leading error pi^4 h^2 / (12 (pi^2 + k^2)) ~ 0.43 h^2.
        assert!(max_diff(&psi, &exact) < 0.5 * h * h, "n = {n}");
        assert_eq!(psi[0], Complex64::new(0.0, 0.0));
        assert_eq!(psi[n], Complex64::new(0.0, 0.0));
    }
}

#[test]
fn three_elliptic_solvers_agree() {
    let k = 2.0;
    let om = |y: f64| Complex64::new((-(y - 0.4) * (y - 0.4) / 0.02).exp(), (6.0 * y).sin());
    let n = 1024;
    let ys = channel_grid(n);
    let omega: Vec<Complex64> = ys.iter().map(|&y| om(y)).collect();
    let fd = elliptic_solve(&omega, k);
    let gq = green_quadrature(&omega, k);
    // The Green's function inverts d^2 - k^2 up to sign.
    let gq: Vec<Complex64> = gq.into_iter().map(|z| -z).collect();
    assert!(max_diff(&fd, &gq) < 1e-6, "{}", max_diff(&fd, &gq));
    let (cy, cheb) = elliptic_solve_chebyshev(om, k, 48);
    for (y, p) in cy.iter().zip(&cheb) {
        let i = (y * n as f64).round() as usize;
        if ((i as f64 / n as f64) - y).abs() < 1e-12 {
            assert!((fd[i] - p).norm() < 1e-6);
        }
    }
    // Chebyshev against the dense FD at the collocation nodes, by interpolation.
    for (y, p) in cy.iter().zip(&cheb) {
        let x = y * n as f64;
        let i = (x.floor() as usize).min(n - 1);
        let f = x - i as f64;
        let lin = fd[i] * (1.0 - f) + fd[i + 1] * f;
        assert!((lin - p).norm() < 1e-5, "y = {y}");
    }
}

#[test]
fn time_stepper_matches_exact_couette_evolution() {
    let fl = flow(FlowSpec::Couette);
    let v = build_vorticity(&VorticitySpec::new(Profile::Gaussian { center: 0.5, width: 0.1 }), &fl, 1).unwrap();
    let times = [0.0, 2.0, 5.0];
    let opts = EvolveOptions { n: 512, ..EvolveOptions::default() };
    let states = evolve_vorticity(&v, &fl, 1, &times, &opts).unwrap();
    for s in &states {
        let exact = couette_reference(&v, &fl, 1, s.t, 512).unwrap();
        assert!(max_diff(&s.omega, &exact.omega) < 1e-8, "t = {}", s.t);
        assert!(max_diff(&s.psi, &exact.psi) < 1e-10);
    }
}

#[test]
fn evolution_guards() {
    let fl = flow(FlowSpec::Couette);
    let v = build_vorticity(&VorticitySpec::new(Profile::Constant { value: 1.0 }), &fl, 1).unwrap();
    let limit = dt_limit(&fl, 1);
    let big = EvolveOptions { n: 64, dt: Some(2.0 * limit), ..EvolveOptions::default() };
    assert!(matches!(evolve_vorticity(&v, &fl, 1, &[1.0], &big), Err(Error::StepSize { .. })));
    let small = EvolveOptions { n: 64, ..EvolveOptions::default() };
    assert!(matches!(evolve_vorticity(&v, &fl, 1, &[2.0, 1.0], &small), Err(Error::InvalidParameter(_))));
    let pf = flow(perturbed(0.05, 0.5, 1.0));
    assert!(matches!(couette_reference(&v, &pf, 1, 1.0, 64), Err(Error::NotCouette)));
}

#[test]
fn unstable_flow_blows_up() {
    let fl = flow(perturbed(0.3, 0.5, 0.35));
    let v = build_vorticity(&VorticitySpec::new(Profile::Gaussian { center: 0.5, width: 0.1 }), &fl, 1).unwrap();
    let opts = EvolveOptions { n: 256, growth_cap: 10.0, ..EvolveOptions::default() };
    let e = evolve_vorticity(&v, &fl, 1, &[50.0, 100.0, 150.0], &opts).unwrap_err();
    assert!(matches!(e, Error::BlowUp { .. }), "{e}");
}

#[test]
fn couette_rayleigh_operator_is_diagonal() {
    let fl = flow(FlowSpec::Couette);
    let l = rayleigh_matrix(&fl, 1.0, 32);
    for i in 0..l.nrows() {
        for j in 0..l.ncols() {
            let want = if i == j { (i + 1) as f64 / 32.0 } else { 0.0 };
            assert_eq!(l[(i, j)], want);
        }
    }
    let r = embedded_eigenvalue_scan(&fl, 1, &[32, 64], &ScanOptions::default()).unwrap();
    assert!(r.compliant());
    assert!(r.persistent.is_empty());
}

#[test]
fn scan_accepts_the_stable_perturbations() {
    for spec in [perturbed(0.05, 0.5, 1.0), perturbed(0.45, 0.5, 1.0)] {
        let r = embedded_eigenvalue_scan(&flow(spec.clone()), 1, &[64, 128], &ScanOptions::default()).unwrap();
        assert!(r.compliant(), "{spec:?}: {:?}", r.persistent);
    }
}

#[test]
fn scan_refuses_an_unstable_bump() {
    let r = embedded_eigenvalue_scan(&flow(perturbed(0.3, 0.5, 0.35)), 1, &[64, 128], &ScanOptions::default()).unwrap();
    assert!(!r.compliant());
    assert!(r.max_unstable_im > 1e-2, "{}", r.max_unstable_im);
    assert!(embedded_eigenvalue_scan(&flow(FlowSpec::Couette), 1, &[64], &ScanOptions::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// The solver inverts the second-difference operator exactly.
    #[test]
    fn elliptic_solve_inverts_the_stencil(k in 0.0f64..10.0, seed in 0u64..1000) {
        let n = 50;
        let h = 1.0 / n as f64;
        let omega: Vec<Complex64> = (0..=n)
            .map(|i| Complex64::new(((i as u64 * 7919 + seed) % 97) as f64 / 97.0 - 0.5, ((i as u64 * 31 + seed) % 13) as f64 / 13.0))
            .collect();
        let psi = elliptic_solve(&omega, k);
        for i in 1..n {
            let lap = (psi[i - 1] - psi[i] * 2.0 + psi[i + 1]) / (h * h) - psi[i] * (k * k);
            prop_assert!((lap - omega[i]).norm() < 1e-9 * (1.0 + omega[i].norm()));
        }
    }
}
