use lindamp::density::{
    assemble_operator, assemble_rhs, epsilon_extrapolate, geometric_ladder, lap_sigma_min, solve_boundary_response,
    solve_density, solve_density_at, AbsorptionContext, ExtrapolationOrder, LadderOptions, RungOperator, Sign,
    SolveGrid,
};
use lindamp::flow::{build_cutoffs, build_flow, build_vorticity, CutoffSet, FlowSpec, Profile, ShearFlow, VorticitySpec};
use lindamp::green::extended_kernel;
use lindamp::grid::UniformGrid;
use lindamp::linalg::{H1kGram, ShiftedHessenberg};
use lindamp::Error;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn setup(spec: FlowSpec, k: i32) -> (ShearFlow, CutoffSet) {
    let fl = build_flow(&spec, &UniformGrid::extended(2048)).unwrap();
    let cut = build_cutoffs(&fl, k, 0.05).unwrap();
    (fl, cut)
}

fn perturbed() -> FlowSpec {
    FlowSpec::PerturbedCouette { amplitude: 0.05, center: 0.5, width: 1.0 }
}

fn gaussian() -> VorticitySpec {
    VorticitySpec::new(Profile::Gaussian { center: 0.5, width: 0.2 })
}

/// `I + G diag(weight b'' / (b - w + i s eps))` assembled entry by entry.
fn dense_system(fl: &ShearFlow, cut: &CutoffSet, grid: &SolveGrid, k: f64, w: f64, eps: f64, s: f64) -> DMatrix<Complex64> {
    let n = grid.len();
    DMatrix::from_fn(n, n, |i, j| {
        let y = grid.y[j];
        let d = c(grid.weights[j] * fl.d2b_at(y), 0.0) / c(fl.b_at(y) - w, s * eps);
        let id = if i == j { 1.0 } else { 0.0 };
        c(id, 0.0) + d * extended_kernel(k, grid.y[i], y, cut)
    })
}

fn dense_rhs(fl: &ShearFlow, cut: &CutoffSet, grid: &SolveGrid, k: f64, om: &[Complex64], w: f64, eps: f64, s: f64) -> DVector<Complex64> {
    let n = grid.len();
    DVector::from_fn(n, |i, _| {
        (0..n)
            .map(|j| {
                let y = grid.y[j];
                om[j] * grid.weights[j] * extended_kernel(k, grid.y[i], y, cut) / c(fl.b_at(y) - w, s * eps)
            })
            .sum()
    })
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn density_matches_a_dense_direct_solve() {
    let (fl, cut) = setup(perturbed(), 1);
    let grid = SolveGrid::new(64, cut.margin());
    let vort = build_vorticity(&gaussian(), &fl, 1).unwrap();
    let ws = [0.2, 0.5, 0.77];
    for sign in [Sign::Plus, Sign::Minus] {
        let field = solve_density_at(1, sign, 0.1, &grid, &ws, &vort, &fl, &cut).unwrap();
        let om = vort.sample(&grid.y);
        for (j, &w) in ws.iter().enumerate() {
            let a = dense_system(&fl, &cut, &grid, 1.0, w, 0.1, sign.value());
            let r = dense_rhs(&fl, &cut, &grid, 1.0, &om, w, 0.1, sign.value());
            let x = a.lu().solve(&r).unwrap();
            let d = max_diff(field.column(j), x.as_slice());
            assert!(d < 1e-10 * x.camax().max(1.0), "sign {sign:?} w {w}: {d}");
        }
        assert!(field.max_residual() < 1e-10);
    }
}

#[test]
fn assembled_pieces_match_the_dense_definition() {
    let (fl, cut) = setup(perturbed(), 2);
    let grid = SolveGrid::new(64, cut.margin());
    let vort = build_vorticity(&gaussian(), &fl, 2).unwrap();
    let m = assemble_operator(2, 0.1, Sign::Plus, 0.4, &grid, &fl, &cut).unwrap();
    let mut a = dense_system(&fl, &cut, &grid, 2.0, 0.4, 0.1, 1.0);
    for i in 0..a.nrows() {
        a[(i, i)] -= c(1.0, 0.0);
    }
    assert!((m - a).camax() < 1e-13);
    let r = assemble_rhs(2, 0.1, Sign::Plus, 0.4, &grid, &vort, &fl, &cut).unwrap();
    let d = dense_rhs(&fl, &cut, &grid, 2.0, &vort.sample(&grid.y), 0.4, 0.1, 1.0);
    assert!(max_diff(&r, d.as_slice()) < 1e-12);
}

#[test]
fn couette_density_is_the_right_hand_side() {
    let (fl, cut) = setup(FlowSpec::Couette, 1);
    let grid = SolveGrid::new(64, cut.margin());
    let vort = build_vorticity(&gaussian(), &fl, 1).unwrap();
    let f = solve_density_at(1, Sign::Minus, 0.1, &grid, &[0.3], &vort, &fl, &cut).unwrap();
    let r = assemble_rhs(1, 0.1, Sign::Minus, 0.3, &grid, &vort, &fl, &cut).unwrap();
    assert_eq!(f.column(0), &r[..]);
    assert_eq!(lap_sigma_min(1, 0.1, Sign::Plus, 0.3, &grid, &fl, &cut).unwrap(), 1.0);
}

#[test]
fn adjoint_solve_matches_dense_conjugate_transpose() {
    let (fl, cut) = setup(FlowSpec::CompensatedBump { amplitude: 0.5 }, 1);
    let grid = SolveGrid::new(64, cut.margin());
    let op = RungOperator::new(1, &grid, &fl, &cut);
    let (w, eps) = (0.45, 0.08);
    let mut f = op.factor_column(w, eps, Sign::Minus).unwrap();
    let a = dense_system(&fl, &cut, &grid, 1.0, w, eps, -1.0);
    let n = grid.len();
    let r: Vec<Complex64> = (0..n).map(|i| c((0.3 * i as f64).sin(), (0.7 * i as f64).cos())).collect();
    let fwd = f.solve(&r);
    let want = a.clone().lu().solve(&DVector::from_column_slice(&r)).unwrap();
    assert!(max_diff(&fwd, want.as_slice()) < 1e-10);
    let adj = f.solve_adjoint(&r).unwrap();
    let want = a.adjoint().lu().solve(&DVector::from_column_slice(&r)).unwrap();
    assert!(max_diff(&adj, want.as_slice()) < 1e-10);
    assert!(max_diff(&f.apply(&r), (&a * DVector::from_column_slice(&r)).as_slice()) < 1e-12);
}

#[test]
fn sigma_min_matches_dense_svd_in_the_h1k_metric() {
    let (fl, cut) = setup(perturbed(), 1);
    let grid = SolveGrid::new(64, cut.margin());
    let (w, eps) = (0.6, 0.1);
    let got = lap_sigma_min(1, eps, Sign::Plus, w, &grid, &fl, &cut).unwrap();
    let a = dense_system(&fl, &cut, &grid, 1.0, w, eps, 1.0);
    let gram = H1kGram::new(grid.len(), grid.h, 1.0).dense();
    let r = gram.cholesky().unwrap().l().transpose().map(|x| c(x, 0.0));
    let rinv = r.clone().try_inverse().unwrap();
    let s = (&r * a * rinv).singular_values();
    let want = s.iter().cloned().fold(f64::MAX, f64::min);
    assert!((got - want).abs() < 1e-3 * want, "{got} vs {want}");
}

#[test]
fn boundary_response_solves_its_system() {
    let (fl, cut) = setup(perturbed(), 1);
    let grid = SolveGrid::new(64, cut.margin());
    let r = solve_boundary_response(1, Sign::Plus, 0.1, &grid, &[0.1, 0.9], &fl, &cut, 0).unwrap();
    assert!(r.residuals.iter().all(|&x| x < 1e-10));
    assert!(solve_boundary_response(1, Sign::Plus, 0.1, &grid, &[0.1], &fl, &cut, 2).is_err());
}

#[test]
fn resolution_and_ladder_guards() {
    let (fl, cut) = setup(perturbed(), 1);
    let grid = SolveGrid::new(64, cut.margin());
    let err = assemble_operator(1, 0.01, Sign::Plus, 0.4, &grid, &fl, &cut).unwrap_err();
    assert!(matches!(err, Error::Resolution { .. }), "{err}");
    for ladder in [vec![], vec![0.1, 0.2, 0.05], vec![0.1, -0.05, -0.1]] {
        let o = LadderOptions { ladder, ..Default::default() };
        assert!(AbsorptionContext::new(&fl, &cut, 1, Sign::Plus, &o).is_err());
    }
    let o = LadderOptions { kappa: 2.0, ..Default::default() };
    assert!(AbsorptionContext::new(&fl, &cut, 1, Sign::Plus, &o).is_err());
}

#[test]
fn ladder_grids_resolve_every_rung() {
    let (fl, cut) = setup(perturbed(), 1);
    let ctx = AbsorptionContext::new(&fl, &cut, 1, Sign::Minus, &LadderOptions::default()).unwrap();
    for r in &ctx.rungs {
        assert_eq!(r.grid.n % ctx.base_n, 0);
        assert!(r.grid.dv_max(&fl) * ctx.kappa <= r.epsilon * (1.0 + 1e-9));
        assert!(r.w.spacing() * ctx.kappa <= r.epsilon * (1.0 + 1e-9));
    }
    assert_eq!(geometric_ladder(0.1, 0.5, 3), vec![0.1, 0.05, 0.025]);
}

#[test]
fn ladder_differences_shrink_at_a_fixed_column() {
    let (fl, cut) = setup(perturbed(), 1);
    let vort = build_vorticity(&gaussian(), &fl, 1).unwrap();
    let o = LadderOptions { ladder: vec![0.1, 0.05, 0.025], ..Default::default() };
    let ctx = AbsorptionContext::new(&fl, &cut, 1, Sign::Plus, &o).unwrap();
    let fields = solve_density(&ctx, &vort, &fl, &cut).unwrap();
    // Value at y = 0.25 for w = b(0.5), read from each rung's nearest column.
    let w0 = fl.b_at(0.5);
    let vals: Vec<Complex64> = fields
        .iter()
        .map(|f| {
            let j = (0..f.w.len()).min_by(|&a, &b| (f.w[a] - w0).abs().total_cmp(&(f.w[b] - w0).abs())).unwrap();
            let i = f.grid.channel_index(f.grid.n / 4);
            assert!((f.w[j] - w0).abs() < 1e-2);
            f.theta[(i, j)]
        })
        .collect();
    assert!((vals[1] - vals[2]).norm() < (vals[0] - vals[1]).norm());
}

#[test]
fn extrapolation_guards() {
    let eps = [0.1, 0.05];
    let f = vec![vec![c(1.0, 0.0)]; 2];
    assert!(matches!(epsilon_extrapolate(&eps, &f, ExtrapolationOrder::default()), Err(Error::InsufficientData(_))));
    let eps = [0.1, 0.05, 0.025, 0.0125];
    let growing: Vec<Vec<Complex64>> = [0.0, 1.0, 3.0, 7.0].iter().map(|&x| vec![c(x, 0.0)]).collect();
    assert!(matches!(
        epsilon_extrapolate(&eps, &growing, ExtrapolationOrder::default()),
        Err(Error::NonCauchyLadder { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn extrapolation_is_exact_for_quadratics(a in -5.0f64..5.0, b in -5.0f64..5.0, q in -5.0f64..5.0, ib in -3.0f64..3.0) {
        let eps = geometric_ladder(0.1, 0.5, 5);
        let fields: Vec<Vec<Complex64>> =
            eps.iter().map(|&e| vec![c(a + b * e + q * e * e, ib * e), c(a, 0.0)]).collect();
        let ex = epsilon_extrapolate(&eps, &fields, ExtrapolationOrder::Polynomial(2)).unwrap();
        prop_assert!((ex.limit[0] - c(a, 0.0)).norm() < 1e-11 * (1.0 + a.abs() + b.abs() + q.abs()));
        prop_assert!((ex.limit[1] - c(a, 0.0)).norm() < 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn shifted_hessenberg_matches_dense_lu(seed in proptest::collection::vec(-1.0f64..1.0, 64), zr in -1.0f64..1.0, zi in 0.01f64..1.0) {
        let s = 8;
        let l = DMatrix::from_fn(s, s, |i, j| seed[i * s + j] + if i == j { 2.0 * i as f64 / s as f64 } else { 0.0 });
        let z = c(zr, zi);
        let sh = ShiftedHessenberg::new(l.clone());
        let f = sh.factor(z).unwrap();
        let rhs: Vec<Complex64> = (0..s).map(|i| c(seed[i], seed[63 - i])).collect();
        let a = l.map(|x| c(x, 0.0)) - DMatrix::from_diagonal_element(s, s, z);
        let b = DVector::from_column_slice(&rhs);
        let want = a.clone().lu().solve(&b).unwrap();
        let got = sh.solve_factored(&f, &rhs);
        let scale = want.camax().max(1.0);
        prop_assert!(max_diff(&got, want.as_slice()) < 1e-9 * scale);
        let want_t = a.transpose().lu().solve(&b).unwrap();
        let got_t = sh.solve_factored_transpose(&f, &rhs);
        prop_assert!(max_diff(&got_t, want_t.as_slice()) < 1e-9 * want_t.camax().max(1.0));
    }
}
