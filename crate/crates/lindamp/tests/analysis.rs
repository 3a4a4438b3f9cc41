use lindamp::analysis::{
    boundary_expansion_fit, decay_exponent, extract_interior_profiles, fourier_log_check, interpolation_constant,
    log_growth_power, rescaled_interior_norm, sliding_windows, sobolev_norm_spectral, weighted_norm, FitOptions,
};
use lindamp::flow::{build_flow, FlowSpec, ShearFlow};
use lindamp::grid::UniformGrid;
use lindamp::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn perturbed() -> ShearFlow {
    build_flow(&FlowSpec::PerturbedCouette { amplitude: 0.05, center: 0.5, width: 1.0 }, &UniformGrid::extended(1024)).unwrap()
}

fn carrier(k: f64, b: f64, t: f64) -> Complex64 {
    c(0.0, -k * b * t).exp()
}

#[test]
fn weighted_norm_of_a_sine() {
    let n = 4000;
    let dx = 1.0 / n as f64;
    let h: Vec<Complex64> = (0..=n).map(|i| c((2.0 * PI * i as f64 * dx).sin(), 0.0)).collect();
    let r = weighted_norm(&h, 2, 3.0, dx).unwrap();
    // |sin|, |d sin|, |d^2 sin| in L^2(0, 1) are 1, 2 pi, 4 pi^2 over sqrt 2.
    let s = 1.0 / 2f64.sqrt();
    let want = [9.0 * s, 3.0 * 2.0 * PI * s, 4.0 * PI * PI * s];
    for (got, w) in r.contributions.iter().zip(want) {
        assert!((got - w).abs() < 2e-3 * w, "{got} vs {w}");
    }
    assert!((r.value - want.iter().sum::<f64>()).abs() < 2e-3 * r.value);
}

#[test]
fn weighted_norm_rejects_rough_or_short_data() {
    let h: Vec<Complex64> = (0..401).map(|i| c(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect();
    assert!(matches!(weighted_norm(&h, 2, 1.0, 0.01), Err(Error::Roughness { .. })));
    assert!(matches!(weighted_norm(&h[..5], 2, 1.0, 0.01), Err(Error::InsufficientData(_))));
}

#[test]
fn sobolev_norms_of_a_gaussian() {
    let dx = 0.01;
    let h: Vec<Complex64> = (0..=400).map(|i| c((-((i as f64 * dx - 2.0) / 0.3).powi(2)).exp(), 0.0)).collect();
    // H^0 is the L^2 norm: sqrt(0.3 sqrt(pi / 2)).
    let l2 = (0.3 * (PI / 2.0).sqrt()).sqrt();
    assert!((sobolev_norm_spectral(&h, dx, 0.0, 4) - l2).abs() < 1e-8);
    let h1 = sobolev_norm_spectral(&h, dx, 1.0, 4);
    let h05 = sobolev_norm_spectral(&h, dx, 0.5, 4);
    assert!(l2 < h05 && h05 < h1);
    // Interpolation: |h|_{H^r} <= |h|^{1-r} |h|_{H^1}^r.
    assert!(h05 <= (l2 * h1).sqrt() * (1.0 + 1e-12));
    assert!(interpolation_constant(&h, dx, 0.5, 2.0).unwrap() < 2.0);
    assert!(interpolation_constant(&h, dx, 1.5, 2.0).is_err());
}

#[test]
fn interior_profiles_are_recovered_from_synthetic_data() {
    let fl = perturbed();
    let k = 1.0;
    let (b0, b1) = (fl.b_at(0.0), fl.b_at(1.0));
    let ys = [0.25, 0.5, 0.75];
    let alpha = |y: f64| c(1.0 + y, -y);
    let beta = |y: f64| c(0.3 * y, 0.1);
    let gamma = |y: f64| c(-0.2, y * y);
    let times: Vec<f64> = (0..61).map(|i| 60.0 + i as f64).collect();
    let psi: Vec<Vec<Complex64>> = times
        .iter()
        .map(|&t| {
            ys.iter()
                .map(|&y| {
                    (alpha(y) * carrier(k, fl.b_at(y), t) + beta(y) * carrier(k, b0, t) + gamma(y) * carrier(k, b1, t))
                        / (k * k * t * t)
                })
                .collect()
        })
        .collect();
    let d = extract_interior_profiles(&times, &psi, &ys, k, &fl, &FitOptions::default()).unwrap();
    for (i, &y) in ys.iter().enumerate() {
        assert!((d.alpha_in[i] - alpha(y)).norm() < 1e-9);
        assert!((d.beta_in[i] - beta(y)).norm() < 1e-9);
        assert!((d.gamma_in[i] - gamma(y)).norm() < 1e-9);
    }
    assert!(d.residual < 1e-10);
    assert!(d.single_residual > 0.1);
    assert_eq!(d.t_mid, 90.0);
}

#[test]
fn interior_fit_guards() {
    let fl = perturbed();
    let times: Vec<f64> = (0..5).map(|i| i as f64).collect();
    let psi = vec![vec![c(1.0, 0.0)]; 5];
    let e = extract_interior_profiles(&times, &psi, &[0.5], 1.0, &fl, &FitOptions::default()).unwrap_err();
    assert!(matches!(e, Error::InsufficientData(_)));
    let times: Vec<f64> = (0..20).map(|i| 1.0 + 0.01 * i as f64).collect();
    let psi = vec![vec![c(1.0, 0.0)]; 20];
    let e = extract_interior_profiles(&times, &psi, &[0.5], 1.0, &fl, &FitOptions::default()).unwrap_err();
    assert!(matches!(e, Error::IllConditioned { .. }));
    let e = extract_interior_profiles(&times, &psi, &[0.0], 1.0, &fl, &FitOptions::default()).unwrap_err();
    assert!(matches!(e, Error::InvalidParameter(_)));
}

#[test]
fn boundary_expansion_is_recovered_from_synthetic_data() {
    let fl = perturbed();
    let k = 1.0;
    let b0 = fl.b_at(0.0);
    let ys = [0.05, 0.1, 0.15];
    let times: Vec<f64> = (0..64).map(|i| 20.0 * 10f64.powf(i as f64 / 63.0)).collect();
    let coef = |j: usize, y: f64| (c(1.0 / j as f64, y), c(y * j as f64, -0.5));
    let psi: Vec<Vec<Complex64>> = times
        .iter()
        .map(|&t| {
            ys.iter()
                .map(|&y| {
                    let mut s = c(0.0, 0.0);
                    for j in 1..=3 {
                        let (a, b) = coef(j, y);
                        s += (a * carrier(k, fl.b_at(y), t) + b * carrier(k, b0, t)) / (k * t).powi(j as i32 - 1);
                    }
                    s / (k * k * t * t)
                })
                .collect()
        })
        .collect();
    let fit = boundary_expansion_fit(&times, &psi, &ys, k, &fl, 4, 1).unwrap();
    for j in 1..=2 {
        for (i, &y) in ys.iter().enumerate() {
            let (a, b) = coef(j, y);
            assert!((fit.alpha[j - 1][i] - a).norm() < 1e-6, "alpha_{j}");
            assert!((fit.beta[j - 1][i] - b).norm() < 1e-6, "beta_{j}");
        }
    }
    // Remainder is the third-order term only.
    for (m, &t) in times.iter().enumerate() {
        let third: f64 = ys
            .iter()
            .map(|&y| {
                let (a, b) = coef(3, y);
                ((a * carrier(k, fl.b_at(y), t) + b * carrier(k, b0, t)) / (k * t).powi(4)).norm_sqr()
            })
            .sum::<f64>()
            .sqrt();
        assert!((fit.remainder[m] - third).abs() < 1e-6 * third, "t = {t}");
    }
    assert!((fit.beta_amplitude(1) - c(0.15, -0.5).norm()).abs() < 1e-6);
    assert!(boundary_expansion_fit(&times[..6], &psi[..6], &ys, k, &fl, 4, 1).is_err());
    assert!(boundary_expansion_fit(&times, &psi, &ys, k, &fl, 2, 1).is_err());
}

#[test]
fn decay_fit_guards_and_interval() {
    let t: Vec<f64> = (0..8).map(|i| 1.0 + i as f64).collect();
    let v: Vec<f64> = t.iter().map(|x| x.powf(-2.0)).collect();
    assert!(decay_exponent(&t, &v).is_err());
    let t: Vec<f64> = (0..20).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
    let v: Vec<f64> = t.iter().enumerate().map(|(i, x)| x.powf(-2.0) * (1.0 + 0.05 * (i as f64).sin())).collect();
    let f = decay_exponent(&t, &v).unwrap();
    assert!(f.ci.0 < f.slope && f.slope < f.ci.1);
    assert!((f.slope + 2.0).abs() < 0.05, "{}", f.slope);
    let mut bad = v.clone();
    bad[3] = 0.0;
    assert!(decay_exponent(&t, &bad).is_err());
}

#[test]
fn log_growth_power_of_synthetic_data() {
    let t: Vec<f64> = (1..40).map(|i| i as f64 * 5.0).collect();
    let v: Vec<f64> = t.iter().map(|&x| (1.0 + (1.0 + x * x).sqrt().ln()).powi(2) * 3.0).collect();
    assert!((log_growth_power(&t, &v).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn fourier_log_check_behaviour() {
    let n = 1024;
    let dx = 2.0 / n as f64;
    let x0 = -1.0;
    let zero = vec![c(0.0, 0.0); n];
    let r = fourier_log_check(&zero, x0, dx, 1, 0.01, 8).unwrap();
    assert_eq!(r.sup_ratio, 0.0);
    assert_eq!(r.tail_level, 0.0);
    let bump: Vec<Complex64> = (0..n)
        .map(|j| {
            let x: f64 = x0 + j as f64 * dx;
            c(if x.abs() < 0.9 { (-1.0 / (1.0 - (x / 0.9).powi(2))).exp() } else { 0.0 }, 0.0)
        })
        .collect();
    let a = fourier_log_check(&bump, x0, dx, 1, 0.05, 8).unwrap();
    let b = fourier_log_check(&bump, x0, dx, 2, 0.05, 8).unwrap();
    assert!(a.sup_ratio.is_finite() && a.sup_ratio > 0.0);
    assert!(b.sup_ratio.is_finite());
    assert!(fourier_log_check(&bump, x0, dx, 0, 0.05, 8).is_err());
    assert!(fourier_log_check(&bump, x0, dx, 1, 0.05, 4).is_err());
    // Unresolved log singularity aliases.
    let e = fourier_log_check(&vec![c(1.0, 0.0); n], x0, dx, 1, 1e-6, 8).unwrap_err();
    assert!(matches!(e, Error::Aliasing { .. }), "{e}");
}

#[test]
fn rescaled_norm_of_a_constant() {
    let n = 100;
    let psi = vec![c(2.0, 0.0); n + 1];
    let chi = vec![1.0; n + 1];
    assert!((rescaled_interior_norm(&psi, &chi, 1.0, 3.0) - 18.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decay_exponent_recovers_power_laws(p in -6.0f64..0.0, a in 0.1f64..10.0, t0 in 1.0f64..50.0, n in 8usize..40) {
        let t: Vec<f64> = (0..n).map(|i| t0 * 20f64.powf(i as f64 / (n - 1) as f64)).collect();
        let v: Vec<f64> = t.iter().map(|x| a * x.powf(p)).collect();
        let f = decay_exponent(&t, &v).unwrap();
        prop_assert!((f.slope - p).abs() < 1e-9);
        prop_assert!((f.intercept - a.ln()).abs() < 1e-8);
        prop_assert!((f.ci.1 - f.ci.0).abs() < 1e-6);
    }

    #[test]
    fn sliding_windows_stay_in_range(count in 0usize..200, len in 1usize..50) {
        let w = sliding_windows(count, len);
        for r in &w {
            prop_assert_eq!(r.len(), len);
            prop_assert!(r.end <= count);
        }
        if count >= len {
            prop_assert!(!w.is_empty());
            prop_assert!(w[0].start == 0);
        }
    }
}
