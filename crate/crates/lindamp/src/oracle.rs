//! Direct time integration of the linearized vorticity equation for a single
//! mode, with the elliptic solves it needs and the exact Couette solution.
//! Also hosts the embedded-eigenvalue scan of the discrete Rayleigh operator.
//!
//! Everything here is independent of the spectral-density route and serves
//! as ground truth for it.

use crate::error::{Error, Result};
use crate::flow::{ShearFlow, VorticityMode};
use crate::green::channel_kernel;
use crate::linalg::Tridiagonal;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Uniform channel grid `y_i = i / n`, `i = 0..=n`.
pub fn channel_grid(n: usize) -> Vec<f64> {
    (0..=n).map(|i| i as f64 / n as f64).collect()
}

/// Dirichlet solve of `(d^2/dy^2 - k^2) psi = omega` on the channel grid by
/// second-order finite differences. `omega` holds all `n + 1` nodes; the end
/// values of the result are exactly zero.
pub fn elliptic_solve(omega: &[Complex64], k: f64) -> Vec<Complex64> {
    EllipticSolver::new(omega.len() - 1, k).solve(omega)
}

/// Pre-factorised finite-difference elliptic solver.
#[derive(Clone, Debug)]
pub struct EllipticSolver {
    n: usize,
    factor: Tridiagonal,
}

impl EllipticSolver {
    pub fn new(n: usize, k: f64) -> Self {
        let h = 1.0 / n as f64;
        let m = n - 1;
        let off = vec![1.0 / (h * h); m];
        let diag = vec![-2.0 / (h * h) - k * k; m];
        Self { n, factor: Tridiagonal::new(&off, &diag, &off) }
    }

    pub fn solve(&self, omega: &[Complex64]) -> Vec<Complex64> {
        let inner = self.factor.solve(&omega[1..self.n]);
        let mut psi = Vec::with_capacity(self.n + 1);
        psi.push(Complex64::new(0.0, 0.0));
        psi.extend(inner);
        psi.push(Complex64::new(0.0, 0.0));
        psi
    }
}

/// Chebyshev collocation solve of the same problem; `omega` is evaluated at
/// the `n + 1` Gauss-Lobatto nodes mapped to `[0, 1]`, which are returned
/// along with the solution.
pub fn elliptic_solve_chebyshev(omega: impl Fn(f64) -> Complex64, k: f64, n: usize) -> (Vec<f64>, Vec<Complex64>) {
    let x: Vec<f64> = (0..=n).map(|j| (std::f64::consts::PI * j as f64 / n as f64).cos()).collect();
    let c = |i: usize| if i == 0 || i == n { 2.0 } else { 1.0 };
    let mut d = DMatrix::<f64>::zeros(n + 1, n + 1);
    for i in 0..=n {
        for j in 0..=n {
            if i != j {
                let s = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                d[(i, j)] = c(i) / c(j) * s / (x[i] - x[j]);
            }
        }
        // Negative-sum trick for the diagonal.
        let row: f64 = (0..=n).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -row;
    }
    // y = (1 - x) / 2, so d/dy = -2 d/dx.
    let d2 = &d * &d * 4.0;
    let ys: Vec<f64> = x.iter().map(|&xi| 0.5 * (1.0 - xi)).collect();
    let m = n - 1;
    let mut a = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            a[(i, j)] = Complex64::new(d2[(i + 1, j + 1)] - if i == j { k * k } else { 0.0 }, 0.0);
        }
    }
    let rhs = DVector::from_iterator(m, ys[1..n].iter().map(|&y| omega(y)));
    let sol = a.lu().solve(&rhs).expect("collocation matrix is nonsingular");
    let mut psi = vec![Complex64::new(0.0, 0.0); n + 1];
    for i in 0..m {
        psi[i + 1] = sol[i];
    }
    (ys, psi)
}

/// `int_0^1 G_k(y_i, z) omega(z) dz` by the trapezoid rule.
pub fn green_quadrature(omega: &[Complex64], k: f64) -> Vec<Complex64> {
    let n = omega.len() - 1;
    let ys = channel_grid(n);
    let w = crate::grid::trapezoid_weights(n + 1, 1.0 / n as f64);
    ys.iter()
        .map(|&y| ys.iter().zip(omega).zip(&w).map(|((&z, o), wt)| o * channel_kernel(k, y, z) * *wt).sum())
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvolutionState {
    pub t: f64,
    pub omega: Vec<Complex64>,
    pub psi: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    pub n: usize,
    /// Time step; `None` picks `0.025 / (|k| max|b|)`.
    pub dt: Option<f64>,
    /// Blow-up threshold on `|omega| / |omega0|`.
    pub growth_cap: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { n: 4096, dt: None, growth_cap: 10.0 }
    }
}

/// `max |b|` over the channel, at least 1e-12.
pub fn channel_speed(flow: &ShearFlow) -> f64 {
    (0..=1000).map(|i| flow.b_at(i as f64 / 1000.0).abs()).fold(1e-12, f64::max)
}

/// Largest step the guard admits.
pub fn dt_limit(flow: &ShearFlow, k: i32) -> f64 {
    0.1 / ((k as f64).abs() * channel_speed(flow))
}

/// Classical RK4 for `d omega/dt = -ik b omega + ik b'' psi`, with `psi`
/// refreshed at every stage. Returns one state per requested sample time
/// (sorted, nonnegative); the step is shortened so samples are hit exactly.
pub fn evolve_vorticity(
    initial: &VorticityMode,
    flow: &ShearFlow,
    k: i32,
    sample_times: &[f64],
    opts: &EvolveOptions,
) -> Result<Vec<EvolutionState>> {
    let limit = dt_limit(flow, k);
    let dt = opts.dt.unwrap_or(0.25 * limit);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::StepSize { dt, limit });
    }
    if sample_times.windows(2).any(|p| p[1] < p[0]) || sample_times.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidParameter("sample times must be sorted and nonnegative".into()));
    }
    let n = opts.n;
    let ys = channel_grid(n);
    let kf = k as f64;
    let b: Vec<f64> = ys.iter().map(|&y| flow.b_at(y)).collect();
    let d2b: Vec<f64> = ys.iter().map(|&y| flow.d2b_at(y)).collect();
    let solver = EllipticSolver::new(n, kf.abs());
    let ik = Complex64::new(0.0, kf);
    let rhs = |w: &[Complex64]| -> Vec<Complex64> {
        let psi = solver.solve(w);
        (0..=n).map(|i| -ik * b[i] * w[i] + ik * d2b[i] * psi[i]).collect()
    };
    let mut omega = initial.sample(&ys);
    let norm0 = crate::grid::l2_norm(&omega, 1.0 / n as f64);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(sample_times.len());
    for &ts in sample_times {
        let span = ts - t;
        let steps = (span / dt - 1e-9).ceil().max(0.0) as usize;
        let h = if steps > 0 { span / steps as f64 } else { 0.0 };
        for _ in 0..steps {
            let k1 = rhs(&omega);
            let s1: Vec<Complex64> = omega.iter().zip(&k1).map(|(w, d)| w + d * (0.5 * h)).collect();
            let k2 = rhs(&s1);
            let s2: Vec<Complex64> = omega.iter().zip(&k2).map(|(w, d)| w + d * (0.5 * h)).collect();
            let k3 = rhs(&s2);
            let s3: Vec<Complex64> = omega.iter().zip(&k3).map(|(w, d)| w + d * h).collect();
            let k4 = rhs(&s3);
            for i in 0..=n {
                omega[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        t = ts;
        let norm = crate::grid::l2_norm(&omega, 1.0 / n as f64);
        if norm0 > 0.0 && norm > opts.growth_cap * norm0 || !norm.is_finite() {
            return Err(Error::BlowUp { t, growth: norm / norm0 });
        }
        out.push(EvolutionState { t, psi: solver.solve(&omega), omega: omega.clone() });
    }
    Ok(out)
}

/// Exact Couette evolution `omega0(y) e^{-ikyt}` with its stream function.
pub fn couette_reference(initial: &VorticityMode, flow: &ShearFlow, k: i32, t: f64, n: usize) -> Result<EvolutionState> {
    if !flow.is_couette() {
        return Err(Error::NotCouette);
    }
    let ys = channel_grid(n);
    let omega: Vec<Complex64> = ys
        .iter()
        .map(|&y| initial.eval(y) * Complex64::new(0.0, -(k as f64) * y * t).exp())
        .collect();
    let psi = elliptic_solve(&omega, (k as f64).abs());
    Ok(EvolutionState { t, omega, psi })
}

/// Candidate embedded eigenvalue of the discrete Rayleigh operator.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EigenFlag {
    pub re: f64,
    pub im: f64,
    /// `N * sum |x_i|^4 / (sum |x_i|^2)^2`: order 1 for spread-out vectors,
    /// order `N` for vectors concentrated on a node.
    pub participation: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub sizes: Vec<usize>,
    pub band: (f64, f64),
    /// Flags at each size.
    pub flags: Vec<Vec<EigenFlag>>,
    /// Flags of the finest grid matched by a flag at the next coarser one.
    pub persistent: Vec<EigenFlag>,
    pub max_unstable_im: f64,
}

impl SpectrumReport {
    pub fn compliant(&self) -> bool {
        self.persistent.is_empty() && self.max_unstable_im <= 1e-6
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ScanOptions {
    pub im_tol: f64,
    pub participation_cap: f64,
    pub match_tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { im_tol: 1e-6, participation_cap: 10.0, match_tol: 1e-2 }
    }
}

/// Dense `L = diag(b) + diag(b'') G W` on the interior channel nodes.
pub fn rayleigh_matrix(flow: &ShearFlow, k: f64, n: usize) -> DMatrix<f64> {
    let h = 1.0 / n as f64;
    let ys: Vec<f64> = (1..n).map(|i| i as f64 * h).collect();
    let m = ys.len();
    DMatrix::from_fn(m, m, |i, j| {
        let (b, _, d2b) = flow.eval(ys[i]);
        let diag = if i == j { b } else { 0.0 };
        diag + d2b * channel_kernel(k, ys[i], ys[j]) * h
    })
}

fn flags_at(flow: &ShearFlow, k: f64, n: usize, band: (f64, f64), opts: &ScanOptions) -> (Vec<EigenFlag>, f64) {
    let l = rayleigh_matrix(flow, k, n);
    let m = l.nrows();
    let eig = l.clone().complex_eigenvalues();
    let mut flags = Vec::new();
    let mut max_im = 0.0f64;
    let lc = l.map(|x| Complex64::new(x, 0.0));
    for lam in eig.iter() {
        max_im = max_im.max(lam.im);
        if lam.im.abs() > opts.im_tol || lam.re < band.0 || lam.re > band.1 {
            continue;
        }
        // Eigenvector by two steps of shifted inverse iteration.
        let shift = Complex64::new(lam.re + 1e-10 * (1.0 + lam.re.abs()), 0.0);
        let mut a = lc.clone();
        for i in 0..m {
            a[(i, i)] -= shift;
        }
        let lu = a.lu();
        let mut x = DVector::from_fn(m, |i, _| Complex64::new(1.0 + (0.7 * i as f64).sin(), 0.0));
        for _ in 0..2 {
            if let Some(y) = lu.solve(&x) {
                let nrm = y.norm();
                x = y / Complex64::new(nrm, 0.0);
            }
        }
        let s2: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        let s4: f64 = x.iter().map(|z| z.norm_sqr().powi(2)).sum();
        let participation = m as f64 * s4 / (s2 * s2);
        if participation <= opts.participation_cap {
            flags.push(EigenFlag { re: lam.re, im: lam.im, participation });
        }
    }
    (flags, max_im)
}

/// Scans the discrete operator at each grid size and keeps the flags of the
/// finest size that reappear at the next coarser one.
pub fn embedded_eigenvalue_scan(flow: &ShearFlow, k: i32, sizes: &[usize], opts: &ScanOptions) -> Result<SpectrumReport> {
    if sizes.len() < 2 {
        return Err(Error::InvalidParameter("the scan needs at least two grid sizes".into()));
    }
    let band = (flow.b_at(0.0), flow.b_at(1.0));
    let kf = (k as f64).abs();
    let mut flags = Vec::new();
    let mut max_im = 0.0f64;
    for &n in sizes {
        let (f, im) = flags_at(flow, kf, n, band, opts);
        flags.push(f);
        max_im = max_im.max(im);
    }
    let fine = &flags[flags.len() - 1];
    let coarse = &flags[flags.len() - 2];
    let persistent = fine
        .iter()
        .filter(|f| coarse.iter().any(|c| (c.re - f.re).abs() <= opts.match_tol))
        .cloned()
        .collect();
    Ok(SpectrumReport { sizes: sizes.to_vec(), band, flags, persistent, max_unstable_im: max_im })
}
