//! Norms and fits applied to stream data.

use crate::error::{Error, Result};
use crate::flow::ShearFlow;
use crate::grid::{gradient, l2_norm};
use crate::singularity::least_squares;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NormReport {
    pub n: usize,
    pub k: f64,
    pub value: f64,
    /// `|k|^{n - a} |d^a h|` for `a = 0..=n`.
    pub contributions: Vec<f64>,
}

/// `sum_a |k|^{n-a} |d^a h|_{L^2}` on a uniform grid of spacing `dx`.
///
/// Derivatives are repeated second-order differences. If the top derivative
/// computed on the full grid and on every other node disagree by more than
/// half its size, the data is too rough for order `n` and an error is
/// returned.
pub fn weighted_norm(h: &[Complex64], n: usize, k: f64, dx: f64) -> Result<NormReport> {
    if h.len() < 2 * n + 3 {
        return Err(Error::InsufficientData(format!("{} samples cannot support {} derivatives", h.len(), n)));
    }
    let mut d = h.to_vec();
    let mut contributions = Vec::with_capacity(n + 1);
    for a in 0..=n {
        if a > 0 {
            d = gradient(&d, dx);
        }
        contributions.push(k.abs().powi((n - a) as i32) * l2_norm(&d, dx));
    }
    if n > 0 {
        let coarse: Vec<Complex64> = h.iter().step_by(2).cloned().collect();
        let mut dc = coarse;
        for _ in 0..n {
            dc = gradient(&dc, 2.0 * dx);
        }
        let fine_top = contributions[n];
        let coarse_top = l2_norm(&dc, 2.0 * dx);
        let roughness = (fine_top - coarse_top).abs() / fine_top.max(1e-300);
        if fine_top > 1e-300 && roughness > 0.5 {
            return Err(Error::Roughness { order: n, roughness });
        }
    }
    Ok(NormReport { n, k, value: contributions.iter().sum(), contributions })
}

/// Spectral `H^r` norm of compactly supported samples, periodised after
/// zero-padding by `pad`.
pub fn sobolev_norm_spectral(h: &[Complex64], dx: f64, r: f64, pad: usize) -> f64 {
    let m = h.len() * pad.max(2);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    buf[..h.len()].copy_from_slice(h);
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let dxi = 2.0 * std::f64::consts::PI / (m as f64 * dx);
    let mut s = 0.0;
    for (j, c) in buf.iter().enumerate() {
        let jj = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
        let xi = jj * dxi;
        s += (1.0 + xi * xi).powf(r) * (c * dx).norm_sqr();
    }
    (s * dxi / (2.0 * std::f64::consts::PI)).sqrt()
}

/// `|h|_{H^r} / (|k|^{r-1} |h|_{H^1_k})`.
pub fn interpolation_constant(h: &[Complex64], dx: f64, r: f64, k: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!("r must lie in [0, 1], got {r}")));
    }
    let h1k = weighted_norm(h, 1, k, dx)?.value;
    if h1k == 0.0 {
        return Ok(0.0);
    }
    Ok(sobolev_norm_spectral(h, dx, r, 4) / (k.abs().powf(r - 1.0) * h1k))
}

/// Options of the windowed carrier fits.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FitOptions {
    pub min_times: usize,
    /// Required `k * window length * smallest phase gap`.
    pub min_phase_spread: f64,
    pub max_condition: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { min_times: 9, min_phase_spread: 2.0 * std::f64::consts::PI / 3.0, max_condition: 1e6 }
    }
}

/// Three-carrier interior fit on one time window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProfileDecomposition {
    pub t_mid: f64,
    pub y: Vec<f64>,
    pub alpha_in: Vec<Complex64>,
    pub beta_in: Vec<Complex64>,
    pub gamma_in: Vec<Complex64>,
    /// `|data - three-carrier fit| / |data|` over the window.
    pub residual: f64,
    /// Same for the single carrier `e^{-ikb(y)t}`.
    pub single_residual: f64,
    pub condition: f64,
}

fn carrier(k: f64, c: f64, t: f64) -> Complex64 {
    Complex64::new(0.0, -k * c * t).exp()
}

fn check_window(times: &[f64], k: f64, gap: f64, opts: &FitOptions) -> Result<()> {
    if times.len() < opts.min_times {
        return Err(Error::InsufficientData(format!("{} times in window, need {}", times.len(), opts.min_times)));
    }
    let span = times[times.len() - 1] - times[0];
    if k.abs() * span * gap < opts.min_phase_spread {
        return Err(Error::IllConditioned {
            condition: k.abs() * span * gap,
            cap: opts.min_phase_spread,
            context: "phase spread of the time window".into(),
        });
    }
    Ok(())
}

/// Fits `k^2 t^2 psi(t, y) = alpha e^{-ikb(y)t} + beta e^{-ikb(0)t} + gamma e^{-ikb(1)t}`
/// at each `y` of `ys` (indices into the channel rows of `psi`), with
/// constant profiles over the window.
///
/// `psi[m]` holds the samples at `times[m]` on the rows `ys`.
pub fn extract_interior_profiles(
    times: &[f64],
    psi: &[Vec<Complex64>],
    ys: &[f64],
    k: f64,
    flow: &ShearFlow,
    opts: &FitOptions,
) -> Result<ProfileDecomposition> {
    let (b0, b1) = (flow.b_at(0.0), flow.b_at(1.0));
    let gap = ys
        .iter()
        .map(|&y| {
            let b = flow.b_at(y);
            (b - b0).abs().min((b - b1).abs())
        })
        .fold(b1 - b0, f64::min);
    if gap <= 1e-8 {
        return Err(Error::InvalidParameter("interior rows touch the walls".into()));
    }
    check_window(times, k, gap, opts)?;
    let mut out = ProfileDecomposition {
        t_mid: 0.5 * (times[0] + times[times.len() - 1]),
        y: ys.to_vec(),
        alpha_in: Vec::new(),
        beta_in: Vec::new(),
        gamma_in: Vec::new(),
        residual: 0.0,
        single_residual: 0.0,
        condition: 0.0,
    };
    let (mut r3, mut r1, mut dn) = (0.0, 0.0, 0.0);
    for (iy, &y) in ys.iter().enumerate() {
        let by = flow.b_at(y);
        let data: Vec<Complex64> = times.iter().zip(psi).map(|(&t, p)| p[iy] * (k * k * t * t)).collect();
        let a = DMatrix::from_fn(times.len(), 3, |m, c| {
            let cc = [by, b0, b1][c];
            carrier(k, cc, times[m])
        });
        let (x, res, cond) = least_squares(&a, &data)?;
        if cond > opts.max_condition {
            return Err(Error::IllConditioned { condition: cond, cap: opts.max_condition, context: format!("interior fit at y = {y}") });
        }
        let a1 = a.columns(0, 1).into_owned();
        let (_, res1, _) = least_squares(&a1, &data)?;
        out.alpha_in.push(x[0]);
        out.beta_in.push(x[1]);
        out.gamma_in.push(x[2]);
        out.condition = out.condition.max(cond);
        r3 += res * res;
        r1 += res1 * res1;
        dn += data.iter().map(|d| d.norm_sqr()).sum::<f64>();
    }
    let dn = dn.sqrt().max(1e-300);
    out.residual = r3.sqrt() / dn;
    out.single_residual = r1.sqrt() / dn;
    Ok(out)
}

/// Sliding windows of `len` samples with stride `len / 2`.
pub fn sliding_windows(count: usize, len: usize) -> Vec<std::ops::Range<usize>> {
    let stride = (len / 2).max(1);
    let mut out = Vec::new();
    let mut s = 0;
    while s + len <= count {
        out.push(s..s + len);
        s += stride;
    }
    out
}

/// Two-carrier boundary expansion near `y = 0`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryFit {
    pub order: usize,
    pub y: Vec<f64>,
    /// `alpha_j(y)`, `j = 1..=order - 2`.
    pub alpha: Vec<Vec<Complex64>>,
    pub beta: Vec<Vec<Complex64>>,
    pub times: Vec<f64>,
    /// `|psi - expansion / (k t)^2|` over the rows, per time.
    pub remainder: Vec<f64>,
    pub condition: f64,
}

impl BoundaryFit {
    /// Largest `|beta_j|` over the rows.
    pub fn beta_amplitude(&self, j: usize) -> f64 {
        self.beta[j - 1].iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn alpha_amplitude(&self, j: usize) -> f64 {
        self.alpha[j - 1].iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Fits `k^2 t^2 psi = sum_j [alpha_j e^{-ikb(y)t} + beta_j e^{-ikb(0)t}] / (kt)^{j-1}`
/// with `j = 1..=order - 2 + extra`, coefficients constant in time. The
/// remainder keeps only orders `j <= order - 2`; the `extra` orders absorb
/// the next terms so that they do not bias the kept ones.
pub fn boundary_expansion_fit(
    times: &[f64],
    psi: &[Vec<Complex64>],
    ys: &[f64],
    k: f64,
    flow: &ShearFlow,
    order: usize,
    extra: usize,
) -> Result<BoundaryFit> {
    if order < 3 {
        return Err(Error::InvalidParameter("expansion order must be at least 3".into()));
    }
    if times.len() < 8 || times[times.len() - 1] < 10.0 * times[0] {
        return Err(Error::InsufficientData("boundary fit needs at least 8 times spanning a decade".into()));
    }
    let kept = order - 2;
    let total = kept + extra;
    let b0 = flow.b_at(0.0);
    let mut alpha = vec![Vec::new(); kept];
    let mut beta = vec![Vec::new(); kept];
    let mut rem2 = vec![0.0; times.len()];
    let mut cond_max = 0.0f64;
    for (iy, &y) in ys.iter().enumerate() {
        let by = flow.b_at(y);
        let data: Vec<Complex64> = times.iter().zip(psi).map(|(&t, p)| p[iy] * (k * k * t * t)).collect();
        let a = DMatrix::from_fn(times.len(), 2 * total, |m, c| {
            let t = times[m];
            let j = c / 2;
            let cc = if c % 2 == 0 { by } else { b0 };
            carrier(k, cc, t) / (k * t).powi(j as i32)
        });
        let (x, _, cond) = least_squares(&a, &data)?;
        cond_max = cond_max.max(cond);
        for j in 0..kept {
            alpha[j].push(x[2 * j]);
            beta[j].push(x[2 * j + 1]);
        }
        for (m, &t) in times.iter().enumerate() {
            let mut model = Complex64::new(0.0, 0.0);
            for c in 0..2 * kept {
                model += a[(m, c)] * x[c];
            }
            rem2[m] += ((data[m] - model) / (k * k * t * t)).norm_sqr();
        }
    }
    Ok(BoundaryFit {
        order,
        y: ys.to_vec(),
        alpha,
        beta,
        times: times.to_vec(),
        remainder: rem2.into_iter().map(f64::sqrt).collect(),
        condition: cond_max,
    })
}

/// Power `p` in `|c(t)| ~ C (1 + log^p <t>)`, fitted by regressing
/// `log|c|` on `log(1 + log <t>)`.
pub fn log_growth_power(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() < 3 || values.iter().any(|&v| v <= 0.0) {
        return Err(Error::InsufficientData("log-growth fit needs three positive values".into()));
    }
    let xs: Vec<f64> = times.iter().map(|&t| (1.0 + (1.0 + t * t).sqrt().ln()).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    Ok(linear_fit(&xs, &ys).0)
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    (slope, icpt, if n > 2.0 { (sse / (n - 2.0) / sxx).sqrt() } else { 0.0 })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence interval on the slope.
    pub ci: (f64, f64),
}

/// Log-log regression slope of `values` against `times`.
pub fn decay_exponent(times: &[f64], values: &[f64]) -> Result<DecayFit> {
    if times.len() != values.len() || times.len() < 8 {
        return Err(Error::InsufficientData("decay fit needs at least 8 points".into()));
    }
    if values.iter().chain(times).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidParameter("decay fit needs positive times and values".into()));
    }
    let (lo, hi) = times.iter().fold((f64::MAX, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    if hi < 10.0 * lo * (1.0 - 1e-12) {
        return Err(Error::InsufficientData("decay fit needs a decade of times".into()));
    }
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let (slope, intercept, se) = linear_fit(&xs, &ys);
    let dist = StudentsT::new(0.0, 1.0, (xs.len() - 2) as f64).expect("valid degrees of freedom");
    let q = dist.inverse_cdf(0.975);
    Ok(DecayFit { slope, intercept, ci: (slope - q * se, slope + q * se) })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FourierLogReport {
    pub m: u32,
    pub epsilon: f64,
    /// `sup |h^(xi)| <xi> / (1 + log^{m-1} <xi>)`.
    pub sup_ratio: f64,
    pub xi_at_sup: f64,
    /// `|h^|` at the top of the resolved band relative to its peak.
    pub tail_level: f64,
}

/// Bound check for the transform of `h = f log^m(x + i eps)`.
///
/// `f` is sampled at `x0 + j dx`. The sup runs over `|xi|` up to half the
/// grid Nyquist frequency; the transform beyond that must have decayed below
/// `alias_tol` of its peak or the check fails.
pub fn fourier_log_check(f: &[Complex64], x0: f64, dx: f64, m: u32, epsilon: f64, pad: usize) -> Result<FourierLogReport> {
    if !(1..=3).contains(&m) {
        return Err(Error::InvalidParameter("log power must be 1, 2 or 3".into()));
    }
    if pad < 8 {
        return Err(Error::InvalidParameter("zero padding factor must be at least 8".into()));
    }
    let n = f.len();
    let len = n * pad;
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for j in 0..n {
        let x = x0 + j as f64 * dx;
        buf[j] = f[j] * Complex64::new(x, epsilon).ln().powu(m);
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let dxi = 2.0 * std::f64::consts::PI / (len as f64 * dx);
    let nyq = std::f64::consts::PI / dx;
    let (mut sup, mut at, mut peak, mut tail) = (0.0f64, 0.0, 0.0f64, 0.0f64);
    for (j, c) in buf.iter().enumerate() {
        let jj = if j <= len / 2 { j as f64 } else { j as f64 - len as f64 };
        let xi = jj * dxi;
        let mag = (c * dx).norm();
        peak = peak.max(mag);
        if xi.abs() >= 0.9 * nyq {
            tail = tail.max(mag);
        }
        if xi.abs() <= 0.5 * nyq {
            let br = (1.0 + xi * xi).sqrt();
            let r = mag * br / (1.0 + br.ln().powi(m as i32 - 1));
            if r > sup {
                sup = r;
                at = xi;
            }
        }
    }
    let tail_level = if peak > 0.0 { tail / peak } else { 0.0 };
    if tail_level > 1e-3 {
        return Err(Error::Aliasing { level: tail_level });
    }
    Ok(FourierLogReport { m, epsilon, sup_ratio: sup, xi_at_sup: at, tail_level })
}

/// `k^2 t^2 |psi chi_in|_{L^2}` with trapezoid weights on the channel grid.
pub fn rescaled_interior_norm(psi: &[Complex64], chi_in: &[f64], k: f64, t: f64) -> f64 {
    let h = 1.0 / (psi.len() - 1) as f64;
    let v: Vec<Complex64> = psi.iter().zip(chi_in).map(|(p, c)| p * *c).collect();
    k * k * t * t * l2_norm(&v, h)
}
