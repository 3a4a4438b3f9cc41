//! Green's function of `k^2 - d^2/dy^2` on the channel with Dirichlet ends,
//! its whole-line extension and the free / boundary split.
//!
//! Everything here is evaluated from closed forms. The extension reads
//!
//! ```text
//! G(y, z) = Psi_k(y) / (2k) [ e^{-k|z-y|}
//!                            - sinh(k(1-y))/sinh(k) e^{-k|z|}
//!                            - sinh(k y)/sinh(k)    e^{-k|z-1|} ]
//! ```
//!
//! and the three bracketed terms are the free, boundary-0 and boundary-1
//! parts. For `y` in `[0, 1]` the bracket vanishes whenever `z` lies outside
//! `[0, 1]`, so the extension is exactly the zero extension of the channel
//! kernel there.

use crate::flow::{CutoffSet, ShearFlow};
use crate::error::Result;
use nalgebra::DMatrix;

/// `sinh(k a) / sinh(k)` without overflow.
pub fn sinh_ratio(k: f64, a: f64) -> f64 {
    if k < 30.0 {
        return (k * a).sinh() / k.sinh();
    }
    let s = a.signum();
    let x = k * a.abs();
    s * (x - k).exp() * (-(-2.0 * x).exp_m1()) / (-(-2.0 * k).exp_m1())
}

/// Channel Green's function on `[0, 1]^2` for wavenumber `k > 0`.
pub fn channel_kernel(k: f64, y: f64, z: f64) -> f64 {
    let (lo, hi) = if y <= z { (y, z) } else { (z, y) };
    if k < 30.0 {
        (k * (1.0 - hi)).sinh() * (k * lo).sinh() / (k * k.sinh())
    } else {
        // sinh(a) sinh(b) / sinh(k) in exponential form, a + b <= k.
        let a = k * lo;
        let b = k * (1.0 - hi);
        (a + b - k).exp() * (-(-2.0 * a).exp_m1()) * (-(-2.0 * b).exp_m1())
            / (2.0 * k * (-(-2.0 * k).exp_m1()))
    }
}

/// Free, boundary-0 and boundary-1 parts of the extended kernel at `(y, z)`.
pub fn split_kernel(k: f64, y: f64, z: f64, cutoffs: &CutoffSet) -> (f64, f64, f64) {
    let psi = cutoffs.psi_k(y);
    if psi == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let fr = psi * (-k * (z - y).abs()).exp() / (2.0 * k);
    let b0 = phi_b0(k, y, cutoffs) * (-k * z.abs()).exp() / (2.0 * k);
    let b1 = phi_b1(k, y, cutoffs) * (-k * (z - 1.0).abs()).exp() / (2.0 * k);
    (fr, b0, b1)
}

/// Boundary-0 profile: the boundary-0 part equals `phi_b0(y) e^{-k|z|} / (2k)`.
pub fn phi_b0(k: f64, y: f64, cutoffs: &CutoffSet) -> f64 {
    -cutoffs.psi_k(y) * sinh_ratio(k, 1.0 - y)
}

/// Boundary-1 profile: the boundary-1 part equals `phi_b1(y) e^{-k|z-1|} / (2k)`.
pub fn phi_b1(k: f64, y: f64, cutoffs: &CutoffSet) -> f64 {
    -cutoffs.psi_k(y) * sinh_ratio(k, y)
}

pub fn extended_kernel(k: f64, y: f64, z: f64, cutoffs: &CutoffSet) -> f64 {
    let (a, b, c) = split_kernel(k, y, z, cutoffs);
    a + b + c
}

/// Split in flow coordinates `v = b(y)`, `v' = b(z)`.
pub fn split_kernel_v(
    k: f64,
    flow: &ShearFlow,
    v: f64,
    vp: f64,
    cutoffs: &CutoffSet,
) -> Result<(f64, f64, f64)> {
    Ok(split_kernel(k, flow.inverse_b(v)?, flow.inverse_b(vp)?, cutoffs))
}

/// Extended kernel sampled on a tensor grid, with its split.
#[derive(Clone, Debug)]
pub struct GreenKernel {
    pub k: f64,
    pub ys: Vec<f64>,
    pub zs: Vec<f64>,
    pub samples: DMatrix<f64>,
    pub fr: DMatrix<f64>,
    pub b0: DMatrix<f64>,
    pub b1: DMatrix<f64>,
}

impl GreenKernel {
    pub fn sample(k: f64, ys: &[f64], zs: &[f64], cutoffs: &CutoffSet) -> Self {
        let (n, m) = (ys.len(), zs.len());
        let mut fr = DMatrix::zeros(n, m);
        let mut b0 = DMatrix::zeros(n, m);
        let mut b1 = DMatrix::zeros(n, m);
        for j in 0..m {
            for i in 0..n {
                let (a, b, c) = split_kernel(k, ys[i], zs[j], cutoffs);
                fr[(i, j)] = a;
                b0[(i, j)] = b;
                b1[(i, j)] = c;
            }
        }
        let samples = &fr + &b0 + &b1;
        Self { k, ys: ys.to_vec(), zs: zs.to_vec(), samples, fr, b0, b1 }
    }
}

/// Outcome of the discrete Helmholtz check for one row `G(y, .)`.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub h: f64,
    /// Sup of `|(k^2 - D^2) G(y, .)|` away from `z = y`, `0`, `1`.
    pub off_diagonal: f64,
    /// One-sided estimate of the jump of `d/dz G(y, .)` across `z = y`.
    pub jump: f64,
}

/// Applies the three-point `k^2 - D^2` in `z` to the channel kernel row at
/// `y` on a uniform grid of `n` intervals over `[0, 1]`. `y` is snapped to the
/// nearest node.
pub fn kernel_residual_check(k: f64, y: f64, n: usize) -> ResidualReport {
    let h = 1.0 / n as f64;
    let iy = (y / h).round() as usize;
    let y = iy as f64 * h;
    let g: Vec<f64> = (0..=n).map(|j| channel_kernel(k, y, j as f64 * h)).collect();
    let collar = 2;
    let mut off = 0.0f64;
    for j in 1..n {
        if j.abs_diff(iy) <= collar || j <= collar || j + collar >= n {
            continue;
        }
        let d2 = (g[j + 1] - 2.0 * g[j] + g[j - 1]) / (h * h);
        off = off.max((k * k * g[j] - d2).abs());
    }
    let right = (-3.0 * g[iy] + 4.0 * g[iy + 1] - g[iy + 2]) / (2.0 * h);
    let left = (3.0 * g[iy] - 4.0 * g[iy - 1] + g[iy - 2]) / (2.0 * h);
    ResidualReport { h, off_diagonal: off, jump: right - left }
}
