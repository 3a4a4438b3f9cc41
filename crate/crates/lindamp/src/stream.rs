//! Stream function from the spectral density.
//!
//! `psi(t, y) = -1/(2 pi i) lim int e^{-ikwt} [Theta^- - Theta^+](b(y) - w, w) dw`,
//! evaluated rung by rung with a Filon-trapezoid rule and then extrapolated
//! in epsilon. Inserting the partition `Upsilon_m(w)` gives the three region
//! parts.

use crate::density::{epsilon_extrapolate, ExtrapolationOrder, Sign, SpectralDensityField};
use crate::error::{Error, Result};
use crate::flow::{CutoffSet, PartitionKind, ShearFlow};
use crate::grid::{filon_weights, gradient, trapezoid_weights};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Exact integration of the phase against piecewise-linear data.
    #[default]
    Filon,
    Trapezoid,
}

impl Quadrature {
    /// Largest admissible `dw` for frequency `omega = |k| t`.
    pub fn max_dw(self, omega: f64, db_max: f64) -> f64 {
        if omega == 0.0 {
            return f64::INFINITY;
        }
        match self {
            Quadrature::Filon => PI / (4.0 * omega),
            Quadrature::Trapezoid => PI / (8.0 * omega * db_max),
        }
    }

    /// Weights of `int e^{-i omega w} f(w) dw` on a uniform grid.
    pub fn weights(self, w0: f64, dw: f64, n: usize, omega: f64) -> Vec<Complex64> {
        match self {
            Quadrature::Filon => filon_weights(w0, dw, n, omega),
            Quadrature::Trapezoid => trapezoid_weights(n, dw)
                .into_iter()
                .enumerate()
                .map(|(j, a)| (-Complex64::i() * omega * (w0 + j as f64 * dw)).exp() * a)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StreamOptions {
    pub quadrature: Quadrature,
    pub order: ExtrapolationOrder,
}

impl Default for StreamOptions {
    fn default() -> Self {
        Self { quadrature: Quadrature::Filon, order: ExtrapolationOrder::LinearThenQuadratic }
    }
}

/// `psi_k(t, y_i)` on the channel grid `y_i = i / n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StreamSnapshot {
    pub t: f64,
    pub k: i32,
    pub y: Vec<f64>,
    pub psi: Vec<Complex64>,
    /// Region parts with `Upsilon_1`, `Upsilon_2`, `Upsilon_3` inserted.
    pub parts: [Vec<Complex64>; 3],
    pub epsilon_error: f64,
}

/// One rung's integral for `psi` and its three parts, on channel rows.
fn rung_integral(
    minus: &SpectralDensityField,
    plus: &SpectralDensityField,
    t: f64,
    k: i32,
    base_n: usize,
    flow: &ShearFlow,
    cutoffs: &CutoffSet,
    quad: Quadrature,
) -> Result<[Vec<Complex64>; 4]> {
    if minus.w != plus.w || minus.grid != plus.grid || minus.epsilon != plus.epsilon {
        return Err(Error::InvalidParameter("density pair does not share grids".into()));
    }
    if minus.sign != Sign::Minus || plus.sign != Sign::Plus {
        return Err(Error::InvalidParameter("density pair must be (minus, plus)".into()));
    }
    let nw = minus.w.len();
    let dw = (minus.w[nw - 1] - minus.w[0]) / (nw - 1) as f64;
    let omega = k as f64 * t;
    let limit = quad.max_dw(omega.abs(), flow.db_max());
    if dw > limit {
        return Err(Error::UnderResolvedOscillation { t, dw, required: limit });
    }
    let wts = quad.weights(minus.w[0], dw, nw, omega);
    let ups: Vec<[f64; 3]> = minus.w.iter().map(|&w| [cutoffs.upsilon(1, w), cutoffs.upsilon(2, w), cutoffs.upsilon(3, w)]).collect();
    let grid = &minus.grid;
    if grid.n % base_n != 0 {
        return Err(Error::InvalidParameter(format!("solve grid {} is not a multiple of {}", grid.n, base_n)));
    }
    let ratio = grid.n / base_n;
    let factor = -1.0 / (2.0 * PI * Complex64::i());
    let mut out: [Vec<Complex64>; 4] = std::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); base_n + 1]);
    for i in 0..=base_n {
        let row = grid.channel_index(i * ratio);
        let mut acc = [Complex64::new(0.0, 0.0); 4];
        for j in 0..nw {
            let d = (minus.theta[(row, j)] - plus.theta[(row, j)]) * wts[j];
            acc[0] += d;
            for m in 0..3 {
                acc[m + 1] += d * ups[j][m];
            }
        }
        for m in 0..4 {
            out[m][i] = acc[m] * factor;
        }
    }
    Ok(out)
}

/// Stream function at time `t` from matched ladders of `Theta^-` and
/// `Theta^+` (same rung order), sampled on the `base_n` channel grid.
pub fn stream_from_density(
    minus: &[SpectralDensityField],
    plus: &[SpectralDensityField],
    t: f64,
    base_n: usize,
    flow: &ShearFlow,
    cutoffs: &CutoffSet,
    opts: &StreamOptions,
) -> Result<StreamSnapshot> {
    if minus.len() != plus.len() || minus.is_empty() {
        return Err(Error::InvalidParameter("ladders must be nonempty and of equal length".into()));
    }
    if t < 0.0 {
        return Err(Error::InvalidParameter("t must be nonnegative".into()));
    }
    let k = minus[0].k;
    let mut per_rung: Vec<[Vec<Complex64>; 4]> = Vec::with_capacity(minus.len());
    for (m, p) in minus.iter().zip(plus) {
        per_rung.push(rung_integral(m, p, t, k, base_n, flow, cutoffs, opts.quadrature)?);
    }
    let eps: Vec<f64> = minus.iter().map(|f| f.epsilon).collect();
    let mut results: Vec<Vec<Complex64>> = Vec::with_capacity(4);
    let mut err = 0.0f64;
    for c in 0..4 {
        let fields: Vec<Vec<Complex64>> = per_rung.iter().map(|r| r[c].clone()).collect();
        let ex = epsilon_extrapolate(&eps, &fields, opts.order)?;
        if c == 0 {
            err = ex.error_max;
        }
        results.push(ex.limit);
    }
    let parts = [results[1].clone(), results[2].clone(), results[3].clone()];
    Ok(StreamSnapshot {
        t,
        k,
        y: (0..=base_n).map(|i| i as f64 / base_n as f64).collect(),
        psi: results.swap_remove(0),
        parts,
        epsilon_error: err,
    })
}

/// The three region parts of a snapshot, or zeros for the outer regions when
/// the cutoff set uses the bulk-only partition.
pub fn split_stream_regions(snapshot: &StreamSnapshot, cutoffs: &CutoffSet) -> [Vec<Complex64>; 3] {
    match cutoffs.partition {
        PartitionKind::ThreeRegion => snapshot.parts.clone(),
        PartitionKind::BulkOnly => {
            let z = vec![Complex64::new(0.0, 0.0); snapshot.psi.len()];
            [z.clone(), snapshot.psi.clone(), z]
        }
    }
}

/// Location of the pole in the demodulated integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pole {
    /// `v - w`, carrier `e^{-ikvt}`.
    Moving,
    /// `b(0) - w`, carrier `e^{-ikb(0)t}`.
    Boundary0,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Demodulated {
    pub v: Vec<f64>,
    pub coefficient: Vec<Complex64>,
    pub l2: f64,
}

/// Parameters for [`demodulate_kernel_integral`].
#[derive(Clone, Copy, Debug)]
pub struct DemodulationSetup {
    pub power: u32,
    pub k: f64,
    pub t: f64,
    /// Signed absorption parameter.
    pub epsilon: f64,
    pub pole: Pole,
    pub b0: f64,
    /// Uniform w grid `[w_lo, w_hi]` with `nw` nodes.
    pub w_lo: f64,
    pub w_hi: f64,
    pub nw: usize,
}

/// `int e^{-ikwt} h(v - w, w) log^p(P + i eps) / (P + i eps) dw` with the
/// carrier multiplied out, for each `v`.
pub fn demodulate_kernel_integral(
    h: impl Fn(f64, f64) -> Complex64 + Sync,
    v: &[f64],
    s: &DemodulationSetup,
) -> Result<Demodulated> {
    if s.power > 3 {
        return Err(Error::InvalidParameter("log power must be in 0..=3".into()));
    }
    let dw = (s.w_hi - s.w_lo) / (s.nw - 1) as f64;
    let omega = s.k * s.t;
    let limit = Quadrature::Filon.max_dw(omega.abs(), 1.0).min(s.epsilon.abs() / 3.0);
    if dw > limit {
        return Err(Error::UnderResolvedOscillation { t: s.t, dw, required: limit });
    }
    let wts = filon_weights(s.w_lo, dw, s.nw, omega);
    let coefficient: Vec<Complex64> = v
        .iter()
        .map(|&vv| {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, wt) in wts.iter().enumerate() {
                let w = s.w_lo + j as f64 * dw;
                let p = match s.pole {
                    Pole::Moving => vv - w,
                    Pole::Boundary0 => s.b0 - w,
                };
                let z = Complex64::new(p, s.epsilon);
                let l = z.ln().powu(s.power);
                acc += wt * h(vv - w, w) * l / z;
            }
            let carrier = match s.pole {
                Pole::Moving => vv,
                Pole::Boundary0 => s.b0,
            };
            acc * (Complex64::i() * omega * carrier).exp()
        })
        .collect();
    let dv = if v.len() > 1 { (v[v.len() - 1] - v[0]) / (v.len() - 1) as f64 } else { 1.0 };
    let l2 = crate::grid::l2_norm(&coefficient, dv);
    Ok(Demodulated { v: v.to_vec(), coefficient, l2 })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VelocitySnapshot {
    pub t: f64,
    pub ux: Vec<Complex64>,
    pub uy: Vec<Complex64>,
}

/// `u^x = -d/dy psi`, `u^y = i k psi`.
pub fn velocity_fields(psi: &[Complex64], h: f64, k: i32, t: f64) -> VelocitySnapshot {
    let ux = gradient(psi, h).into_iter().map(|d| -d).collect();
    let uy = psi.iter().map(|p| Complex64::i() * k as f64 * p).collect();
    VelocitySnapshot { t, ux, uy }
}

impl StreamSnapshot {
    pub fn velocity(&self) -> VelocitySnapshot {
        velocity_fields(&self.psi, 1.0 / (self.y.len() - 1) as f64, self.k, self.t)
    }
}
