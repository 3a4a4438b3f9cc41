//! Leading singular behaviour of the spectral density.
//!
//! Near the moving pole `v = 0` the density behaves like
//! `d/dv Theta ~ A(v, w) log(v + i s eps)`, and near the pinned poles
//! `w = b(j)` like `d/dw Theta ~ D^j(v, w) log(b(j) - w + i s eps)`. Both
//! coefficients have closed forms in terms of the solved fields; this module
//! evaluates them and fits them back from the data.

use crate::density::{BoundaryResponse, Sign, SpectralDensityField};
use crate::error::{Error, Result};
use crate::flow::{ShearFlow, VorticityMode};
use crate::grid::{cubic_interpolate, gradient};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// `A(v_i, w_j) = dB/B Theta - f0 / B^2` on the field's nodes.
///
/// With `v + w = b(y)` one has `B = b'(y)`, `dB/dv = b''(y)/b'(y)` and
/// `f0 = omega0(y)`, so the formula is evaluated row by row in `y`.
pub fn analytic_log_coefficient_v(
    field: &SpectralDensityField,
    vorticity: &VorticityMode,
    flow: &ShearFlow,
) -> DMatrix<Complex64> {
    let cols: Vec<Complex64> =
        (0..field.w.len()).flat_map(|j| log_coefficient_column(field, vorticity, flow, j)).collect();
    DMatrix::from_vec(field.grid.len(), field.w.len(), cols)
}

/// One column of [`analytic_log_coefficient_v`].
pub fn log_coefficient_column(
    field: &SpectralDensityField,
    vorticity: &VorticityMode,
    flow: &ShearFlow,
    j: usize,
) -> Vec<Complex64> {
    field
        .grid
        .y
        .iter()
        .zip(field.column(j))
        .map(|(&y, t)| {
            let (_, db, d2b) = flow.eval(y);
            t * (d2b / (db * db)) - vorticity.eval(y) / (db * db)
        })
        .collect()
}

/// `Theta(b(side) - w_j, w_j)`, i.e. the density at the wall node.
pub fn wall_trace(field: &SpectralDensityField, side: usize) -> Vec<Complex64> {
    let i = if side == 0 { field.grid.zero_index() } else { field.grid.channel_index(field.grid.n) };
    (0..field.w.len()).map(|j| field.theta[(i, j)]).collect()
}

/// `Theta(b(side) - w_j, w_j)` by cubic interpolation along `v`, for fields
/// whose grid does not carry a node at the wall.
pub fn wall_trace_interpolated(field: &SpectralDensityField, flow: &ShearFlow, side: usize) -> Result<Vec<Complex64>> {
    let bj = flow.b_at(side as f64);
    (0..field.w.len())
        .map(|j| {
            let v = bj - field.w[j];
            field.theta_at_v(j, v).ok_or(Error::OutOfRange {
                value: v,
                lo: field.b[0] - field.w[j],
                hi: field.b[field.b.len() - 1] - field.w[j],
            })
        })
        .collect()
}

/// `D^j(v_i, w_m) = -Phi^j (f0(b(j)) - b''(j) Theta(b(j) - w, w)) / b'(j)^2`
/// for the given boundary response. `theta` must share the solve grid and w
/// columns with `phi`.
pub fn analytic_boundary_coefficient_w(
    theta: &SpectralDensityField,
    phi: &BoundaryResponse,
    vorticity: &VorticityMode,
    flow: &ShearFlow,
) -> Result<DMatrix<Complex64>> {
    if phi.w.len() != theta.w.len() || phi.phi.nrows() != theta.theta.nrows() {
        return Err(Error::InvalidParameter("boundary response and density grids differ".into()));
    }
    let side = phi.side;
    let yj = side as f64;
    let (_, db, d2b) = flow.eval(yj);
    let f0 = vorticity.eval(yj);
    let trace = wall_trace(theta, side);
    let factor: Vec<Complex64> = trace.iter().map(|t| -(f0 - t * d2b) / (db * db)).collect();
    Ok(DMatrix::from_fn(phi.phi.nrows(), phi.w.len(), |i, m| phi.phi[(i, m)] * factor[m]))
}

/// Fitted `c1 log(v + i s eps) + c0 + c2 v`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LogFit {
    pub c1: Complex64,
    pub c0: Complex64,
    pub c2: Complex64,
    /// Relative residual of the least-squares fit.
    pub residual: f64,
    /// 95% half-width on `c1` from the residual variance.
    pub c1_halfwidth: f64,
    pub condition: f64,
    pub nodes: usize,
}

/// Fit window in units of epsilon.
#[derive(Clone, Copy, Debug)]
pub struct FitWindow {
    pub inner: f64,
    pub outer: f64,
    pub min_nodes: usize,
    pub max_condition: f64,
}

impl Default for FitWindow {
    fn default() -> Self {
        Self { inner: 2.0, outer: 10.0, min_nodes: 12, max_condition: 1e8 }
    }
}

/// Complex least squares via SVD; returns coefficients, residual norm and
/// the 2-norm condition number of the design matrix.
pub(crate) fn least_squares(a: &DMatrix<Complex64>, rhs: &[Complex64]) -> Result<(Vec<Complex64>, f64, f64)> {
    let svd = a.clone().svd(true, true);
    let s = &svd.singular_values;
    let smax = s.iter().cloned().fold(0.0, f64::max);
    let smin = s.iter().cloned().fold(f64::MAX, f64::min);
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let b = nalgebra::DVector::from_column_slice(rhs);
    let x = svd
        .solve(&b, smax * 1e-15)
        .map_err(|e| Error::InvalidParameter(format!("least squares failed: {e}")))?;
    let r = a * &x - &b;
    Ok((x.iter().cloned().collect(), r.norm(), cond))
}

/// Least-squares fit of the logarithmic model on `inner eps <= |v| <= outer eps`.
pub fn fit_log_coefficient(
    v: &[f64],
    data: &[Complex64],
    epsilon: f64,
    sign: Sign,
    window: FitWindow,
) -> Result<LogFit> {
    let idx: Vec<usize> = (0..v.len())
        .filter(|&i| {
            let a = v[i].abs();
            a >= window.inner * epsilon && a <= window.outer * epsilon
        })
        .collect();
    if idx.len() < window.min_nodes {
        return Err(Error::InsufficientData(format!(
            "log fit window holds {} nodes, need {}",
            idx.len(),
            window.min_nodes
        )));
    }
    let ie = sign.value() * epsilon;
    // Columns scaled to comparable size so the condition number is meaningful.
    let scale_v = window.outer * epsilon;
    let a = DMatrix::from_fn(idx.len(), 3, |r, c| {
        let x = v[idx[r]];
        match c {
            0 => Complex64::new(x, ie).ln(),
            1 => Complex64::new(1.0, 0.0),
            _ => Complex64::new(x / scale_v, 0.0),
        }
    });
    let rhs: Vec<Complex64> = idx.iter().map(|&i| data[i]).collect();
    let (x, rnorm, cond) = least_squares(&a, &rhs)?;
    if cond > window.max_condition {
        return Err(Error::IllConditioned { condition: cond, cap: window.max_condition, context: "log-coefficient fit".into() });
    }
    let dnorm: f64 = rhs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let m = idx.len();
    let dof = (m.saturating_sub(3)).max(1) as f64;
    let sigma2 = rnorm * rnorm / dof;
    // Variance of c1 from (A^H A)^{-1}_{00}.
    let ata = a.adjoint() * &a;
    let var = ata.try_inverse().map(|inv| inv[(0, 0)].re.abs() * sigma2).unwrap_or(f64::INFINITY);
    Ok(LogFit {
        c1: x[0],
        c0: x[1],
        c2: x[2] / scale_v,
        residual: if dnorm > 0.0 { rnorm / dnorm } else { rnorm },
        c1_halfwidth: 1.96 * var.sqrt(),
        condition: cond,
        nodes: m,
    })
}

/// `d/dv Theta` along column `j` by centered differences in `y`.
pub fn dv_theta(field: &SpectralDensityField, flow: &ShearFlow, j: usize) -> Vec<Complex64> {
    let g = gradient(field.column(j), field.grid.h);
    g.iter().zip(&field.grid.y).map(|(d, &y)| d / flow.db_at(y)).collect()
}

/// Fitted versus analytic log coefficient on one column.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColumnComparison {
    pub w: f64,
    pub analytic: Complex64,
    pub fitted: Complex64,
    pub relative_error: f64,
    pub fit_residual: f64,
}

/// Fits the log coefficient of `d/dv Theta` at `v = 0` for column `j` and
/// compares it with `A(0, w_j)`. A two-node collar around the pole is
/// excluded by the fit window itself once `inner * eps >= 2 h max b'`.
pub fn compare_log_coefficient(
    field: &SpectralDensityField,
    vorticity: &VorticityMode,
    flow: &ShearFlow,
    j: usize,
    window: FitWindow,
) -> Result<ColumnComparison> {
    let w = field.w[j];
    let vs: Vec<f64> = field.b.iter().map(|b| b - w).collect();
    let d = dv_theta(field, flow, j);
    let fit = fit_log_coefficient(&vs, &d, field.epsilon, field.sign, window)?;
    let a = log_coefficient_column(field, vorticity, flow, j);
    let analytic = cubic_interpolate(&vs, &a, 0.0)
        .ok_or(Error::OutOfRange { value: 0.0, lo: vs[0], hi: vs[vs.len() - 1] })?;
    Ok(ColumnComparison {
        w,
        analytic,
        fitted: fit.c1,
        relative_error: (fit.c1 - analytic).norm() / analytic.norm().max(1e-300),
        fit_residual: fit.residual,
    })
}

/// Comparative amplitudes between two scenarios.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct VanishingReport {
    pub d0_reference: f64,
    pub d0_vanishing: f64,
    /// `max|D0|` ratio, reference over vanishing.
    pub d0_ratio: f64,
    pub beta1_reference: Option<f64>,
    pub beta1_vanishing: Option<f64>,
    pub beta1_ratio: Option<f64>,
}

fn ratio(a: f64, b: f64) -> f64 {
    if a == b {
        1.0
    } else if b == 0.0 {
        f64::INFINITY
    } else {
        a / b
    }
}

/// Builds the comparison from `max|D0|` of each scenario and, optionally, the
/// fitted leading boundary amplitudes.
pub fn vanishing_report(
    d0_reference: &DMatrix<Complex64>,
    d0_vanishing: &DMatrix<Complex64>,
    beta1: Option<(f64, f64)>,
) -> VanishingReport {
    let m = |d: &DMatrix<Complex64>| d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let (r, v) = (m(d0_reference), m(d0_vanishing));
    VanishingReport {
        d0_reference: r,
        d0_vanishing: v,
        d0_ratio: ratio(r, v),
        beta1_reference: beta1.map(|b| b.0),
        beta1_vanishing: beta1.map(|b| b.1),
        beta1_ratio: beta1.map(|b| ratio(b.0, b.1)),
    }
}
