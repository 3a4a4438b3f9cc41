//! Spectral density solves with a limiting-absorption parameter.
//!
//! For each spectral value `w` the density `psi(y; w)` solves the Fredholm
//! equation
//!
//! ```text
//! psi(y) + int G(y, z) b''(z) psi(z) / (b(z) - w + i s eps) dz
//!        = int G(y, z) omega0(z) / (b(z) - w + i s eps) dz
//! ```
//!
//! on the support of the channel cutoff, `s = +-1`. Writing `v = b(y) - w`
//! turns this into the flow-coordinate form, since `b'' dz = dB(v') dv'` and
//! `omega0 dz = f0 / B dv'`; the field entry at row `i`, column `j` is
//! therefore `Theta(v_i, w_j)` with `v_i = b(y_i) - w_j`.
//!
//! Unknowns live on a uniform `y` grid whose nodes include `0` and `1`, so
//! the kinks of the kernel sit on nodes and the trapezoid rule stays second
//! order. The pole is resolved once `eps >= kappa * h * max b'`.

use crate::error::{Error, Result};
use crate::flow::{CutoffSet, ShearFlow, VorticityMode};
use crate::green::{extended_kernel, sinh_ratio};
use crate::grid::{cubic_interpolate, UniformGrid};
use crate::linalg::{dot, relative_residual, ColumnSparseSystem, H1kGram, ShiftedFactor, ShiftedHessenberg};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Minimum ratio `eps / dv` for the pole to count as resolved.
pub const KAPPA: f64 = 3.0;

/// Default ladder `0.1 * 2^{-j}`, `j = 0..5`.
pub const DEFAULT_LADDER: [f64; 5] = [1e-1, 5e-2, 2.5e-2, 1.25e-2, 6.25e-3];

/// Sign of the absorption parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// Uniform grid on `[-m h, 1 + m h]` covering the support of the channel
/// cutoff, with `n` intervals on `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveGrid {
    pub n: usize,
    pub margin_nodes: usize,
    pub h: f64,
    pub y: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SolveGrid {
    pub fn new(n: usize, margin: f64) -> Self {
        let h = 1.0 / n as f64;
        let m = (margin / h - 1e-9).ceil().max(1.0) as usize;
        let y: Vec<f64> = (0..n + 1 + 2 * m).map(|i| (i as f64 - m as f64) * h).collect();
        let weights = crate::grid::trapezoid_weights(y.len(), h);
        Self { n, margin_nodes: m, h, y, weights }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Index of the node `y = 0`.
    pub fn zero_index(&self) -> usize {
        self.margin_nodes
    }

    /// Index of the channel node `i / n`.
    pub fn channel_index(&self, i: usize) -> usize {
        self.margin_nodes + i
    }

    /// Largest spacing in `v = b(y)`.
    pub fn dv_max(&self, flow: &ShearFlow) -> f64 {
        let mut m = 0.0f64;
        for w in self.y.windows(2) {
            m = m.max(flow.b_at(w[1]) - flow.b_at(w[0]));
        }
        m
    }
}

/// One rung of the ladder: epsilon with its paired grids.
#[derive(Clone, Debug)]
pub struct Rung {
    pub epsilon: f64,
    pub grid: SolveGrid,
    pub w: UniformGrid,
}

/// Grid and ladder choices for a family of density solves.
#[derive(Clone, Debug)]
pub struct LadderOptions {
    pub ladder: Vec<f64>,
    /// Intervals on `[0, 1]` of the coarsest admissible grid; finer rungs use
    /// integer multiples so channel nodes stay nested.
    pub base_n: usize,
    pub kappa: f64,
    /// Padding of the w-range beyond `[b(0), b(1)]`.
    pub w_pad: f64,
}

impl Default for LadderOptions {
    fn default() -> Self {
        Self { ladder: DEFAULT_LADDER.to_vec(), base_n: 64, kappa: KAPPA, w_pad: 0.3 }
    }
}

/// Ladder of epsilons with grids for one wavenumber and sign.
#[derive(Clone, Debug)]
pub struct AbsorptionContext {
    pub k: i32,
    pub sign: Sign,
    pub kappa: f64,
    pub base_n: usize,
    pub rungs: Vec<Rung>,
}

impl AbsorptionContext {
    pub fn new(flow: &ShearFlow, cutoffs: &CutoffSet, k: i32, sign: Sign, opts: &LadderOptions) -> Result<Self> {
        if opts.ladder.is_empty() {
            return Err(Error::InvalidParameter("empty epsilon ladder".into()));
        }
        if opts.ladder.windows(2).any(|p| p[1] >= p[0]) || opts.ladder.iter().any(|&e| e <= 0.0) {
            return Err(Error::InvalidParameter("epsilon ladder must be positive and strictly decreasing".into()));
        }
        if opts.kappa < 3.0 {
            return Err(Error::InvalidParameter(format!("kappa must be at least 3, got {}", opts.kappa)));
        }
        let db_max = channel_db_max(flow, cutoffs.margin());
        let (w_lo, w_hi) = (flow.b_at(0.0) - opts.w_pad, flow.b_at(1.0) + opts.w_pad);
        let mut rungs = Vec::with_capacity(opts.ladder.len());
        for &eps in &opts.ladder {
            let need_h = eps / (opts.kappa * db_max);
            let ratio = ((1.0 / need_h) / opts.base_n as f64).ceil().max(1.0) as usize;
            let grid = SolveGrid::new(opts.base_n * ratio, cutoffs.margin());
            let intervals = ((w_hi - w_lo) * opts.kappa / eps).ceil() as usize;
            rungs.push(Rung { epsilon: eps, grid, w: UniformGrid::new(w_lo, w_hi, intervals.max(2)) });
        }
        Ok(Self { k, sign, kappa: opts.kappa, base_n: opts.base_n, rungs })
    }

    pub fn with_sign(&self, sign: Sign) -> Self {
        let mut c = self.clone();
        c.sign = sign;
        c
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.rungs.iter().map(|r| r.epsilon).collect()
    }

    /// Bytes needed to hold one field per rung.
    pub fn field_bytes(&self) -> usize {
        self.rungs.iter().map(|r| r.grid.len() * r.w.len() * 16).sum()
    }
}

fn channel_db_max(flow: &ShearFlow, margin: f64) -> f64 {
    let m = 4000;
    (0..=m)
        .map(|i| flow.db_at(-margin + (1.0 + 2.0 * margin) * i as f64 / m as f64))
        .fold(0.0, f64::max)
}

/// Kernel data shared by every column of one rung.
pub struct RungOperator {
    pub k: f64,
    pub grid: SolveGrid,
    pub g: DMatrix<f64>,
    pub b: Vec<f64>,
    pub d2b: Vec<f64>,
    /// Nodes where `b''` is nonzero.
    pub active: Vec<usize>,
    pub psi_k: Vec<f64>,
    shifted: std::sync::OnceLock<ShiftedSolver>,
}

/// `I + G D(z)` restricted to the active nodes equals `(L - z) P(z)` with
/// `L = diag(b) + G E`, `E = diag(weight b'')`, `P = diag(1 / (b - z))` and
/// `z = w - i s eps`. One Hessenberg reduction of `L` then serves every
/// column of the rung.
struct ShiftedSolver {
    l: ShiftedHessenberg,
    /// `G[:, active] E`.
    ge: DMatrix<f64>,
}

impl RungOperator {
    pub fn new(k: i32, grid: &SolveGrid, flow: &ShearFlow, cutoffs: &CutoffSet) -> Self {
        let kf = (k as f64).abs();
        let n = grid.len();
        let g = DMatrix::from_fn(n, n, |i, j| extended_kernel(kf, grid.y[i], grid.y[j], cutoffs));
        let b: Vec<f64> = grid.y.iter().map(|&y| flow.b_at(y)).collect();
        let d2b: Vec<f64> = grid.y.iter().map(|&y| flow.d2b_at(y)).collect();
        let active = (0..n).filter(|&j| d2b[j] != 0.0).collect();
        let psi_k = grid.y.iter().map(|&y| cutoffs.psi_k(y)).collect();
        Self { k: kf, grid: grid.clone(), g, b, d2b, active, psi_k, shifted: Default::default() }
    }

    fn shifted(&self) -> &ShiftedSolver {
        self.shifted.get_or_init(|| {
            let s = self.active.len();
            let e: Vec<f64> = self.active.iter().map(|&j| self.grid.weights[j] * self.d2b[j]).collect();
            let ge = DMatrix::from_fn(self.grid.len(), s, |i, c| self.g[(i, self.active[c])] * e[c]);
            let l = DMatrix::from_fn(s, s, |r, c| {
                let diag = if r == c { self.b[self.active[r]] } else { 0.0 };
                diag + ge[(self.active[r], c)]
            });
            ShiftedSolver { l: ShiftedHessenberg::new(l), ge }
        })
    }

    fn apply_ge(&self, u: &[Complex64]) -> Vec<Complex64> {
        let sv = self.shifted();
        let s = u.len();
        let ur = DVector::from_iterator(s, u.iter().map(|v| v.re));
        let ui = DVector::from_iterator(s, u.iter().map(|v| v.im));
        let (a, b) = (&sv.ge * ur, &sv.ge * ui);
        (0..a.len()).map(|i| Complex64::new(a[i], b[i])).collect()
    }

    /// `(I + M) x` without forming the system.
    pub fn apply_system(&self, x: &[Complex64], w: f64, eps: f64, sign: Sign) -> Vec<Complex64> {
        if self.active.is_empty() {
            return x.to_vec();
        }
        let u: Vec<Complex64> = self.active.iter().map(|&j| x[j] * self.pole(j, w, eps, sign)).collect();
        let m = self.apply_ge(&u);
        x.iter().zip(&m).map(|(a, b)| a + b).collect()
    }

    /// Factors `I + M` at one spectral value for repeated solves.
    pub fn factor_column(&self, w: f64, eps: f64, sign: Sign) -> Option<ColumnFactor<'_>> {
        let z = Complex64::new(w, -sign.value() * eps);
        let forward = if self.active.is_empty() { None } else { Some(self.shifted().l.factor(z)?) };
        Some(ColumnFactor { op: self, w, eps, sign, forward, adjoint: None })
    }

    /// Solves `(I + M) x = r`; returns the solution and the pivot ratio.
    pub fn solve_system(&self, r: &[Complex64], w: f64, eps: f64, sign: Sign) -> Option<(Vec<Complex64>, f64)> {
        let f = self.factor_column(w, eps, sign)?;
        Some((f.solve(r), f.pivot_ratio()))
    }

    fn check_resolution(&self, eps: f64, kappa: f64) -> Result<()> {
        let dv = self.b.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
        if eps < kappa * dv * (1.0 - 1e-12) {
            return Err(Error::Resolution { epsilon: eps, kappa, required: kappa * dv });
        }
        Ok(())
    }

    fn pole(&self, j: usize, w: f64, eps: f64, sign: Sign) -> Complex64 {
        Complex64::new(1.0, 0.0) / Complex64::new(self.b[j] - w, sign.value() * eps)
    }

    /// The column-sparse system `I + M` at spectral value `w`.
    pub fn system(&self, w: f64, eps: f64, sign: Sign) -> ColumnSparseSystem {
        let n = self.grid.len();
        let s = self.active.len();
        let mut cols = DMatrix::<Complex64>::zeros(n, s);
        for (c, &j) in self.active.iter().enumerate() {
            let d = self.pole(j, w, eps, sign) * (self.grid.weights[j] * self.d2b[j]);
            for i in 0..n {
                cols[(i, c)] = d * self.g[(i, j)];
            }
        }
        ColumnSparseSystem::new(n, self.active.clone(), cols)
    }

    /// Right-hand side `int G omega0 / (b - w + i s eps)`.
    pub fn rhs(&self, omega0: &[Complex64], w: f64, eps: f64, sign: Sign) -> Vec<Complex64> {
        let n = self.grid.len();
        let mut re = DVector::<f64>::zeros(n);
        let mut im = DVector::<f64>::zeros(n);
        for j in 0..n {
            let c = omega0[j] * self.pole(j, w, eps, sign) * self.grid.weights[j];
            re[j] = c.re;
            im[j] = c.im;
        }
        let gr = &self.g * re;
        let gi = &self.g * im;
        (0..n).map(|i| Complex64::new(gr[i], gi[i])).collect()
    }

    /// Forcing of the boundary response on side 0 or 1.
    pub fn boundary_forcing(&self, side: usize) -> Vec<Complex64> {
        self.grid
            .y
            .iter()
            .zip(&self.psi_k)
            .map(|(&y, &p)| {
                let a = if side == 0 { 1.0 - y } else { y };
                Complex64::new(p * sinh_ratio(self.k, a), 0.0)
            })
            .collect()
    }
}

/// `I + M` factored at one `(w, eps, sign)`.
///
/// Forward solves use `(L - z) u = r_S`, `x = r - G E u`. For the adjoint
/// the passive entries of `x` equal those of `r` and the active block
/// reduces to `(L - conj z)^T x_S = (b - conj z) r_S - (G E)_P^T r_P`.
pub struct ColumnFactor<'a> {
    op: &'a RungOperator,
    w: f64,
    eps: f64,
    sign: Sign,
    forward: Option<ShiftedFactor>,
    adjoint: Option<ShiftedFactor>,
}

impl ColumnFactor<'_> {
    pub fn pivot_ratio(&self) -> f64 {
        self.forward.as_ref().map_or(1.0, |f| f.pivot_ratio)
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.op.apply_system(x, self.w, self.eps, self.sign)
    }

    pub fn solve(&self, r: &[Complex64]) -> Vec<Complex64> {
        let Some(f) = &self.forward else {
            return r.to_vec();
        };
        let sv = self.op.shifted();
        let rs: Vec<Complex64> = self.op.active.iter().map(|&j| r[j]).collect();
        let u = sv.l.solve_factored(f, &rs);
        let m = self.op.apply_ge(&u);
        r.iter().zip(&m).map(|(a, b)| a - b).collect()
    }

    pub fn solve_adjoint(&mut self, r: &[Complex64]) -> Option<Vec<Complex64>> {
        let op = self.op;
        if op.active.is_empty() {
            return Some(r.to_vec());
        }
        let sv = op.shifted();
        let zc = Complex64::new(self.w, self.sign.value() * self.eps);
        if self.adjoint.is_none() {
            self.adjoint = Some(sv.l.factor(zc)?);
        }
        let mut passive = r.to_vec();
        for &j in &op.active {
            passive[j] = Complex64::new(0.0, 0.0);
        }
        let pr = DVector::from_iterator(passive.len(), passive.iter().map(|v| v.re));
        let pi = DVector::from_iterator(passive.len(), passive.iter().map(|v| v.im));
        let (cr, ci) = (sv.ge.tr_mul(&pr), sv.ge.tr_mul(&pi));
        let rhs: Vec<Complex64> = op
            .active
            .iter()
            .enumerate()
            .map(|(c, &j)| (op.b[j] - zc) * r[j] - Complex64::new(cr[c], ci[c]))
            .collect();
        let xs = sv.l.solve_factored_transpose(self.adjoint.as_ref().expect("factored above"), &rhs);
        let mut x = passive;
        for (c, &j) in op.active.iter().enumerate() {
            x[j] = xs[c];
        }
        Some(x)
    }
}

/// Per-column solve diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ColumnDiagnostics {
    pub w: f64,
    pub residual: f64,
    /// Ratio of extreme LU pivots, a cheap conditioning proxy.
    pub pivot_ratio: f64,
}

/// `Theta(v_i, w_j)` for one `(k, eps, sign)`, stored column-major with rows
/// indexed by the solve grid.
#[derive(Clone, Debug)]
pub struct SpectralDensityField {
    pub k: i32,
    pub sign: Sign,
    pub epsilon: f64,
    pub grid: SolveGrid,
    /// `b(y_i)` on the solve grid.
    pub b: Vec<f64>,
    pub w: Vec<f64>,
    pub theta: DMatrix<Complex64>,
    pub diagnostics: Vec<ColumnDiagnostics>,
}

impl SpectralDensityField {
    pub fn column(&self, j: usize) -> &[Complex64] {
        let n = self.theta.nrows();
        &self.theta.as_slice()[j * n..(j + 1) * n]
    }

    /// Flow coordinate of row `i` in column `j`.
    pub fn v(&self, i: usize, j: usize) -> f64 {
        self.b[i] - self.w[j]
    }

    /// Cubic interpolation of column `j` at flow coordinate `v`.
    pub fn theta_at_v(&self, j: usize, v: f64) -> Option<Complex64> {
        let vs: Vec<f64> = self.b.iter().map(|b| b - self.w[j]).collect();
        cubic_interpolate(&vs, self.column(j), v)
    }

    pub fn max_residual(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.residual).fold(0.0, f64::max)
    }
}

/// Boundary responses for a set of w columns.
#[derive(Clone, Debug)]
pub struct BoundaryResponse {
    pub side: usize,
    pub epsilon: f64,
    pub sign: Sign,
    pub w: Vec<f64>,
    pub phi: DMatrix<Complex64>,
    pub residuals: Vec<f64>,
}

/// Dense Nystrom matrix of the operator term at one `w`.
#[allow(clippy::too_many_arguments)]
pub fn assemble_operator(
    k: i32,
    epsilon: f64,
    sign: Sign,
    w: f64,
    grid: &SolveGrid,
    flow: &ShearFlow,
    cutoffs: &CutoffSet,
) -> Result<DMatrix<Complex64>> {
    let op = RungOperator::new(k, grid, flow, cutoffs);
    op.check_resolution(epsilon, KAPPA)?;
    let mut m = op.system(w, epsilon, sign).dense();
    for i in 0..m.nrows() {
        m[(i, i)] -= Complex64::new(1.0, 0.0);
    }
    Ok(m)
}

#[allow(clippy::too_many_arguments)]
pub fn assemble_rhs(
    k: i32,
    epsilon: f64,
    sign: Sign,
    w: f64,
    grid: &SolveGrid,
    vorticity: &VorticityMode,
    flow: &ShearFlow,
    cutoffs: &CutoffSet,
) -> Result<Vec<Complex64>> {
    let op = RungOperator::new(k, grid, flow, cutoffs);
    op.check_resolution(epsilon, KAPPA)?;
    Ok(op.rhs(&vorticity.sample(&grid.y), w, epsilon, sign))
}

fn solve_columns(
    op: &RungOperator,
    ws: &[f64],
    eps: f64,
    sign: Sign,
    forcing: impl Fn(f64) -> Vec<Complex64> + Sync,
) -> Result<(DMatrix<Complex64>, Vec<ColumnDiagnostics>)> {
    let n = op.grid.len();
    let cols: Vec<Result<(Vec<Complex64>, ColumnDiagnostics)>> = ws
        .par_iter()
        .map(|&w| {
            let rhs = forcing(w);
            let singular = || Error::SingularSystem { w, epsilon: eps };
            let f = op.factor_column(w, eps, sign).ok_or_else(singular)?;
            let mut x = f.solve(&rhs);
            // One step of iterative refinement.
            let ax = f.apply(&x);
            let r: Vec<Complex64> = rhs.iter().zip(&ax).map(|(p, q)| p - q).collect();
            let d = f.solve(&r);
            x.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
            let residual = relative_residual(&f.apply(&x), &rhs);
            let pivot_ratio = f.pivot_ratio();
            if !residual.is_finite() || x.iter().any(|v| !v.is_finite()) {
                return Err(singular());
            }
            Ok((x, ColumnDiagnostics { w, residual, pivot_ratio }))
        })
        .collect();
    let mut data = Vec::with_capacity(n * ws.len());
    let mut diags = Vec::with_capacity(ws.len());
    for c in cols {
        let (x, d) = c?;
        data.extend_from_slice(&x);
        diags.push(d);
    }
    Ok((DMatrix::from_vec(n, ws.len(), data), diags))
}

/// Solves every column of one rung for an explicit list of `w` values.
pub fn solve_density_at(
    k: i32,
    sign: Sign,
    epsilon: f64,
    grid: &SolveGrid,
    ws: &[f64],
    vorticity: &VorticityMode,
    flow: &ShearFlow,
    cutoffs: &CutoffSet,
) -> Result<SpectralDensityField> {
    let op = RungOperator::new(k, grid, flow, cutoffs);
    op.check_resolution(epsilon, KAPPA)?;
    let omega0 = vorticity.sample(&grid.y);
    let (theta, diagnostics) = solve_columns(&op, ws, epsilon, sign, |w| op.rhs(&omega0, w, epsilon, sign))?;
    Ok(SpectralDensityField {
        k,
        sign,
        epsilon,
        grid: grid.clone(),
        b: op.b.clone(),
        w: ws.to_vec(),
        theta,
        diagnostics,
    })
}

/// Solves every rung of the context on its own w grid.
pub fn solve_density(
    ctx: &AbsorptionContext,
    vorticity: &VorticityMode,
    flow: &ShearFlow,
    cutoffs: &CutoffSet,
) -> Result<Vec<SpectralDensityField>> {
    ctx.rungs
        .iter()
        .map(|r| solve_density_at(ctx.k, ctx.sign, r.epsilon, &r.grid, &r.w.nodes(), vorticity, flow, cutoffs))
        .collect()
}

/// Boundary response on `side` for the given columns of one rung.
#[allow(clippy::too_many_arguments)]
pub fn solve_boundary_response(
    k: i32,
    sign: Sign,
    epsilon: f64,
    grid: &SolveGrid,
    ws: &[f64],
    flow: &ShearFlow,
    cutoffs: &CutoffSet,
    side: usize,
) -> Result<BoundaryResponse> {
    if side > 1 {
        return Err(Error::InvalidParameter("boundary side must be 0 or 1".into()));
    }
    let op = RungOperator::new(k, grid, flow, cutoffs);
    op.check_resolution(epsilon, KAPPA)?;
    let forcing = op.boundary_forcing(side);
    let (phi, diags) = solve_columns(&op, ws, epsilon, sign, |_| forcing.clone())?;
    Ok(BoundaryResponse {
        side,
        epsilon,
        sign,
        w: ws.to_vec(),
        phi,
        residuals: diags.iter().map(|d| d.residual).collect(),
    })
}

/// Smallest singular value of `I + M` in the discrete `H^1_k` metric.
///
/// Computed by inverse iteration on `A^H W A x = lambda W x`, which only
/// needs solves with `A` and `A^H` (cheap thanks to the column-sparse
/// structure) and with the tridiagonal Gram matrix `W`.
#[allow(clippy::too_many_arguments)]
pub fn lap_sigma_min(
    k: i32,
    epsilon: f64,
    sign: Sign,
    w: f64,
    grid: &SolveGrid,
    flow: &ShearFlow,
    cutoffs: &CutoffSet,
) -> Result<f64> {
    let op = RungOperator::new(k, grid, flow, cutoffs);
    op.check_resolution(epsilon, KAPPA)?;
    sigma_min_of(&op, w, epsilon, sign)
}

/// As [`lap_sigma_min`] with a prebuilt operator.
pub fn sigma_min_of(op: &RungOperator, w: f64, epsilon: f64, sign: Sign) -> Result<f64> {
    if op.active.is_empty() {
        return Ok(1.0);
    }
    let mut f = op.factor_column(w, epsilon, sign).ok_or(Error::SingularSystem { w, epsilon })?;
    let n = op.grid.len();
    let gram = H1kGram::new(n, op.grid.h, op.k);
    let mut x: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.3 * (0.37 * i as f64).sin(), 0.2 * (0.11 * i as f64).cos()))
        .collect();
    let mut lambda = f64::MAX;
    for _ in 0..500 {
        let nx = gram.norm_sqr(&x).sqrt();
        x.iter_mut().for_each(|v| *v /= nx);
        let ax = f.apply(&x);
        let next = gram.norm_sqr(&ax);
        let done = (lambda - next).abs() <= 1e-6 * next.max(1e-300);
        lambda = next;
        if done {
            break;
        }
        let wx = gram.apply(&x);
        let z = f.solve_adjoint(&wx).ok_or(Error::SingularSystem { w, epsilon })?;
        let u = gram.solve(&z);
        x = f.solve(&u);
    }
    debug_assert!(dot(&x, &x).re.is_finite());
    Ok(lambda.max(0.0).sqrt())
}

/// How many ladder rungs the polynomial extrapolation uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExtrapolationOrder {
    /// Quadratic fit through the last three rungs; error from the linear one.
    #[default]
    LinearThenQuadratic,
    /// Degree-`p` fit through the last `p + 1` rungs; error from degree `p - 1`.
    Polynomial(usize),
}

impl ExtrapolationOrder {
    pub fn degree(self) -> usize {
        match self {
            ExtrapolationOrder::LinearThenQuadratic => 2,
            ExtrapolationOrder::Polynomial(p) => p,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Extrapolation {
    pub limit: Vec<Complex64>,
    pub error: Vec<f64>,
    pub error_max: f64,
}

fn value_at_zero(eps: &[f64], fields: &[&[Complex64]]) -> Vec<Complex64> {
    let n = fields[0].len();
    let weights: Vec<f64> = (0..eps.len())
        .map(|j| {
            (0..eps.len())
                .filter(|&m| m != j)
                .map(|m| -eps[m] / (eps[j] - eps[m]))
                .product()
        })
        .collect();
    (0..n)
        .map(|i| fields.iter().zip(&weights).map(|(f, w)| f[i] * *w).sum())
        .collect()
}

/// Polynomial extrapolation of a ladder of same-shaped arrays to `eps = 0`.
pub fn epsilon_extrapolate(
    eps: &[f64],
    fields: &[Vec<Complex64>],
    order: ExtrapolationOrder,
) -> Result<Extrapolation> {
    let p = order.degree();
    if eps.len() != fields.len() || eps.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 rungs with matching data, got {} epsilons and {} fields",
            eps.len(),
            fields.len()
        )));
    }
    if p == 0 || p + 1 > eps.len() {
        return Err(Error::InvalidParameter(format!("degree {p} needs between 2 and {} rungs", eps.len())));
    }
    let n = fields[0].len();
    if fields.iter().any(|f| f.len() != n) {
        return Err(Error::InvalidParameter("ladder arrays differ in shape".into()));
    }
    let diffs: Vec<f64> = fields
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
        .collect();
    let scale = fields.iter().flat_map(|f| f.iter().map(|v| v.norm())).fold(0.0, f64::max);
    let floor = 1e-13 * scale.max(1e-300);
    if diffs.windows(2).any(|d| d[1] > d[0] * (1.0 + 1e-6) + floor) {
        return Err(Error::NonCauchyLadder { differences: diffs });
    }
    let m = eps.len();
    let hi: Vec<&[Complex64]> = fields[m - p - 1..].iter().map(|f| f.as_slice()).collect();
    let lo: Vec<&[Complex64]> = fields[m - p..].iter().map(|f| f.as_slice()).collect();
    let limit = value_at_zero(&eps[m - p - 1..], &hi);
    let lower = value_at_zero(&eps[m - p..], &lo);
    let error: Vec<f64> = limit.iter().zip(&lower).map(|(a, b)| (a - b).norm()).collect();
    let error_max = error.iter().cloned().fold(0.0, f64::max);
    Ok(Extrapolation { limit, error, error_max })
}

/// Geometric ladder `eps_max * ratio^j`.
pub fn geometric_ladder(eps_max: f64, ratio: f64, rungs: usize) -> Vec<f64> {
    (0..rungs).map(|j| eps_max * ratio.powi(j as i32)).collect()
}
