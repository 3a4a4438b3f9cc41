//! Small dense and banded solvers.

use nalgebra::{DMatrix, DVector, LU, Dyn};
use num_complex::Complex64;

type CLu = LU<Complex64, Dyn, Dyn>;

/// Factorised real tridiagonal matrix, applied to complex right-hand sides.
#[derive(Clone, Debug)]
pub struct Tridiagonal {
    lower: Vec<f64>,
    cprime: Vec<f64>,
    denom: Vec<f64>,
}

impl Tridiagonal {
    /// `lower[i]` couples row `i` to `i-1` (ignored for `i = 0`), `upper[i]`
    /// couples row `i` to `i+1` (ignored for the last row).
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64]) -> Self {
        let n = diag.len();
        let mut cprime = vec![0.0; n];
        let mut denom = vec![0.0; n];
        denom[0] = diag[0];
        if n > 1 {
            cprime[0] = upper[0] / denom[0];
        }
        for i in 1..n {
            denom[i] = diag[i] - lower[i] * cprime[i - 1];
            if i + 1 < n {
                cprime[i] = upper[i] / denom[i];
            }
        }
        Self { lower: lower.to_vec(), cprime, denom }
    }

    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = rhs.len();
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        x[0] = rhs[0] / self.denom[0];
        for i in 1..n {
            x[i] = (rhs[i] - x[i - 1] * self.lower[i]) / self.denom[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] = x[i] - x[i + 1] * self.cprime[i];
        }
        x
    }
}

/// Gram matrix of the discrete `H^1_k` inner product
/// `k^2 <u, v> + <Du, Dv>` on a uniform grid: trapezoid mass plus staggered
/// (midpoint-centred) differences. Symmetric positive definite tridiagonal.
#[derive(Clone, Debug)]
pub struct H1kGram {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    factor: Tridiagonal,
}

impl H1kGram {
    pub fn new(n: usize, h: f64, k: f64) -> Self {
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n];
        for (i, d) in diag.iter_mut().enumerate() {
            let mass = if i == 0 || i + 1 == n { 0.5 * h } else { h };
            *d = k * k * mass;
        }
        for i in 0..n.saturating_sub(1) {
            diag[i] += 1.0 / h;
            diag[i + 1] += 1.0 / h;
            off[i] = -1.0 / h;
        }
        let lower: Vec<f64> = (0..n).map(|i| if i == 0 { 0.0 } else { off[i - 1] }).collect();
        let upper = off;
        let factor = Tridiagonal::new(&lower, &diag, &upper);
        Self { lower, diag, upper, factor }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut s = x[i] * self.diag[i];
                if i > 0 {
                    s += x[i - 1] * self.lower[i];
                }
                if i + 1 < n {
                    s += x[i + 1] * self.upper[i];
                }
                s
            })
            .collect()
    }

    pub fn solve(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.factor.solve(x)
    }

    pub fn norm_sqr(&self, x: &[Complex64]) -> f64 {
        dot(x, &self.apply(x)).re
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.diag.len();
        DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if j + 1 == i {
                self.lower[i]
            } else if i + 1 == j {
                self.upper[i]
            } else {
                0.0
            }
        })
    }
}

/// `sum conj(a_i) b_i`.
pub fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `I + M` where `M` has nonzero columns only on the index set `active`.
///
/// In the ordering (active, passive) the matrix is block lower triangular
/// with identity in the passive block, so only the active block needs a
/// dense LU; the rest is back-substitution. This is exact, not an
/// approximation.
pub struct ColumnSparseSystem {
    n: usize,
    active: Vec<usize>,
    /// `M[:, active]`, dense `n x s`.
    cols: DMatrix<Complex64>,
    lu: Option<CLu>,
    lu_adjoint: Option<CLu>,
}

impl ColumnSparseSystem {
    pub fn new(n: usize, active: Vec<usize>, cols: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(cols.ncols(), active.len());
        let s = active.len();
        let lu = if s > 0 {
            let mut a = DMatrix::from_fn(s, s, |i, j| cols[(active[i], j)]);
            for i in 0..s {
                a[(i, i)] += Complex64::new(1.0, 0.0);
            }
            Some(a.lu())
        } else {
            None
        };
        Self { n, active, cols, lu, lu_adjoint: None }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Ratio of extreme pivots of the active block; 1 when there is none.
    pub fn pivot_ratio(&self) -> f64 {
        match &self.lu {
            None => 1.0,
            Some(lu) => {
                let u = lu.u();
                let d: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].norm()).collect();
                let max = d.iter().cloned().fold(0.0, f64::max);
                let min = d.iter().cloned().fold(f64::MAX, f64::min);
                if min == 0.0 {
                    f64::INFINITY
                } else {
                    max / min
                }
            }
        }
    }

    /// `(I + M) x`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = x.to_vec();
        if self.active.is_empty() {
            return out;
        }
        let xs = DVector::from_iterator(self.active.len(), self.active.iter().map(|&i| x[i]));
        let mx = &self.cols * xs;
        for (o, m) in out.iter_mut().zip(mx.iter()) {
            *o += m;
        }
        out
    }

    /// `(I + M)^H x`.
    pub fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = x.to_vec();
        if self.active.is_empty() {
            return out;
        }
        let xv = DVector::from_column_slice(x);
        let t = self.cols.ad_mul(&xv);
        for (j, &i) in self.active.iter().enumerate() {
            out[i] += t[j];
        }
        out
    }

    /// Solves `(I + M) x = b`. Returns `None` when the active block is singular.
    pub fn solve(&self, b: &[Complex64]) -> Option<Vec<Complex64>> {
        let Some(lu) = &self.lu else {
            return Some(b.to_vec());
        };
        let bs = DVector::from_iterator(self.active.len(), self.active.iter().map(|&i| b[i]));
        let xs = lu.solve(&bs)?;
        let mut x = b.to_vec();
        let mx = &self.cols * &xs;
        for (xi, m) in x.iter_mut().zip(mx.iter()) {
            *xi -= m;
        }
        for (j, &i) in self.active.iter().enumerate() {
            x[i] = xs[j];
        }
        Some(x)
    }

    /// One solve plus one step of iterative refinement.
    pub fn solve_refined(&self, b: &[Complex64]) -> Option<Vec<Complex64>> {
        let mut x = self.solve(b)?;
        if self.lu.is_some() {
            let ax = self.apply(&x);
            let r: Vec<Complex64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
            let d = self.solve(&r)?;
            for (xi, di) in x.iter_mut().zip(&d) {
                *xi += di;
            }
        }
        Some(x)
    }

    /// Solves `(I + M)^H x = b`.
    pub fn solve_adjoint(&mut self, b: &[Complex64]) -> Option<Vec<Complex64>> {
        if self.active.is_empty() {
            return Some(b.to_vec());
        }
        if self.lu_adjoint.is_none() {
            let s = self.active.len();
            let mut a = DMatrix::from_fn(s, s, |i, j| self.cols[(self.active[j], i)].conj());
            for i in 0..s {
                a[(i, i)] += Complex64::new(1.0, 0.0);
            }
            self.lu_adjoint = Some(a.lu());
        }
        // Passive part of x equals b; correct the active right-hand side.
        let mut passive = b.to_vec();
        for &i in &self.active {
            passive[i] = Complex64::new(0.0, 0.0);
        }
        let pv = DVector::from_column_slice(&passive);
        let corr = self.cols.ad_mul(&pv);
        let rhs = DVector::from_iterator(
            self.active.len(),
            self.active.iter().enumerate().map(|(j, &i)| b[i] - corr[j]),
        );
        let xs = self.lu_adjoint.as_ref().unwrap().solve(&rhs)?;
        let mut x = passive;
        for (j, &i) in self.active.iter().enumerate() {
            x[i] = xs[j];
        }
        Some(x)
    }

    /// Full dense `I + M`, for checks on small problems.
    pub fn dense(&self) -> DMatrix<Complex64> {
        let mut a = DMatrix::identity(self.n, self.n);
        for (j, &c) in self.active.iter().enumerate() {
            for i in 0..self.n {
                a[(i, c)] += self.cols[(i, j)];
            }
        }
        a
    }
}

/// Real matrix `L = Q H Q^T` reduced once, then solved against many complex
/// shifts `(L - z) u = c` at `O(s^2)` each.
#[derive(Clone, Debug)]
pub struct ShiftedHessenberg {
    q: DMatrix<f64>,
    h: DMatrix<f64>,
}

impl ShiftedHessenberg {
    pub fn new(l: DMatrix<f64>) -> Self {
        assert!(l.is_square());
        let (q, h) = nalgebra::linalg::Hessenberg::new(l).unpack();
        Self { q, h }
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// Factors `H - z` once for repeated solves. `None` if a pivot vanishes.
    pub fn factor(&self, z: Complex64) -> Option<ShiftedFactor> {
        let s = self.dim();
        // Row-major copy; row i is stored from column i - 1 on.
        let mut a: Vec<Vec<Complex64>> = (0..s)
            .map(|i| {
                (i.saturating_sub(1)..s)
                    .map(|j| Complex64::new(self.h[(i, j)], 0.0) - if i == j { z } else { Complex64::new(0.0, 0.0) })
                    .collect()
            })
            .collect();
        let mut swaps = vec![false; s];
        let mut mult = vec![Complex64::new(0.0, 0.0); s];
        for kk in 0..s.saturating_sub(1) {
            if a[kk + 1][at(kk + 1, kk)].norm() > a[kk][at(kk, kk)].norm() {
                let (top, bottom) = a.split_at_mut(kk + 1);
                let (r0, r1) = (&mut top[kk], &mut bottom[0]);
                for j in kk..s {
                    std::mem::swap(&mut r0[at(kk, j)], &mut r1[at(kk + 1, j)]);
                }
                swaps[kk] = true;
            }
            let piv = a[kk][at(kk, kk)];
            if piv.norm() == 0.0 {
                return None;
            }
            let m = a[kk + 1][at(kk + 1, kk)] / piv;
            if m.norm() != 0.0 {
                let (top, bottom) = a.split_at_mut(kk + 1);
                let (r0, r1) = (&top[kk], &mut bottom[0]);
                for j in kk + 1..s {
                    r1[at(kk + 1, j)] -= m * r0[at(kk, j)];
                }
            }
            mult[kk] = m;
            a[kk + 1][at(kk + 1, kk)] = Complex64::new(0.0, 0.0);
        }
        let d: Vec<f64> = (0..s).map(|i| a[i][at(i, i)].norm()).collect();
        let dmax = d.iter().cloned().fold(0.0, f64::max);
        let dmin = d.iter().cloned().fold(f64::MAX, f64::min);
        if s > 0 && dmin == 0.0 {
            return None;
        }
        Some(ShiftedFactor { a, swaps, mult, pivot_ratio: if s > 0 { dmax / dmin } else { 1.0 } })
    }

    /// Solves `(L - z) u = c` with a factor from [`ShiftedHessenberg::factor`].
    pub fn solve_factored(&self, f: &ShiftedFactor, c: &[Complex64]) -> Vec<Complex64> {
        let s = self.dim();
        if s == 0 {
            return Vec::new();
        }
        let re = DVector::from_iterator(s, c.iter().map(|v| v.re));
        let im = DVector::from_iterator(s, c.iter().map(|v| v.im));
        let (qr, qi) = (self.q.tr_mul(&re), self.q.tr_mul(&im));
        let mut rhs: Vec<Complex64> = (0..s).map(|i| Complex64::new(qr[i], qi[i])).collect();
        for kk in 0..s - 1 {
            if f.swaps[kk] {
                rhs.swap(kk, kk + 1);
            }
            let t = rhs[kk];
            rhs[kk + 1] -= f.mult[kk] * t;
        }
        for i in (0..s).rev() {
            let row = &f.a[i];
            let mut acc = rhs[i];
            for j in i + 1..s {
                acc -= row[at(i, j)] * rhs[j];
            }
            rhs[i] = acc / row[at(i, i)];
        }
        let ur = DVector::from_iterator(s, rhs.iter().map(|v| v.re));
        let ui = DVector::from_iterator(s, rhs.iter().map(|v| v.im));
        let (xr, xi) = (&self.q * ur, &self.q * ui);
        (0..s).map(|i| Complex64::new(xr[i], xi[i])).collect()
    }

    /// Solves `(L - z)^T u = c` with the factor of `L - z`.
    pub fn solve_factored_transpose(&self, f: &ShiftedFactor, c: &[Complex64]) -> Vec<Complex64> {
        let s = self.dim();
        if s == 0 {
            return Vec::new();
        }
        let re = DVector::from_iterator(s, c.iter().map(|v| v.re));
        let im = DVector::from_iterator(s, c.iter().map(|v| v.im));
        let (qr, qi) = (self.q.tr_mul(&re), self.q.tr_mul(&im));
        let mut a: Vec<Complex64> = (0..s).map(|i| Complex64::new(qr[i], qi[i])).collect();
        // U^T a = c, forward.
        for j in 0..s {
            let row = &f.a[j];
            let aj = a[j] / row[at(j, j)];
            a[j] = aj;
            for i in j + 1..s {
                a[i] -= row[at(j, i)] * aj;
            }
        }
        // Undo the elimination steps in reverse, transposed.
        for kk in (0..s - 1).rev() {
            let t = a[kk + 1];
            a[kk] -= f.mult[kk] * t;
            if f.swaps[kk] {
                a.swap(kk, kk + 1);
            }
        }
        let ur = DVector::from_iterator(s, a.iter().map(|v| v.re));
        let ui = DVector::from_iterator(s, a.iter().map(|v| v.im));
        let (xr, xi) = (&self.q * ur, &self.q * ui);
        (0..s).map(|i| Complex64::new(xr[i], xi[i])).collect()
    }

    /// Solves `(L - z) u = c`, returning `u` and the extreme-pivot ratio.
    pub fn solve(&self, z: Complex64, c: &[Complex64]) -> Option<(Vec<Complex64>, f64)> {
        let f = self.factor(z)?;
        Some((self.solve_factored(&f, c), f.pivot_ratio))
    }
}

/// Position of column `j` in the stored row `i` of a Hessenberg factor.
fn at(i: usize, j: usize) -> usize {
    j - i.saturating_sub(1)
}

/// LU factors of a shifted upper Hessenberg matrix with adjacent-row pivoting.
#[derive(Clone, Debug)]
pub struct ShiftedFactor {
    a: Vec<Vec<Complex64>>,
    swaps: Vec<bool>,
    mult: Vec<Complex64>,
    pub pivot_ratio: f64,
}

/// Relative residual `|A x - b| / |b|` in the Euclidean norm.
pub fn relative_residual(ax: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = ax.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|q| q.norm_sqr()).sum::<f64>().sqrt();
    if den == 0.0 {
        num
    } else {
        num / den
    }
}
