//! Uniform grids with their quadrature weights, plus interpolation helpers shared
//! by every solver in the crate.

use num_complex::Complex64;

/// Uniform grid `lo, lo + h, ..., hi` with `n` intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformGrid {
    pub lo: f64,
    pub hi: f64,
    pub intervals: usize,
}

impl UniformGrid {
    pub fn new(lo: f64, hi: f64, intervals: usize) -> Self {
        assert!(hi > lo && intervals >= 1, "degenerate grid");
        Self { lo, hi, intervals }
    }

    /// Default extended grid for background flows.
    pub fn extended(points: usize) -> Self {
        Self::new(-2.5, 3.5, points.max(2) - 1)
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / self.intervals as f64
    }

    pub fn len(&self) -> usize {
        self.intervals + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.intervals {
            self.hi
        } else {
            self.lo + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn trapezoid_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.len(), self.spacing())
    }
}

pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    if n > 0 {
        w[0] = 0.5 * h;
        w[n - 1] = 0.5 * h;
    }
    w
}

/// Discrete L2 norm with trapezoid weights on a uniform grid.
pub fn l2_norm(values: &[Complex64], h: f64) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let mut s = 0.0;
    for (i, v) in values.iter().enumerate() {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        s += w * v.norm_sqr();
    }
    (s * h).sqrt()
}

pub fn l2_norm_real(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    let mut s = 0.0;
    for (i, v) in values.iter().enumerate() {
        let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        s += w * v * v;
    }
    (s * h).sqrt()
}

/// Second-order first derivative: centered inside, one-sided at the ends.
pub fn gradient(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    if n < 3 {
        if n == 2 {
            let s = (values[1] - values[0]) / h;
            d[0] = s;
            d[1] = s;
        }
        return d;
    }
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h);
    for i in 1..n - 1 {
        d[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    d
}

/// Four-point Lagrange interpolation on arbitrary increasing abscissae.
/// Returns `None` when `x` falls outside the sampled range.
pub fn cubic_interpolate(xs: &[f64], ys: &[Complex64], x: f64) -> Option<Complex64> {
    let n = xs.len();
    if n < 4 || x < xs[0] || x > xs[n - 1] {
        return None;
    }
    let j = match xs.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
        Ok(i) => return Some(ys[i]),
        Err(i) => i, // xs[j-1] < x < xs[j]
    };
    let start = j.saturating_sub(2).min(n - 4);
    let mut acc = Complex64::new(0.0, 0.0);
    for a in start..start + 4 {
        let mut l = 1.0;
        for b in start..start + 4 {
            if a != b {
                l *= (x - xs[b]) / (xs[a] - xs[b]);
            }
        }
        acc += ys[a] * l;
    }
    Some(acc)
}

/// Linear interpolation of samples on a uniform grid onto arbitrary points.
pub fn linear_resample(grid: &UniformGrid, values: &[Complex64], x: f64) -> Complex64 {
    let h = grid.spacing();
    let s = ((x - grid.lo) / h).clamp(0.0, grid.intervals as f64);
    let i = (s.floor() as usize).min(grid.intervals.saturating_sub(1));
    let f = s - i as f64;
    values[i] * (1.0 - f) + values[i + 1] * f
}

/// Weights of the Filon-trapezoid rule: the exact integral of
/// `exp(-i*omega*w)` against the piecewise-linear interpolant of the data on a
/// uniform grid starting at `w0` with spacing `dw` and `n` nodes.
pub fn filon_weights(w0: f64, dw: f64, n: usize, omega: f64) -> Vec<Complex64> {
    let theta = omega * dw;
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    if n < 2 {
        return out;
    }
    // On one panel, int_0^1 e^{-i theta s} (1-s) ds and int_0^1 e^{-i theta s} s ds.
    let i = Complex64::i();
    let (left, right) = if theta.abs() < 0.5 {
        // Power series; the closed form cancels catastrophically for small theta.
        let mut l = Complex64::new(0.0, 0.0);
        let mut r = Complex64::new(0.0, 0.0);
        let mut term = Complex64::new(1.0, 0.0); // (-i theta)^n / n!
        for n in 0..18 {
            let nf = n as f64;
            l += term / ((nf + 1.0) * (nf + 2.0));
            r += term / (nf + 2.0);
            term *= -i * theta / (nf + 1.0);
        }
        (l, r)
    } else {
        let e = (-i * theta).exp();
        let m0 = (Complex64::new(1.0, 0.0) - e) / (i * theta);
        let m1 = e / (-i * theta) + (e - 1.0) / (theta * theta);
        (m0 - m1, m1)
    };
    for j in 0..n - 1 {
        let phase = (-Complex64::i() * omega * (w0 + j as f64 * dw)).exp();
        out[j] += phase * left * dw;
        out[j + 1] += phase * right * dw;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn filon_matches_closed_form_for_linear_data() {
        // int_0^2 (1 + w) e^{-3 i w} dw computed analytically.
        let omega = 3.0;
        let n = 9;
        let wts = filon_weights(0.0, 0.25, n, omega);
        let got: Complex64 = (0..n).map(|j| wts[j] * (1.0 + 0.25 * j as f64)).sum();
        let i = Complex64::i();
        let f = |w: f64| {
            let e = (-i * omega * w).exp();
            e * (1.0 + w) / (-i * omega) - e / ((-i * omega) * (-i * omega))
        };
        let exact = f(2.0) - f(0.0);
        assert!((got - exact).norm() < 1e-13, "{got} vs {exact}");
    }

    #[test]
    fn filon_small_theta_branch_is_continuous() {
        let a = filon_weights(0.0, 1.0, 5, 0.4999999);
        let b = filon_weights(0.0, 1.0, 5, 0.5000001);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-6, "{x} {y}");
        }
    }

    #[test]
    fn cubic_interpolation_exact_for_cubics() {
        let xs: Vec<f64> = (0..7).map(|i| (i as f64).powf(1.3)).collect();
        let p = |x: f64| Complex64::new(x * x * x - 2.0 * x, 0.5 * x * x);
        let ys: Vec<Complex64> = xs.iter().map(|&x| p(x)).collect();
        for &x in &[0.3, 1.7, 4.4, 9.0] {
            let v = cubic_interpolate(&xs, &ys, x).unwrap();
            assert!((v - p(x)).norm() < 1e-10);
        }
        assert!(cubic_interpolate(&xs, &ys, -1.0).is_none());
    }
}
