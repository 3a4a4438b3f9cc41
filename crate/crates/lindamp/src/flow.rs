//! Background shear flows and their cutoffs. Initial vorticity modes live here too.
//!
//! A flow is stored as its closed form plus cached samples on an extended
//! uniform grid. Derivatives always come from the closed form because `b''`
//! enters every integral kernel directly.

use crate::error::{Error, Result};
use crate::grid::UniformGrid;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Family and parameters of a background flow.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FlowSpec {
    Couette,
    PerturbedCouette {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// `b'' = a g` on the channel with `g(y) = phi(2y - 1)`, balanced by
    /// half-height lobes of opposite sign on `[-1, 0]` and `[1, 2]` so the
    /// perturbation stays compactly supported. `b''` is one-signed inside
    /// the channel and vanishes to every order at both walls.
    CompensatedBump { amplitude: f64 },
}

/// Compactly supported mollifier normalised to 1 at the origin, with its
/// first two derivatives. Support is `|r| < 1`.
fn mollifier(r: f64) -> (f64, f64, f64) {
    if r.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let q = 1.0 - r * r;
    let phi = (1.0 - 1.0 / q).exp();
    let d1 = phi * (-2.0 * r / (q * q));
    let d2 = phi * (4.0 * r * r / q.powi(4) - 2.0 / (q * q) - 8.0 * r * r / q.powi(3));
    (phi, d1, d2)
}

/// Monotone background profile `b` with cached samples.
#[derive(Clone, Debug)]
pub struct ShearFlow {
    pub spec: FlowSpec,
    pub grid: UniformGrid,
    pub b: Vec<f64>,
    pub db: Vec<f64>,
    pub d2b: Vec<f64>,
    pub c_min: f64,
    /// Interval outside which `b''` vanishes identically; `None` for Couette.
    pub support_d2b: Option<(f64, f64)>,
}

impl ShearFlow {
    /// Point evaluation of `(b, b', b'')` from the closed form.
    pub fn eval(&self, y: f64) -> (f64, f64, f64) {
        eval_spec(&self.spec, y)
    }

    pub fn b_at(&self, y: f64) -> f64 {
        self.eval(y).0
    }

    pub fn db_at(&self, y: f64) -> f64 {
        self.eval(y).1
    }

    pub fn d2b_at(&self, y: f64) -> f64 {
        self.eval(y).2
    }

    pub fn is_couette(&self) -> bool {
        matches!(self.spec, FlowSpec::Couette)
    }

    /// Range of `b` over the extended grid.
    pub fn range(&self) -> (f64, f64) {
        (self.b[0], self.b[self.b.len() - 1])
    }

    /// Largest `b'` on the extended grid.
    pub fn db_max(&self) -> f64 {
        self.db.iter().cloned().fold(f64::MIN, f64::max)
    }

    /// Largest `|b|` on the channel `[0, 1]`.
    pub fn channel_b_max(&self) -> f64 {
        self.b_at(0.0).abs().max(self.b_at(1.0).abs())
    }

    /// Solves `b(y) = v` by safeguarded Newton iteration.
    pub fn inverse_b(&self, v: f64) -> Result<f64> {
        let (lo_v, hi_v) = self.range();
        if !(lo_v..=hi_v).contains(&v) {
            return Err(Error::OutOfRange { value: v, lo: lo_v, hi: hi_v });
        }
        let (mut lo, mut hi) = (self.grid.lo, self.grid.hi);
        let tol = 1e-13 * (1.0 + v.abs());
        let mut y = v.clamp(lo, hi);
        for _ in 0..200 {
            let (b, db, _) = self.eval(y);
            let f = b - v;
            if f.abs() <= tol {
                return Ok(y);
            }
            if f > 0.0 {
                hi = y;
            } else {
                lo = y;
            }
            let step = y - f / db;
            y = if step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        }
        Ok(y)
    }

    /// `B(v) = b'(b^{-1}(v))`.
    pub fn big_b(&self, v: f64) -> Result<f64> {
        Ok(self.db_at(self.inverse_b(v)?))
    }
}

/// Samples of `G = int_0^y g` and `S = int_0^y s g(s) ds` on `[0, 1]`.
struct LobeTable {
    h: f64,
    g1: Vec<f64>,
    s1: Vec<f64>,
}

const LOBE_INTERVALS: usize = 4096;

fn lobe(y: f64) -> f64 {
    mollifier(2.0 * y - 1.0).0
}

fn lobe_table() -> &'static LobeTable {
    static TABLE: std::sync::OnceLock<LobeTable> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        // Five-point Gauss-Legendre on each cell.
        const X: [f64; 5] = [-0.906_179_845_938_664, -0.538_469_310_105_683, 0.0, 0.538_469_310_105_683, 0.906_179_845_938_664];
        const W: [f64; 5] = [0.236_926_885_056_189, 0.478_628_670_499_366, 0.568_888_888_888_889, 0.478_628_670_499_366, 0.236_926_885_056_189];
        let n = LOBE_INTERVALS;
        let h = 1.0 / n as f64;
        let (mut g1, mut s1) = (vec![0.0; n + 1], vec![0.0; n + 1]);
        for i in 0..n {
            let (mut a, mut b) = (0.0, 0.0);
            for (x, w) in X.iter().zip(W) {
                let s = (i as f64 + 0.5 * (1.0 + x)) * h;
                a += w * lobe(s);
                b += w * s * lobe(s);
            }
            g1[i + 1] = g1[i] + 0.5 * h * a;
            s1[i + 1] = s1[i] + 0.5 * h * b;
        }
        LobeTable { h, g1, s1 }
    })
}

/// Cubic Hermite interpolation on one cell.
fn hermite(p0: f64, p1: f64, d0: f64, d1: f64, h: f64, u: f64) -> f64 {
    let (u2, u3) = (u * u, u * u * u);
    (2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + u) * h * d0 + (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * h * d1
}

/// `(K, G, g)` with `K = int_0^y G`, extended by 0 below 0 and linearly above 1.
fn lobe_integrals(y: f64) -> (f64, f64, f64) {
    let t = lobe_table();
    if y <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let n = LOBE_INTERVALS;
    if y >= 1.0 {
        let (m, s) = (t.g1[n], t.s1[n]);
        return (m * y - s, m, 0.0);
    }
    let i = ((y / t.h) as usize).min(n - 1);
    let (y0, y1) = (i as f64 * t.h, (i + 1) as f64 * t.h);
    let u = (y - y0) / t.h;
    let g = lobe(y);
    let gi = hermite(t.g1[i], t.g1[i + 1], lobe(y0), lobe(y1), t.h, u);
    let si = hermite(t.s1[i], t.s1[i + 1], y0 * lobe(y0), y1 * lobe(y1), t.h, u);
    (y * gi - si, gi, g)
}

fn eval_spec(spec: &FlowSpec, y: f64) -> (f64, f64, f64) {
    match *spec {
        FlowSpec::CompensatedBump { amplitude } => {
            let (k0, g0, l0) = lobe_integrals(y);
            let (kp, gp, lp) = lobe_integrals(y + 1.0);
            let (km, gm, lm) = lobe_integrals(y - 1.0);
            (
                y + amplitude * (k0 - 0.5 * (kp + km)),
                1.0 + amplitude * (g0 - 0.5 * (gp + gm)),
                amplitude * (l0 - 0.5 * (lp + lm)),
            )
        }
        FlowSpec::Couette => (y, 1.0, 0.0),
        FlowSpec::PerturbedCouette { amplitude, center, width } => {
            // Scaled by the width so that `amplitude` measures the slope change.
            let (p, p1, p2) = mollifier((y - center) / width);
            (y + amplitude * width * p, 1.0 + amplitude * p1, amplitude * p2 / width)
        }
    }
}

/// Builds a flow and checks strict monotonicity and the support of `b''`.
pub fn build_flow(spec: &FlowSpec, grid: &UniformGrid) -> Result<ShearFlow> {
    let support_d2b = match *spec {
        FlowSpec::Couette => None,
        FlowSpec::CompensatedBump { amplitude } => {
            if !amplitude.is_finite() {
                return Err(Error::InvalidParameter(format!("amplitude must be finite, got {amplitude}")));
            }
            Some((-1.0, 2.0))
        }
        FlowSpec::PerturbedCouette { amplitude, center, width } => {
            if !(width > 0.0) || !amplitude.is_finite() || !center.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "perturbed couette needs finite amplitude/center and width > 0, got {amplitude}, {center}, {width}"
                )));
            }
            let s = (center - width, center + width);
            if s.0 < -1.0 || s.1 > 2.0 {
                return Err(Error::InvalidParameter(format!(
                    "bump support [{:.3}, {:.3}] must lie inside [-1, 2]",
                    s.0, s.1
                )));
            }
            Some(s)
        }
    };
    let nodes = grid.nodes();
    let mut b = Vec::with_capacity(nodes.len());
    let mut db = Vec::with_capacity(nodes.len());
    let mut d2b = Vec::with_capacity(nodes.len());
    for &y in &nodes {
        let (v, d1, d2) = eval_spec(spec, y);
        b.push(v);
        db.push(d1);
        d2b.push(d2);
    }
    // The bump can be narrower than the cached grid, so scan it finely too.
    let mut min_db = (f64::MAX, 0.0);
    for (&y, &d) in nodes.iter().zip(&db) {
        if d < min_db.0 {
            min_db = (d, y);
        }
    }
    if let Some((s0, s1)) = support_d2b {
        let m = 20_000;
        for i in 0..=m {
            let y = s0 + (s1 - s0) * i as f64 / m as f64;
            let d = eval_spec(spec, y).1;
            if d < min_db.0 {
                min_db = (d, y);
            }
        }
    }
    if min_db.0 <= 0.0 {
        return Err(Error::NotMonotone { min_db: min_db.0, at: min_db.1 });
    }
    Ok(ShearFlow { spec: spec.clone(), grid: grid.clone(), b, db, d2b, c_min: min_db.0, support_d2b })
}

/// C-infinity step: 0 for `x <= 0`, 1 for `x >= 1`, strictly increasing between.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    a / (a + b)
}

/// How the w-axis is partitioned between the two boundary regions and the bulk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    #[default]
    ThreeRegion,
    /// Everything assigned to the bulk region.
    BulkOnly,
}

/// Cutoff functions for one wavenumber.
#[derive(Clone, Debug)]
pub struct CutoffSet {
    pub k: f64,
    pub delta0: f64,
    pub partition: PartitionKind,
    // b(delta0), b(2 delta0), b(1 - 2 delta0), b(1 - delta0)
    marks: [f64; 4],
}

impl CutoffSet {
    /// Channel cutoff: 1 on [0, 1], 0 outside (-delta0/k, 1 + delta0/k).
    pub fn psi_k(&self, y: f64) -> f64 {
        let m = self.margin();
        if (0.0..=1.0).contains(&y) {
            1.0
        } else if y < 0.0 {
            smooth_step((y + m) / m)
        } else {
            smooth_step((1.0 + m - y) / m)
        }
    }

    /// Half-width `delta0 / |k|` of the extension margin.
    pub fn margin(&self) -> f64 {
        self.delta0 / self.k
    }

    /// Partition of unity in w; `j` in 1..=3.
    pub fn upsilon(&self, j: usize, w: f64) -> f64 {
        if self.partition == PartitionKind::BulkOnly {
            return if j == 2 { 1.0 } else { 0.0 };
        }
        let [b1, b2, b3, b4] = self.marks;
        let u1 = 1.0 - smooth_step((w - b1) / (b2 - b1));
        let u3 = smooth_step((w - b3) / (b4 - b3));
        match j {
            1 => u1,
            2 => 1.0 - u1 - u3,
            3 => u3,
            _ => panic!("upsilon index must be 1, 2 or 3"),
        }
    }

    /// Interior cutoff: 1 on [1/8, 7/8], 0 outside [1/16, 15/16].
    pub fn chi_in(&self, y: f64) -> f64 {
        if y <= 0.5 {
            smooth_step((y - 1.0 / 16.0) * 16.0)
        } else {
            smooth_step((15.0 / 16.0 - y) * 16.0)
        }
    }

    /// Boundary cutoff at y = 0: 1 on [-1/8, 1/8], 0 outside [-1/4, 1/4].
    pub fn chi_b0(&self, y: f64) -> f64 {
        smooth_step((0.25 - y.abs()) * 8.0)
    }

    pub fn chi_b1(&self, y: f64) -> f64 {
        self.chi_b0(1.0 - y)
    }
}

pub fn build_cutoffs(flow: &ShearFlow, k: i32, delta0: f64) -> Result<CutoffSet> {
    build_cutoffs_with(flow, k, delta0, PartitionKind::ThreeRegion)
}

pub fn build_cutoffs_with(
    flow: &ShearFlow,
    k: i32,
    delta0: f64,
    partition: PartitionKind,
) -> Result<CutoffSet> {
    if k == 0 {
        return Err(Error::InvalidParameter("wavenumber must be nonzero".into()));
    }
    if !(delta0 > 0.0 && delta0 < 0.1) {
        return Err(Error::InvalidParameter(format!("delta0 must lie in (0, 1/10), got {delta0}")));
    }
    let marks = [
        flow.b_at(delta0),
        flow.b_at(2.0 * delta0),
        flow.b_at(1.0 - 2.0 * delta0),
        flow.b_at(1.0 - delta0),
    ];
    Ok(CutoffSet { k: (k as f64).abs(), delta0, partition, marks })
}

/// Shape of an initial vorticity profile on [0, 1], continued analytically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    /// Mollifier bump supported in `[center - half_width, center + half_width]`.
    Bump { center: f64, half_width: f64 },
    Gaussian { center: f64, width: f64 },
    /// `sum c_n y^n`.
    Polynomial { coefficients: Vec<f64> },
}

impl Profile {
    fn eval(&self, y: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Bump { center, half_width } => mollifier((y - center) / half_width).0,
            Profile::Gaussian { center, width } => (-(y - center).powi(2) / (2.0 * width * width)).exp(),
            Profile::Polynomial { coefficients } => {
                coefficients.iter().rev().fold(0.0, |acc, c| acc * y + c)
            }
        }
    }
}

/// Initial vorticity profile with optional wall vanishing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VorticitySpec {
    pub profile: Profile,
    /// Order of the zero imposed at y = 0 (0, 1 or 2).
    #[serde(default)]
    pub vanish_left: u8,
    /// Order of the zero imposed at y = 1 (0, 1 or 2).
    #[serde(default)]
    pub vanish_right: u8,
    /// Overall complex scale, `[re, im]`.
    #[serde(default = "unit_scale")]
    pub scale: [f64; 2],
    /// If set, rescale so that the real part integrates to this over [0, 1].
    #[serde(default)]
    pub mass: Option<f64>,
}

fn unit_scale() -> [f64; 2] {
    [1.0, 0.0]
}

impl VorticitySpec {
    pub fn new(profile: Profile) -> Self {
        Self { profile, vanish_left: 0, vanish_right: 0, scale: unit_scale(), mass: None }
    }

    pub fn vanishing(mut self, left: u8, right: u8) -> Self {
        self.vanish_left = left;
        self.vanish_right = right;
        self
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass = Some(mass);
        self
    }
}

/// Plateau equal to 1 on [0, 1] and 0 outside [-2, 2].
fn plateau(y: f64) -> f64 {
    if y < 0.0 {
        smooth_step((y + 2.0) / 2.0)
    } else if y > 1.0 {
        smooth_step(2.0 - y)
    } else {
        1.0
    }
}

/// One Fourier mode of the initial vorticity.
#[derive(Clone, Debug)]
pub struct VorticityMode {
    pub k: i32,
    pub spec: VorticitySpec,
    scale: Complex64,
    /// Samples on the flow's extended grid.
    pub omega0: Vec<Complex64>,
    pub boundary_values: (Complex64, Complex64),
}

impl VorticityMode {
    /// Closed-form evaluation of the extended initial vorticity.
    pub fn eval(&self, y: f64) -> Complex64 {
        self.scale * raw_profile(&self.spec, y)
    }

    /// `f0(v) = omega0(b^{-1}(v))`.
    pub fn f0(&self, flow: &ShearFlow, v: f64) -> Result<Complex64> {
        Ok(self.eval(flow.inverse_b(v)?))
    }

    /// Evaluates on an arbitrary set of points.
    pub fn sample(&self, ys: &[f64]) -> Vec<Complex64> {
        ys.iter().map(|&y| self.eval(y)).collect()
    }
}

fn raw_profile(spec: &VorticitySpec, y: f64) -> f64 {
    spec.profile.eval(y)
        * y.powi(spec.vanish_left as i32)
        * (1.0 - y).powi(spec.vanish_right as i32)
        * plateau(y)
}

pub fn build_vorticity(spec: &VorticitySpec, flow: &ShearFlow, k: i32) -> Result<VorticityMode> {
    if spec.vanish_left > 2 || spec.vanish_right > 2 {
        return Err(Error::InvalidParameter("vanishing order must be 0, 1 or 2".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("wavenumber must be nonzero".into()));
    }
    let mut scale = Complex64::new(spec.scale[0], spec.scale[1]);
    if let Some(target) = spec.mass {
        // Composite Simpson on [0, 1].
        let m = 4000;
        let h = 1.0 / m as f64;
        let mut s = 0.0;
        for i in 0..=m {
            let c = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            s += c * raw_profile(spec, i as f64 * h);
        }
        let mass = s * h / 3.0;
        if mass.abs() < 1e-14 {
            return Err(Error::InvalidParameter("profile has zero mass, cannot normalise".into()));
        }
        scale = Complex64::new(target / mass, 0.0);
    }
    let omega0 = flow.grid.nodes().iter().map(|&y| scale * raw_profile(spec, y)).collect();
    let boundary_values = (scale * raw_profile(spec, 0.0), scale * raw_profile(spec, 1.0));
    Ok(VorticityMode { k, spec: spec.clone(), scale, omega0, boundary_values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mollifier_derivatives_match_finite_differences() {
        let h = 1e-5;
        for &r in &[-0.7, -0.2, 0.0, 0.35, 0.9] {
            let (_, d1, d2) = mollifier(r);
            let fd1 = (mollifier(r + h).0 - mollifier(r - h).0) / (2.0 * h);
            let fd2 = (mollifier(r + h).1 - mollifier(r - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-6, "r={r}");
            assert!((d2 - fd2).abs() < 1e-5, "r={r}");
        }
        assert_eq!(mollifier(0.0).2, -2.0);
    }

    #[test]
    fn smooth_step_is_a_step() {
        assert_eq!(smooth_step(-0.1), 0.0);
        assert_eq!(smooth_step(1.1), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }
}
