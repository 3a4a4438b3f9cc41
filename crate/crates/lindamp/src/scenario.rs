//! Scenario configuration files.
//!
//! A scenario is one TOML document. Every field except `flow` and
//! `vorticity` has a default, so a minimal file reads
//!
//! ```toml
//! name = "couette"
//! k = [1]
//!
//! [flow]
//! family = "couette"
//!
//! [vorticity.profile]
//! kind = "gaussian"
//! center = 0.5
//! width = 0.1
//! ```

use crate::checks::CheckId;
use crate::density::{LadderOptions, DEFAULT_LADDER, KAPPA};
use crate::error::{Error, Result};
use crate::flow::{build_flow, build_vorticity, FlowSpec, ShearFlow, VorticitySpec};
use crate::grid::UniformGrid;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// Discretization parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Intervals on `[0, 1]` of the coarsest density grid.
    pub base_n: usize,
    /// Points per `epsilon` in `v` and `w`.
    pub kappa: f64,
    /// Padding of the `w` range beyond `[b(0), b(1)]`.
    pub w_pad: f64,
    /// Strictly decreasing epsilon ladder.
    pub ladder: Vec<f64>,
    /// Intervals of the time-stepper grid.
    pub oracle_n: usize,
    /// Collar width of the cutoffs.
    pub delta0: f64,
    /// Intervals of the extended flow grid.
    pub flow_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            base_n: 64,
            kappa: KAPPA,
            w_pad: 0.3,
            ladder: DEFAULT_LADDER.to_vec(),
            oracle_n: 2048,
            delta0: 0.05,
            flow_points: 2048,
        }
    }
}

/// Time windows of the profile stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub samples: usize,
    /// Samples per sliding window; stride is half of it.
    pub window: usize,
    /// Interior rows, spread over `[1/8, 7/8]`.
    pub rows: usize,
    /// Log-spaced times of the near-wall expansion fit.
    pub boundary_t_start: f64,
    pub boundary_t_end: f64,
    pub boundary_samples: usize,
    pub boundary_order: usize,
    pub boundary_extra: usize,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        Self {
            t_start: 60.0,
            t_end: 180.0,
            samples: 121,
            window: 61,
            rows: 25,
            boundary_t_start: 20.0,
            boundary_t_end: 200.0,
            boundary_samples: 96,
            boundary_order: 4,
            boundary_extra: 1,
        }
    }
}

impl ProfileConfig {
    pub fn times(&self) -> Vec<f64> {
        linspace(self.t_start, self.t_end, self.samples)
    }

    pub fn boundary_times(&self) -> Vec<f64> {
        let (lo, hi, n) = (self.boundary_t_start, self.boundary_t_end, self.boundary_samples);
        (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1).max(1) as f64)).collect()
    }

    pub fn interior_rows(&self) -> Vec<f64> {
        linspace(0.125, 0.875, self.rows)
    }

    pub fn boundary_rows(&self) -> Vec<f64> {
        (0..9).map(|i| 0.05 + 0.025 * i as f64).collect()
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Guards applied before any expensive work.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitConfig {
    /// Cap on density fields plus operator factors, in MiB.
    pub memory_mb: f64,
    /// Rayleigh grid sizes of the embedded-eigenvalue scan; empty skips it.
    pub scan_sizes: Vec<usize>,
}

impl Default for LimitConfig {
    fn default() -> Self {
        Self { memory_mb: 2048.0, scan_sizes: vec![64, 128] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub flow: FlowSpec,
    pub vorticity: VorticitySpec,
    #[serde(default = "default_k")]
    pub k: Vec<i32>,
    /// Oracle sample times.
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    /// Times at which the stream function is rebuilt from the density.
    /// Defaults to `times`.
    #[serde(default)]
    pub stream_times: Option<Vec<f64>>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub profiles: ProfileConfig,
    #[serde(default)]
    pub limits: LimitConfig,
    /// Acceptance checks to run after the stages, e.g. `["A2", "A3"]`.
    #[serde(default)]
    pub checks: Vec<CheckId>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_k() -> Vec<i32> {
    vec![1]
}

fn default_times() -> Vec<f64> {
    vec![0.0, 1.0, 2.0, 5.0, 10.0]
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl Scenario {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let sc: Scenario = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn stream_times(&self) -> &[f64] {
        self.stream_times.as_deref().unwrap_or(&self.times)
    }

    /// Cheap checks that need no solve beyond building the flow.
    pub fn validate(&self) -> Result<()> {
        if self.k.is_empty() || self.k.iter().any(|&k| k == 0) {
            return Err(Error::Config("k must be a nonempty list of nonzero wavenumbers".into()));
        }
        for (label, ts) in [("times", &self.times[..]), ("stream_times", self.stream_times())] {
            if ts.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || ts.windows(2).any(|p| p[1] < p[0]) {
                return Err(Error::Config(format!("{label} must be finite, nonnegative and sorted")));
            }
        }
        let g = &self.grid;
        if g.base_n < 8 || g.oracle_n < 8 || g.flow_points < 64 {
            return Err(Error::Config("grid sizes too small".into()));
        }
        if g.ladder.len() < 3 {
            return Err(Error::Config("the epsilon ladder needs at least 3 rungs".into()));
        }
        if g.ladder.iter().any(|&e| !(e > 0.0)) || g.ladder.windows(2).any(|p| p[1] >= p[0]) {
            return Err(Error::Config("the epsilon ladder must be positive and strictly decreasing".into()));
        }
        if !(g.delta0 > 0.0 && g.delta0 < 0.1) {
            return Err(Error::Config("delta0 must lie in (0, 0.1)".into()));
        }
        let p = &self.profiles;
        if p.samples < 2 || p.window < 2 || p.window > p.samples || p.rows == 0 || p.boundary_samples < 2 {
            return Err(Error::Config("profile windows are inconsistent".into()));
        }
        if !(self.limits.memory_mb > 0.0) {
            return Err(Error::Config("memory_mb must be positive".into()));
        }
        let flow = self.build_flow()?;
        for &k in &self.k {
            build_vorticity(&self.vorticity, &flow, k)?;
        }
        Ok(())
    }

    pub fn build_flow(&self) -> Result<ShearFlow> {
        build_flow(&self.flow, &UniformGrid::extended(self.grid.flow_points))
    }

    pub fn ladder_options(&self) -> LadderOptions {
        LadderOptions {
            ladder: self.grid.ladder.clone(),
            base_n: self.grid.base_n,
            kappa: self.grid.kappa,
            w_pad: self.grid.w_pad,
        }
    }

    /// SHA-256 of the canonical JSON form of the whole scenario.
    pub fn config_hash(&self) -> String {
        sha256_json(self)
    }

    /// Key of the cached density ladder for one wavenumber and sign. Only
    /// the fields that influence the density enter it.
    pub fn density_key(&self, k: i32, sign: f64) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            tag: &'static str,
            flow: &'a FlowSpec,
            vorticity: &'a VorticitySpec,
            k: i32,
            sign: f64,
            base_n: usize,
            kappa: f64,
            w_pad: f64,
            ladder: &'a [f64],
            delta0: f64,
            flow_points: usize,
        }
        let g = &self.grid;
        sha256_json(&Key {
            tag: "theta-v1",
            flow: &self.flow,
            vorticity: &self.vorticity,
            k,
            sign,
            base_n: g.base_n,
            kappa: g.kappa,
            w_pad: g.w_pad,
            ladder: &g.ladder,
            delta0: g.delta0,
            flow_points: g.flow_points,
        })
    }
}

fn sha256_json<T: Serialize>(v: &T) -> String {
    let bytes = serde_json::to_vec(v).expect("scenario types always serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
