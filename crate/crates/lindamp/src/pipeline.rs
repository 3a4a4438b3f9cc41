//! Scenario orchestration. Guards run first, then the requested stage fills a report.

use crate::analysis::{
    boundary_expansion_fit, decay_exponent, extract_interior_profiles, rescaled_interior_norm, sliding_windows,
    FitOptions,
};
use crate::checks::{run_check, CheckId};
use crate::density::{
    solve_boundary_response, solve_density, AbsorptionContext, ColumnDiagnostics, Sign, SpectralDensityField,
};
use crate::error::{Error, Result};
use crate::flow::{build_cutoffs, build_vorticity, CutoffSet, ShearFlow, VorticityMode};
use crate::green::{kernel_residual_check, GreenKernel};
use crate::grid::l2_norm;
use crate::oracle::{
    channel_grid, couette_reference, embedded_eigenvalue_scan, evolve_vorticity, EvolutionState, EvolveOptions,
    ScanOptions,
};
use crate::report::{emit_report, Manifest, Report, RungInfo, Table};
use crate::scenario::Scenario;
use crate::singularity::{analytic_boundary_coefficient_w, compare_log_coefficient, FitWindow};
use crate::stream::{stream_from_density, velocity_fields, StreamOptions};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Time-stepper only.
    Simulate,
    /// Density ladders with their singular coefficients; rebuilds the stream.
    Density,
    /// Carrier fits on stepper data.
    Profiles,
    /// Acceptance checks only; all of them unless a list is given.
    Verify,
    /// Green kernel tables.
    DumpKernel,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Density => "density",
            Command::Profiles => "profiles",
            Command::Verify => "verify",
            Command::DumpKernel => "dump-kernel",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Overrides the scenario's output directory.
    pub out: Option<PathBuf>,
    /// Overrides the scenario's check list.
    pub checks: Option<Vec<CheckId>>,
    pub cache_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Runs `command` on a validated scenario and returns the report with its
/// tables filled in. Nothing is written.
pub fn run_scenario(sc: &Scenario, command: Command, opts: &RunOptions) -> Result<Report> {
    sc.validate()?;
    match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Resource(format!("thread pool: {e}")))?
            .install(|| run_inner(sc, command, opts)),
        None => run_inner(sc, command, opts),
    }
}

/// Loads the config at `path`, runs it and writes the report. Returns the
/// report and the directory it went to.
pub fn run_config(path: &Path, command: Command, opts: &RunOptions) -> Result<(Report, PathBuf)> {
    let sc = Scenario::load(path)?;
    let report = run_scenario(&sc, command, opts)?;
    let dir = opts.out.clone().unwrap_or_else(|| sc.output.clone());
    emit_report(&report, &dir)?;
    Ok((report, dir))
}

fn run_inner(sc: &Scenario, command: Command, opts: &RunOptions) -> Result<Report> {
    let flow = sc.build_flow()?;
    let mut report = Report { manifest: manifest(sc, command, &flow)?, ..Default::default() };
    if matches!(command, Command::Simulate | Command::Density | Command::Profiles) {
        refuse_embedded(sc, &flow)?;
    }
    match command {
        Command::Simulate => simulate_stage(sc, &flow, &mut report)?,
        Command::Density => {
            memory_guard(sc, &flow)?;
            density_stage(sc, &flow, opts.cache_dir.as_deref(), &mut report)?;
        }
        Command::Profiles => profiles_stage(sc, &flow, &mut report)?,
        Command::DumpKernel => kernel_stage(sc, &flow, &mut report)?,
        Command::Verify => {}
    }
    let checks = match (&opts.checks, command) {
        (Some(c), _) => c.clone(),
        (None, Command::Verify) => CheckId::ALL.to_vec(),
        (None, _) => sc.checks.clone(),
    };
    report.checks = checks.into_iter().map(run_check).collect();
    Ok(report)
}

fn manifest(sc: &Scenario, command: Command, flow: &ShearFlow) -> Result<Manifest> {
    let mut rungs = Vec::new();
    for &k in &sc.k {
        let cut = build_cutoffs(flow, k, sc.grid.delta0)?;
        let ctx = AbsorptionContext::new(flow, &cut, k, Sign::Minus, &sc.ladder_options())?;
        rungs.extend(ctx.rungs.iter().map(|r| RungInfo { k, epsilon: r.epsilon, n: r.grid.n, columns: r.w.len() }));
    }
    Ok(Manifest {
        name: sc.name.clone(),
        command: command.name().into(),
        config_hash: sc.config_hash(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed: sc.seed,
        k: sc.k.clone(),
        base_n: sc.grid.base_n,
        oracle_n: sc.grid.oracle_n,
        rungs,
    })
}

/// Refuses flows whose Rayleigh operator keeps an embedded eigenvalue (or
/// an unstable one) under grid refinement.
pub fn refuse_embedded(sc: &Scenario, flow: &ShearFlow) -> Result<()> {
    if sc.limits.scan_sizes.is_empty() || flow.is_couette() {
        return Ok(());
    }
    for &k in &sc.k {
        let rep = embedded_eigenvalue_scan(flow, k, &sc.limits.scan_sizes, &ScanOptions::default())?;
        if !rep.compliant() {
            return Err(Error::Refused(format!(
                "k = {k}: {} persistent embedded eigenvalue(s), max unstable growth {:.3e}",
                rep.persistent.len(),
                rep.max_unstable_im
            )));
        }
    }
    Ok(())
}

/// Bytes the density stage needs at its peak: both ladders of every
/// wavenumber plus the largest rung operator.
pub fn density_memory_estimate(sc: &Scenario, flow: &ShearFlow) -> Result<f64> {
    let mut total = 0.0;
    let mut op_peak = 0.0f64;
    for &k in &sc.k {
        let cut = build_cutoffs(flow, k, sc.grid.delta0)?;
        let ctx = AbsorptionContext::new(flow, &cut, k, Sign::Minus, &sc.ladder_options())?;
        total += 2.0 * ctx.field_bytes() as f64;
        for r in &ctx.rungs {
            let n = r.grid.len() as f64;
            // Four dense f64 blocks: kernel, Hessenberg pair, active columns.
            op_peak = op_peak.max(8.0 * (n * n + 2.0 * n * n + n * n));
        }
    }
    Ok(total + op_peak)
}

fn memory_guard(sc: &Scenario, flow: &ShearFlow) -> Result<()> {
    let need = density_memory_estimate(sc, flow)?;
    let cap = sc.limits.memory_mb * 1024.0 * 1024.0;
    if need > cap {
        return Err(Error::Resource(format!(
            "density stage needs about {:.0} MiB, cap is {:.0} MiB",
            need / 1048576.0,
            sc.limits.memory_mb
        )));
    }
    Ok(())
}

fn oracle(sc: &Scenario, flow: &ShearFlow, vort: &VorticityMode, k: i32, times: &[f64]) -> Result<Vec<EvolutionState>> {
    evolve_vorticity(vort, flow, k, times, &EvolveOptions { n: sc.grid.oracle_n, ..Default::default() })
}

/// Linear interpolation of channel samples `values[i]` at `y = i / n`.
pub fn sample_rows(values: &[Complex64], ys: &[f64]) -> Vec<Complex64> {
    let n = values.len() - 1;
    ys.iter()
        .map(|&y| {
            let x = (y * n as f64).clamp(0.0, n as f64);
            let i = (x.floor() as usize).min(n.saturating_sub(1));
            let f = x - i as f64;
            values[i] * (1.0 - f) + values[(i + 1).min(n)] * f
        })
        .collect()
}

fn simulate_stage(sc: &Scenario, flow: &ShearFlow, report: &mut Report) -> Result<()> {
    let mut table = Table::new("oracle", &["k", "t", "omega_l2", "psi_l2", "ux_interior", "uy_interior", "rescaled_psi"]);
    let couette = flow.is_couette();
    let mut errors = Table::new("couette_error", &["k", "t", "max_error"]);
    let n = sc.grid.oracle_n;
    let h = 1.0 / n as f64;
    let ys = channel_grid(n);
    for &k in &sc.k {
        let cut = build_cutoffs(flow, k, sc.grid.delta0)?;
        let vort = build_vorticity(&sc.vorticity, flow, k)?;
        let chi: Vec<f64> = ys.iter().map(|&y| cut.chi_in(y)).collect();
        let cut_norm = |v: &[Complex64]| {
            let w: Vec<Complex64> = v.iter().zip(&chi).map(|(a, c)| a * *c).collect();
            l2_norm(&w, h)
        };
        let states = oracle(sc, flow, &vort, k, &sc.times)?;
        let (mut ts, mut ux, mut uy) = (Vec::new(), Vec::new(), Vec::new());
        for s in &states {
            let v = velocity_fields(&s.psi, h, k, s.t);
            let (nx, ny) = (cut_norm(&v.ux), cut_norm(&v.uy));
            table.push(vec![
                k as f64,
                s.t,
                l2_norm(&s.omega, h),
                l2_norm(&s.psi, h),
                nx,
                ny,
                rescaled_interior_norm(&s.psi, &chi, k as f64, s.t),
            ]);
            if s.t > 0.0 {
                ts.push(s.t);
                ux.push(nx);
                uy.push(ny);
            }
            if couette {
                let exact = couette_reference(&vort, flow, k, s.t, n)?;
                let e = s.omega.iter().zip(&exact.omega).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
                errors.push(vec![k as f64, s.t, e]);
            }
        }
        // Slopes only when the samples allow a fit; otherwise they are omitted.
        if let (Ok(fx), Ok(fy)) = (decay_exponent(&ts, &ux), decay_exponent(&ts, &uy)) {
            report.summary(format!("k{k}.ux_slope"), fx.slope);
            report.summary(format!("k{k}.uy_slope"), fy.slope);
        }
    }
    report.tables.push(table);
    if couette {
        report.summary("couette_max_error", errors.rows.iter().map(|r| r[2]).fold(0.0, f64::max));
        report.tables.push(errors);
    }
    Ok(())
}

/// Density ladder for one sign, from the cache when possible.
pub fn density_ladder(
    sc: &Scenario,
    ctx: &AbsorptionContext,
    vort: &VorticityMode,
    flow: &ShearFlow,
    cut: &CutoffSet,
    cache_dir: Option<&Path>,
) -> Result<Vec<SpectralDensityField>> {
    let path = cache_dir.map(|d| d.join(format!("{}.theta", sc.density_key(ctx.k, ctx.sign.value()))));
    if let Some(p) = &path {
        if let Some(fields) = read_cached(p, ctx, flow)? {
            return Ok(fields);
        }
    }
    let fields = solve_density(ctx, vort, flow, cut)?;
    if let Some(p) = &path {
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir)?;
        }
        write_cached(p, &fields)?;
    }
    Ok(fields)
}

const CACHE_MAGIC: &[u8; 8] = b"LDTHETA1";

fn write_cached(path: &Path, fields: &[SpectralDensityField]) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&(fields.len() as u64).to_le_bytes());
    for f in fields {
        buf.extend_from_slice(&(f.theta.nrows() as u64).to_le_bytes());
        buf.extend_from_slice(&(f.theta.ncols() as u64).to_le_bytes());
        for d in &f.diagnostics {
            buf.extend_from_slice(&d.residual.to_le_bytes());
            buf.extend_from_slice(&d.pivot_ratio.to_le_bytes());
        }
        for z in f.theta.iter() {
            buf.extend_from_slice(&z.re.to_le_bytes());
            buf.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    // Write to a sibling and rename so a killed run never leaves a torn file.
    let tmp = path.with_extension("tmp");
    std::fs::File::create(&tmp)?.write_all(&buf)?;
    std::fs::rename(tmp, path)?;
    Ok(())
}

/// `None` on a miss or on a file that does not match the context.
fn read_cached(path: &Path, ctx: &AbsorptionContext, flow: &ShearFlow) -> Result<Option<Vec<SpectralDensityField>>> {
    let mut bytes = Vec::new();
    match std::fs::File::open(path) {
        Ok(mut f) => f.read_to_end(&mut bytes)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let mut r = CacheReader { bytes: &bytes, pos: 0 };
    if r.take(8)? != CACHE_MAGIC || r.u64()? as usize != ctx.rungs.len() {
        return Ok(None);
    }
    let mut out = Vec::with_capacity(ctx.rungs.len());
    for rung in &ctx.rungs {
        let (rows, cols) = (r.u64()? as usize, r.u64()? as usize);
        if rows != rung.grid.len() || cols != rung.w.len() {
            return Ok(None);
        }
        let w = rung.w.nodes();
        let mut diagnostics = Vec::with_capacity(cols);
        for &wj in &w {
            diagnostics.push(ColumnDiagnostics { w: wj, residual: r.f64()?, pivot_ratio: r.f64()? });
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(Complex64::new(r.f64()?, r.f64()?));
        }
        out.push(SpectralDensityField {
            k: ctx.k,
            sign: ctx.sign,
            epsilon: rung.epsilon,
            grid: rung.grid.clone(),
            b: rung.grid.y.iter().map(|&y| flow.b_at(y)).collect(),
            w,
            theta: DMatrix::from_vec(rows, cols, data),
            diagnostics,
        });
    }
    Ok(Some(out))
}

struct CacheReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl CacheReader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let s = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::Config("truncated density cache file".into()))?;
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("eight bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("eight bytes")))
    }
}

fn rel_l2(a: &[Complex64], b: &[Complex64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den.max(1e-300)).sqrt()
}

fn density_stage(sc: &Scenario, flow: &ShearFlow, cache: Option<&Path>, report: &mut Report) -> Result<()> {
    let mut ladder = Table::new("density_ladder", &["k", "sign", "epsilon", "n", "columns", "max_residual", "max_pivot_ratio"]);
    let mut logc = Table::new(
        "log_coefficient",
        &["k", "w", "analytic_re", "analytic_im", "fitted_re", "fitted_im", "relative_error"],
    );
    let mut bcoef = Table::new("boundary_coefficient", &["k", "side", "w", "max_abs_d"]);
    let mut stream = Table::new(
        "stream",
        &["k", "t", "y", "psi_re", "psi_im", "part1_re", "part1_im", "part2_re", "part2_im", "part3_re", "part3_im"],
    );
    let mut serr = Table::new("stream_error", &["k", "t", "relative_l2", "epsilon_error"]);
    let (b0, b1) = (flow.b_at(0.0), flow.b_at(1.0));
    for &k in &sc.k {
        let cut = build_cutoffs(flow, k, sc.grid.delta0)?;
        let vort = build_vorticity(&sc.vorticity, flow, k)?;
        let ctx = AbsorptionContext::new(flow, &cut, k, Sign::Minus, &sc.ladder_options())?;
        let minus = density_ladder(sc, &ctx, &vort, flow, &cut, cache)?;
        let plus = density_ladder(sc, &ctx.with_sign(Sign::Plus), &vort, flow, &cut, cache)?;
        for f in minus.iter().chain(&plus) {
            let piv = f.diagnostics.iter().map(|d| d.pivot_ratio).fold(0.0, f64::max);
            ladder.push(vec![
                k as f64,
                f.sign.value(),
                f.epsilon,
                f.grid.n as f64,
                f.w.len() as f64,
                f.max_residual(),
                piv,
            ]);
        }

        let fine = minus.last().expect("ladder has rungs");
        let margin = 0.1 * (b1 - b0);
        let mut cmps = Vec::new();
        for (j, &w) in fine.w.iter().enumerate() {
            if w < b0 + margin || w > b1 - margin {
                continue;
            }
            // Columns whose fit is refused are left out of the table.
            if let Ok(c) = compare_log_coefficient(fine, &vort, flow, j, FitWindow::default()) {
                logc.push(vec![k as f64, w, c.analytic.re, c.analytic.im, c.fitted.re, c.fitted.im, c.relative_error]);
                cmps.push(c);
            }
        }
        // Relative errors are only meaningful where the coefficient is not
        // close to one of its zeros.
        let amax = cmps.iter().map(|c| c.analytic.norm()).fold(0.0, f64::max);
        let big: Vec<_> = cmps.iter().filter(|c| c.analytic.norm() >= 0.1 * amax).collect();
        let hit = big.iter().filter(|c| c.relative_error <= 0.1).count();
        let total = big.len();
        report.summary(format!("k{k}.log_coefficient_fraction"), hit as f64 / total.max(1) as f64);

        let rung = ctx.rungs.last().expect("ladder has rungs");
        for side in 0..2 {
            let phi =
                solve_boundary_response(k, Sign::Minus, fine.epsilon, &rung.grid, &fine.w, flow, &cut, side)?;
            let d = analytic_boundary_coefficient_w(fine, &phi, &vort, flow)?;
            let mut dmax = 0.0f64;
            for (m, &w) in fine.w.iter().enumerate() {
                let col = d.column(m).iter().map(|z| z.norm()).fold(0.0, f64::max);
                dmax = dmax.max(col);
                bcoef.push(vec![k as f64, side as f64, w, col]);
            }
            report.summary(format!("k{k}.max_abs_d{side}"), dmax);
        }

        let times = sc.stream_times();
        let states = oracle(sc, flow, &vort, k, times)?;
        let mut worst = 0.0f64;
        for (s, &t) in states.iter().zip(times) {
            let snap = stream_from_density(&minus, &plus, t, sc.grid.base_n, flow, &cut, &StreamOptions::default())?;
            let reference = sample_rows(&s.psi, &snap.y);
            let e = rel_l2(&snap.psi, &reference);
            worst = worst.max(e);
            serr.push(vec![k as f64, t, e, snap.epsilon_error]);
            for (i, &y) in snap.y.iter().enumerate() {
                let [p1, p2, p3] = &snap.parts;
                stream.push(vec![
                    k as f64,
                    t,
                    y,
                    snap.psi[i].re,
                    snap.psi[i].im,
                    p1[i].re,
                    p1[i].im,
                    p2[i].re,
                    p2[i].im,
                    p3[i].re,
                    p3[i].im,
                ]);
            }
        }
        report.summary(format!("k{k}.stream_max_relative_error"), worst);
    }
    report.tables.extend([ladder, logc, bcoef, stream, serr]);
    Ok(())
}

fn profiles_stage(sc: &Scenario, flow: &ShearFlow, report: &mut Report) -> Result<()> {
    let p = &sc.profiles;
    let mut prof = Table::new(
        "profiles",
        &["k", "t_mid", "y", "alpha_re", "alpha_im", "beta_re", "beta_im", "gamma_re", "gamma_im"],
    );
    let mut fit = Table::new("profile_fit", &["k", "t_mid", "residual", "single_residual", "condition"]);
    let mut bprof = Table::new("boundary_profiles", &["k", "j", "y", "alpha_re", "alpha_im", "beta_re", "beta_im"]);
    let mut brem = Table::new("boundary_remainder", &["k", "t", "remainder"]);
    for &k in &sc.k {
        let vort = build_vorticity(&sc.vorticity, flow, k)?;
        let kf = k as f64;

        let times = p.times();
        let rows = p.interior_rows();
        let states = oracle(sc, flow, &vort, k, &times)?;
        let psi: Vec<Vec<Complex64>> = states.iter().map(|s| sample_rows(&s.psi, &rows)).collect();
        for win in sliding_windows(times.len(), p.window) {
            let d = extract_interior_profiles(&times[win.clone()], &psi[win], &rows, kf, flow, &FitOptions::default())?;
            fit.push(vec![kf, d.t_mid, d.residual, d.single_residual, d.condition]);
            for (i, &y) in d.y.iter().enumerate() {
                let (a, b, g) = (d.alpha_in[i], d.beta_in[i], d.gamma_in[i]);
                prof.push(vec![kf, d.t_mid, y, a.re, a.im, b.re, b.im, g.re, g.im]);
            }
        }

        let bt = p.boundary_times();
        let brows = p.boundary_rows();
        let states = oracle(sc, flow, &vort, k, &bt)?;
        let psi: Vec<Vec<Complex64>> = states.iter().map(|s| sample_rows(&s.psi, &brows)).collect();
        let bf = boundary_expansion_fit(&bt, &psi, &brows, kf, flow, p.boundary_order, p.boundary_extra)?;
        for (j, (al, be)) in bf.alpha.iter().zip(&bf.beta).enumerate() {
            for (i, &y) in bf.y.iter().enumerate() {
                bprof.push(vec![kf, (j + 1) as f64, y, al[i].re, al[i].im, be[i].re, be[i].im]);
            }
        }
        for (&t, &r) in bf.times.iter().zip(&bf.remainder) {
            brem.push(vec![kf, t, r]);
        }
        report.summary(format!("k{k}.beta1_amplitude"), bf.beta_amplitude(1));
        if let Ok(d) = decay_exponent(&bf.times, &bf.remainder) {
            report.summary(format!("k{k}.remainder_slope"), d.slope);
        }
    }
    report.tables.extend([prof, fit, bprof, brem]);
    Ok(())
}

/// Points per axis of the dumped kernel.
pub const KERNEL_POINTS: usize = 65;

fn kernel_stage(sc: &Scenario, flow: &ShearFlow, report: &mut Report) -> Result<()> {
    let mut table = Table::new("kernel", &["k", "y", "z", "g", "fr", "b0", "b1"]);
    let mut res = Table::new("kernel_residual", &["k", "y", "off_diagonal", "jump"]);
    for &k in &sc.k {
        let cut = build_cutoffs(flow, k, sc.grid.delta0)?;
        let m = cut.margin();
        let ys: Vec<f64> =
            (0..KERNEL_POINTS).map(|i| -m + (1.0 + 2.0 * m) * i as f64 / (KERNEL_POINTS - 1) as f64).collect();
        let kf = (k as f64).abs();
        let g = GreenKernel::sample(kf, &ys, &ys, &cut);
        for j in 0..ys.len() {
            for i in 0..ys.len() {
                table.push(vec![k as f64, ys[i], ys[j], g.samples[(i, j)], g.fr[(i, j)], g.b0[(i, j)], g.b1[(i, j)]]);
            }
        }
        for y in [0.25, 0.5, 0.75] {
            let r = kernel_residual_check(kf, y, 512);
            res.push(vec![k as f64, y, r.off_diagonal, r.jump]);
        }
    }
    report.tables.extend([table, res]);
    Ok(())
}
