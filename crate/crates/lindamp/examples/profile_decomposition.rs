//! Splits the late-time stream function into the interior carrier and the
//! two wall carriers on sliding windows.

use lindamp::analysis::{extract_interior_profiles, sliding_windows, FitOptions};
use lindamp::flow::{build_flow, build_vorticity, FlowSpec, Profile, VorticitySpec};
use lindamp::grid::UniformGrid;
use lindamp::oracle::{evolve_vorticity, EvolveOptions};
use lindamp::pipeline::sample_rows;

fn main() -> lindamp::Result<()> {
    let flow = build_flow(
        &FlowSpec::PerturbedCouette { amplitude: 0.05, center: 0.5, width: 1.0 },
        &UniformGrid::extended(2048),
    )?;
    let k = 1;
    let vort = build_vorticity(&VorticitySpec::new(Profile::Gaussian { center: 0.5, width: 0.2 }), &flow, k)?;
    let times: Vec<f64> = (0..=60).map(|i| 60.0 + i as f64).collect();
    let states = evolve_vorticity(&vort, &flow, k, &times, &EvolveOptions { n: 1024, ..Default::default() })?;
    let ys = [0.25, 0.5, 0.75];
    let psi: Vec<_> = states.iter().map(|s| sample_rows(&s.psi, &ys)).collect();
    println!("{:>6} {:>10} {:>10} {:>10} {:>10} {:>12}", "t_mid", "|alpha|", "|beta|", "|gamma|", "residual", "1-carrier");
    for win in sliding_windows(times.len(), 31) {
        let d = extract_interior_profiles(&times[win.clone()], &psi[win], &ys, k as f64, &flow, &FitOptions::default())?;
        let max = |v: &[num_complex::Complex64]| v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        println!(
            "{:>6.1} {:>10.4e} {:>10.4e} {:>10.4e} {:>10.2e} {:>12.2e}",
            d.t_mid,
            max(&d.alpha_in),
            max(&d.beta_in),
            max(&d.gamma_in),
            d.residual,
            d.single_residual
        );
    }
    Ok(())
}
