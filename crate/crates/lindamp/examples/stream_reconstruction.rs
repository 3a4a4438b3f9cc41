//! Rebuilds the stream function from the density ladders and compares it
//! with direct time stepping.

use lindamp::density::{solve_density, AbsorptionContext, LadderOptions, Sign};
use lindamp::flow::{build_cutoffs, build_flow, build_vorticity, FlowSpec, Profile, VorticitySpec};
use lindamp::grid::UniformGrid;
use lindamp::oracle::{evolve_vorticity, EvolveOptions};
use lindamp::pipeline::sample_rows;
use lindamp::stream::{stream_from_density, StreamOptions};

fn main() -> lindamp::Result<()> {
    let flow = build_flow(
        &FlowSpec::PerturbedCouette { amplitude: 0.05, center: 0.5, width: 1.0 },
        &UniformGrid::extended(2048),
    )?;
    let k = 1;
    let cut = build_cutoffs(&flow, k, 0.05)?;
    let vort = build_vorticity(&VorticitySpec::new(Profile::Gaussian { center: 0.5, width: 0.1 }), &flow, k)?;
    let opts = LadderOptions { ladder: vec![0.1, 0.05, 0.025, 0.0125], ..LadderOptions::default() };
    let ctx = AbsorptionContext::new(&flow, &cut, k, Sign::Minus, &opts)?;
    let minus = solve_density(&ctx, &vort, &flow, &cut)?;
    let plus = solve_density(&ctx.with_sign(Sign::Plus), &vort, &flow, &cut)?;
    let times = [0.0, 1.0, 2.0, 5.0, 10.0];
    let states = evolve_vorticity(&vort, &flow, k, &times, &EvolveOptions { n: 2048, ..Default::default() })?;
    println!("{:>5} {:>12} {:>14}", "t", "rel. error", "ladder spread");
    for (s, &t) in states.iter().zip(&times) {
        let snap = stream_from_density(&minus, &plus, t, opts.base_n, &flow, &cut, &StreamOptions::default())?;
        let oracle = sample_rows(&s.psi, &snap.y);
        let num: f64 = snap.psi.iter().zip(&oracle).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = oracle.iter().map(|b| b.norm_sqr()).sum();
        println!("{t:>5.1} {:>12.3e} {:>14.3e}", (num / den).sqrt(), snap.epsilon_error);
    }
    Ok(())
}
