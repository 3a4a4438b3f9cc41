//! Solves the spectral density on an epsilon ladder for a perturbed flow and
//! reports per-rung diagnostics, including the smallest singular value of the
//! operator at one column.

use lindamp::density::{lap_sigma_min, solve_density, AbsorptionContext, LadderOptions, Sign};
use lindamp::flow::{build_cutoffs, build_flow, build_vorticity, FlowSpec, Profile, VorticitySpec};
use lindamp::grid::UniformGrid;

fn main() -> lindamp::Result<()> {
    let flow = build_flow(
        &FlowSpec::PerturbedCouette { amplitude: 0.05, center: 0.5, width: 1.0 },
        &UniformGrid::extended(2048),
    )?;
    let k = 1;
    let cut = build_cutoffs(&flow, k, 0.05)?;
    let vort = build_vorticity(&VorticitySpec::new(Profile::Gaussian { center: 0.5, width: 0.1 }), &flow, k)?;
    let opts = LadderOptions { ladder: vec![0.1, 0.05, 0.025], ..LadderOptions::default() };
    let ctx = AbsorptionContext::new(&flow, &cut, k, Sign::Minus, &opts)?;
    let fields = solve_density(&ctx, &vort, &flow, &cut)?;
    println!("{:>9} {:>6} {:>6} {:>12} {:>12} {:>10}", "epsilon", "n", "cols", "max resid", "max pivot", "sigma_min");
    for (f, rung) in fields.iter().zip(&ctx.rungs) {
        let pivot = f.diagnostics.iter().map(|d| d.pivot_ratio).fold(0.0, f64::max);
        let sigma = lap_sigma_min(k, f.epsilon, Sign::Minus, flow.b_at(0.5), &rung.grid, &flow, &cut)?;
        println!(
            "{:>9.5} {:>6} {:>6} {:>12.3e} {:>12.3e} {:>10.5}",
            f.epsilon,
            rung.grid.n,
            f.w.len(),
            f.max_residual(),
            pivot,
            sigma
        );
    }
    Ok(())
}
