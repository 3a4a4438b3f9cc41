//! Compares the fitted logarithmic coefficient of the density with its
//! closed form and evaluates the wall coefficient from the boundary response.

use lindamp::density::{solve_boundary_response, solve_density_at, Sign, SolveGrid};
use lindamp::flow::{build_cutoffs, build_flow, build_vorticity, FlowSpec, Profile, VorticitySpec};
use lindamp::grid::UniformGrid;
use lindamp::singularity::{analytic_boundary_coefficient_w, compare_log_coefficient, FitWindow};

fn main() -> lindamp::Result<()> {
    let flow = build_flow(
        &FlowSpec::PerturbedCouette { amplitude: 0.05, center: 0.5, width: 1.0 },
        &UniformGrid::extended(2048),
    )?;
    let cut = build_cutoffs(&flow, 1, 0.05)?;
    let vort = build_vorticity(&VorticitySpec::new(Profile::Gaussian { center: 0.5, width: 0.3 }), &flow, 1)?;
    let eps = 0.0125;
    let grid = SolveGrid::new(320, cut.margin());
    let ws: Vec<f64> = [0.3, 0.4, 0.5, 0.6, 0.7].iter().map(|&y| flow.b_at(y)).collect();
    let theta = solve_density_at(1, Sign::Plus, eps, &grid, &ws, &vort, &flow, &cut)?;
    println!("log coefficient at epsilon = {eps}");
    println!("{:>8} {:>24} {:>24} {:>9}", "w", "analytic", "fitted", "rel err");
    for j in 0..ws.len() {
        let c = compare_log_coefficient(&theta, &vort, &flow, j, FitWindow::default())?;
        println!("{:>8.4} {:>24.6} {:>24.6} {:>9.2e}", c.w, c.analytic, c.fitted, c.relative_error);
    }

    // Wall coefficient with and without a vanishing wall vorticity.
    let wall = [0.2, 0.5, 0.8];
    let phi = solve_boundary_response(1, Sign::Plus, eps, &grid, &wall, &flow, &cut, 0)?;
    for (label, spec) in [
        ("generic", VorticitySpec::new(Profile::Constant { value: 1.0 })),
        ("vanishing at y = 0", VorticitySpec::new(Profile::Constant { value: 1.0 }).vanishing(1, 0)),
    ] {
        let v = build_vorticity(&spec, &flow, 1)?;
        let th = solve_density_at(1, Sign::Plus, eps, &grid, &wall, &v, &flow, &cut)?;
        let d = analytic_boundary_coefficient_w(&th, &phi, &v, &flow)?;
        let max = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
        println!("max |D0| ({label}): {max:.3e}");
    }
    Ok(())
}
