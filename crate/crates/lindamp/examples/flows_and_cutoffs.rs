//! Builds the three flow families and prints the profile, its derivatives
//! and the cutoff partition.

use lindamp::flow::{build_cutoffs, build_flow, FlowSpec};
use lindamp::grid::UniformGrid;

fn main() -> lindamp::Result<()> {
    let grid = UniformGrid::extended(2048);
    let specs = [
        FlowSpec::Couette,
        FlowSpec::PerturbedCouette { amplitude: 0.05, center: 0.5, width: 1.0 },
        FlowSpec::CompensatedBump { amplitude: 0.5 },
    ];
    for spec in &specs {
        let flow = build_flow(spec, &grid)?;
        let (lo, hi) = flow.range();
        println!("{spec:?}");
        println!("  range of b on the extended interval: [{lo:.4}, {hi:.4}], max b' = {:.4}", flow.db_max());
        println!("  {:>6} {:>10} {:>10} {:>10}", "y", "b", "b'", "b''");
        for y in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let (b, db, d2b) = flow.eval(y);
            println!("  {y:>6.2} {b:>10.5} {db:>10.5} {d2b:>10.5}");
        }
    }

    // Cutoffs for k = 2: the collar shrinks like delta0 / k.
    let flow = build_flow(&specs[1], &grid)?;
    let cut = build_cutoffs(&flow, 2, 0.05)?;
    println!("\ncutoffs for k = 2, margin {:.4}", cut.margin());
    println!("  {:>7} {:>9} {:>9} {:>9}", "w", "U1", "U2", "U3");
    for i in 0..=8 {
        let w = -0.1 + 1.3 * i as f64 / 8.0;
        let u: Vec<f64> = (1..=3).map(|j| cut.upsilon(j, w)).collect();
        println!("  {w:>7.3} {:>9.5} {:>9.5} {:>9.5}", u[0], u[1], u[2]);
    }
    Ok(())
}
