//! Tabulates the channel Green kernel, its three-way split and a residual
//! check of the Helmholtz equation it inverts.

use lindamp::flow::{build_cutoffs, build_flow, FlowSpec};
use lindamp::green::{channel_kernel, kernel_residual_check, split_kernel};
use lindamp::grid::UniformGrid;

fn main() -> lindamp::Result<()> {
    let flow = build_flow(&FlowSpec::Couette, &UniformGrid::extended(1024))?;
    let k = 1.0;
    let cut = build_cutoffs(&flow, 1, 0.05)?;
    let y = 0.3;
    println!("G_k(y = {y}, z) and its split, k = {k}");
    println!("{:>6} {:>11} {:>11} {:>11} {:>11}", "z", "G", "regular", "wall 0", "wall 1");
    for i in 0..=10 {
        let z = i as f64 / 10.0;
        let (r, b0, b1) = split_kernel(k, y, z, &cut);
        println!("{z:>6.2} {:>11.6} {r:>11.6} {b0:>11.6} {b1:>11.6}", channel_kernel(k, y, z));
    }
    for k in [1.0, 5.0, 25.0] {
        let r = kernel_residual_check(k, 0.4, 2048);
        println!("k = {k:>4}: off-diagonal residual {:.2e}, derivative jump {:.6}", r.off_diagonal, r.jump);
    }
    Ok(())
}
