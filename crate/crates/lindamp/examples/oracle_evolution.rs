//! Time-steps a vorticity mode, checks it against the exact Couette solution
//! and scans a few flows for embedded or unstable eigenvalues.

use lindamp::flow::{build_flow, build_vorticity, FlowSpec, Profile, VorticitySpec};
use lindamp::grid::{l2_norm, UniformGrid};
use lindamp::oracle::{couette_reference, embedded_eigenvalue_scan, evolve_vorticity, EvolveOptions, ScanOptions};

fn main() -> lindamp::Result<()> {
    let grid = UniformGrid::extended(2048);
    let couette = build_flow(&FlowSpec::Couette, &grid)?;
    let vort = build_vorticity(&VorticitySpec::new(Profile::Gaussian { center: 0.5, width: 0.1 }), &couette, 1)?;
    let times = [0.0, 5.0, 10.0, 20.0, 40.0];
    let opts = EvolveOptions { n: 1024, ..Default::default() };
    let states = evolve_vorticity(&vort, &couette, 1, &times, &opts)?;
    println!("{:>5} {:>12} {:>12}", "t", "|psi|", "error");
    for s in &states {
        let exact = couette_reference(&vort, &couette, 1, s.t, opts.n)?;
        let diff: Vec<_> = s.psi.iter().zip(&exact.psi).map(|(a, b)| a - b).collect();
        let h = 1.0 / opts.n as f64;
        println!("{:>5.1} {:>12.4e} {:>12.2e}", s.t, l2_norm(&s.psi, h), l2_norm(&diff, h));
    }

    println!("\nspectral scan (k = 1, grids 64 and 128)");
    for (a, w) in [(0.05, 1.0), (0.45, 1.0), (0.3, 0.35)] {
        let flow = build_flow(&FlowSpec::PerturbedCouette { amplitude: a, center: 0.5, width: w }, &grid)?;
        let r = embedded_eigenvalue_scan(&flow, 1, &[64, 128], &ScanOptions::default())?;
        println!(
            "  amplitude {a:<5} width {w:<5} persistent {:>2}  max growth {:.2e}  {}",
            r.persistent.len(),
            r.max_unstable_im,
            if r.compliant() { "accepted" } else { "refused" }
        );
    }
    Ok(())
}
