//! Checks that the Fourier transform of a smooth bump times `log^m(x + i eps)`
//! decays like `log^{m-1}<xi> / <xi>` uniformly in epsilon.

use lindamp::analysis::fourier_log_check;
use num_complex::Complex64;

fn main() -> lindamp::Result<()> {
    let n = 4096;
    let (x0, dx) = (-1.0, 2.0 / 4096.0);
    let bump: Vec<Complex64> = (0..n)
        .map(|j| {
            let x: f64 = x0 + j as f64 * dx;
            let r = x / 0.9;
            Complex64::new(if r.abs() < 1.0 { (-1.0 / (1.0 - r * r)).exp() } else { 0.0 }, 0.0)
        })
        .collect();
    println!("{:>3} {:>9} {:>12} {:>10}", "m", "epsilon", "sup ratio", "xi at sup");
    for m in 1..=3 {
        for eps in [0.1, 0.03, 0.01, 0.003] {
            let r = fourier_log_check(&bump, x0, dx, m, eps, 8)?;
            println!("{m:>3} {eps:>9.3} {:>12.5} {:>10.2}", r.sup_ratio, r.xi_at_sup);
        }
    }
    Ok(())
}
