//! Linear threshold speed `c0(tau)` and the complex root of the
//! characteristic function for Beverton-Holt growth `f(s) = 2s/(1+s)`, `d = 1`.
//!
//! cargo run --example characteristic_roots

use kpp_stefan::characteristic::{
    c0, complex_root_in_omega, default_continuation_steps, min_real_root, CharacteristicQuery,
};

fn main() -> kpp_stefan::error::Result<()> {
    let (fp0, d) = (2.0, 1.0);
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "tau", "c0", "alpha", "beta", "|Delta|");
    for tau in [0.0, 0.1, 0.5, 1.0, 2.0, 4.0] {
        let c0v = c0(tau, fp0, d)?;
        let c = 0.5 * c0v;
        let root = complex_root_in_omega(c, tau, fp0, d, default_continuation_steps(tau))?;
        println!(
            "{tau:>6.2} {c0v:>10.6} {:>10.6} {:>10.6} {:>10.1e}",
            root.alpha, root.beta, root.residual
        );
    }

    // above c0 the characteristic function has a positive real root
    let q = CharacteristicQuery::new(1.0, 1.0, fp0, d)?;
    match min_real_root(&q) {
        Some(l) => println!("c = 1, tau = 1: smallest real root {l:.6}"),
        None => println!("c = 1, tau = 1: no real root"),
    }
    Ok(())
}
