//! `c*` as a function of the Stefan coefficient and of the delay.
//!
//! cargo run --example speed_curve

use kpp_stefan::model::{make_reaction, FamilyId, ProblemSpec};
use kpp_stefan::semiwave::{speed_curve, SpeedAxis};

fn main() -> kpp_stefan::error::Result<()> {
    let reaction = make_reaction(FamilyId::BevertonHolt { p: 2.0, q: 1.0 }, 1.0)?;
    let spec = ProblemSpec::new(reaction, 1.0, 1.0)?;

    for (axis, values) in [
        (SpeedAxis::Mu, vec![0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]),
        (SpeedAxis::Tau, vec![0.0, 0.25, 0.5, 1.0, 2.0, 4.0]),
    ] {
        let curve = speed_curve(&spec, axis, &values)?;
        println!("{axis:?} sweep (monotone: {:?})", curve.monotone);
        for p in &curve.points {
            match &p.result {
                Ok(r) => println!("  {:>6.2}  c* = {:.6}  c0 = {:.6}", p.value, r.cstar, r.c0),
                Err(e) => println!("  {:>6.2}  failed: {e}", p.value),
            }
        }
    }
    Ok(())
}
