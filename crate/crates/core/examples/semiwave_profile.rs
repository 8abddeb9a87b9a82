//! Semi-wave profiles below the threshold speed, and the speed `c*` selected
//! by the Stefan coefficient.
//!
//! cargo run --example semiwave_profile

use kpp_stefan::model::{make_reaction, FamilyId, ProblemSpec};
use kpp_stefan::semiwave::{cstar, solve_profile, SemiwaveNumerics};

fn main() -> kpp_stefan::error::Result<()> {
    let reaction = make_reaction(FamilyId::BevertonHolt { p: 2.0, q: 1.0 }, 1.0)?;
    let spec = ProblemSpec::new(reaction, 1.0, 1.0)?;

    for c in [0.0, 0.2, 0.4, 0.6] {
        let num = SemiwaveNumerics::for_speed(&spec, c);
        let p = solve_profile(&spec, c, &num)?;
        let samples: Vec<String> = [1.0, 2.0, 5.0, 10.0].iter().map(|&z| format!("{:.4}", p.value_at(z))).collect();
        println!(
            "c = {c:.1}: q'(0) = {:.6}, q(1,2,5,10) = [{}], {} relaxation steps",
            p.qprime0,
            samples.join(", "),
            p.steps
        );
    }

    let speed = cstar(&spec, None)?;
    println!(
        "c* = {:.6} (c0 = {:.6}), q'(0) - c*/mu = {:.1e}",
        speed.cstar, speed.c0, speed.eta_residual
    );
    let path = std::env::temp_dir().join("semiwave_profile.csv");
    speed.profile.write_csv(&path)?;
    println!("profile written to {}", path.display());
    Ok(())
}
