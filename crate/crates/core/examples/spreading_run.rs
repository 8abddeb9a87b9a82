//! A spreading solution: fronts, measured speed against `c*`, and the
//! distance to the shifted semi-wave.
//!
//! cargo run --release --example spreading_run

use kpp_stefan::diagnostics::{drift_offsets, front_speed, profile_error_series};
use kpp_stefan::fbsolver::{simulate, NumericsConfig};
use kpp_stefan::model::{make_reaction, validate_history, FamilyId, ProblemSpec, RawHistory};
use kpp_stefan::semiwave::cstar;

fn main() -> kpp_stefan::error::Result<()> {
    let reaction = make_reaction(FamilyId::BevertonHolt { p: 2.0, q: 1.0 }, 1.0)?;
    let spec = ProblemSpec::new(reaction, 1.0, 1.0)?;
    let history = validate_history(&spec, RawHistory::cosine(spec.tau, -2.0, 2.0, 0.5, 3, 401))?;

    let mut num = NumericsConfig::auto(&spec, 4.0, 100.0);
    num.snapshot_every = 10.0;
    let traj = simulate(&spec, &history, &num)?;

    for row in traj.rows.iter().filter(|r| (r.t / 10.0).fract() < 1e-9) {
        println!("t = {:>5.1}  g = {:>8.3}  h = {:>8.3}  h' = {:.4}", row.t, row.g, row.h, row.hprime);
    }

    let speed = cstar(&spec, None)?;
    let measured = front_speed(&traj.rows, 0.5)?;
    println!("measured speed {measured:.5}, c* = {:.5}", speed.cstar);

    let drift = drift_offsets(&traj.rows, &spec, speed.cstar, 0.5)?;
    println!("H1 = {:.4}, G1 = {:.4}", drift.h1, drift.g1);
    for (t, err) in profile_error_series(&traj.snapshots, &speed.profile, drift.h1) {
        println!("t = {t:>5.1}  sup |u - q| = {err:.3e}");
    }
    Ok(())
}
