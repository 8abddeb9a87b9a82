//! Spreading or vanishing, depending on the initial habitat and amplitude.
//!
//! cargo run --release --example dichotomy

use kpp_stefan::diagnostics::{classify, Thresholds, VerdictObserver};
use kpp_stefan::fbsolver::{init_state, run, NumericsConfig};
use kpp_stefan::model::{make_reaction, validate_history, FamilyId, ProblemSpec, RawHistory};

fn main() -> kpp_stefan::error::Result<()> {
    let reaction = make_reaction(FamilyId::BevertonHolt { p: 2.0, q: 1.0 }, 1.0)?;
    let spec = ProblemSpec::new(reaction, 1.0, 1.0)?;
    let critical = spec.reaction.critical_length();
    println!("critical length {critical:.4}");

    let thresholds = Thresholds::default();
    for factor in [0.3, 0.5, 0.7, 0.9, 1.1] {
        let mut line = format!("length {:.2} x critical:", factor);
        for amp in [1e-3, 0.1, 1.0] {
            let len = factor * critical;
            let raw = RawHistory::cosine(spec.tau, -0.5 * len, 0.5 * len, amp, 3, 201);
            let history = validate_history(&spec, raw)?;
            let num = NumericsConfig::auto_with(&spec, len, 300.0, 100, 64);
            let mut state = init_state(&spec, &history, &num)?;
            let mut observer = VerdictObserver::new(&spec, thresholds);
            let traj = run(&mut state, &spec, &num, &mut [&mut observer])?;
            let v = classify(&traj.rows, &spec, &thresholds);
            line += &format!("  amp {amp:<6} {:<9} (t = {:.1})", v.kind.to_string(), v.evidence.horizon);
        }
        println!("{line}");
    }
    Ok(())
}
