//! Ordered initial data give ordered solutions and fronts.
//!
//! cargo run --release --example comparison

use kpp_stefan::diagnostics::compare_runs;
use kpp_stefan::fbsolver::{simulate, NumericsConfig};
use kpp_stefan::model::{make_reaction, validate_history, FamilyId, ProblemSpec, RawHistory};

fn main() -> kpp_stefan::error::Result<()> {
    let reaction = make_reaction(FamilyId::BevertonHolt { p: 2.0, q: 1.0 }, 1.0)?;
    let spec = ProblemSpec::new(reaction, 1.0, 1.0)?;
    let upper = validate_history(&spec, RawHistory::cosine(spec.tau, -2.0, 2.0, 0.6, 3, 201))?;
    let lower = validate_history(&spec, RawHistory::cosine(spec.tau, -1.5, 1.5, 0.3, 3, 201))?;

    // both runs must share the time levels
    let mut num = NumericsConfig::auto_with(&spec, 4.0, 30.0, 200, 256);
    num.adapt_dt = false;
    num.snapshot_every = 1.0;
    let a = simulate(&spec, &upper, &num)?;
    let b = simulate(&spec, &lower, &num)?;

    let report = compare_runs(&a, &b, 1e-6)?;
    println!("{report:#?}");
    println!("ordering holds: {}", report.holds());
    let (ea, eb) = (a.last().unwrap(), b.last().unwrap());
    println!("t = {:.1}: A on [{:.3}, {:.3}], B on [{:.3}, {:.3}]", ea.t, ea.g, ea.h, eb.g, eb.h);
    Ok(())
}
