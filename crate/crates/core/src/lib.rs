//! Delayed Fisher-KPP equation on a habitat `(g(t), h(t))` whose ends move
//! by the Stefan law `h' = -mu u_x`, `g' = -mu u_x`.
//!
//! * [`model`]: reaction families, problem parameters, initial histories.
//! * [`characteristic`]: threshold speed `c0(tau)` and complex roots.
//! * [`semiwave`]: semi-wave profiles and the spreading speed `c*`.
//! * [`fbsolver`]: front-fixing finite-difference solver with a delay buffer.
//! * [`diagnostics`]: spreading/vanishing verdicts, front speeds, comparison.
//! * [`cli`]: the `kpp-stefan` command line, driven by [`config`].

pub mod characteristic;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fbsolver;
pub mod model;
pub mod semiwave;
pub mod tridiag;
