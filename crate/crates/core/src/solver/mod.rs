//! Discretisation and solution of the prescribed mean curvature equation
//! `ℳu = div(∇u/W) = nH(x, u)`.

mod comparison;
mod diagnostic;
mod discretization;
mod newton;
mod prescribed;

pub use comparison::{discrete_comparison_check, ComparisonVerdict, Hypothesis};
pub use diagnostic::{nonexistence_diagnostic, NonexistenceDiagnostic, BLOWUP_FACTOR};
pub use discretization::{mc_operator, q_operator, Discretization, Jet, Stencil};
pub use newton::{
    solve_dirichlet, solve_with, Continuation, ContinuationStep, SolveOptions, SolveReport,
};
pub use prescribed::{HSign, PrescribedH};
