//! Scalar-field expressions over chart coordinates: parsing, exact symbolic
//! differentiation, evaluation and sampling-based zero tests.

mod chart;
mod diff;
mod eval;
mod expr;
mod parse;
mod sample;

pub use chart::{Chart, Point};
pub use diff::{differentiate, gradient, partial};
pub use eval::{evaluate, evaluate_at, GuardHit, Tape, DIVISION_GUARD};
pub use expr::{Expr, ExprDisplay, Node};
pub use parse::parse_expr;
pub use sample::{
    check_pointwise, expr_zero, exprs_zero, random_polynomial, CheckReport, Sampler,
    DEFAULT_SAMPLES, DEFAULT_TOL,
};
