//! q-calculus primitives, generalized q-fractional operators and a
//! successive-approximation solver for Caputo-type q-fractional initial value
//! problems.

pub mod cauchy;
pub mod error;
pub mod expr;
pub mod fractional;
pub mod jackson;
pub mod special;

pub use cauchy::{apriori_bound, estimate_lipschitz, mittag_leffler_partial_sum, q_mittag_leffler, solve, CauchyProblem, PicardSolver, SolverReport};
pub use error::{QError, Result};
pub use fractional::{FracOperators, FracOrder, OperatorContext};
pub use jackson::{jackson_integral, jackson_integral_zero, q_derivative, Fallible, QLattice, ScalarFunction};
pub use special::{q_gamma, q_number, q_power_general, QParams, SeriesControl};
