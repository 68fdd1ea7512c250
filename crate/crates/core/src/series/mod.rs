//! Truncated series, Taylor jets and rational-coefficient differential operators.

mod flow;
mod jet;
mod operator;
mod poly;
mod rational;
mod truncated;

pub use flow::{biorthogonal_pairing, invert_flow, jet_eval, solve_composition};
pub use jet::Jet;
pub use operator::{apply_operator, kpoly_to_operator, DiffOperator, Expansion, Generator, KPolynomial};
pub use poly::Polynomial;
pub use rational::RationalFn;
pub use truncated::TruncatedSeries;
