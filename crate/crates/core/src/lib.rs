//! Operator-size dynamics of Brownian spin circuits with q-body couplings,
//! depolarizing noise and imperfect time reversal.
//!
//! The crate contains three independent routes to the weight distribution
//! `b_w(t)`:
//!
//! * [`master_equation`]: the exact finite-N birth–death generator and its
//!   time integration and spectrum,
//! * [`gf`]: the generating-function solution in the dilute limit with
//!   1/N corrections through second order (built on [`series`]),
//! * [`trajectory`]: a microscopic Monte Carlo over noise realizations for
//!   small qubit counts.
//!
//! [`observables`] turns any of them into echo, dressed OTOC and ROTOC values.

pub mod combinatorics;
pub mod error;
pub mod gf;
pub mod master_equation;
pub mod observables;
pub mod series;
pub mod trajectory;

pub use combinatorics::CouplingSpec;
pub use error::{Error, Result};
pub use master_equation::{BandedGenerator, ModelParams, WeightDistribution};
pub use series::{DiffOperator, Jet, KPolynomial, RationalFn, TruncatedSeries};
