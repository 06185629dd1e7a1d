//! Optimum tracking for large non-stationary linear programs.
//!
//! The crate is organised bottom-up:
//!
//! * [`lp`] holds dense problems, their time evolution and the Model-n family.
//! * [`quest`] finds a feasible starting point with a Fejer relaxation process.
//! * [`cross`] and [`targeting`] implement the axisymmetric cross that follows
//!   the optimum as the data drifts.
//! * [`bsf`] is a bulk-synchronous master/worker skeleton with timing
//!   instrumentation; [`targeting::run_targeting`] runs on top of it.
//! * [`cost`] evaluates the analytic cost model (scalability bound, speedup,
//!   efficiency) from measured or synthetic parameters.
//! * [`oracle`] provides independent ground truth (dense simplex, brute-force
//!   projection) for tests and tracking-gap reporting.

pub mod bsf;
pub mod cost;
pub mod cross;
pub mod error;
pub mod lp;
pub mod oracle;
pub mod quest;
pub mod targeting;

pub use error::{Error, Result};
