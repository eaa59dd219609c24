//! Solvers for the L_p traveling salesman family.
//!
//! A route starts at a fixed vertex and visits every vertex once; its cost is
//! a norm of the vector of visit times. `p = 1` is the traveling repairman
//! (minimum latency) problem, `p = ∞` is path-TSP, and `p = 2` is the
//! traveling firefighter problem.

pub mod cover;
pub mod error;
pub mod exact;
pub mod generate;
pub mod io;
pub mod ktree;
pub mod lowerbound;
pub mod metrics;
pub mod objectives;
pub mod report;
pub mod segdp;
pub mod tol;

pub use error::{Error, Result};
pub use metrics::{Instance, MetricSpec};
pub use objectives::{norm, visit_times, Objective, Route, VisitTimes};
