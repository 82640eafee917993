//! Bicriteria scheduling under speed scaling.
//!
//! A processor running at speed `s` draws power `s^alpha` (`alpha > 1`). Given
//! jobs with release times and work requirements, the crate computes
//!
//! * the minimum-makespan schedule for an energy budget and its inverse,
//!   the least energy for a deadline ([`makespan`]);
//! * the whole non-dominated energy/makespan curve in closed form ([`curve`]);
//! * arbitrarily accurate minimum-total-flow schedules for equal-work jobs
//!   ([`flow`]);
//! * multiprocessor variants for equal-work jobs and a Partition reduction
//!   showing the general problem is hard ([`multi`]);
//! * slow reference optimizers used to cross-check everything ([`oracle`]).

pub mod curve;
pub mod error;
pub mod flow;
pub mod makespan;
pub mod model;
pub mod multi;
pub mod oracle;
pub mod tol;

pub use error::{Error, Result};
pub use model::{
    check_canonical, energy_of_run, speed_for_energy, CanonicalReport, Instance, Job, PowerModel,
    Schedule, ScheduledJob,
};
