//! Architecture-driven deployment and evaluation of multi-channel blockchain
//! networks.
//!
//! A [`Request`](planner::Request) pairs a BND model with metric requests.
//! The [`planner`] turns it into a shortest sequence of action calls drawn
//! from an [`ActionRegistry`](actions::ActionRegistry), and the
//! [`orchestrator`] executes that plan against deployment targets while
//! recording an experiment record and a timed activity log.

pub mod actions;
pub mod bnd;
pub mod clock;
pub mod orchestrator;
pub mod planner;
pub mod sim;
pub mod token;

pub use actions::{ActionDescriptor, ActionKind, ActionRegistry};
pub use bnd::{BndError, BndModel};
pub use orchestrator::{Engine, EngineOptions, ExperimentRecord, ExperimentStatus, Workspace};
pub use planner::{plan, ExecutionPlan, PlanError, PlanningOutcome, Request};
