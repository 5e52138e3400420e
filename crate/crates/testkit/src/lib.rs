//! Test doubles and proptest strategies shared by the workspace test suites.

pub mod arb;
pub mod target;

pub use target::{MockTarget, TargetBehavior};
