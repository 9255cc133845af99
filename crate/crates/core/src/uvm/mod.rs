//! Methodology layer: component hierarchy, phases, configuration database,
//! factory, objections, logging and the test registry.
//!
//! A test is a root [`Component`] named `uvm_test_top`. Phases run in the
//! order build (top-down), connect (bottom-up), run (every component's task
//! spawned, until the objection count returns to zero), check (bottom-up)
//! and final (top-down, used to hand coverage to the result).

mod component;
mod config;
mod log;
mod runner;

pub use component::{
    kind_name, Component, Factory, Phase, PhaseCtx, PhaseEvent, Reporter, RunTask, Tree, Uvm, ROOT_NAME,
};
pub use config::{glob_match, ConfigDb};
pub use log::{Level, Logger};
pub use runner::{run_test, RunOptions, TestFactory, TestRegistry, TestResult, DEFAULT_WATCHDOG_NS};
