//! Clocked cooperative-task simulation kernel.
//!
//! Tasks are ordinary `async` blocks polled by a single deterministic
//! executor. Time is counted in integer nanosecond ticks. Signals carry
//! four-state vectors; 1-bit signals produce rising/falling edges on
//! `0 -> 1` / `1 -> 0` transitions (initialisation from X is not an edge).
//!
//! DUT models attach either as edge processes (flops, run at the edge before
//! any waiting task resumes) or as combinational processes (re-evaluated at
//! the end of each delta cycle in which an input changed).

mod kernel;
mod logic;

pub use kernel::{Bus, Park, SignalId, Sim, TaskId, Wait, Wakeup};
pub use logic::{Logic, LogicValue, MAX_WIDTH};

/// Simulated time in nanoseconds.
pub type SimTime = u64;

/// Clock period used by the testbenches.
pub const DEFAULT_CLK_PERIOD: SimTime = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    Rising,
    Falling,
}

/// What a task can wait for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trigger {
    RisingEdge(SignalId),
    FallingEdge(SignalId),
    /// Fires after exactly `n` rising edges.
    ClockCycles(SignalId, u32),
    Timer(SimTime),
}
