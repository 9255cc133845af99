use thiserror::Error;

use crate::sim::SimTime;

/// Every failure the framework can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown signal `{0}`")]
    UnknownSignal(String),

    #[error("duplicate signal `{0}`")]
    DuplicateSignal(String),

    #[error("width mismatch on `{signal}`: signal is {expected} bits, value is {actual} bits")]
    WidthMismatch { signal: String, expected: u32, actual: u32 },

    #[error("value {value:#x} does not fit in {width} bits")]
    ValueTooWide { value: u128, width: u32 },

    #[error("`{0}` contains X or Z bits and has no integer value")]
    NotAnInteger(String),

    #[error("cannot wait outside of a simulation task")]
    NotInTask,

    #[error("no tasks spawned")]
    NoTasks,

    #[error("deadlock at {time} ns: every task is blocked ({})", blocked.join(", "))]
    Deadlock { time: SimTime, blocked: Vec<String> },

    #[error("combinational logic did not settle after {0} iterations")]
    CombLoop(usize),

    #[error("task `{task}` failed: {source}")]
    TaskFailed {
        task: String,
        #[source]
        source: Box<Error>,
    },

    #[error("factory error: {0}")]
    Factory(String),

    #[error("component `{0}` already exists")]
    DuplicateComponent(String),

    #[error("ConfigDB lookup failed: no value for key `{key}` visible from `{path}`")]
    ConfigLookup { path: String, key: String },

    #[error("ConfigDB value for key `{key}` at `{path}` has a different type")]
    ConfigType { path: String, key: String },

    #[error("objection error: {0}")]
    Objection(String),

    #[error("watchdog expired at {time} ns with {outstanding} objection(s) raised")]
    Watchdog { time: SimTime, outstanding: u32 },

    #[error("TLM protocol error: {0}")]
    Protocol(String),

    #[error("port `{0}` is not connected")]
    Unconnected(String),

    #[error("unknown test `{name}`; registered tests: {}", registered.join(", "))]
    UnknownTest { name: String, registered: Vec<String> },

    #[error("test `{0}` is already registered")]
    DuplicateTest(String),

    #[error("unsatisfiable constraints on field `{0}`")]
    Unsatisfiable(String),

    #[error("invalid range list: {0}")]
    InvalidRanges(String),

    #[error("sample is missing value `{0}`")]
    MissingSample(String),

    #[error("coverage model shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("coverage XML parse error at line {line}: {message}")]
    Xml { line: u32, message: String },

    #[error("check failed: {0}")]
    Check(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
