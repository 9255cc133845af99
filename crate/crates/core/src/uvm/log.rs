use std::cell::{Cell, RefCell};
use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::sim::SimTime;

/// Message severity. Larger is more severe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Level(pub u8);

impl Level {
    pub const PYUVM_DEBUG: Level = Level(4);
    pub const FIFO_DEBUG: Level = Level(5);
    pub const DEBUG: Level = Level(10);
    pub const INFO: Level = Level(20);
    pub const WARNING: Level = Level(30);
    pub const ERROR: Level = Level(40);
    pub const CRITICAL: Level = Level(50);

    const NAMED: [(Level, &'static str); 7] = [
        (Level::PYUVM_DEBUG, "PYUVM_DEBUG"),
        (Level::FIFO_DEBUG, "FIFO_DEBUG"),
        (Level::DEBUG, "DEBUG"),
        (Level::INFO, "INFO"),
        (Level::WARNING, "WARNING"),
        (Level::ERROR, "ERROR"),
        (Level::CRITICAL, "CRITICAL"),
    ];
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match Self::NAMED.iter().find(|(l, _)| l == self) {
            Some((_, n)) => f.write_str(n),
            None => write!(f, "LEVEL{}", self.0),
        }
    }
}

impl FromStr for Level {
    type Err = Error;

    /// Accepts a level name (any case) or its number.
    fn from_str(s: &str) -> Result<Self, Error> {
        if let Ok(n) = s.parse::<u8>() {
            return Ok(Level(n));
        }
        let up = s.to_ascii_uppercase();
        Self::NAMED
            .iter()
            .find(|(_, n)| *n == up)
            .map(|(l, _)| *l)
            .ok_or_else(|| Error::Config(format!("unknown log level `{s}`")))
    }
}

/// Collects formatted log lines at or above a threshold.
pub struct Logger {
    threshold: Cell<Level>,
    echo: Cell<bool>,
    lines: RefCell<Vec<String>>,
}

impl Logger {
    pub fn new(threshold: Level) -> Self {
        Self {
            threshold: Cell::new(threshold),
            echo: Cell::new(false),
            lines: RefCell::new(Vec::new()),
        }
    }

    pub fn threshold(&self) -> Level {
        self.threshold.get()
    }

    pub fn set_threshold(&self, level: Level) {
        self.threshold.set(level);
    }

    /// Also print emitted lines to stderr.
    pub fn set_echo(&self, echo: bool) {
        self.echo.set(echo);
    }

    pub fn enabled(&self, level: Level) -> bool {
        level >= self.threshold.get()
    }

    /// Emits `<time> <LEVEL> <path> <message>` unless suppressed.
    pub fn log(&self, time: SimTime, level: Level, path: &str, message: &str) {
        if !self.enabled(level) {
            return;
        }
        let line = format!("{time} {level} {path} {message}");
        if self.echo.get() {
            eprintln!("{line}");
        }
        self.lines.borrow_mut().push(line);
    }

    pub fn lines(&self) -> Vec<String> {
        self.lines.borrow().clone()
    }

    pub fn take_lines(&self) -> Vec<String> {
        std::mem::take(&mut *self.lines.borrow_mut())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_and_names() {
        assert!(Level::PYUVM_DEBUG < Level::FIFO_DEBUG);
        assert!(Level::FIFO_DEBUG < Level::DEBUG);
        assert_eq!(Level::FIFO_DEBUG.to_string(), "FIFO_DEBUG");
        assert_eq!("warning".parse::<Level>().unwrap(), Level::WARNING);
        assert_eq!("5".parse::<Level>().unwrap(), Level::FIFO_DEBUG);
        assert!("loud".parse::<Level>().is_err());
    }

    #[test]
    fn threshold_filters() {
        let l = Logger::new(Level::INFO);
        l.log(10, Level::INFO, "uvm_test_top.env", "hello");
        l.log(11, Level::FIFO_DEBUG, "uvm_test_top.env", "hidden");
        assert_eq!(l.lines(), ["10 INFO uvm_test_top.env hello"]);
    }
}
