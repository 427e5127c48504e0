//! Exact-time simulation and checking of binary circuits built from channels,
//! gates and storage elements, with fault models and self-stabilization
//! analysis.

// Verdicts carry an exact witness time, which makes them large by design.
#![allow(clippy::result_large_err)]

pub mod dag;
pub mod delay_class;
pub mod error;
pub mod faults;
pub mod gallery;
pub mod interval;
pub mod intervalset;
pub mod modules;
pub mod netlist;
pub mod signal;
pub mod stabilization;
pub mod sim;
pub mod strategy;
pub mod time;

pub use error::{AnalysisError, NetlistError, ParseError, SignalError};
pub use interval::{Bound, Interval};
pub use signal::{Closure, Execution, Signal};
pub use time::Time;
