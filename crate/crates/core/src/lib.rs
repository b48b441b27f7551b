//! Deterministic simulator and verification harness for cooperatively
//! scheduled guest programs.
//!
//! Guest programs are built from functions whose instances run under an
//! interchangeable scheduling policy, from fully sequential inline
//! execution up to bounded exhaustive exploration of every interleaving.
//! Instances communicate only by direct message passing; shared locations,
//! locks and channels are provided as mechanisms that are themselves
//! scheduler-visible instances driven purely by send/receive. Objects add
//! a second scheduling level: a global scheduler picks objects, and each
//! object schedules its own method activations.
//!
//! The crate is organized around a small number of layers:
//!
//! * [`ir`]: the guest instruction set, its text format, and validation.
//! * [`exec`]: configurations and the single-step transition relation.
//! * [`mech`]: the native communication mechanisms (lock, shared location,
//!   status channel, bidirectional channel).
//! * [`object`]: object instances, request queues and method activations.
//! * [`sched`]: scheduling policies and whole-program runs with replay.
//! * [`explore`]: bounded exhaustive exploration of scheduler choices.
//! * [`checks`]: property checkers over exploration results.
//! * [`trace`]: stable text and record export of event traces.

pub mod checks;
pub mod exec;
pub mod explore;
pub mod ir;
pub mod mech;
pub mod object;
pub mod sched;
pub mod trace;
pub mod value;

pub use exec::{Configuration, Event, EventKind, FaultKind, StepError};
pub use explore::{explore, ExplorationResult};
pub use ir::{parse_program, print_program, validate, Diagnostic, ProgramDef};
pub use sched::{replay, run, RunError, RunResult, SchedulerPolicy, Verdict};
pub use value::{InstanceId, Symbol, Value};
