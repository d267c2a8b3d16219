//! Protocols and a deterministic round-synchronous simulator for anonymous
//! dynamic networks with congested (logarithmic-width) links.
//!
//! The library has three layers:
//!
//! * exact analysis oracles over evolving graphs: temporal connectivity,
//!   isoperimetric numbers, share matrices, window conductance, ideal
//!   (untruncated) potential evolution and its contraction guarantees
//!   ([`graph`], [`matrix`], [`schedule`], [`oracle`]);
//! * fixed-point potential arithmetic and the node-level protocol state
//!   machines: network-size discovery by supervised probing, multiplicity
//!   counting, and token-free all-to-all message dissemination
//!   ([`numerics`], [`params`], [`protocol`]);
//! * a lockstep simulator that drives the state machines over a schedule,
//!   records traces, audits per-message bit widths, and replays runs
//!   byte-identically from a seed ([`sim`], [`config`]).
//!
//! Every analysis quantity is computed in exact rational arithmetic; no
//! floating point participates in any decision, bound, or output.

pub mod config;
pub mod graph;
pub mod matrix;
pub mod numerics;
pub mod oracle;
pub mod params;
pub mod protocol;
pub mod rational;
pub mod schedule;
pub mod sim;
pub mod verify;

pub use config::{run_experiment, run_sweep, ExperimentConfig, Mode, ProtocolKind, SweepConfig};
pub use graph::{ConstituentGraph, GraphStats};
pub use numerics::{FixedPointParams, Potential};
pub use schedule::{Schedule, ScheduleFamily};
pub use sim::{RunResult, TraceRecord};
