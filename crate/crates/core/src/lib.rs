//! Self-stabilizing distributed algorithms under single-atomicity
//! neighborhood access: a move reads the closed one-hop neighborhood and
//! writes back into it as one atomic action.
//!
//! The crate has four layers:
//!
//! - [`topology`]: simple undirected graphs, generators, and descriptors.
//! - [`engine`]: the serial execution model — configurations, locality-scoped
//!   views, write sets, schedulers, traces, and the run loop.
//! - [`algorithms`]: the built-in rule systems (maximal matching, minimal
//!   k-dominating set, maximal k-dependent set) plus a deliberately broken
//!   fixture for negative testing.
//! - [`verifier`]: exhaustive state-space checking of closure and
//!   convergence, with brute-force oracles for the target structures.
//! - [`transformer`]: a synchronous message-passing simulation that runs the
//!   same rules over cached neighbor states, with randomized mutual
//!   exclusion, fault injection, and serializability checks.

pub mod algorithms;
pub mod engine;
pub mod seeds;
pub mod topology;
pub mod transformer;
pub mod verifier;

pub use algorithms::{AlgorithmSpec, InitSpec, WitnessPolicy};
pub use engine::daemon::{Daemon, DaemonPolicy};
pub use engine::state::{Configuration, NeighborhoodView, ProcState, WriteSet};
pub use engine::trace::{MoveRecord, RuleId, Trace};
pub use topology::{Graph, GraphDescriptor, ProcId};
pub use transformer::{fault::FaultPlan, Metrics, Simulator, TrParams};
pub use verifier::VerificationReport;
