//! Distributed source-separation detection.
//!
//! Every node in a network holds one scalar state and repeatedly averages
//! it with its neighbors'; a designated source node additionally injects a
//! fixed strength. States converge to the node potentials of a grounded
//! electrical network, so a node whose state sinks to zero has lost every
//! path to the source and can declare itself cut by a simple threshold
//! test. The same detector works in mobile networks: when the graph
//! sequence is driven by an ergodic Markov chain, the expected states
//! converge, and they are positive exactly for the nodes that reach the
//! source in the union of all graphs the chain can produce.
//!
//! Module map:
//!
//! - [`graph`]: immutable undirected graphs, reachability, unions,
//!   unit-disk construction, edge-list text format;
//! - [`dynamics`]: the synchronous state update, in scalar and matrix
//!   form, plus threshold-based cut beliefs;
//! - [`electrical`]: direct solve for the grounded-network potentials,
//!   the ground truth for the static fixed point;
//! - [`process`]: generators for time-varying graph sequences (mobility,
//!   Markov chains over graph sets, node failures, i.i.d. link loss);
//! - [`jls`]: jump-linear analysis of the update under a Markov graph
//!   process: limiting mean/correlation closed forms, spectral
//!   diagnostics, positivity pattern, Monte Carlo cross-check;
//! - [`protocol`]: the asynchronous execution with beacon-based neighbor
//!   qualification, stale-state buffering and eviction.

pub mod dynamics;
pub mod electrical;
pub mod graph;
pub mod jls;
pub mod process;
pub mod protocol;

pub use dynamics::{run_to_convergence, CutBeliefVector, StateVector};
pub use graph::{Graph, GraphSet, SOURCE};
pub use jls::{JlsPrediction, JlsSystem};
pub use process::{FailureSchedule, GraphProcess, MarkovChainSpec, MobilityConfig};
pub use protocol::{run_async, AsyncParams, LossModel};
