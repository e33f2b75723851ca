//! Discrete-event simulator and learning toolkit for online network slice
//! placement. A substrate of servers and switches receives chains of VNFs
//! with CPU, RAM and bandwidth demands; placements are decided one VNF at a
//! time by a deterministic heuristic, a graph-convolutional actor-critic, or
//! the actor-critic with its pre-softmax scores shaped toward the heuristic.
//! Non-stationary arrival streams with stair-stepped load changes drive the
//! robustness comparison, measured as acceptance ratio per training phase.

pub mod agent;
pub mod env;
pub mod heuristic;
pub mod load;
pub mod metrics;
pub mod neural;
pub mod runner;
pub mod scenario;
pub mod slice;
pub mod topology;

pub use agent::{AgentKind, Hyper};
pub use env::Env;
pub use scenario::Scenario;
pub use topology::{build_reference_psn, Psn, TopologyConfig};
