//! Proximity-aware power-of-two-choices load balancing on graphs.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: topology generators, truncated BFS, graph attributes and the
//!   edge-list text format.
//! - [`policy`]: per-origin peer sampling distributions for POT,
//!   Unif-POT(k) and InvSq-POT(k), and the two-choice allocation rule.
//! - [`static_sim`]: sequential balls-and-bins allocation with load
//!   histograms, total variation and request distance.
//! - [`dynamic_sim`]: event-driven queueing simulation (Poisson arrivals,
//!   exponential FCFS service) with time-averaged occupancy estimators.
//! - [`mean_field`]: the closed-form n→∞ occupancy law for power-of-d.
//! - [`batch`]: fan-out of independent runs, parallel when the `parallel`
//!   feature is enabled and sequential otherwise.

pub mod batch;
pub mod distribution;
pub mod dynamic_sim;
pub mod error;
pub mod graph;
pub mod mean_field;
pub mod policy;
pub mod rng;
pub mod static_sim;

pub use error::{Error, Result};
pub use distribution::{JointDistribution, LoadDistribution};
pub use graph::{Graph, TopologySpec};
pub use policy::{PolicyKind, SamplingTable};

