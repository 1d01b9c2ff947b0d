//! Simulator for language emergence in populations of learning agents whose
//! pairwise interactions are constrained by generated graph topologies.
//!
//! A population of `n` agents lives on a random graph (Erdős–Rényi,
//! Watts–Strogatz or Barabási–Albert). Training pairs are sampled from the
//! graph's edges with probability shaped by a node-centrality measure
//! (degree, betweenness, PageRank, or a uniform control). Each pair plays
//! referential signalling games: the sender describes a target object with a
//! discrete message, the receiver picks it out of a candidate set, and both
//! are trained with entropy-regularized REINFORCE. A random-pairing baseline
//! ignores the graph entirely.
//!
//! The crate is organized as a pipeline:
//!
//! - [`graph`]: graph generation with controlled node/edge counts
//! - [`centrality`]: per-node importance scores
//! - [`sampler`]: centrality-weighted pair schedules and the random baseline
//! - [`game`]: synthetic object dataset and game-round construction
//! - [`agent`]: agent parameters, forward passes, and REINFORCE updates
//!   with manually derived gradients
//! - [`orchestrator`]: end-to-end experiment runs, logging, and reporting

pub mod agent;
pub mod centrality;
pub mod error;
pub mod game;
pub mod graph;
pub mod orchestrator;
pub mod rng;
pub mod sampler;

pub use error::Error;
