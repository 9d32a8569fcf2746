//! Simulation and certificate checking for FlexATC, an adapt-then-combine
//! family of decentralized proximal gradient methods with probabilistic
//! communication skipping.
//!
//! Each agent `i` holds a smooth loss `f_i`; all agents share a nonsmooth
//! term `r`. One iteration takes a local gradient step, then with
//! probability `p` mixes with neighbours through a combiner pair `(A, B)`
//! built from a gossip matrix `W`, or otherwise keeps the step local.

pub mod analysis;
pub mod combiners;
pub mod error;
pub mod graph;
pub mod linalg;
pub mod problem;
pub mod solver;

pub use analysis::{fixed_point, Certifier, FixedPoint, StepCertificate};
pub use combiners::{CombinerPair, Variant};
pub use error::{Error, Result};
pub use graph::{gen_topology, lazify, metropolis_weights, MixingMatrix, Topology, TopologyKind};
pub use linalg::{Stacked, SymMatrix};
pub use problem::{Curvature, Dataset, ProblemInstance, ProxSpec};
pub use solver::{run, FlexAtc, RunOptions, RunTrace, TraceOptions, TraceRecord};
