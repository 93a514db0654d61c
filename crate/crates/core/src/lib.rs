//! Semidefinite programming formulations of graph coloring.
//!
//! * [`graph`]: graphs, file formats, cliques, (k−1)-trees, coloring oracles.
//! * [`numlin`]: symmetric matrices, Jacobi eigensolver, rank and PSD tests.
//! * [`sdp`]: standard-form SDPs and a primal–dual interior-point solver.
//! * [`formulations`]: the vector chromatic number SDP, the cost-augmented
//!   SDP, reference solutions and coloring extraction.
//! * [`certificates`]: closed-form dual certificates and their verification.
//! * [`heuristics`]: the two SDP-driven four-coloring heuristics.
//! * [`batch`]: corpus runs and reports.

pub mod batch;
pub mod certificates;
pub mod config;
pub mod error;
pub mod formulations;
pub mod graph;
pub mod heuristics;
pub mod numlin;
pub mod sdp;

pub use config::Config;
pub use error::{Error, Result};
