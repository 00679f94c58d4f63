//! Random walk with erasure (RWE) recommendation over bipartite
//! implicit-feedback graphs, the P³ / RP³β / item-kNN baselines, joint
//! ideal-point estimation and the evaluation metrics used to compare them.

pub mod error;
pub mod eval;
pub mod graph;
pub mod ideology;
pub mod positions;
pub mod recommenders;
pub mod rwe;
pub mod scores;

pub use error::{Error, Result};
pub use graph::{build_graph, propagate, transition, FeedbackGraph, MassVector, TransitionMatrix};
pub use positions::Positions;
pub use recommenders::{RankedList, Recommender, RecommenderRegistry};
pub use rwe::{ErasureMatrix, ErasureStrategy, RweScores};
pub use scores::ScoreMap;
