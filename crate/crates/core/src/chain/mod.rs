//! Controlled Markov chains, goal sets, policies and seeded trajectory batches.

mod batch;
mod goal;
mod model;
mod policy;
mod rng;

pub use batch::{read_trajectory_csv, simulate_batch, simulate_into, TrajectoryBatch, TrajectoryTable};
pub use goal::{norm, GoalSet};
pub use model::{linear_uniform_chain, ChainModel, NoiseSpec, StepFn, Transition};
pub use policy::{ActionRule, LookupFn, Policy};
pub use rng::{derive_seed, trajectory_rng};
