//! Steepest-descent policies from a Lyapunov function, with stability and
//! reaching-time bounds.

mod bounds;
mod policy;

pub use bounds::{reaching_time_bound, stability_radius, verify_reaching, ReachingReport};
pub use policy::{into_policy, steepest_descent_policy, Choice, SteepestDescent, SynthesisConfig};
