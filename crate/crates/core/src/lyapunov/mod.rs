//! Converse Lyapunov functions: the probabilistic series over covered
//! trajectories and the mean series, with sandwich and decay checks.

mod decay;
mod estimate;
mod function;
mod horizon;
mod series;

pub use decay::{verify_decay_mean, verify_decay_prob, DecayConfig, DecayKind, DecayReport, DecayRow};
pub use estimate::{LfKind, LfPoint, LyapunovEstimate, KAPPA_UP_FACTOR};
pub use function::{LyapunovFn, MeanLf, ProbLf, TabulatedLf};
pub use horizon::truncation_horizon;
pub use series::{mean_lf, prob_lf, MeanLfValue, ProbLfValue};
