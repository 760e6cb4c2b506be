use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

/// A deterministic Markov control law computed on demand.
pub trait ActionRule: Send + Sync {
    fn action(&self, state: &[f64]) -> Vec<f64>;
}

pub type LookupFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Markov policy: the action depends only on the current state.
#[derive(Clone)]
pub enum Policy {
    /// `a = K·s`.
    LinearFeedback(DMatrix<f64>),
    Lookup(Arc<LookupFn>),
    SteepestDescent(Arc<dyn ActionRule>),
}

impl fmt::Debug for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::LinearFeedback(k) => f.debug_tuple("LinearFeedback").field(k).finish(),
            Policy::Lookup(_) => f.write_str("Lookup(..)"),
            Policy::SteepestDescent(_) => f.write_str("SteepestDescent(..)"),
        }
    }
}

impl Policy {
    /// Scalar feedback `a = k·s` for one-dimensional chains.
    pub fn scalar_gain(k: f64) -> Self {
        Policy::LinearFeedback(DMatrix::from_element(1, 1, k))
    }

    /// Zero action of the given width.
    pub fn uncontrolled(action_dim: usize) -> Self {
        Policy::Lookup(Arc::new(move |_: &[f64]| vec![0.0; action_dim]))
    }

    pub fn act(&self, s: &[f64]) -> Vec<f64> {
        match self {
            Policy::LinearFeedback(k) => (0..k.nrows()).map(|i| (0..k.ncols()).map(|j| k[(i, j)] * s[j]).sum()).collect(),
            Policy::Lookup(f) => f(s),
            Policy::SteepestDescent(rule) => rule.action(s),
        }
    }
}
