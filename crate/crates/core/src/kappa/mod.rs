//! Comparison functions: class K / K∞ functions on grids, KL bounds, and the
//! construction of a KL bound from reach and overshoot certificates.

mod construct;
mod convex;
mod delta;
mod kappa_fn;
mod kl;
mod piecewise;
mod reach;
mod sontag;

pub use construct::{
    construct_kl_from_certificate, decay_chain, ConstructConfig, ConstructedKl, DecayChain, KlConstruction, Smoothing,
    Xi, MAX_RADIUS_INDEX,
};
pub use convex::{concave_inverse, convex_majorant};
pub use delta::{polygonal_delta, riemann_smooth, DeltaCertificate};
pub use kappa_fn::Kappa;
pub use kl::{Family, KLFunction, KlAxioms, KlGrid};
pub use piecewise::{chi, PiecewiseKappa};
pub use reach::ReachCertificate;
pub use sontag::{sontag_factorize, SontagConfig, SontagPair};
