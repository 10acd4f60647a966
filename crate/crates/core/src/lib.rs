//! Randomness-metered differentially private release of `d` counting queries.
//!
//! The crate implements two low-randomness mechanisms together with the
//! reference mechanisms they are distributionally equivalent to:
//!
//! * [`approx`]: `(ε, δ)`-DP release with truncated discrete Gaussian noise,
//!   a shared random shift and rounding to a coarse grid. Coordinates whose
//!   shifted value sits safely inside a grid cell are released without
//!   drawing any noise.
//! * [`pure`]: `ε`-DP release with discrete Laplace noise split into a rare
//!   tail part and a bounded body part, with the same shift-and-round trick.
//!
//! Every random decision is drawn from a [`BitTape`], which counts the fair
//! bits consumed per [`Category`]. All samplers are exact: irrational
//! probabilities are compared against lazily refined interval enclosures
//! ([`exact`]), never against floating point approximations.

pub mod approx;
pub mod counts;
mod error;
pub mod exact;
pub mod point_mass;
pub mod pure;
pub mod report;
pub mod samplers;
pub mod tape;

pub use approx::ApproxParams;
pub use counts::{floor_multiple, CountVector};
pub use error::{Error, Result};
pub use exact::{Dyadic, Enclose, IntervalValue};
pub use pure::{PureParams, PureTrace};
pub use report::{MechanismResult, RandomnessReport};
pub use samplers::{GaussParam, LaplaceScale};
pub use tape::{BitTape, Category};

/// Exact rational type used for mechanism parameters.
pub type Rational = num_rational::BigRational;
