//! Exact dyadic numbers and rigorous interval enclosures.

mod dyadic;
mod functions;
mod interval;

pub use dyadic::Dyadic;
pub(crate) use functions::refine;
pub use functions::{
    binom_prob_enclose, exp_neg, exp_neg_of, exp_neg_rational, exp_pos, exp_pos_of, ln_enclose,
    ln_of, sqrt_enclose, sqrt_of,
};
pub use interval::{Enclose, EncloseFn, IntervalValue};

/// Starting precision for lazily refined comparisons.
pub const DEFAULT_PRECISION: i64 = 64;
