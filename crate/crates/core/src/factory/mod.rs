//! Bernoulli factory from polynomial envelopes.
//!
//! An envelope of `f` is a family of Bernstein rows `a(n, ·) <= b(n, ·)`
//! whose polynomials squeeze `f` from below and above, with `a` a reverse
//! supermartingale and `b` a reverse submartingale in the number of heads.
//! [`envelope_bounds`] turns such a family and a p-coin into a bound stream
//! for [`crate::martingale::martingale_coin`].

mod bernstein;
mod envelope;
mod file;
mod stream;
mod validate;

pub use bernstein::{
    bernstein_eval, hypergeom_condmean, hypergeom_condmean_exact, EXACT_BINOMIAL_LIMIT,
};
pub use envelope::{
    EnvelopeCoefficients, IdentityEnvelope, Schedule, SquareEnvelope, TabulatedEnvelope,
};
pub use file::{load_envelope, parse_envelope, parse_rational, write_envelope};
pub use stream::{envelope_bounds, factory_coin, EnvelopeStream, HeadsState};
pub use validate::{
    default_grid, validate_envelope, EnvelopeReport, GapRecord, Violation, NUMERIC_TOLERANCE,
};
