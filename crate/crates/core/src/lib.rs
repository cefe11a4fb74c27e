//! Exact-rational probability over countable alphabets, with lazy symbol
//! streams and randomness checks built on top.
//!
//! The crate is organised in layers:
//!
//! * [`space`]: countable alphabets, discrete distributions with certified
//!   tail bounds, finite strings and prefix-free sets, and the exact
//!   cylinder-mass arithmetic everything else relies on.
//! * [`measure`]: measure representations (mass functions on strings that
//!   split across one-symbol extensions) and checkable forms of their
//!   structural theorems: restriction bounds, covering equality,
//!   monotonicity, disjoint additivity.
//! * [`transform`]: deterministic lazy streams of symbols, a seedable
//!   sampler, and the stream transforms (shuffle, selection, conditioning,
//!   contraction, characteristic, symbol maps, products).
//! * [`mltest`]: leveled prefix-free test families with exact level bounds,
//!   and the pullback constructions that carry a test on a transformed
//!   space back to the source space.
//! * [`stats`]: empirical frequency, equivalence, and independence checks
//!   for sampled streams, with deterministic verdicts for a fixed seed.
//! * [`io`]: the stream file format and the JSON configuration formats
//!   shared with the command-line frontend.
//!
//! Masses and test bounds are `BigRational` throughout; floating point
//! appears only in the statistical envelopes of [`stats`].

pub mod error;
pub mod io;
pub mod measure;
pub mod mltest;
pub mod ratio;
pub mod rng;
pub mod space;
pub mod stats;
pub mod transform;

pub use error::Error;
pub use ratio::Ratio;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Default cap on scan loops whose termination depends on the data: prefix
/// steps consumed per emitted symbol, nodes expanded per structural check.
/// Hitting the cap is an [`Error::BudgetExhausted`], not a hang.
pub const DEFAULT_SCAN_BUDGET: u64 = 10_000_000;
