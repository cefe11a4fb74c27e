//! Transforms of symbol streams and of the distributions behind them.
//!
//! Two layers live here. [`rules`] holds the finitary ingredients: events
//! over an alphabet with certified masses, symbol-level random variables
//! with image distributions, prefix-driven selection rules, and position
//! index maps. [`stream`] applies them lazily to deterministic symbol
//! streams: shuffling positions, selecting subsequences, conditioning on
//! an event, indicator and contraction streams, pointwise maps, and
//! products of independent streams.
//!
//! The pairing is deliberate. Every stream transform has a distribution
//! counterpart (conditioning pairs with [`conditional_distribution`],
//! mapping with [`RandomVariable::image_distribution`]), and the test
//! layers upstairs check that long-run behaviour of a transformed stream
//! matches the transformed distribution.

mod rules;
mod stream;

pub use rules::{
    conditional_distribution, fill_alphabet, fill_distribution, fill_map, EventPredicate, IndexMap,
    RandomVariable, SelectionRule, DEFAULT_CERT_DEPTH,
};
pub use stream::{sample_ensemble, EnsembleStream};
