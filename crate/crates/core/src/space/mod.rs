//! Sample spaces: countable alphabets, discrete distributions with
//! certified tail bounds, finite symbol strings, and prefix-free sets.
//!
//! A cylinder (the set of all infinite sequences extending a finite
//! string) has mass equal to the product of its symbol masses, and the
//! mass of a prefix-free set of strings is the sum over its members.
//! Those two exact computations, together with the tail bounds that make
//! truncation honest, are the foundation the measure, transform, and test
//! layers build on.

mod alphabet;
mod dist;
mod strings;

pub use alphabet::{pair_index, unpair_index, Alphabet, Symbol};
pub use dist::{DiscreteDistribution, DistributionSpec, MassInterval, TruncatedAlphabet};
pub use strings::{all_strings, prefix_free_cover, PrefixFreeSet, SymbolString};
