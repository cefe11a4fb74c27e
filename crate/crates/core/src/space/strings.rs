//! Finite symbol strings and prefix-free sets.

use std::fmt;

use crate::error::Error;
use crate::space::{Alphabet, Symbol};

/// A finite string of symbols; the empty string denotes the whole space's
/// cylinder.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SymbolString(pub Vec<Symbol>);

impl SymbolString {
    pub fn empty() -> Self {
        SymbolString(Vec::new())
    }

    pub fn from_codes(codes: &[u64]) -> Self {
        SymbolString(codes.iter().copied().map(Symbol).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    /// Is `self` a (non-strict) prefix of `other`?
    pub fn is_prefix_of(&self, other: &SymbolString) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// The first `n` symbols.
    pub fn prefix(&self, n: usize) -> SymbolString {
        SymbolString(self.0[..n.min(self.0.len())].to_vec())
    }

    /// `self` followed by one more symbol.
    pub fn push(&self, s: Symbol) -> SymbolString {
        let mut v = self.0.clone();
        v.push(s);
        SymbolString(v)
    }

    /// `self` followed by `tail`.
    pub fn concat(&self, tail: &SymbolString) -> SymbolString {
        let mut v = self.0.clone();
        v.extend_from_slice(&tail.0);
        SymbolString(v)
    }

    /// Sort key: shorter strings first, then by symbol codes.
    fn order_key(&self) -> (usize, &[Symbol]) {
        (self.0.len(), &self.0)
    }
}

impl fmt::Display for SymbolString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "(empty)");
        }
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl From<Vec<Symbol>> for SymbolString {
    fn from(v: Vec<Symbol>) -> Self {
        SymbolString(v)
    }
}

/// A finite set of strings, none of which is a prefix of another.
///
/// Members are kept sorted by (length, codes), so iteration order, and
/// anything derived from it, is deterministic. Cylinders of distinct
/// members are disjoint, which is what makes the set's mass the plain sum
/// of its member masses.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PrefixFreeSet {
    members: Vec<SymbolString>,
}

impl PrefixFreeSet {
    /// Validates prefix-freeness; duplicates are rejected too (a string is
    /// a prefix of itself).
    pub fn new(mut members: Vec<SymbolString>) -> Result<Self, Error> {
        // In plain lexicographic order a prefix sorts directly before its
        // extensions, and every string between a prefix and one of its
        // extensions shares that prefix. So a prefix violation exists iff
        // some member prefixes its immediate lexicographic successor,
        // which keeps validation near-linear.
        let mut lex: Vec<&SymbolString> = members.iter().collect();
        lex.sort_by(|a, b| a.0.cmp(&b.0));
        for pair in lex.windows(2) {
            if pair[0].is_prefix_of(pair[1]) {
                return Err(Error::NotPrefixFree {
                    shorter: pair[0].to_string(),
                    longer: pair[1].to_string(),
                });
            }
        }
        members.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        Ok(PrefixFreeSet { members })
    }

    pub fn empty() -> Self {
        PrefixFreeSet {
            members: Vec::new(),
        }
    }

    /// Construction bypass for sets already known to be prefix-free, such
    /// as a filtered subset of a validated set. Sorted here; not checked.
    pub(crate) fn from_members_unchecked(mut members: Vec<SymbolString>) -> Self {
        members.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        PrefixFreeSet { members }
    }

    pub fn members(&self) -> &[SymbolString] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn max_len(&self) -> usize {
        self.members.iter().map(|s| s.len()).max().unwrap_or(0)
    }

    /// Does some member prefix `s`?
    pub fn covers(&self, s: &SymbolString) -> bool {
        self.members.iter().any(|m| m.is_prefix_of(s))
    }

    /// The member that prefixes `s`, if any. At most one can.
    pub fn covering_member(&self, s: &SymbolString) -> Option<&SymbolString> {
        self.members.iter().find(|m| m.is_prefix_of(s))
    }
}

/// Minimal prefix-free set generating the same open set as `strings`.
///
/// Drops every string that extends another in the collection (cylinder
/// already covered) and deduplicates; the survivors are mutually
/// prefix-incomparable, and the union of their cylinders equals the union
/// over the input. Ties are broken by (length, codes) order, so the result
/// is deterministic.
pub fn prefix_free_cover(strings: &[SymbolString]) -> PrefixFreeSet {
    let mut sorted: Vec<&SymbolString> = strings.iter().collect();
    sorted.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
    let mut kept: Vec<SymbolString> = Vec::new();
    for s in sorted {
        if !kept.iter().any(|k| k.is_prefix_of(s)) {
            kept.push(s.clone());
        }
    }
    PrefixFreeSet { members: kept }
}

/// All strings of exactly `len` over the first `width` symbols of
/// `alphabet`, in lexicographic order. Empty `len` gives the empty string.
pub fn all_strings(alphabet: &Alphabet, width: u64, len: usize) -> Vec<SymbolString> {
    let width = match alphabet.size() {
        Some(n) => width.min(n),
        None => width,
    };
    let symbols: Vec<Symbol> = (0..width).map(|i| alphabet.enumerate(i)).collect();
    let mut out = vec![SymbolString::empty()];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * symbols.len());
        for s in &out {
            for &a in &symbols {
                next.push(s.push(a));
            }
        }
        out = next;
    }
    out
}
