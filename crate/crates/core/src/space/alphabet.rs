//! Countable alphabets and their symbols.
//!
//! A symbol is a `u64` code. For a root alphabet (the naturals, or a
//! finite range of them) the code is the enumeration index itself. Derived
//! alphabets reuse the codes of their base: a subset alphabet enumerates
//! the members of its base that satisfy a predicate, in base order, and a
//! product alphabet codes a tuple by Cantor-pairing the component codes.
//! Sharing codes keeps symbol identity stable across restriction and
//! conditioning, which is what makes statements like "the conditional mass
//! of symbol 2" meaningful.

use std::fmt;
use std::sync::Arc;

/// One symbol of a countable alphabet, identified by its `u64` code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(pub u64);

impl Symbol {
    pub fn code(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Cantor pairing: a bijection from code pairs to codes.
///
/// Diagonal order: all pairs with a smaller coordinate sum come first.
pub fn pair_index(a: u64, b: u64) -> u64 {
    let s = a as u128 + b as u128;
    let z = s * (s + 1) / 2 + b as u128;
    u64::try_from(z).expect("paired code exceeds u64")
}

/// Inverse of [`pair_index`].
pub fn unpair_index(z: u64) -> (u64, u64) {
    let z = z as u128;
    let mut w = (((8 * z + 1) as f64).sqrt() as u128).saturating_sub(2) / 2;
    while (w + 1) * (w + 2) / 2 <= z {
        w += 1;
    }
    let t = w * (w + 1) / 2;
    let b = z - t;
    let a = w - b;
    (a as u64, b as u64)
}

/// How far subset enumeration will scan the base alphabet before giving up.
const SUBSET_SCAN_LIMIT: u64 = 1 << 24;

#[derive(Clone)]
enum Kind {
    /// All of the naturals; code = index.
    Naturals,
    /// The first `n` naturals; code = index.
    Finite { n: u64 },
    /// Members of `base` satisfying `member`, in base enumeration order.
    Subset {
        base: Arc<Alphabet>,
        member: Arc<dyn Fn(Symbol) -> bool + Send + Sync>,
        /// Member count if finite and known; governs `size()`.
        size: Option<u64>,
    },
    /// Tuples over the component alphabets, coded by left-folded pairing.
    Product { components: Arc<Vec<Alphabet>> },
}

/// A countable (finite or infinite) alphabet with a decidable membership
/// test and an injective enumeration of its members.
#[derive(Clone)]
pub struct Alphabet {
    kind: Kind,
    label: String,
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alphabet({})", self.label)
    }
}

impl Alphabet {
    /// The naturals 0, 1, 2, ...
    pub fn naturals() -> Self {
        Alphabet {
            kind: Kind::Naturals,
            label: "nat".to_string(),
        }
    }

    /// The finite alphabet {0, ..., n-1}.
    pub fn finite(n: u64) -> Self {
        Alphabet {
            kind: Kind::Finite { n },
            label: format!("fin{n}"),
        }
    }

    /// The sub-alphabet of `base` whose members satisfy `member`.
    ///
    /// `size` must be given when the member set is finite; `None` asserts
    /// it is infinite (enumeration then always terminates).
    pub fn subset(
        base: Alphabet,
        label: &str,
        size: Option<u64>,
        member: impl Fn(Symbol) -> bool + Send + Sync + 'static,
    ) -> Self {
        let label = format!("{}|{}", base.label, label);
        Alphabet {
            kind: Kind::Subset {
                base: Arc::new(base),
                member: Arc::new(member),
                size,
            },
            label,
        }
    }

    /// The product of two or more alphabets.
    pub fn product(components: Vec<Alphabet>) -> Self {
        assert!(components.len() >= 2, "product needs at least 2 components");
        let label = components
            .iter()
            .map(|a| a.label.as_str())
            .collect::<Vec<_>>()
            .join("x");
        Alphabet {
            kind: Kind::Product {
                components: Arc::new(components),
            },
            label,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Member count, `None` if infinite.
    pub fn size(&self) -> Option<u64> {
        match &self.kind {
            Kind::Naturals => None,
            Kind::Finite { n } => Some(*n),
            Kind::Subset { size, .. } => *size,
            Kind::Product { components } => components
                .iter()
                .map(|c| c.size())
                .try_fold(1u64, |acc, s| s.map(|s| acc * s)),
        }
    }

    /// Number of components for a product alphabet, 1 otherwise.
    pub fn arity(&self) -> usize {
        match &self.kind {
            Kind::Product { components } => components.len(),
            _ => 1,
        }
    }

    /// Component alphabets of a product, or a singleton slice view of self.
    pub fn components(&self) -> Option<&[Alphabet]> {
        match &self.kind {
            Kind::Product { components } => Some(components),
            _ => None,
        }
    }

    /// Does `s` belong to this alphabet?
    pub fn contains(&self, s: Symbol) -> bool {
        match &self.kind {
            Kind::Naturals => true,
            Kind::Finite { n } => s.0 < *n,
            Kind::Subset { base, member, .. } => base.contains(s) && member(s),
            Kind::Product { components } => {
                let codes = split_product_code(s.0, components.len());
                codes
                    .iter()
                    .zip(components.iter())
                    .all(|(&c, a)| a.contains(Symbol(c)))
            }
        }
    }

    /// The `i`-th member (0-based), in enumeration order.
    ///
    /// Panics when `i` is out of range for a finite alphabet or the scan
    /// limit is exceeded; bounded callers should check `size()` first.
    pub fn enumerate(&self, i: u64) -> Symbol {
        self.try_enumerate(i)
            .unwrap_or_else(|| panic!("alphabet {}: no member at index {i}", self.label))
    }

    /// The `i`-th member, or `None` when out of range.
    pub fn try_enumerate(&self, i: u64) -> Option<Symbol> {
        match &self.kind {
            Kind::Naturals => Some(Symbol(i)),
            Kind::Finite { n } => (i < *n).then_some(Symbol(i)),
            Kind::Subset {
                base, member, size, ..
            } => {
                if size.is_some_and(|s| i >= s) {
                    return None;
                }
                let mut found = 0u64;
                for j in 0..SUBSET_SCAN_LIMIT {
                    let cand = base.try_enumerate(j)?;
                    if member(cand) {
                        if found == i {
                            return Some(cand);
                        }
                        found += 1;
                    }
                }
                None
            }
            Kind::Product { components } => {
                if components.iter().all(|c| matches!(c.kind, Kind::Naturals)) {
                    return Some(Symbol(i));
                }
                // Scan codes in diagonal order, keeping the valid ones.
                let mut found = 0u64;
                for code in 0..SUBSET_SCAN_LIMIT {
                    if self.contains(Symbol(code)) {
                        if found == i {
                            return Some(Symbol(code));
                        }
                        found += 1;
                    }
                }
                None
            }
        }
    }

    /// Enumeration index of `s`, or `None` if `s` is not a member.
    pub fn index_of(&self, s: Symbol) -> Option<u64> {
        match &self.kind {
            Kind::Naturals => Some(s.0),
            Kind::Finite { n } => (s.0 < *n).then_some(s.0),
            Kind::Subset { base, member, .. } => {
                if !(base.contains(s) && member(s)) {
                    return None;
                }
                // Count earlier members of the base that qualify.
                let mut rank = 0u64;
                for j in 0..SUBSET_SCAN_LIMIT {
                    let cand = base.try_enumerate(j)?;
                    if cand == s {
                        return Some(rank);
                    }
                    if member(cand) {
                        rank += 1;
                    }
                }
                None
            }
            Kind::Product { components } => {
                if !self.contains(s) {
                    return None;
                }
                if components.iter().all(|c| matches!(c.kind, Kind::Naturals)) {
                    return Some(s.0);
                }
                let mut rank = 0u64;
                for code in 0..s.0 {
                    if self.contains(Symbol(code)) {
                        rank += 1;
                    }
                }
                Some(rank)
            }
        }
    }

    /// Packs component symbols into one product symbol.
    ///
    /// Panics unless `self` is a product of `parts.len()` alphabets.
    pub fn pack(&self, parts: &[Symbol]) -> Symbol {
        let n = match &self.kind {
            Kind::Product { components } => components.len(),
            _ => panic!("pack on non-product alphabet {}", self.label),
        };
        assert_eq!(parts.len(), n, "component count mismatch");
        let mut code = parts[0].0;
        for p in &parts[1..] {
            code = pair_index(code, p.0);
        }
        Symbol(code)
    }

    /// Splits a product symbol into its component symbols.
    pub fn unpack(&self, s: Symbol) -> Vec<Symbol> {
        let n = match &self.kind {
            Kind::Product { components } => components.len(),
            _ => return vec![s],
        };
        split_product_code(s.0, n).into_iter().map(Symbol).collect()
    }
}

fn split_product_code(code: u64, arity: usize) -> Vec<u64> {
    let mut out = vec![0u64; arity];
    let mut rest = code;
    for slot in (1..arity).rev() {
        let (a, b) = unpair_index(rest);
        out[slot] = b;
        rest = a;
    }
    out[0] = rest;
    out
}
