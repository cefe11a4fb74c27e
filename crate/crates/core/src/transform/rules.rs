//! The function-like objects streams are transformed by: events over
//! symbols, symbol maps, selection rules over prefixes, and index maps.
//!
//! Each comes as a small closed catalog of named kinds plus a custom
//! escape hatch. The names matter: they parse from pipeline
//! configurations, they print into stream provenance, and for the named
//! kinds the event masses and image distributions have closed forms, so
//! derived distributions stay exact where exactness is possible at all.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num::{One, Zero};

use crate::error::Error;
use crate::ratio::{self, Ratio};
use crate::space::{Alphabet, DiscreteDistribution, MassInterval, Symbol, SymbolString};

/// How far mass certification scans an enumeration by default.
pub const DEFAULT_CERT_DEPTH: u64 = 64;

// ---------------------------------------------------------------------
// Events
// ---------------------------------------------------------------------

#[derive(Clone)]
enum EventKind {
    Full,
    /// Symbols with even code.
    Even,
    /// Symbols with odd code.
    Odd,
    /// Symbols with code < k.
    CodeLt(u64),
    /// An explicit finite set of codes.
    Members(Arc<BTreeSet<u64>>),
    Custom {
        name: String,
        f: Arc<dyn Fn(Symbol) -> bool + Send + Sync>,
    },
}

/// A decidable set of symbols.
#[derive(Clone)]
pub struct EventPredicate {
    kind: EventKind,
}

impl fmt::Debug for EventPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EventPredicate({})", self.name())
    }
}

impl EventPredicate {
    pub fn full() -> Self {
        EventPredicate {
            kind: EventKind::Full,
        }
    }

    pub fn even() -> Self {
        EventPredicate {
            kind: EventKind::Even,
        }
    }

    pub fn odd() -> Self {
        EventPredicate {
            kind: EventKind::Odd,
        }
    }

    pub fn code_lt(k: u64) -> Self {
        EventPredicate {
            kind: EventKind::CodeLt(k),
        }
    }

    pub fn members(codes: impl IntoIterator<Item = u64>) -> Self {
        EventPredicate {
            kind: EventKind::Members(Arc::new(codes.into_iter().collect())),
        }
    }

    pub fn custom(name: &str, f: impl Fn(Symbol) -> bool + Send + Sync + 'static) -> Self {
        EventPredicate {
            kind: EventKind::Custom {
                name: name.to_string(),
                f: Arc::new(f),
            },
        }
    }

    /// Parses `full`, `even`, `odd`, `lt:K`, or `set:C1,C2,...`.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let bad = || Error::Config(format!("unknown event {text:?}"));
        match text.trim() {
            "full" => Ok(Self::full()),
            "even" => Ok(Self::even()),
            "odd" => Ok(Self::odd()),
            other => match other.split_once(':') {
                Some(("lt", k)) => Ok(Self::code_lt(k.trim().parse().map_err(|_| bad())?)),
                Some(("set", codes)) => {
                    let parsed: Result<BTreeSet<u64>, _> =
                        codes.split(',').map(|c| c.trim().parse()).collect();
                    Ok(EventPredicate {
                        kind: EventKind::Members(Arc::new(parsed.map_err(|_| bad())?)),
                    })
                }
                _ => Err(bad()),
            },
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            EventKind::Full => "full".to_string(),
            EventKind::Even => "even".to_string(),
            EventKind::Odd => "odd".to_string(),
            EventKind::CodeLt(k) => format!("lt:{k}"),
            EventKind::Members(m) => {
                let codes: Vec<String> = m.iter().map(|c| c.to_string()).collect();
                format!("set:{}", codes.join(","))
            }
            EventKind::Custom { name, .. } => name.clone(),
        }
    }

    pub fn contains(&self, s: Symbol) -> bool {
        match &self.kind {
            EventKind::Full => true,
            EventKind::Even => s.code() % 2 == 0,
            EventKind::Odd => s.code() % 2 == 1,
            EventKind::CodeLt(k) => s.code() < *k,
            EventKind::Members(m) => m.contains(&s.code()),
            EventKind::Custom { f, .. } => f(s),
        }
    }

    /// The sub-alphabet of `base` this event carves out.
    pub fn sub_alphabet(&self, base: &Alphabet) -> Alphabet {
        let size = self.member_count(base);
        let this = self.clone();
        Alphabet::subset(base.clone(), &self.name(), size, move |s| this.contains(s))
    }

    /// Member count within `base`, when finite and known.
    fn member_count(&self, base: &Alphabet) -> Option<u64> {
        let count_scan = |limit: u64| -> u64 {
            (0..limit)
                .filter_map(|i| base.try_enumerate(i))
                .filter(|&s| self.contains(s))
                .count() as u64
        };
        match (&self.kind, base.size()) {
            (_, Some(n)) => Some(count_scan(n)),
            (EventKind::Members(m), None) => {
                Some(m.iter().filter(|&&c| base.contains(Symbol(c))).count() as u64)
            }
            (EventKind::CodeLt(k), None) => Some(count_scan(*k)),
            _ => None,
        }
    }

    /// Certified mass of the event under `dist`: an exact value whenever
    /// a closed form or a finite support provides one, otherwise the
    /// bracket [partial sum at `depth`, partial sum + tail].
    pub fn mass_under(&self, dist: &DiscreteDistribution, depth: u64) -> MassInterval {
        if matches!(self.kind, EventKind::Full) {
            return MassInterval::exact(Ratio::one());
        }
        // Finite support: sum the supported prefix, done.
        if let Some(w) = dist.finite_support_width() {
            let mut acc = Ratio::zero();
            for i in 0..w {
                if let Some(s) = dist.alphabet().try_enumerate(i) {
                    if self.contains(s) {
                        acc += dist.mass(s);
                    }
                }
            }
            return MassInterval::exact(acc);
        }
        // Closed forms over a geometric base.
        if let Some(p) = dist.geometric_ratio() {
            let q = Ratio::one() - p;
            match &self.kind {
                // p sum q^{2k} and its odd shift.
                EventKind::Even => {
                    let denom = Ratio::one() - &q * &q;
                    return MassInterval::exact(p.clone() / denom);
                }
                EventKind::Odd => {
                    let denom = Ratio::one() - &q * &q;
                    return MassInterval::exact(p * &q / denom);
                }
                EventKind::CodeLt(k) => {
                    let k32 = u32::try_from(*k).unwrap_or(u32::MAX);
                    return MassInterval::exact(Ratio::one() - ratio::pow(&q, k32));
                }
                EventKind::Members(m) => {
                    let acc: Ratio = m.iter().map(|&c| dist.mass(Symbol(c))).sum();
                    return MassInterval::exact(acc);
                }
                _ => {}
            }
        }
        if let EventKind::Members(m) = &self.kind {
            if dist.is_exact() {
                // A finite union of singletons with exact masses.
                let acc: Ratio = m.iter().map(|&c| dist.mass(Symbol(c))).sum();
                return MassInterval::exact(acc);
            }
        }
        // Fallback: partial sum bracketed by the tail.
        let mut lower = Ratio::zero();
        for i in 0..depth {
            if let Some(s) = dist.alphabet().try_enumerate(i) {
                if self.contains(s) {
                    lower += dist.mass(s);
                }
            }
        }
        let upper = (&lower + dist.tail_bound(depth)).min(Ratio::one());
        MassInterval { lower, upper }
    }

    /// Exact mass or an error naming the bracket that was achieved.
    pub fn exact_mass_under(
        &self,
        dist: &DiscreteDistribution,
        depth: u64,
    ) -> Result<Ratio, Error> {
        let interval = self.mass_under(dist, depth);
        if interval.is_exact() {
            Ok(interval.lower)
        } else {
            Err(Error::InexactEventMass {
                event: self.name(),
                distribution: dist.label().to_string(),
                lower: ratio::format_ratio(&interval.lower),
                upper: ratio::format_ratio(&interval.upper),
            })
        }
    }

    /// Least-index symbol of `alphabet` outside the event, the canonical
    /// filler for conditioning constructions.
    pub fn filler(&self, alphabet: &Alphabet) -> Result<Symbol, Error> {
        const SCAN: u64 = 1 << 20;
        for i in 0..SCAN {
            match alphabet.try_enumerate(i) {
                Some(s) if !self.contains(s) => return Ok(s),
                Some(_) => {}
                None => break,
            }
        }
        Err(Error::Config(format!(
            "event {} leaves no symbol of {} to use as filler",
            self.name(),
            alphabet.label()
        )))
    }
}

/// Conditional distribution of `dist` given `event`, on the sub-alphabet
/// the event carves out.
///
/// Requires an exactly certified event mass: closed form or finite
/// support. A certified-positive but inexact mass is refused rather than
/// silently approximated, and zero mass is refused outright.
pub fn conditional_distribution(
    dist: &DiscreteDistribution,
    event: &EventPredicate,
    depth: u64,
) -> Result<DiscreteDistribution, Error> {
    let interval = event.mass_under(dist, depth);
    if interval.upper.is_zero() {
        return Err(Error::ZeroConditioning {
            event: event.name(),
            distribution: dist.label().to_string(),
        });
    }
    let mass = event.exact_mass_under(dist, depth)?;
    if mass.is_zero() {
        return Err(Error::ZeroConditioning {
            event: event.name(),
            distribution: dist.label().to_string(),
        });
    }
    dist.conditioned(event.sub_alphabet(dist.alphabet()), mass)
}

/// Alphabet of the event's members plus its canonical filler symbol.
pub fn fill_alphabet(event: &EventPredicate, base: &Alphabet) -> Result<Alphabet, Error> {
    let filler = event.filler(base)?;
    let size = event.member_count(base).map(|n| n + 1);
    let label = format!("{}+{}", event.name(), filler);
    let ev = event.clone();
    Ok(Alphabet::subset(base.clone(), &label, size, move |s| {
        s == filler || ev.contains(s)
    }))
}

/// Pushforward of `dist` under the map keeping members of `event` and
/// sending everything else to the event's filler symbol, together with
/// the filler. Requires an exactly certified event mass.
pub fn fill_distribution(
    dist: &DiscreteDistribution,
    event: &EventPredicate,
    depth: u64,
) -> Result<(DiscreteDistribution, Symbol), Error> {
    let filler = event.filler(dist.alphabet())?;
    let inside = event.exact_mass_under(dist, depth)?;
    let within = fill_alphabet(event, dist.alphabet())?;
    let filled = dist.filled(within, filler, Ratio::one() - inside)?;
    Ok((filled, filler))
}

/// The symbol map behind [`fill_distribution`]: members of `event` pass
/// through, everything else becomes `filler`.
pub fn fill_map(
    event: &EventPredicate,
    base: &Alphabet,
    filler: Symbol,
) -> Result<RandomVariable, Error> {
    let codomain = fill_alphabet(event, base)?;
    let ev = event.clone();
    let name = format!("fill({};{filler})", event.name());
    Ok(RandomVariable::custom(&name, codomain, move |s| {
        if ev.contains(s) {
            s
        } else {
            filler
        }
    }))
}

// ---------------------------------------------------------------------
// Random variables (symbol maps)
// ---------------------------------------------------------------------

#[derive(Clone)]
enum VarKind {
    Identity,
    /// code -> code mod k.
    Mod(u64),
    Const(Symbol),
    Custom {
        name: String,
        f: Arc<dyn Fn(Symbol) -> Symbol + Send + Sync>,
    },
}

/// A pointwise symbol map with a declared codomain.
#[derive(Clone)]
pub struct RandomVariable {
    kind: VarKind,
    codomain: Alphabet,
}

impl fmt::Debug for RandomVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RandomVariable({})", self.name())
    }
}

impl RandomVariable {
    pub fn identity(alphabet: Alphabet) -> Self {
        RandomVariable {
            kind: VarKind::Identity,
            codomain: alphabet,
        }
    }

    pub fn modulo(k: u64) -> Self {
        assert!(k >= 1, "modulus must be positive");
        RandomVariable {
            kind: VarKind::Mod(k),
            codomain: Alphabet::finite(k),
        }
    }

    pub fn constant(at: Symbol) -> Self {
        RandomVariable {
            kind: VarKind::Const(at),
            codomain: Alphabet::naturals(),
        }
    }

    pub fn custom(
        name: &str,
        codomain: Alphabet,
        f: impl Fn(Symbol) -> Symbol + Send + Sync + 'static,
    ) -> Self {
        RandomVariable {
            kind: VarKind::Custom {
                name: name.to_string(),
                f: Arc::new(f),
            },
            codomain,
        }
    }

    /// Parses `identity` (over the naturals), `mod:K`, or `const:C`.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let bad = || Error::Config(format!("unknown symbol map {text:?}"));
        match text.trim() {
            "identity" => Ok(Self::identity(Alphabet::naturals())),
            other => match other.split_once(':') {
                Some(("mod", k)) => {
                    let k: u64 = k.trim().parse().map_err(|_| bad())?;
                    if k == 0 {
                        return Err(bad());
                    }
                    Ok(Self::modulo(k))
                }
                Some(("const", c)) => {
                    Ok(Self::constant(Symbol(c.trim().parse().map_err(|_| bad())?)))
                }
                _ => Err(bad()),
            },
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            VarKind::Identity => "identity".to_string(),
            VarKind::Mod(k) => format!("mod:{k}"),
            VarKind::Const(c) => format!("const:{c}"),
            VarKind::Custom { name, .. } => name.clone(),
        }
    }

    pub fn codomain(&self) -> &Alphabet {
        &self.codomain
    }

    pub fn apply(&self, s: Symbol) -> Symbol {
        match &self.kind {
            VarKind::Identity => s,
            VarKind::Mod(k) => Symbol(s.code() % k),
            VarKind::Const(c) => *c,
            VarKind::Custom { f, .. } => f(s),
        }
    }

    /// Image distribution. Exact when a closed form or finite support
    /// allows; otherwise preimages are truncated at `depth` and the
    /// unattributed mass moves into the image's tail bound.
    pub fn image_distribution(
        &self,
        dist: &DiscreteDistribution,
        depth: u64,
    ) -> Result<DiscreteDistribution, Error> {
        match &self.kind {
            VarKind::Identity => Ok(dist.clone()),
            VarKind::Const(c) => DiscreteDistribution::point(self.codomain.clone(), *c),
            VarKind::Mod(k) => {
                if let Some(p) = dist.geometric_ratio() {
                    // Residue class r collects p q^r (1 + q^k + q^2k + ...).
                    let q = Ratio::one() - p;
                    let k32 = u32::try_from(*k).expect("modulus too large");
                    let denom = Ratio::one() - ratio::pow(&q, k32);
                    let masses = (0..*k)
                        .map(|r| {
                            let num = p * ratio::pow(&q, r as u32);
                            (Symbol(r), num / &denom)
                        })
                        .collect();
                    return DiscreteDistribution::table(
                        self.codomain.clone(),
                        masses,
                        Ratio::zero(),
                    );
                }
                self.image_by_truncation(dist, depth)
            }
            VarKind::Custom { .. } => self.image_by_truncation(dist, depth),
        }
    }

    fn image_by_truncation(
        &self,
        dist: &DiscreteDistribution,
        depth: u64,
    ) -> Result<DiscreteDistribution, Error> {
        let width = dist.finite_support_width().unwrap_or(depth);
        dist.pushforward_truncated(self.codomain.clone(), |s| self.apply(s), width)
    }

    /// Preimage symbols among the first `width` of `domain`.
    pub fn preimage_in(&self, domain: &Alphabet, width: u64, target: Symbol) -> Vec<Symbol> {
        let width = match domain.size() {
            Some(n) => width.min(n),
            None => width,
        };
        (0..width)
            .filter_map(|i| domain.try_enumerate(i))
            .filter(|&s| self.apply(s) == target)
            .collect()
    }
}

// ---------------------------------------------------------------------
// Selection rules
// ---------------------------------------------------------------------

#[derive(Clone)]
enum RuleKind {
    Always,
    /// Select after prefixes of even length (positions 1, 3, 5, ...).
    EvenLength,
    OddLength,
    /// Select the symbol right after each occurrence of `c`.
    AfterSymbol(Symbol),
    Custom {
        name: String,
        f: Arc<dyn Fn(&SymbolString) -> Option<bool> + Send + Sync>,
    },
}

/// Decides, from the prefix read so far, whether the next symbol is
/// selected. `None` means the rule is undefined on that prefix, which
/// aborts the transformed stream with an error.
#[derive(Clone)]
pub struct SelectionRule {
    kind: RuleKind,
}

impl fmt::Debug for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SelectionRule({})", self.name())
    }
}

impl SelectionRule {
    pub fn always() -> Self {
        SelectionRule {
            kind: RuleKind::Always,
        }
    }

    pub fn even_length() -> Self {
        SelectionRule {
            kind: RuleKind::EvenLength,
        }
    }

    pub fn odd_length() -> Self {
        SelectionRule {
            kind: RuleKind::OddLength,
        }
    }

    pub fn after_symbol(c: Symbol) -> Self {
        SelectionRule {
            kind: RuleKind::AfterSymbol(c),
        }
    }

    pub fn custom(
        name: &str,
        f: impl Fn(&SymbolString) -> Option<bool> + Send + Sync + 'static,
    ) -> Self {
        SelectionRule {
            kind: RuleKind::Custom {
                name: name.to_string(),
                f: Arc::new(f),
            },
        }
    }

    /// Parses `always`, `even_length`, `odd_length`, or `after:C`.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let bad = || Error::Config(format!("unknown selection rule {text:?}"));
        match text.trim() {
            "always" => Ok(Self::always()),
            "even_length" => Ok(Self::even_length()),
            "odd_length" => Ok(Self::odd_length()),
            other => match other.split_once(':') {
                Some(("after", c)) => Ok(Self::after_symbol(Symbol(
                    c.trim().parse().map_err(|_| bad())?,
                ))),
                _ => Err(bad()),
            },
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            RuleKind::Always => "always".to_string(),
            RuleKind::EvenLength => "even_length".to_string(),
            RuleKind::OddLength => "odd_length".to_string(),
            RuleKind::AfterSymbol(c) => format!("after:{c}"),
            RuleKind::Custom { name, .. } => name.clone(),
        }
    }

    pub fn decide(&self, prefix: &SymbolString) -> Option<bool> {
        match &self.kind {
            RuleKind::Always => Some(true),
            RuleKind::EvenLength => Some(prefix.len() % 2 == 0),
            RuleKind::OddLength => Some(prefix.len() % 2 == 1),
            RuleKind::AfterSymbol(c) => Some(prefix.symbols().last() == Some(c)),
            RuleKind::Custom { f, .. } => f(prefix),
        }
    }
}

// ---------------------------------------------------------------------
// Index maps
// ---------------------------------------------------------------------

#[derive(Clone)]
enum MapKind {
    Identity,
    /// k -> 2k.
    Double,
    /// k -> k + c.
    Shift(u64),
    /// k -> the k-th prime.
    Primes,
    Custom {
        name: String,
        f: Arc<dyn Fn(u64) -> u64 + Send + Sync>,
    },
}

/// A map on 1-based stream positions, used to rearrange or thin a stream.
/// Injectivity is asserted by the caller and spot-checked during use.
#[derive(Clone)]
pub struct IndexMap {
    kind: MapKind,
}

impl fmt::Debug for IndexMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IndexMap({})", self.name())
    }
}

impl IndexMap {
    pub fn identity() -> Self {
        IndexMap {
            kind: MapKind::Identity,
        }
    }

    pub fn double() -> Self {
        IndexMap {
            kind: MapKind::Double,
        }
    }

    pub fn shift(c: u64) -> Self {
        IndexMap {
            kind: MapKind::Shift(c),
        }
    }

    pub fn primes() -> Self {
        IndexMap {
            kind: MapKind::Primes,
        }
    }

    pub fn custom(name: &str, f: impl Fn(u64) -> u64 + Send + Sync + 'static) -> Self {
        IndexMap {
            kind: MapKind::Custom {
                name: name.to_string(),
                f: Arc::new(f),
            },
        }
    }

    /// Parses `identity`, `double`, `shift:C`, or `primes`.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let bad = || Error::Config(format!("unknown index map {text:?}"));
        match text.trim() {
            "identity" => Ok(Self::identity()),
            "double" => Ok(Self::double()),
            "primes" => Ok(Self::primes()),
            other => match other.split_once(':') {
                Some(("shift", c)) => Ok(Self::shift(c.trim().parse().map_err(|_| bad())?)),
                _ => Err(bad()),
            },
        }
    }

    pub fn name(&self) -> String {
        match &self.kind {
            MapKind::Identity => "identity".to_string(),
            MapKind::Double => "double".to_string(),
            MapKind::Shift(c) => format!("shift:{c}"),
            MapKind::Primes => "primes".to_string(),
            MapKind::Custom { name, .. } => name.clone(),
        }
    }

    /// Image of 1-based position `k`.
    pub fn apply(&self, k: u64) -> u64 {
        match &self.kind {
            MapKind::Identity => k,
            MapKind::Double => 2 * k,
            MapKind::Shift(c) => k + c,
            MapKind::Primes => nth_prime(k),
            MapKind::Custom { f, .. } => f(k),
        }
    }
}

/// The k-th prime, 1-based: 1 -> 2, 2 -> 3, 3 -> 5, ...
fn nth_prime(k: u64) -> u64 {
    assert!(k >= 1, "positions are 1-based");
    let mut found = 0;
    let mut n = 1u64;
    loop {
        n += 1;
        if is_prime(n) {
            found += 1;
            if found == k {
                return n;
            }
        }
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}
