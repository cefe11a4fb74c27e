//! Discrete distributions with exact rational masses and certified tails.
//!
//! A distribution assigns every symbol of its alphabet a nonnegative
//! rational mass summing to one. Zero-mass symbols are allowed. Because
//! alphabets may be infinite, every family also carries a `tail_bound`:
//! an exact upper bound on the mass sitting beyond the first `m` symbols
//! of the enumeration. The bound is what lets finite computations say
//! something certified about the infinite object.
//!
//! Derived families (conditionals, truncated pushforwards, products)
//! reuse the machinery; a truncated pushforward is honest about the mass
//! its truncation never attributed by folding it into the tail, where it
//! shows up as a floor the bound cannot go below.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::ratio::{self, Ratio};
use crate::space::{Alphabet, PrefixFreeSet, Symbol, SymbolString};

/// An exact bracket for a mass that may only be known up to tail slack.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MassInterval {
    pub lower: Ratio,
    pub upper: Ratio,
}

impl MassInterval {
    pub fn exact(v: Ratio) -> Self {
        MassInterval {
            lower: v.clone(),
            upper: v,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}

/// The first symbols of an alphabet together with the exact mass bound
/// for everything that was cut off.
#[derive(Debug, Clone)]
pub struct TruncatedAlphabet {
    pub symbols: Vec<Symbol>,
    pub residual: Ratio,
}

#[derive(Clone)]
enum Family {
    /// mass(n) = p (1-p)^n on the naturals.
    Geometric { p: Ratio },
    /// Explicit masses; `slack` bounds everything not listed. When
    /// `slack_anywhere` is set the slack may also belong to listed
    /// symbols (a truncated image), so listed masses are lower bounds.
    Table {
        masses: BTreeMap<u64, Ratio>,
        slack: Ratio,
        slack_anywhere: bool,
    },
    /// Base distribution restricted to a sub-alphabet and renormalised.
    Conditional {
        base: Arc<DiscreteDistribution>,
        event_mass: Ratio,
    },
    /// Independent product of the component distributions.
    Product {
        parts: Arc<Vec<DiscreteDistribution>>,
    },
    /// Base distribution with everything outside a sub-alphabet lumped
    /// onto one filler symbol. `filler_rank` caches the filler's
    /// enumeration position within the sub-alphabet.
    Filled {
        base: Arc<DiscreteDistribution>,
        filler: Symbol,
        filler_mass: Ratio,
        filler_rank: u64,
    },
}

/// A probability distribution on a countable alphabet, with exact
/// per-symbol masses and an exact tail bound.
#[derive(Clone)]
pub struct DiscreteDistribution {
    alphabet: Alphabet,
    family: Family,
    label: String,
}

impl std::fmt::Debug for DiscreteDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DiscreteDistribution({})", self.label)
    }
}

impl DiscreteDistribution {
    /// Geometric distribution on the naturals: mass(n) = p (1-p)^n.
    ///
    /// Requires 0 < p <= 1; p = 1 degenerates to a point mass at 0.
    pub fn geometric(p: Ratio) -> Result<Self, Error> {
        if !p.is_positive() || p > Ratio::one() {
            return Err(Error::InvalidDistribution(format!(
                "geometric parameter must be in (0, 1], got {}",
                ratio::format_ratio(&p)
            )));
        }
        let label = format!("geometric(p={})", ratio::format_ratio(&p));
        Ok(DiscreteDistribution {
            alphabet: Alphabet::naturals(),
            family: Family::Geometric { p },
            label,
        })
    }

    /// Explicit table of masses on `alphabet`.
    ///
    /// `slack` is an exact upper bound on the total mass of symbols not
    /// listed; a genuinely finite-support distribution passes zero. The
    /// listed masses must be nonnegative, sum to at most one, and together
    /// with `slack` cover one.
    pub fn table(
        alphabet: Alphabet,
        masses: Vec<(Symbol, Ratio)>,
        slack: Ratio,
    ) -> Result<Self, Error> {
        let mut map = BTreeMap::new();
        for (sym, mass) in masses {
            if !alphabet.contains(sym) {
                return Err(Error::ForeignSymbol {
                    symbol: sym.to_string(),
                    alphabet: alphabet.label().to_string(),
                });
            }
            if mass.is_negative() {
                return Err(Error::InvalidDistribution(format!(
                    "negative mass {} at symbol {sym}",
                    ratio::format_ratio(&mass)
                )));
            }
            if map.insert(sym.code(), mass).is_some() {
                return Err(Error::InvalidDistribution(format!(
                    "symbol {sym} listed twice"
                )));
            }
        }
        if slack.is_negative() {
            return Err(Error::InvalidDistribution("negative tail".to_string()));
        }
        let total: Ratio = map.values().sum();
        if total > Ratio::one() {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {} > 1",
                ratio::format_ratio(&total)
            )));
        }
        if &total + &slack < Ratio::one() {
            return Err(Error::InvalidDistribution(format!(
                "masses plus tail cover only {}",
                ratio::format_ratio(&(&total + &slack))
            )));
        }
        let label = format!("table({} symbols)", map.len());
        Ok(DiscreteDistribution {
            alphabet,
            family: Family::Table {
                masses: map,
                slack,
                slack_anywhere: false,
            },
            label,
        })
    }

    /// Finite-support table on the naturals, masses listed from symbol 0.
    pub fn finite(masses: &[Ratio]) -> Result<Self, Error> {
        let listed = masses
            .iter()
            .enumerate()
            .map(|(i, m)| (Symbol(i as u64), m.clone()))
            .collect();
        DiscreteDistribution::table(Alphabet::naturals(), listed, Ratio::zero())
    }

    /// Point mass at one symbol of `alphabet`.
    pub fn point(alphabet: Alphabet, at: Symbol) -> Result<Self, Error> {
        DiscreteDistribution::table(alphabet, vec![(at, Ratio::one())], Ratio::zero())
    }

    /// Restriction of `self` to `sub`, renormalised by the exact event
    /// mass. The caller certifies `event_mass` equals the total mass of
    /// `sub`'s members; zero mass is refused.
    pub fn conditioned(&self, sub: Alphabet, event_mass: Ratio) -> Result<Self, Error> {
        if !event_mass.is_positive() {
            return Err(Error::ZeroConditioning {
                event: sub.label().to_string(),
                distribution: self.label.clone(),
            });
        }
        let label = format!("{} | {}", self.label, sub.label());
        Ok(DiscreteDistribution {
            alphabet: sub,
            family: Family::Conditional {
                base: Arc::new(self.clone()),
                event_mass,
            },
            label,
        })
    }

    /// Image distribution under a symbol map, materialised by truncation.
    ///
    /// Preimage masses are summed over the first `depth` symbols of the
    /// source alphabet; whatever lies beyond is folded into the tail as a
    /// floor. The result's masses are exact lower bounds of the true
    /// image masses, short by at most that floor in total.
    pub fn pushforward_truncated(
        &self,
        codomain: Alphabet,
        map: impl Fn(Symbol) -> Symbol,
        depth: u64,
    ) -> Result<Self, Error> {
        let mut masses: BTreeMap<u64, Ratio> = BTreeMap::new();
        let width = match self.alphabet.size() {
            Some(n) => depth.min(n),
            None => depth,
        };
        for i in 0..width {
            let a = self.alphabet.enumerate(i);
            let img = map(a);
            if !codomain.contains(img) {
                return Err(Error::ForeignSymbol {
                    symbol: img.to_string(),
                    alphabet: codomain.label().to_string(),
                });
            }
            let m = self.mass(a);
            *masses.entry(img.code()).or_insert_with(Ratio::zero) += m;
        }
        let floor = self.tail_bound(width);
        let label = format!("image of {} (depth {depth})", self.label);
        Ok(DiscreteDistribution {
            alphabet: codomain,
            family: Family::Table {
                masses,
                slack: floor,
                slack_anywhere: true,
            },
            label,
        })
    }

    /// Pushforward of `self` under the map that keeps members of
    /// `within` and sends every other symbol to `filler`.
    ///
    /// `within` must contain `filler`, and `filler_mass` must be the
    /// exact mass `self` places outside the other members of `within`.
    /// Masses stay exact: members keep their base mass, the filler
    /// absorbs the rest.
    pub fn filled(
        &self,
        within: Alphabet,
        filler: Symbol,
        filler_mass: Ratio,
    ) -> Result<Self, Error> {
        if !within.contains(filler) {
            return Err(Error::ForeignSymbol {
                symbol: filler.to_string(),
                alphabet: within.label().to_string(),
            });
        }
        if filler_mass.is_negative() || filler_mass > Ratio::one() {
            return Err(Error::InvalidDistribution(format!(
                "filler mass {} outside [0, 1]",
                ratio::format_ratio(&filler_mass)
            )));
        }
        let filler_rank = (0..filler.code())
            .filter(|&c| within.contains(Symbol(c)))
            .count() as u64;
        let label = format!("{} filled at {}", self.label, filler);
        Ok(DiscreteDistribution {
            alphabet: within,
            family: Family::Filled {
                base: Arc::new(self.clone()),
                filler,
                filler_mass,
                filler_rank,
            },
            label,
        })
    }

    /// Independent product of the given distributions.
    pub fn product(parts: Vec<DiscreteDistribution>) -> Result<Self, Error> {
        if parts.len() < 2 {
            return Err(Error::InvalidDistribution(
                "product needs at least 2 components".to_string(),
            ));
        }
        let alphabet = Alphabet::product(parts.iter().map(|d| d.alphabet.clone()).collect());
        let label = format!(
            "product({})",
            parts
                .iter()
                .map(|d| d.label.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        );
        Ok(DiscreteDistribution {
            alphabet,
            family: Family::Product {
                parts: Arc::new(parts),
            },
            label,
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Component distributions of a product, if this is one.
    pub fn parts(&self) -> Option<&[DiscreteDistribution]> {
        match &self.family {
            Family::Product { parts } => Some(parts),
            _ => None,
        }
    }

    /// The success parameter when this is a geometric family.
    pub fn geometric_ratio(&self) -> Option<&Ratio> {
        match &self.family {
            Family::Geometric { p } => Some(p),
            _ => None,
        }
    }

    /// Base distribution and event mass when this is a conditional.
    pub fn conditional_parts(&self) -> Option<(&DiscreteDistribution, &Ratio)> {
        match &self.family {
            Family::Conditional { base, event_mass } => Some((base, event_mass)),
            _ => None,
        }
    }

    /// Are per-symbol masses exact values rather than lower bounds?
    ///
    /// False only for truncated images (and anything built on one), whose
    /// unattributed mass may belong to listed symbols.
    pub fn is_exact(&self) -> bool {
        match &self.family {
            Family::Geometric { .. } => true,
            Family::Table {
                slack,
                slack_anywhere,
                ..
            } => !slack_anywhere || slack.is_zero(),
            Family::Conditional { base, .. } => base.is_exact(),
            Family::Product { parts } => parts.iter().all(|d| d.is_exact()),
            Family::Filled { base, .. } => base.is_exact(),
        }
    }

    /// Exact mass of one symbol; symbols outside the alphabet have mass 0.
    pub fn mass(&self, s: Symbol) -> Ratio {
        if !self.alphabet.contains(s) {
            return Ratio::zero();
        }
        match &self.family {
            Family::Geometric { p } => {
                let q = Ratio::one() - p;
                p * ratio::pow(&q, u32::try_from(s.code()).expect("symbol code too large"))
            }
            Family::Table { masses, .. } => {
                masses.get(&s.code()).cloned().unwrap_or_else(Ratio::zero)
            }
            Family::Conditional { base, event_mass } => base.mass(s) / event_mass,
            Family::Product { parts } => {
                let comps = self.alphabet.unpack(s);
                comps
                    .iter()
                    .zip(parts.iter())
                    .map(|(&c, d)| d.mass(c))
                    .fold(Ratio::one(), |acc, m| acc * m)
            }
            Family::Filled {
                base,
                filler,
                filler_mass,
                ..
            } => {
                if s == *filler {
                    filler_mass.clone()
                } else {
                    base.mass(s)
                }
            }
        }
    }

    /// Exact upper bound on the total mass beyond the first `m` symbols
    /// of the enumeration. Nonincreasing in `m`; at most one.
    pub fn tail_bound(&self, m: u64) -> Ratio {
        match &self.family {
            Family::Geometric { p } => {
                let q = Ratio::one() - p;
                ratio::pow(&q, u32::try_from(m).unwrap_or(u32::MAX))
            }
            Family::Table { masses, slack, .. } => {
                // Listed mass at enumeration rank >= m, plus the slack for
                // everything never listed.
                let mut tail = slack.clone();
                for (&code, mass) in masses {
                    let rank = self
                        .alphabet
                        .index_of(Symbol(code))
                        .expect("table symbol left its alphabet");
                    if rank >= m {
                        tail += mass;
                    }
                }
                tail
            }
            Family::Filled {
                base,
                filler_mass,
                filler_rank,
                ..
            } => {
                // A non-filler member at enumeration rank >= m sits at
                // base rank >= m, so the base tail covers them all.
                let mut tail = base.tail_bound(m);
                if *filler_rank >= m {
                    tail += filler_mass;
                }
                if tail > Ratio::one() {
                    Ratio::one()
                } else {
                    tail
                }
            }
            Family::Conditional { .. } | Family::Product { .. } => {
                // 1 minus the exact partial sum. Valid because computed
                // masses never exceed the true ones.
                let mut seen = Ratio::zero();
                let width = match self.alphabet.size() {
                    Some(n) => m.min(n),
                    None => m,
                };
                for i in 0..width {
                    seen += self.mass(self.alphabet.enumerate(i));
                }
                let left = Ratio::one() - seen;
                if left.is_negative() {
                    Ratio::zero()
                } else {
                    left
                }
            }
        }
    }

    /// Number of enumeration positions that provably carry all the mass,
    /// or `None` when no finite prefix does.
    pub fn finite_support_width(&self) -> Option<u64> {
        match &self.family {
            Family::Geometric { p } => (*p == Ratio::one()).then_some(1),
            Family::Table { masses, slack, .. } => {
                if !slack.is_zero() {
                    return None;
                }
                let max_rank = masses
                    .keys()
                    .map(|&code| {
                        self.alphabet
                            .index_of(Symbol(code))
                            .expect("table symbol left its alphabet")
                    })
                    .max();
                Some(max_rank.map_or(0, |r| r + 1))
            }
            Family::Conditional { base, .. } => {
                let base_width = base.finite_support_width()?;
                // Members of the sub-alphabet at rank >= base_width in the
                // base carry no mass.
                let mut width = 0;
                for i in 0..base_width {
                    match self.alphabet.try_enumerate(i) {
                        Some(s) if base.alphabet.index_of(s).is_some_and(|r| r < base_width) => {
                            width = i + 1;
                        }
                        Some(_) => {}
                        None => break,
                    }
                }
                Some(width)
            }
            Family::Product { parts } => {
                let widths: Option<Vec<u64>> =
                    parts.iter().map(|d| d.finite_support_width()).collect();
                let widths = widths?;
                // Find how far the product enumeration reaches before all
                // supported tuples are behind it.
                let max_code = {
                    let mut codes: Vec<u64> = Vec::new();
                    collect_product_codes(parts, &widths, 0, &mut Vec::new(), &mut codes);
                    codes.into_iter().max()
                };
                match max_code {
                    None => Some(0),
                    Some(mc) => {
                        let mut rank = 0;
                        for code in 0..=mc {
                            if self.alphabet.contains(Symbol(code)) {
                                rank += 1;
                            }
                        }
                        Some(rank)
                    }
                }
            }
            Family::Filled {
                base,
                filler,
                filler_mass,
                filler_rank,
            } => {
                let base_width = base.finite_support_width()?;
                let mut width = if filler_mass.is_zero() {
                    0
                } else {
                    filler_rank + 1
                };
                for i in 0..base_width {
                    let s = base.alphabet.enumerate(i);
                    if s != *filler && self.alphabet.contains(s) && base.mass(s).is_positive() {
                        if let Some(rank) = self.alphabet.index_of(s) {
                            width = width.max(rank + 1);
                        }
                    }
                }
                Some(width)
            }
        }
    }

    /// Exact mass of the cylinder of `σ`: the product of symbol masses.
    ///
    /// Every symbol must belong to the alphabet; the empty string has
    /// mass one.
    pub fn string_mass(&self, s: &SymbolString) -> Result<Ratio, Error> {
        let mut acc = Ratio::one();
        for &sym in s.symbols() {
            if !self.alphabet.contains(sym) {
                return Err(Error::ForeignSymbol {
                    symbol: sym.to_string(),
                    alphabet: self.alphabet.label().to_string(),
                });
            }
            acc *= self.mass(sym);
        }
        Ok(acc)
    }

    /// Measure of the cylinder generated by `σ`; equal to
    /// [`string_mass`](Self::string_mass).
    pub fn cylinder_measure(&self, s: &SymbolString) -> Result<Ratio, Error> {
        self.string_mass(s)
    }

    /// Exact mass of a prefix-free set: the sum over members, their
    /// cylinders being pairwise disjoint.
    pub fn set_mass(&self, e: &PrefixFreeSet) -> Result<Ratio, Error> {
        let mut acc = Ratio::zero();
        for m in e.members() {
            acc += self.string_mass(m)?;
        }
        Ok(acc)
    }

    /// First `m` symbols of the enumeration plus the exact residual bound
    /// for the rest.
    pub fn truncate(&self, m: u64) -> TruncatedAlphabet {
        let width = match self.alphabet.size() {
            Some(n) => m.min(n),
            None => m,
        };
        let symbols = (0..width).map(|i| self.alphabet.enumerate(i)).collect();
        let residual = if self.alphabet.size().is_some_and(|n| n <= m) {
            // Nothing was cut off, but the family may still carry slack.
            self.tail_bound(width)
        } else {
            self.tail_bound(m)
        };
        TruncatedAlphabet { symbols, residual }
    }
}

fn collect_product_codes(
    parts: &[DiscreteDistribution],
    widths: &[u64],
    level: usize,
    prefix: &mut Vec<Symbol>,
    out: &mut Vec<u64>,
) {
    if level == parts.len() {
        let mut code = prefix[0].code();
        for p in &prefix[1..] {
            code = crate::space::pair_index(code, p.code());
        }
        out.push(code);
        return;
    }
    for i in 0..widths[level] {
        if let Some(s) = parts[level].alphabet().try_enumerate(i) {
            prefix.push(s);
            collect_product_codes(parts, widths, level + 1, prefix, out);
            prefix.pop();
        }
    }
}

/// Serializable description of a distribution, the JSON wire form.
///
/// Rationals travel as `"num/den"` strings:
///
/// ```
/// use ensembles::space::DistributionSpec;
/// let spec: DistributionSpec =
///     serde_json::from_str(r#"{"family":"geometric","p":"1/2"}"#).unwrap();
/// let dist = spec.build().unwrap();
/// assert_eq!(ensembles::ratio::format_ratio(&dist.mass(ensembles::space::Symbol(2))), "1/8");
/// ```
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum DistributionSpec {
    Geometric {
        p: String,
    },
    Table {
        masses: Vec<(String, String)>,
        tail: String,
    },
}

impl DistributionSpec {
    pub fn build(&self) -> Result<DiscreteDistribution, Error> {
        match self {
            DistributionSpec::Geometric { p } => {
                DiscreteDistribution::geometric(ratio::parse_ratio(p)?)
            }
            DistributionSpec::Table { masses, tail } => {
                let mut listed = Vec::with_capacity(masses.len());
                for (sym, mass) in masses {
                    let code: u64 = sym
                        .trim()
                        .parse()
                        .map_err(|_| Error::Config(format!("bad symbol index {sym:?}")))?;
                    listed.push((Symbol(code), ratio::parse_ratio(mass)?));
                }
                DiscreteDistribution::table(Alphabet::naturals(), listed, ratio::parse_ratio(tail)?)
            }
        }
    }
}
