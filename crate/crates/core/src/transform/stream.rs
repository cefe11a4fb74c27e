//! Deterministic lazy symbol streams and their transforms.
//!
//! A stream yields symbols one at a time. The base sources are a seeded
//! inverse-CDF sampler over a distribution and a finite replayable symbol
//! list; transforms stack on top: position shuffles, prefix-driven
//! selection, conditioning on an event, the characteristic (indicator)
//! stream of an event, contraction onto the cells of a finite partition,
//! pointwise symbol maps, and products of independent streams.
//!
//! Determinism is the load-bearing property: a stream is a pure function
//! of its construction, so [`EnsembleStream::restart`] rebuilds an
//! equivalent stream that replays the identical sequence, and any verdict
//! computed from a (seed, parameters) pair is reproducible. Streams are
//! single-consumer; there is no hidden sharing between a stream and its
//! restarts.
//!
//! Transforms that skip input (selection, conditioning) scan under a
//! budget, by default [`DEFAULT_SCAN_BUDGET`](crate::DEFAULT_SCAN_BUDGET)
//! prefix steps per emitted symbol; exhausting it is an error carrying
//! the scan count, turning a potential hang into a reportable outcome.

use std::collections::HashMap;
use std::sync::Arc;

use num::{One, Zero};

use crate::error::Error;
use crate::ratio::Ratio;
use crate::rng::SplitMix64;
use crate::space::{Alphabet, DiscreteDistribution, Symbol, SymbolString};
use crate::transform::{EventPredicate, IndexMap, RandomVariable, SelectionRule};
use crate::DEFAULT_SCAN_BUDGET;

/// Hard cap on cache growth inside a single inverse-CDF draw.
const SAMPLE_EXTEND_CAP: u64 = 1 << 20;

/// First index whose threshold exceeds `k`, i.e. the symbol owning the
/// left-closed interval `k` falls into. `None` when `k` clears them all.
fn pick(thresholds: &[u128], k: u128) -> Option<usize> {
    thresholds.iter().position(|&t| k < t)
}

/// `ceil(c * 2^64)` for a rational `c` in [0, 1].
fn threshold(c: &Ratio) -> u128 {
    use num::bigint::BigInt;
    use num::ToPrimitive;
    let scaled_num: BigInt = c.numer() << 64;
    let den = c.denom();
    let q = (&scaled_num + (den - BigInt::one())) / den;
    q.to_u128().expect("CDF threshold out of range")
}

struct SampleState {
    dist: DiscreteDistribution,
    seed: u64,
    rng: SplitMix64,
    /// ceil(CDF * 2^64) per enumeration rank, extended on demand.
    thresholds: Vec<u128>,
    partial: Ratio,
    symbols: Vec<Symbol>,
}

impl SampleState {
    fn new(dist: DiscreteDistribution, seed: u64) -> Self {
        SampleState {
            dist,
            seed,
            rng: SplitMix64::new(seed),
            thresholds: Vec::new(),
            partial: Ratio::zero(),
            symbols: Vec::new(),
        }
    }

    fn extend_cache(&mut self) -> Result<(), Error> {
        let rank = self.symbols.len() as u64;
        let sym =
            self.dist
                .alphabet()
                .try_enumerate(rank)
                .ok_or_else(|| Error::BudgetExhausted {
                    what: format!(
                        "sampling {}: alphabet exhausted with mass unassigned",
                        self.dist.label()
                    ),
                    budget: rank,
                    spent: rank,
                })?;
        self.partial += self.dist.mass(sym);
        self.symbols.push(sym);
        self.thresholds.push(threshold(&self.partial));
        Ok(())
    }

    fn draw(&mut self) -> Result<Symbol, Error> {
        let k = self.rng.next_u64() as u128;
        let mut extended = 0u64;
        loop {
            if let Some(i) = pick(&self.thresholds, k) {
                return Ok(self.symbols[i]);
            }
            extended += 1;
            if extended > SAMPLE_EXTEND_CAP {
                return Err(Error::BudgetExhausted {
                    what: format!("sampling {}: tail never covers the draw", self.dist.label()),
                    budget: SAMPLE_EXTEND_CAP,
                    spent: extended,
                });
            }
            self.extend_cache()?;
        }
    }
}

enum Node {
    Sampled(SampleState),
    Replay {
        items: Arc<Vec<Symbol>>,
        pos: usize,
    },
    Shuffle {
        parent: Box<EnsembleStream>,
        map: IndexMap,
        buffer: Vec<Symbol>,
        images_seen: HashMap<u64, u64>,
        next_pos: u64,
    },
    Select {
        parent: Box<EnsembleStream>,
        rule: SelectionRule,
        prefix: SymbolString,
    },
    Condition {
        parent: Box<EnsembleStream>,
        event: EventPredicate,
    },
    Characteristic {
        parent: Box<EnsembleStream>,
        event: EventPredicate,
    },
    Contract {
        parent: Box<EnsembleStream>,
        cells: Arc<Vec<EventPredicate>>,
    },
    Map {
        parent: Box<EnsembleStream>,
        var: RandomVariable,
    },
    Product {
        parents: Vec<EnsembleStream>,
    },
}

/// A deterministic, single-consumer, lazily evaluated symbol stream.
pub struct EnsembleStream {
    alphabet: Alphabet,
    budget: u64,
    node: Node,
}

/// Seeded sampler stream over `dist`: inverse-CDF on 64 fresh bits per
/// draw, assigning each draw to the left-closed mass interval it lands
/// in, extending the cached CDF on demand. Zero-mass symbols own empty
/// intervals and are never emitted.
pub fn sample_ensemble(dist: DiscreteDistribution, seed: u64) -> EnsembleStream {
    EnsembleStream {
        alphabet: dist.alphabet().clone(),
        budget: DEFAULT_SCAN_BUDGET,
        node: Node::Sampled(SampleState::new(dist, seed)),
    }
}

impl EnsembleStream {
    /// Finite replayable stream; reading past the end is an error.
    pub fn replay(alphabet: Alphabet, items: Vec<Symbol>) -> Self {
        EnsembleStream {
            alphabet,
            budget: DEFAULT_SCAN_BUDGET,
            node: Node::Replay {
                items: Arc::new(items),
                pos: 0,
            },
        }
    }

    /// Replaces the per-symbol scan budget.
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Rearranged stream: output position `k` carries the source's
    /// position `map(k)`. The map must hit positions 1, 2, ... injectively;
    /// a repeated image is detected and reported when it is used.
    pub fn shuffle(self, map: IndexMap) -> Self {
        let (alphabet, budget) = (self.alphabet.clone(), self.budget);
        EnsembleStream {
            alphabet,
            budget,
            node: Node::Shuffle {
                parent: Box::new(self),
                map,
                buffer: Vec::new(),
                images_seen: HashMap::new(),
                next_pos: 1,
            },
        }
    }

    /// Subsequence chosen by a selection rule: before each source symbol
    /// the rule reads the prefix so far and decides whether the upcoming
    /// symbol is kept.
    pub fn select(self, rule: SelectionRule) -> Self {
        let (alphabet, budget) = (self.alphabet.clone(), self.budget);
        EnsembleStream {
            alphabet,
            budget,
            node: Node::Select {
                parent: Box::new(self),
                rule,
                prefix: SymbolString::empty(),
            },
        }
    }

    /// Subsequence of the symbols lying in `event`, over the sub-alphabet
    /// the event carves out.
    pub fn condition(self, event: EventPredicate) -> Self {
        let alphabet = event.sub_alphabet(&self.alphabet);
        let budget = self.budget;
        EnsembleStream {
            alphabet,
            budget,
            node: Node::Condition {
                parent: Box::new(self),
                event,
            },
        }
    }

    /// Indicator stream of `event`: 1 where the source symbol is a
    /// member, 0 elsewhere.
    pub fn characteristic(self, event: EventPredicate) -> Self {
        let budget = self.budget;
        EnsembleStream {
            alphabet: Alphabet::finite(2),
            budget,
            node: Node::Characteristic {
                parent: Box::new(self),
                event,
            },
        }
    }

    /// Contraction onto the cells of a partition: cell `i` becomes output
    /// symbol `i`. Every source symbol must match exactly one cell;
    /// violations are reported when the offending symbol is seen.
    pub fn contract(self, cells: Vec<EventPredicate>) -> Self {
        let budget = self.budget;
        EnsembleStream {
            alphabet: Alphabet::finite(cells.len() as u64),
            budget,
            node: Node::Contract {
                parent: Box::new(self),
                cells: Arc::new(cells),
            },
        }
    }

    /// Pointwise image under a symbol map.
    pub fn map_stream(self, var: RandomVariable) -> Self {
        let budget = self.budget;
        EnsembleStream {
            alphabet: var.codomain().clone(),
            budget,
            node: Node::Map {
                parent: Box::new(self),
                var,
            },
        }
    }

    /// Position-wise product of independent streams.
    pub fn product_stream(parents: Vec<EnsembleStream>) -> Result<Self, Error> {
        if parents.len() < 2 {
            return Err(Error::Config(
                "product stream needs at least 2 components".to_string(),
            ));
        }
        let alphabet = Alphabet::product(parents.iter().map(|p| p.alphabet.clone()).collect());
        let budget = parents.iter().map(|p| p.budget).min().unwrap();
        Ok(EnsembleStream {
            alphabet,
            budget,
            node: Node::Product { parents },
        })
    }

    /// Next symbol.
    pub fn next(&mut self) -> Result<Symbol, Error> {
        let budget = self.budget;
        match &mut self.node {
            Node::Sampled(state) => state.draw(),
            Node::Replay { items, pos } => {
                if *pos < items.len() {
                    let s = items[*pos];
                    *pos += 1;
                    Ok(s)
                } else {
                    Err(Error::EndOfInput { got: *pos as u64 })
                }
            }
            Node::Shuffle {
                parent,
                map,
                buffer,
                images_seen,
                next_pos,
            } => {
                let k = *next_pos;
                let image = map.apply(k);
                if image == 0 {
                    return Err(Error::Config(format!(
                        "index map {} sent position {k} to 0; positions are 1-based",
                        map.name()
                    )));
                }
                if let Some(&prev) = images_seen.get(&image) {
                    return Err(Error::NotInjective {
                        first: prev,
                        second: k,
                        image,
                    });
                }
                images_seen.insert(image, k);
                let needed = usize::try_from(image).expect("image position out of range");
                if needed.saturating_sub(buffer.len()) as u64 > budget {
                    return Err(Error::BudgetExhausted {
                        what: format!("shuffle {} buffering to position {image}", map.name()),
                        budget,
                        spent: (needed - buffer.len()) as u64,
                    });
                }
                while buffer.len() < needed {
                    buffer.push(parent.next()?);
                }
                *next_pos += 1;
                Ok(buffer[needed - 1])
            }
            Node::Select {
                parent,
                rule,
                prefix,
            } => {
                let mut scanned = 0u64;
                loop {
                    let keep = rule
                        .decide(prefix)
                        .ok_or_else(|| Error::UndefinedSelection {
                            rule: rule.name(),
                            prefix_len: prefix.len(),
                        })?;
                    let s = parent.next()?;
                    prefix.0.push(s);
                    scanned += 1;
                    if keep {
                        return Ok(s);
                    }
                    if scanned >= budget {
                        return Err(Error::BudgetExhausted {
                            what: format!("selection by {}", rule.name()),
                            budget,
                            spent: scanned,
                        });
                    }
                }
            }
            Node::Condition { parent, event } => {
                let mut scanned = 0u64;
                loop {
                    let s = parent.next()?;
                    scanned += 1;
                    if event.contains(s) {
                        return Ok(s);
                    }
                    if scanned >= budget {
                        return Err(Error::BudgetExhausted {
                            what: format!("conditioning on {}", event.name()),
                            budget,
                            spent: scanned,
                        });
                    }
                }
            }
            Node::Characteristic { parent, event } => {
                let s = parent.next()?;
                Ok(Symbol(u64::from(event.contains(s))))
            }
            Node::Contract { parent, cells } => {
                let s = parent.next()?;
                let mut hit = None;
                let mut matches = 0;
                for (i, cell) in cells.iter().enumerate() {
                    if cell.contains(s) {
                        matches += 1;
                        hit = Some(i);
                    }
                }
                if matches != 1 {
                    return Err(Error::PartitionViolation {
                        symbol: s.to_string(),
                        matches,
                    });
                }
                Ok(Symbol(hit.unwrap() as u64))
            }
            Node::Map { parent, var } => {
                let s = parent.next()?;
                let image = var.apply(s);
                if !var.codomain().contains(image) {
                    return Err(Error::ForeignSymbol {
                        symbol: image.to_string(),
                        alphabet: var.codomain().label().to_string(),
                    });
                }
                Ok(image)
            }
            Node::Product { parents } => {
                let mut parts = Vec::with_capacity(parents.len());
                for p in parents.iter_mut() {
                    parts.push(p.next()?);
                }
                Ok(self.alphabet.pack(&parts))
            }
        }
    }

    /// The next `n` symbols as a string.
    pub fn take_prefix(&mut self, n: usize) -> Result<SymbolString, Error> {
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(self.next()?);
        }
        Ok(SymbolString(out))
    }

    /// A fresh stream with the same construction, replaying the same
    /// sequence from the start.
    pub fn restart(&self) -> EnsembleStream {
        let node = match &self.node {
            Node::Sampled(state) => Node::Sampled(SampleState::new(state.dist.clone(), state.seed)),
            Node::Replay { items, .. } => Node::Replay {
                items: Arc::clone(items),
                pos: 0,
            },
            Node::Shuffle { parent, map, .. } => Node::Shuffle {
                parent: Box::new(parent.restart()),
                map: map.clone(),
                buffer: Vec::new(),
                images_seen: HashMap::new(),
                next_pos: 1,
            },
            Node::Select { parent, rule, .. } => Node::Select {
                parent: Box::new(parent.restart()),
                rule: rule.clone(),
                prefix: SymbolString::empty(),
            },
            Node::Condition { parent, event } => Node::Condition {
                parent: Box::new(parent.restart()),
                event: event.clone(),
            },
            Node::Characteristic { parent, event } => Node::Characteristic {
                parent: Box::new(parent.restart()),
                event: event.clone(),
            },
            Node::Contract { parent, cells } => Node::Contract {
                parent: Box::new(parent.restart()),
                cells: Arc::clone(cells),
            },
            Node::Map { parent, var } => Node::Map {
                parent: Box::new(parent.restart()),
                var: var.clone(),
            },
            Node::Product { parents } => Node::Product {
                parents: parents.iter().map(|p| p.restart()).collect(),
            },
        };
        EnsembleStream {
            alphabet: self.alphabet.clone(),
            budget: self.budget,
            node,
        }
    }

    /// Human-readable construction description; equal provenance means
    /// equal output sequences.
    pub fn provenance(&self) -> String {
        match &self.node {
            Node::Sampled(state) => {
                format!("sample({}, seed={})", state.dist.label(), state.seed)
            }
            Node::Replay { items, .. } => format!("replay({} symbols)", items.len()),
            Node::Shuffle { parent, map, .. } => {
                format!("shuffle({}, {})", map.name(), parent.provenance())
            }
            Node::Select { parent, rule, .. } => {
                format!("select({}, {})", rule.name(), parent.provenance())
            }
            Node::Condition { parent, event } => {
                format!("condition({}, {})", event.name(), parent.provenance())
            }
            Node::Characteristic { parent, event } => {
                format!("characteristic({}, {})", event.name(), parent.provenance())
            }
            Node::Contract { parent, cells } => {
                let names: Vec<String> = cells.iter().map(|c| c.name()).collect();
                format!("contract([{}], {})", names.join(" | "), parent.provenance())
            }
            Node::Map { parent, var } => {
                format!("map({}, {})", var.name(), parent.provenance())
            }
            Node::Product { parents } => {
                let names: Vec<String> = parents.iter().map(|p| p.provenance()).collect();
                format!("product({})", names.join(", "))
            }
        }
    }
}
