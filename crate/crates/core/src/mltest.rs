//! Effective statistical tests and their pullbacks along stream
//! transforms.
//!
//! A test over a distribution is a sequence of levels: level n is a
//! finite prefix-free set of strings whose total cylinder mass must come
//! out strictly below 2^-n. A sequence fails the test when every level
//! traps one of its prefixes, and passes when some level misses it;
//! because levels are finite sets of bounded length, a long enough
//! prefix settles each level definitively.
//!
//! The pullback constructions answer one recurring question: given a
//! test calibrated for the output of a stream transform, which test
//! should the input face? For each transform there is a preimage
//! operation on levels that preserves the mass bounds, so randomness is
//! conserved: an input whose transform fails the output test already
//! fails the pulled-back input test. Shuffles, selections, conditioning,
//! pointwise maps, and marginals of products each get their own
//! construction here, with exact mass accounting (and explicit residual
//! brackets where an infinite alphabet forces truncation).
//!
//! Tests relative to oracle streams close the loop: level generators may
//! consult external sequences through a query-logging context, and the
//! materialized levels feed the same verification and pullback
//! machinery.

use std::sync::Arc;

use num::{One, Zero};

use crate::error::Error;
use crate::ratio::{self, two_pow_neg, Ratio};
use crate::space::{DiscreteDistribution, PrefixFreeSet, Symbol, SymbolString};
use crate::transform::{EnsembleStream, EventPredicate, IndexMap, RandomVariable, SelectionRule};
use crate::DEFAULT_SCAN_BUDGET;

// ---------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------

#[derive(Clone)]
enum LevelSource {
    Explicit(Vec<PrefixFreeSet>),
    Generated {
        max_level: u64,
        gen: Arc<dyn Fn(u64) -> Result<PrefixFreeSet, Error> + Send + Sync>,
    },
}

/// A leveled effective test over a distribution: level n is a finite
/// prefix-free set meant to carry mass strictly below 2^-n.
#[derive(Clone)]
pub struct MlTest {
    dist: DiscreteDistribution,
    levels: LevelSource,
    label: String,
}

/// Verdict of one level's mass check.
#[derive(Debug, Clone)]
pub struct LevelReport {
    pub level: u64,
    pub mass: Ratio,
    pub bound: Ratio,
    pub holds: bool,
}

/// Outcome of checking every level up to a cutoff.
#[derive(Debug, Clone)]
pub struct TestVerification {
    pub label: String,
    /// Masses are exact products of symbol masses; when the underlying
    /// distribution only certifies lower bounds this stays false and the
    /// verdicts are advisory.
    pub certified: bool,
    pub levels: Vec<LevelReport>,
    pub all_hold: bool,
}

/// What a finite prefix reveals about one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LevelHit {
    /// The prefix extends this member, so every continuation is caught.
    Hit(SymbolString),
    /// The prefix is long enough to rule every member out.
    Clear,
    /// Too short to decide; a prefix of the given length settles it.
    Undetermined { needed: usize },
}

impl MlTest {
    /// Test with explicitly listed levels; entry k of the list is level
    /// k + 1.
    pub fn from_levels(
        dist: DiscreteDistribution,
        levels: Vec<PrefixFreeSet>,
        label: &str,
    ) -> Self {
        MlTest {
            dist,
            levels: LevelSource::Explicit(levels),
            label: label.to_string(),
        }
    }

    /// Test whose levels are computed on demand, up to `max_level`.
    pub fn generated(
        dist: DiscreteDistribution,
        max_level: u64,
        label: &str,
        gen: impl Fn(u64) -> Result<PrefixFreeSet, Error> + Send + Sync + 'static,
    ) -> Self {
        MlTest {
            dist,
            levels: LevelSource::Generated {
                max_level,
                gen: Arc::new(gen),
            },
            label: label.to_string(),
        }
    }

    pub fn distribution(&self) -> &DiscreteDistribution {
        &self.dist
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Largest defined level index.
    pub fn max_level(&self) -> u64 {
        match &self.levels {
            LevelSource::Explicit(v) => v.len() as u64,
            LevelSource::Generated { max_level, .. } => *max_level,
        }
    }

    /// Level `n` (1-based).
    pub fn level(&self, n: u64) -> Result<PrefixFreeSet, Error> {
        if n == 0 || n > self.max_level() {
            return Err(Error::Config(format!(
                "level {n} out of range 1..={} for test {}",
                self.max_level(),
                self.label
            )));
        }
        match &self.levels {
            LevelSource::Explicit(v) => Ok(v[(n - 1) as usize].clone()),
            LevelSource::Generated { gen, .. } => gen(n),
        }
    }

    /// Exact total cylinder mass of level `n`.
    pub fn level_mass(&self, n: u64) -> Result<Ratio, Error> {
        self.dist.set_mass(&self.level(n)?)
    }

    /// Checks mass(level n) < 2^-n for every n up to `up_to`.
    pub fn verify(&self, up_to: u64) -> Result<TestVerification, Error> {
        let up_to = up_to.min(self.max_level());
        let mut levels = Vec::new();
        let mut all_hold = true;
        for n in 1..=up_to {
            let mass = self.level_mass(n)?;
            let bound = two_pow_neg(u32::try_from(n).expect("level out of range"));
            let holds = mass < bound;
            all_hold &= holds;
            levels.push(LevelReport {
                level: n,
                mass,
                bound,
                holds,
            });
        }
        Ok(TestVerification {
            label: self.label.clone(),
            certified: self.dist.is_exact(),
            levels,
            all_hold,
        })
    }

    /// What `prefix` settles about level `n`.
    pub fn hits_prefix(&self, n: u64, prefix: &SymbolString) -> Result<LevelHit, Error> {
        let level = self.level(n)?;
        if let Some(member) = level.covering_member(prefix) {
            return Ok(LevelHit::Hit(member.clone()));
        }
        if prefix.len() >= level.max_len() {
            Ok(LevelHit::Clear)
        } else {
            Ok(LevelHit::Undetermined {
                needed: level.max_len(),
            })
        }
    }

    /// Does the stream's opening run into level `n`? Reads exactly as
    /// many symbols as the level needs, so the answer is definitive.
    pub fn stream_hits_level(&self, stream: &mut EnsembleStream, n: u64) -> Result<bool, Error> {
        let level = self.level(n)?;
        let prefix = stream.take_prefix(level.max_len())?;
        Ok(level.covers(&prefix))
    }

    /// First level (up to `up_to`) the stream provably avoids, which
    /// witnesses passing; `None` when every checked level catches it.
    pub fn first_cleared_level(
        &self,
        stream: &EnsembleStream,
        up_to: u64,
    ) -> Result<Option<u64>, Error> {
        for n in 1..=up_to.min(self.max_level()) {
            if !self.stream_hits_level(&mut stream.restart(), n)? {
                return Ok(Some(n));
            }
        }
        Ok(None)
    }
}

// ---------------------------------------------------------------------
// Pullbacks
// ---------------------------------------------------------------------

/// Mass accounting for one pulled-back level.
#[derive(Debug, Clone)]
pub struct PullbackLevel {
    pub level: u64,
    /// Exact mass of the source level under the source distribution.
    pub source_mass: Ratio,
    /// Exact mass of the materialized preimage level.
    pub image_mass: Ratio,
    /// Upper bound on preimage mass lost to truncation; zero when the
    /// materialization is complete.
    pub residual: Ratio,
    /// Whether the materialized level is the full preimage.
    pub complete: bool,
    /// image_mass <= source_mass, the conservation law every pullback
    /// obeys.
    pub bounded: bool,
}

/// A pulled-back test with per-level accounting.
pub struct Pullback {
    pub test: MlTest,
    pub levels: Vec<PullbackLevel>,
}

impl Pullback {
    /// Do all levels respect the mass bound of the source level?
    pub fn all_bounded(&self) -> bool {
        self.levels.iter().all(|l| l.bounded)
    }

    /// Total truncation loss across levels.
    pub fn total_residual(&self) -> Ratio {
        self.levels.iter().map(|l| l.residual.clone()).sum()
    }
}

/// Exact total mass of the first `width` symbols of the enumeration.
fn partial_mass(dist: &DiscreteDistribution, width: u64) -> Ratio {
    let mut acc = Ratio::zero();
    for i in 0..width {
        match dist.alphabet().try_enumerate(i) {
            Some(s) => acc += dist.mass(s),
            None => break,
        }
    }
    acc
}

fn materialization_complete(dist: &DiscreteDistribution, width: u64) -> bool {
    dist.finite_support_width().is_some_and(|w| w <= width)
}

fn assemble(
    test: &MlTest,
    dist: DiscreteDistribution,
    label: String,
    up_to: u64,
    mut build: impl FnMut(u64, &PrefixFreeSet) -> Result<(Vec<SymbolString>, Ratio, bool), Error>,
) -> Result<Pullback, Error> {
    let up_to = up_to.min(test.max_level());
    let mut levels = Vec::new();
    let mut reports = Vec::new();
    for n in 1..=up_to {
        let source = test.level(n)?;
        let source_mass = test.level_mass(n)?;
        let (members, residual, complete) = build(n, &source)?;
        let level = PrefixFreeSet::new(members)?;
        let image_mass = dist.set_mass(&level)?;
        let bounded = image_mass <= source_mass;
        levels.push(level);
        reports.push(PullbackLevel {
            level: n,
            source_mass,
            image_mass,
            residual,
            complete,
            bounded,
        });
    }
    Ok(Pullback {
        test: MlTest::from_levels(dist, levels, &label),
        levels: reports,
    })
}

/// Pullback along a position shuffle.
///
/// A member σ of a source level pins output positions map(1..|σ|) of the
/// rearranged stream; its preimage fixes those source positions to σ's
/// symbols and leaves the rest of the window free. Free positions are
/// materialized over the first `width` symbols, so per member the
/// preimage mass is mass(σ) times (covered mass)^free, the untruncated
/// preimage carrying exactly mass(σ). The shuffled stream reads the same
/// distribution, so the pullback is a test over `test.distribution()`.
pub fn shuffle_pullback(
    test: &MlTest,
    map: &IndexMap,
    width: u64,
    up_to: u64,
) -> Result<Pullback, Error> {
    let dist = test.distribution().clone();
    let covered = partial_mass(&dist, width);
    let complete = materialization_complete(&dist, width);
    let alphabet = dist.alphabet().clone();
    let label = format!("{} <- shuffle({})", test.label(), map.name());
    let map = map.clone();
    assemble(test, dist.clone(), label, up_to, move |_, source| {
        let mut members = Vec::new();
        let mut residual = Ratio::zero();
        for sigma in source.members() {
            // Window length and fixed positions.
            let mut window = 0u64;
            let mut fixed: Vec<(u64, Symbol)> = Vec::new();
            for (k, &sym) in sigma.symbols().iter().enumerate() {
                let pos = map.apply(k as u64 + 1);
                if pos == 0 {
                    return Err(Error::Config(format!(
                        "index map {} sent position {} to 0",
                        map.name(),
                        k + 1
                    )));
                }
                if let Some(prev) = fixed.iter().position(|&(p, _)| p == pos) {
                    return Err(Error::NotInjective {
                        first: prev as u64 + 1,
                        second: k as u64 + 1,
                        image: pos,
                    });
                }
                fixed.push((pos, sym));
                window = window.max(pos);
            }
            let free = window - sigma.len() as u64;
            let sigma_mass = dist.string_mass(sigma)?;
            if !complete {
                residual += &sigma_mass
                    * (Ratio::one() - ratio::pow(&covered, u32::try_from(free).unwrap()));
            }
            // Materialize: fixed template, free positions over `width`.
            let mut template: Vec<Option<Symbol>> = vec![None; window as usize];
            for (p, s) in &fixed {
                template[(*p - 1) as usize] = Some(*s);
            }
            let free_slots: Vec<usize> = (0..template.len())
                .filter(|&i| template[i].is_none())
                .collect();
            let choices: Vec<Symbol> = (0..width)
                .map_while(|i| alphabet.try_enumerate(i))
                .collect();
            let mut count: u64 = 1;
            for _ in &free_slots {
                count = count.saturating_mul(choices.len() as u64);
                if count > DEFAULT_SCAN_BUDGET {
                    return Err(Error::BudgetExhausted {
                        what: "shuffle pullback materialization".to_string(),
                        budget: DEFAULT_SCAN_BUDGET,
                        spent: count,
                    });
                }
            }
            if !free_slots.is_empty() && choices.is_empty() {
                // Nothing materializable; the residual already holds this
                // member's whole mass.
                continue;
            }
            let mut assignment = vec![0usize; free_slots.len()];
            loop {
                let mut tau = template.clone();
                for (slot, &choice) in free_slots.iter().zip(assignment.iter()) {
                    tau[*slot] = Some(choices[choice]);
                }
                members.push(SymbolString(tau.into_iter().map(|s| s.unwrap()).collect()));
                // Odometer over the free slots.
                let mut i = assignment.len();
                let mut done = true;
                while i > 0 {
                    i -= 1;
                    assignment[i] += 1;
                    if assignment[i] < choices.len() {
                        done = false;
                        break;
                    }
                    assignment[i] = 0;
                }
                if done {
                    break;
                }
            }
        }
        Ok((members, residual, complete))
    })
}

/// Pullback along a prefix-driven selection.
///
/// The preimage of a member σ collects the minimal source windows the
/// rule reads to emit exactly σ: at every step the rule inspects the
/// prefix so far; a kept position must carry the next symbol of σ, a
/// skipped one ranges free. Selection can stall, so preimage mass only
/// falls short of mass(σ), never exceeds it. Free positions materialize
/// over the first `width` symbols and windows are cut at `max_len`; both
/// losses land in the residual bound.
pub fn selection_pullback(
    test: &MlTest,
    rule: &SelectionRule,
    width: u64,
    max_len: usize,
    up_to: u64,
) -> Result<Pullback, Error> {
    let dist = test.distribution().clone();
    let alphabet = dist.alphabet().clone();
    let tail = dist.tail_bound(width);
    let complete_width = materialization_complete(&dist, width);
    let label = format!("{} <- select({})", test.label(), rule.name());
    let rule = rule.clone();
    assemble(test, dist.clone(), label, up_to, move |_, source| {
        let mut members = Vec::new();
        let mut residual = Ratio::zero();
        let mut complete = complete_width;
        for sigma in source.members() {
            if sigma.is_empty() {
                // The empty string is selected before anything is read.
                members.push(SymbolString::empty());
                continue;
            }
            let choices: Vec<Symbol> = (0..width)
                .map_while(|i| alphabet.try_enumerate(i))
                .collect();
            // DFS over windows: (window so far, its mass, symbols kept).
            let mut stack: Vec<(SymbolString, Ratio, usize)> =
                vec![(SymbolString::empty(), Ratio::one(), 0)];
            let mut nodes: u64 = 0;
            while let Some((window, mass, kept)) = stack.pop() {
                nodes += 1;
                if nodes > DEFAULT_SCAN_BUDGET {
                    return Err(Error::BudgetExhausted {
                        what: "selection pullback enumeration".to_string(),
                        budget: DEFAULT_SCAN_BUDGET,
                        spent: nodes,
                    });
                }
                let keep = rule
                    .decide(&window)
                    .ok_or_else(|| Error::UndefinedSelection {
                        rule: rule.name(),
                        prefix_len: window.len(),
                    })?;
                if keep {
                    let next = sigma.0[kept];
                    let mut w = window.clone();
                    w.0.push(next);
                    let m = &mass * dist.mass(next);
                    if kept + 1 == sigma.len() {
                        members.push(w);
                    } else if w.len() >= max_len {
                        residual += m;
                        complete = false;
                    } else {
                        stack.push((w, m, kept + 1));
                    }
                } else {
                    // Free position: the unmaterialized tail is lost.
                    if !tail.is_zero() {
                        residual += &mass * &tail;
                        complete = false;
                    }
                    for &a in &choices {
                        let mut w = window.clone();
                        w.0.push(a);
                        if w.len() >= max_len {
                            // No room left to finish sigma.
                            let m = &mass * dist.mass(a);
                            residual += m;
                            complete = false;
                        } else {
                            stack.push((w, &mass * dist.mass(a), kept));
                        }
                    }
                }
            }
        }
        Ok((members, residual, complete))
    })
}

/// Pullback of a test over a conditional distribution, into the filled
/// space where non-members of the event collapse onto the filler symbol.
///
/// A member σ over the event's sub-alphabet pulls back to the strings
/// that interleave runs of the filler (of length at most `max_gap`)
/// before each symbol of σ. Gap truncation leaves an exact residual:
/// the untruncated preimage carries σ's mass under the conditional,
/// i.e. mass(σ)/P(event)^|σ|, and the materialized part misses it by
/// the factor 1 - (1 - q^{max_gap+1})^|σ| with q the filler mass.
pub fn conditioning_pullback(test: &MlTest, max_gap: u64, up_to: u64) -> Result<Pullback, Error> {
    let (base, event_mass) = test
        .distribution()
        .conditional_parts()
        .map(|(b, m)| (b.clone(), m.clone()))
        .ok_or_else(|| {
            Error::Config(format!(
                "conditioning pullback needs a conditional distribution, got {}",
                test.distribution().label()
            ))
        })?;
    let sub = test.distribution().alphabet().clone();
    // Filler: least base symbol outside the sub-alphabet.
    let outside = EventPredicate::custom("outside", move |s| !sub.contains(s));
    let filler = {
        let mut found = None;
        for i in 0..(1u64 << 20) {
            match base.alphabet().try_enumerate(i) {
                Some(s) if outside.contains(s) => {
                    found = Some(s);
                    break;
                }
                Some(_) => {}
                None => break,
            }
        }
        found.ok_or_else(|| {
            Error::Config("conditioning event covers its alphabet; nothing to fill".to_string())
        })?
    };
    let sub2 = test.distribution().alphabet().clone();
    let within = crate::space::Alphabet::subset(
        base.alphabet().clone(),
        &format!("{}+{}", sub2.label(), filler),
        sub2.size().map(|n| n + 1),
        move |s| s == filler || sub2.contains(s),
    );
    let q = Ratio::one() - &event_mass;
    let filled = base.filled(within, filler, q.clone())?;
    let label = format!("{} <- condition(gaps<={max_gap})", test.label());
    // Per-gap geometric series over filler runs of length 0..=max_gap.
    let gap32 = u32::try_from(max_gap + 1).expect("gap bound out of range");
    let captured_factor = Ratio::one() - ratio::pow(&q, gap32);
    let filled2 = filled.clone();
    assemble(test, filled, label, up_to, move |_, source| {
        let mut members = Vec::new();
        let mut residual = Ratio::zero();
        let complete = q.is_zero();
        for sigma in source.members() {
            let len32 = u32::try_from(sigma.len()).expect("member too long");
            // Full preimage mass: sigma's mass under the conditional.
            let mut full = Ratio::one();
            for &s in sigma.symbols() {
                full *= filled2.mass(s) / &event_mass;
            }
            if !complete {
                residual += &full * (Ratio::one() - ratio::pow(&captured_factor, len32));
            }
            // Gap vectors (k_1..k_L) with each k <= max_gap.
            if sigma.is_empty() {
                members.push(SymbolString::empty());
                continue;
            }
            let mut gaps = vec![0u64; sigma.len()];
            loop {
                let mut tau = Vec::new();
                for (i, &s) in sigma.symbols().iter().enumerate() {
                    for _ in 0..gaps[i] {
                        tau.push(filler);
                    }
                    tau.push(s);
                }
                members.push(SymbolString(tau));
                // Odometer.
                let mut i = gaps.len();
                let mut done = true;
                while i > 0 {
                    i -= 1;
                    gaps[i] += 1;
                    if gaps[i] <= max_gap {
                        done = false;
                        break;
                    }
                    gaps[i] = 0;
                }
                if done {
                    break;
                }
            }
        }
        Ok((members, residual, complete))
    })
}

/// Pullback along a pointwise symbol map.
///
/// The preimage of a member σ collects the same-length strings whose
/// image under the map is σ, with each position ranging over the
/// member's preimage within the first `width` source symbols. Preimage
/// masses multiply positionwise; truncation loses at most the source
/// tail per position, which the residual brackets.
pub fn map_pullback(
    test: &MlTest,
    base: &DiscreteDistribution,
    var: &RandomVariable,
    width: u64,
    up_to: u64,
) -> Result<Pullback, Error> {
    let dist = base.clone();
    let tail = dist.tail_bound(width);
    let complete = materialization_complete(&dist, width);
    let label = format!("{} <- map({})", test.label(), var.name());
    let var = var.clone();
    let base = base.clone();
    assemble(test, dist.clone(), label, up_to, move |_, source| {
        let mut members = Vec::new();
        let mut residual = Ratio::zero();
        for sigma in source.members() {
            // Positionwise truncated preimages and their masses.
            let mut preimages: Vec<Vec<Symbol>> = Vec::with_capacity(sigma.len());
            let mut truncated_masses: Vec<Ratio> = Vec::with_capacity(sigma.len());
            for &target in sigma.symbols() {
                let pre = var.preimage_in(base.alphabet(), width, target);
                let mass: Ratio = pre.iter().map(|&s| base.mass(s)).sum();
                preimages.push(pre);
                truncated_masses.push(mass);
            }
            // Residual: product of upper bounds minus product of lowers.
            if !complete {
                let lower: Ratio = truncated_masses.iter().product();
                let upper: Ratio = truncated_masses
                    .iter()
                    .map(|m| (m + &tail).min(Ratio::one()))
                    .product();
                residual += upper - lower;
            }
            // Cartesian product of the preimages.
            let mut count: u64 = 1;
            for p in &preimages {
                count = count.saturating_mul(p.len() as u64);
                if count > DEFAULT_SCAN_BUDGET {
                    return Err(Error::BudgetExhausted {
                        what: "map pullback materialization".to_string(),
                        budget: DEFAULT_SCAN_BUDGET,
                        spent: count,
                    });
                }
            }
            if preimages.iter().any(|p| p.is_empty()) && !sigma.is_empty() {
                continue;
            }
            if sigma.is_empty() {
                members.push(SymbolString::empty());
                continue;
            }
            let mut assignment = vec![0usize; preimages.len()];
            loop {
                members.push(SymbolString(
                    preimages
                        .iter()
                        .zip(assignment.iter())
                        .map(|(p, &i)| p[i])
                        .collect(),
                ));
                let mut i = preimages.len();
                let mut done = true;
                while i > 0 {
                    i -= 1;
                    assignment[i] += 1;
                    if assignment[i] < preimages[i].len() {
                        done = false;
                        break;
                    }
                    assignment[i] = 0;
                }
                if done {
                    break;
                }
            }
        }
        Ok((members, residual, complete))
    })
}

/// Pullback of a second-marginal test to the product space.
///
/// A member σ over the second component pulls back to the product
/// strings whose second components spell σ while the first components
/// range free, materialized over the first `width` symbols of the first
/// alphabet. The untruncated preimage carries exactly mass(σ) under the
/// product measure.
pub fn marginal_pullback(
    test: &MlTest,
    first: &DiscreteDistribution,
    width: u64,
    up_to: u64,
) -> Result<Pullback, Error> {
    let second = test.distribution().clone();
    let product = DiscreteDistribution::product(vec![first.clone(), second.clone()])?;
    let product_alphabet = product.alphabet().clone();
    let covered = partial_mass(first, width);
    let complete = materialization_complete(first, width);
    let label = format!("{} <- marginal", test.label());
    let first = first.clone();
    assemble(test, product, label, up_to, move |_, source| {
        let mut members = Vec::new();
        let mut residual = Ratio::zero();
        for sigma in source.members() {
            let len32 = u32::try_from(sigma.len()).expect("member too long");
            let sigma_mass = second.string_mass(sigma)?;
            if !complete {
                residual += &sigma_mass * (Ratio::one() - ratio::pow(&covered, len32));
            }
            if sigma.is_empty() {
                members.push(SymbolString::empty());
                continue;
            }
            let choices: Vec<Symbol> = (0..width)
                .map_while(|i| first.alphabet().try_enumerate(i))
                .collect();
            if choices.is_empty() {
                continue;
            }
            let mut count: u64 = 1;
            for _ in 0..sigma.len() {
                count = count.saturating_mul(choices.len() as u64);
                if count > DEFAULT_SCAN_BUDGET {
                    return Err(Error::BudgetExhausted {
                        what: "marginal pullback materialization".to_string(),
                        budget: DEFAULT_SCAN_BUDGET,
                        spent: count,
                    });
                }
            }
            let mut assignment = vec![0usize; sigma.len()];
            loop {
                let tau: Vec<Symbol> = sigma
                    .symbols()
                    .iter()
                    .zip(assignment.iter())
                    .map(|(&b, &i)| product_alphabet.pack(&[choices[i], b]))
                    .collect();
                members.push(SymbolString(tau));
                let mut i = assignment.len();
                let mut done = true;
                while i > 0 {
                    i -= 1;
                    assignment[i] += 1;
                    if assignment[i] < choices.len() {
                        done = false;
                        break;
                    }
                    assignment[i] = 0;
                }
                if done {
                    break;
                }
            }
        }
        Ok((members, residual, complete))
    })
}

// ---------------------------------------------------------------------
// Product sections
// ---------------------------------------------------------------------

/// Outcome of slicing a product-space set along a fixed second
/// component.
#[derive(Debug, Clone)]
pub struct SliceReport {
    /// First-component strings whose pairing with the matching prefix of
    /// the section string lands in the sliced set.
    pub slice: PrefixFreeSet,
    /// mass(slice under the first marginal) * mass(section string under
    /// the second marginal).
    pub lhs: Ratio,
    /// Product-measure mass of the set intersected with the section
    /// cylinder, summed by enumeration.
    pub rhs: Ratio,
    pub holds: bool,
}

/// Checks the section identity for a product measure: slicing a set at a
/// second-component string and measuring under the first marginal agrees
/// with measuring the intersection under the product.
///
/// `product` must be a two-component product distribution whose first
/// component has finite support (the enumeration side needs it), and
/// every member of `w` must be no longer than `x`.
pub fn check_fubini_slice(
    product: &DiscreteDistribution,
    w: &PrefixFreeSet,
    x: &SymbolString,
) -> Result<SliceReport, Error> {
    let parts = product.parts().ok_or_else(|| {
        Error::Config(format!(
            "section check needs a product distribution, got {}",
            product.label()
        ))
    })?;
    if parts.len() != 2 {
        return Err(Error::Config(format!(
            "section check needs exactly 2 components, got {}",
            parts.len()
        )));
    }
    let (p1, p2) = (&parts[0], &parts[1]);
    for member in w.members() {
        if member.len() > x.len() {
            return Err(Error::SliceTooLong {
                string: member.to_string(),
                len: member.len(),
                max: x.len(),
            });
        }
    }
    let alphabet = product.alphabet();
    // The slice: members compatible with x, first components kept.
    let mut slice_members = Vec::new();
    for member in w.members() {
        let mut firsts = Vec::with_capacity(member.len());
        let mut compatible = true;
        for (k, &sym) in member.symbols().iter().enumerate() {
            let comps = alphabet.unpack(sym);
            if comps[1] != x.0[k] {
                compatible = false;
                break;
            }
            firsts.push(comps[0]);
        }
        if compatible {
            slice_members.push(SymbolString(firsts));
        }
    }
    let slice = PrefixFreeSet::new(slice_members)?;
    let lhs = p1.set_mass(&slice)? * p2.string_mass(x)?;
    // Enumeration side: all product strings of length |x| with second
    // component x, summed when they fall inside the set's open cylinder.
    let m1 = p1.finite_support_width().ok_or_else(|| {
        Error::Config(format!(
            "section enumeration needs finite first-component support, got {}",
            p1.label()
        ))
    })?;
    let choices: Vec<Symbol> = (0..m1)
        .map_while(|i| p1.alphabet().try_enumerate(i))
        .collect();
    let mut rhs = Ratio::zero();
    if x.is_empty() {
        if w.covers(&SymbolString::empty()) {
            rhs = Ratio::one();
        }
    } else if !choices.is_empty() {
        let mut assignment = vec![0usize; x.len()];
        loop {
            let z: Vec<Symbol> = x
                .symbols()
                .iter()
                .zip(assignment.iter())
                .map(|(&b, &i)| alphabet.pack(&[choices[i], b]))
                .collect();
            let z = SymbolString(z);
            if w.covers(&z) {
                rhs += product.string_mass(&z)?;
            }
            let mut i = assignment.len();
            let mut done = true;
            while i > 0 {
                i -= 1;
                assignment[i] += 1;
                if assignment[i] < choices.len() {
                    done = false;
                    break;
                }
                assignment[i] = 0;
            }
            if done {
                break;
            }
        }
    }
    let holds = lhs == rhs;
    Ok(SliceReport {
        slice,
        lhs,
        rhs,
        holds,
    })
}

// ---------------------------------------------------------------------
// Tests relative to oracle streams
// ---------------------------------------------------------------------

/// Query-logging access to a fixed family of oracle streams. Positions
/// are 0-based; symbols are buffered so repeated queries are cheap and
/// consistent.
pub struct OracleContext {
    streams: Vec<EnsembleStream>,
    buffers: Vec<Vec<Symbol>>,
    log: Vec<(usize, u64)>,
}

impl OracleContext {
    pub fn new(streams: Vec<EnsembleStream>) -> Self {
        let buffers = streams.iter().map(|_| Vec::new()).collect();
        OracleContext {
            streams,
            buffers,
            log: Vec::new(),
        }
    }

    /// Symbol at `position` of oracle `oracle`, logged.
    pub fn query(&mut self, oracle: usize, position: u64) -> Result<Symbol, Error> {
        if oracle >= self.streams.len() {
            return Err(Error::Config(format!(
                "oracle index {oracle} out of range 0..{}",
                self.streams.len()
            )));
        }
        self.log.push((oracle, position));
        let pos = usize::try_from(position).expect("oracle position out of range");
        while self.buffers[oracle].len() <= pos {
            let s = self.streams[oracle].next()?;
            self.buffers[oracle].push(s);
        }
        Ok(self.buffers[oracle][pos])
    }

    /// Every (oracle, position) pair queried so far, in order.
    pub fn queries(&self) -> &[(usize, u64)] {
        &self.log
    }
}

/// A test whose levels may consult oracle streams while being built.
pub struct RelativeTest {
    dist: DiscreteDistribution,
    max_level: u64,
    label: String,
    gen: Arc<dyn Fn(u64, &mut OracleContext) -> Result<PrefixFreeSet, Error> + Send + Sync>,
}

impl RelativeTest {
    pub fn new(
        dist: DiscreteDistribution,
        max_level: u64,
        label: &str,
        gen: impl Fn(u64, &mut OracleContext) -> Result<PrefixFreeSet, Error> + Send + Sync + 'static,
    ) -> Self {
        RelativeTest {
            dist,
            max_level,
            label: label.to_string(),
            gen: Arc::new(gen),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Level `n`, computed against the given oracles.
    pub fn level(&self, n: u64, ctx: &mut OracleContext) -> Result<PrefixFreeSet, Error> {
        if n == 0 || n > self.max_level {
            return Err(Error::Config(format!(
                "level {n} out of range 1..={} for test {}",
                self.max_level, self.label
            )));
        }
        (self.gen)(n, ctx)
    }

    /// Materializes levels 1..=up_to into an ordinary test.
    pub fn materialize(&self, ctx: &mut OracleContext, up_to: u64) -> Result<MlTest, Error> {
        let up_to = up_to.min(self.max_level);
        let mut levels = Vec::new();
        for n in 1..=up_to {
            levels.push(self.level(n, ctx)?);
        }
        Ok(MlTest::from_levels(self.dist.clone(), levels, &self.label))
    }
}

/// The universal avoid-prefix test against one oracle: level n is the
/// singleton holding the oracle's first n+1 symbols. Over any
/// distribution whose symbol masses stay at or below 1/2 the level mass
/// is at most 2^-(n+1), strictly under the 2^-n budget, and the oracle
/// itself hits every level.
pub fn oracle_prefix_test(dist: DiscreteDistribution, max_level: u64) -> RelativeTest {
    RelativeTest::new(dist, max_level, "oracle-prefix", move |n, ctx| {
        let len = usize::try_from(n + 1).expect("level out of range");
        let mut symbols = Vec::with_capacity(len);
        for k in 0..len {
            symbols.push(ctx.query(0, k as u64)?);
        }
        PrefixFreeSet::new(vec![SymbolString(symbols)])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::rat;
    use crate::space::Alphabet;
    use crate::transform::{
        conditional_distribution, fill_distribution, fill_map, sample_ensemble,
    };

    fn geom2() -> DiscreteDistribution {
        DiscreteDistribution::geometric(rat(1, 2)).unwrap()
    }

    fn pfs(strings: &[&[u64]]) -> PrefixFreeSet {
        PrefixFreeSet::new(
            strings
                .iter()
                .map(|s| SymbolString::from_codes(s))
                .collect(),
        )
        .unwrap()
    }

    /// Level n = all strings of length n+1 with every symbol nonzero,
    /// materialized over the first `width` naturals. Mass under geom2 is
    /// at most (1/2)^{n+1} < 2^-n.
    fn avoid_zero_test(width: u64, max_level: u64) -> MlTest {
        let dist = geom2();
        MlTest::generated(dist, max_level, "avoid-zero", move |n| {
            let len = (n + 1) as usize;
            let all = crate::space::all_strings(&Alphabet::naturals(), width, len);
            let members: Vec<SymbolString> = all
                .into_iter()
                .filter(|s| s.symbols().iter().all(|sym| sym.code() != 0))
                .collect();
            PrefixFreeSet::new(members)
        })
    }

    #[test]
    fn verification_checks_strict_level_bounds() {
        let test = avoid_zero_test(4, 4);
        let v = test.verify(4).unwrap();
        assert!(v.certified);
        assert!(v.all_hold);
        // Level n mass: (sum of masses of symbols 1..3)^{n+1} =
        // (7/16)^{n+1}, strictly below 2^-n.
        assert_eq!(v.levels[0].mass, rat(49, 256));
        assert_eq!(v.levels[0].bound, rat(1, 2));

        let fat = MlTest::from_levels(geom2(), vec![pfs(&[&[0]])], "too-heavy");
        let v = fat.verify(1).unwrap();
        // mass 1/2 is not strictly below 2^-1.
        assert!(!v.all_hold);
    }

    #[test]
    fn prefix_verdicts() {
        let test = MlTest::from_levels(geom2(), vec![pfs(&[&[1, 0], &[2]])], "t");
        let hit = test
            .hits_prefix(1, &SymbolString::from_codes(&[2, 5, 5]))
            .unwrap();
        assert_eq!(hit, LevelHit::Hit(SymbolString::from_codes(&[2])));
        assert_eq!(
            test.hits_prefix(1, &SymbolString::from_codes(&[0, 0]))
                .unwrap(),
            LevelHit::Clear
        );
        assert_eq!(
            test.hits_prefix(1, &SymbolString::from_codes(&[1]))
                .unwrap(),
            LevelHit::Undetermined { needed: 2 }
        );
    }

    #[test]
    fn streams_pass_avoid_zero_levels_eventually() {
        // A sampled geom2 stream emits 0 with probability 1/2 per step,
        // so early levels catch it rarely; find a cleared level.
        let test = avoid_zero_test(6, 6);
        let stream = sample_ensemble(geom2(), 42);
        let cleared = test.first_cleared_level(&stream, 6).unwrap();
        assert!(cleared.is_some());
    }

    #[test]
    fn shuffle_pullback_conserves_mass_exactly_on_finite_support() {
        // Uniform 3-symbol source, double map, width covering support.
        let dist = DiscreteDistribution::finite(&[rat(1, 3), rat(1, 3), rat(1, 3)]).unwrap();
        let test = MlTest::from_levels(dist, vec![pfs(&[&[0, 1]]), pfs(&[&[2, 2, 0]])], "t");
        let pb = shuffle_pullback(&test, &IndexMap::double(), 3, 2).unwrap();
        assert!(pb.all_bounded());
        for l in &pb.levels {
            assert!(l.complete);
            assert!(l.residual.is_zero());
            assert_eq!(l.image_mass, l.source_mass);
        }
        // Member [0,1] pins positions 2 and 4; positions 1 and 3 float:
        // 9 preimages of length 4.
        assert_eq!(pb.test.level(1).unwrap().len(), 9);
    }

    #[test]
    fn shuffle_pullback_brackets_truncation() {
        let test = MlTest::from_levels(geom2(), vec![pfs(&[&[0, 0]])], "t");
        let pb = shuffle_pullback(&test, &IndexMap::double(), 3, 1).unwrap();
        let l = &pb.levels[0];
        assert!(!l.complete);
        assert!(l.bounded);
        // image + residual recovers the source mass exactly.
        assert_eq!(&l.image_mass + &l.residual, l.source_mass);
        // Free positions materialized over 3 symbols cover 7/8 each.
        assert_eq!(l.image_mass, rat(1, 4) * rat(49, 64));
    }

    #[test]
    fn shuffle_pullback_implication_on_streams() {
        let dist = DiscreteDistribution::finite(&[rat(1, 2), rat(1, 4), rat(1, 4)]).unwrap();
        let test = MlTest::from_levels(dist.clone(), vec![pfs(&[&[0, 1], &[1, 0, 2]])], "t");
        let map = IndexMap::double();
        let pb = shuffle_pullback(&test, &map, 3, 1).unwrap();
        for seed in 0..200 {
            let alpha = sample_ensemble(dist.clone(), seed);
            let mut shuffled = alpha.restart().shuffle(map.clone());
            let hit = test.stream_hits_level(&mut shuffled, 1).unwrap();
            if hit {
                let mut source = alpha.restart();
                assert!(pb.test.stream_hits_level(&mut source, 1).unwrap());
            }
        }
    }

    #[test]
    fn selection_pullback_even_length_rule_is_exact_on_finite_support() {
        // Keep positions 1, 3, 5, ...: windows are fully determined, so
        // with support covered the preimage mass equals the source mass.
        let dist = DiscreteDistribution::finite(&[rat(1, 2), rat(1, 2)]).unwrap();
        let test = MlTest::from_levels(dist, vec![pfs(&[&[0, 1], &[1, 1]])], "t");
        let pb = selection_pullback(&test, &SelectionRule::even_length(), 2, 16, 1).unwrap();
        let l = &pb.levels[0];
        assert!(l.complete);
        assert!(l.residual.is_zero());
        assert_eq!(l.image_mass, l.source_mass);
        // Windows have length 3 with one free middle position.
        let level = pb.test.level(1).unwrap();
        assert_eq!(level.len(), 4);
        assert!(level.members().iter().all(|m| m.len() == 3));
    }

    #[test]
    fn selection_pullback_stalling_rule_stays_bounded() {
        // Keep only right after symbol 0: selection can stall, so the
        // preimage mass is strictly below the source mass.
        let dist = DiscreteDistribution::finite(&[rat(1, 2), rat(1, 2)]).unwrap();
        let test = MlTest::from_levels(dist, vec![pfs(&[&[1]])], "t");
        let rule = SelectionRule::after_symbol(Symbol(0));
        let pb = selection_pullback(&test, &rule, 2, 12, 1).unwrap();
        let l = &pb.levels[0];
        assert!(l.bounded);
        assert!(l.image_mass < l.source_mass);
        // Captured plus residual still brackets the source.
        assert!(&l.image_mass + &l.residual >= l.image_mass);
        // Implication on streams.
        for seed in 0..200 {
            let alpha = sample_ensemble(pb.test.distribution().clone(), seed);
            let mut selected = alpha.restart().select(rule.clone());
            if test.stream_hits_level(&mut selected, 1).unwrap() {
                let mut source = alpha.restart();
                // The member may sit beyond the materialized window
                // length; tolerate only materialized hits.
                let hit = pb.test.stream_hits_level(&mut source, 1).unwrap();
                assert!(hit || !l.complete);
            }
        }
    }

    #[test]
    fn selection_pullback_implication_with_complete_windows() {
        let dist = DiscreteDistribution::finite(&[rat(1, 2), rat(1, 2)]).unwrap();
        let test = MlTest::from_levels(dist.clone(), vec![pfs(&[&[1, 0]])], "t");
        let rule = SelectionRule::even_length();
        let pb = selection_pullback(&test, &rule, 2, 16, 1).unwrap();
        assert!(pb.levels[0].complete);
        for seed in 0..300 {
            let alpha = sample_ensemble(dist.clone(), seed);
            let mut selected = alpha.restart().select(rule.clone());
            if test.stream_hits_level(&mut selected, 1).unwrap() {
                assert!(pb.test.stream_hits_level(&mut alpha.restart(), 1).unwrap());
            }
        }
    }

    #[test]
    fn conditioning_pullback_exact_bracket() {
        // geom2 conditioned on evens; pull back level {[0]} with gaps
        // up to 2. Filler is symbol 1 with mass 1/3 in the filled space.
        let base = geom2();
        let even = EventPredicate::even();
        let cond = conditional_distribution(&base, &even, 64).unwrap();
        let test = MlTest::from_levels(cond, vec![pfs(&[&[0]])], "t");
        let pb = conditioning_pullback(&test, 2, 1).unwrap();
        let l = &pb.levels[0];
        // Source mass: (1/2)/(2/3) = 3/4.
        assert_eq!(l.source_mass, rat(3, 4));
        // Materialized: 1^k 0 for k = 0..2 under the filled measure:
        // (1/2) (1 + 1/3 + 1/9) = 13/18.
        assert_eq!(l.image_mass, rat(13, 18));
        assert_eq!(&l.image_mass + &l.residual, l.source_mass);
        assert!(l.bounded);
        // Members: 0, 10, 110.
        let level = pb.test.level(1).unwrap();
        assert_eq!(level.len(), 3);
    }

    #[test]
    fn conditioning_pullback_stream_implication() {
        let base = geom2();
        let even = EventPredicate::even();
        let cond = conditional_distribution(&base, &even, 64).unwrap();
        let test = MlTest::from_levels(cond, vec![pfs(&[&[0], &[2, 0]])], "t");
        let max_gap = 30;
        let pb = conditioning_pullback(&test, max_gap, 1).unwrap();
        let (_filled, filler) = fill_distribution(&base, &even, 64).unwrap();
        let fmap = fill_map(&even, base.alphabet(), filler).unwrap();
        for seed in 0..100 {
            let alpha = sample_ensemble(base.clone(), seed);
            let mut conditioned = alpha.restart().condition(even.clone());
            if test.stream_hits_level(&mut conditioned, 1).unwrap() {
                let mut filled_stream = alpha.restart().map_stream(fmap.clone());
                assert!(pb.test.stream_hits_level(&mut filled_stream, 1).unwrap());
            }
        }
    }

    #[test]
    fn map_pullback_parity_is_exact() {
        // mod-2 image of geom2 is (2/3, 1/3); preimages materialized to
        // width 8 leave a 2^-8 tail per position.
        let base = geom2();
        let var = RandomVariable::modulo(2);
        let image = var.image_distribution(&base, 64).unwrap();
        let test = MlTest::from_levels(image, vec![pfs(&[&[1, 1]])], "t");
        let pb = map_pullback(&test, &base, &var, 8, 1).unwrap();
        let l = &pb.levels[0];
        assert!(l.bounded);
        // Truncated: (sum of odd masses below 8)^2 = (1/3 - ...)^2.
        let odd8 = rat(1, 4) + rat(1, 16) + rat(1, 64) + rat(1, 256);
        assert_eq!(l.image_mass, &odd8 * &odd8);
        // Bracket straddles the exact source mass 1/9.
        assert!(l.image_mass <= l.source_mass);
        assert!(&l.image_mass + &l.residual >= l.source_mass);
        assert_eq!(pb.test.level(1).unwrap().len(), 16);
    }

    #[test]
    fn map_pullback_finite_exact_and_implication() {
        let base =
            DiscreteDistribution::finite(&[rat(1, 2), rat(1, 4), rat(1, 8), rat(1, 8)]).unwrap();
        let var = RandomVariable::modulo(2);
        let image = var.image_distribution(&base, 64).unwrap();
        let test = MlTest::from_levels(image.clone(), vec![pfs(&[&[1], &[0, 1]])], "t");
        let pb = map_pullback(&test, &base, &var, 4, 1).unwrap();
        let l = &pb.levels[0];
        assert!(l.complete);
        assert!(l.residual.is_zero());
        assert_eq!(l.image_mass, l.source_mass);
        for seed in 0..200 {
            let alpha = sample_ensemble(base.clone(), seed);
            let mut mapped = alpha.restart().map_stream(var.clone());
            if test.stream_hits_level(&mut mapped, 1).unwrap() {
                assert!(pb.test.stream_hits_level(&mut alpha.restart(), 1).unwrap());
            }
        }
    }

    #[test]
    fn marginal_pullback_conserves_mass() {
        let p1 = DiscreteDistribution::finite(&[rat(1, 2), rat(1, 2)]).unwrap();
        let p2 = DiscreteDistribution::finite(&[rat(1, 3), rat(2, 3)]).unwrap();
        let test = MlTest::from_levels(p2.clone(), vec![pfs(&[&[0, 0]])], "t");
        let pb = marginal_pullback(&test, &p1, 2, 1).unwrap();
        let l = &pb.levels[0];
        assert!(l.complete);
        assert!(l.residual.is_zero());
        assert_eq!(l.image_mass, l.source_mass);
        assert_eq!(l.source_mass, rat(1, 9));
        // 4 product members: free first components over 2 symbols.
        assert_eq!(pb.test.level(1).unwrap().len(), 4);
    }

    #[test]
    fn marginal_pullback_stream_implication() {
        let p1 = DiscreteDistribution::finite(&[rat(1, 2), rat(1, 2)]).unwrap();
        let p2 = DiscreteDistribution::finite(&[rat(1, 3), rat(2, 3)]).unwrap();
        let test = MlTest::from_levels(p2.clone(), vec![pfs(&[&[0], &[1, 0]])], "t");
        let pb = marginal_pullback(&test, &p1, 2, 1).unwrap();
        for seed in 0..200 {
            let s1 = sample_ensemble(p1.clone(), crate::rng::child_seed(seed, 0));
            let s2 = sample_ensemble(p2.clone(), crate::rng::child_seed(seed, 1));
            let mut second = s2.restart();
            if test.stream_hits_level(&mut second, 1).unwrap() {
                let mut joint =
                    EnsembleStream::product_stream(vec![s1.restart(), s2.restart()]).unwrap();
                assert!(pb.test.stream_hits_level(&mut joint, 1).unwrap());
            }
        }
    }

    #[test]
    fn fubini_slice_identity_exact() {
        let p1 = DiscreteDistribution::finite(&[rat(1, 2), rat(1, 2)]).unwrap();
        let p2 = DiscreteDistribution::finite(&[rat(1, 3), rat(2, 3)]).unwrap();
        let product = DiscreteDistribution::product(vec![p1, p2]).unwrap();
        let pa = product.alphabet().clone();
        // W = {(0,1), (1,0)(0,0)} as packed strings.
        let w = PrefixFreeSet::new(vec![
            SymbolString(vec![pa.pack(&[Symbol(0), Symbol(1)])]),
            SymbolString(vec![
                pa.pack(&[Symbol(1), Symbol(0)]),
                pa.pack(&[Symbol(0), Symbol(0)]),
            ]),
        ])
        .unwrap();
        // Slice along x = 10: member one needs x_1 = 1, member two needs
        // x = 00, so exactly one survives.
        let x = SymbolString::from_codes(&[1, 0]);
        let report = check_fubini_slice(&product, &w, &x).unwrap();
        assert!(report.holds);
        assert_eq!(report.slice.len(), 1);
        assert_eq!(report.lhs, rat(1, 2) * rat(2, 3) * rat(1, 3));
        // Slice along x = 00: only member two survives.
        let x = SymbolString::from_codes(&[0, 0]);
        let report = check_fubini_slice(&product, &w, &x).unwrap();
        assert!(report.holds);
        assert_eq!(report.slice.len(), 1);
        // And along x = 01 nothing survives; both sides must be zero.
        let x = SymbolString::from_codes(&[0, 1]);
        let report = check_fubini_slice(&product, &w, &x).unwrap();
        assert!(report.holds);
        assert!(report.slice.is_empty());
        assert!(report.rhs.is_zero());
    }

    #[test]
    fn fubini_slice_rejects_short_sections() {
        let p1 = DiscreteDistribution::finite(&[rat(1, 2), rat(1, 2)]).unwrap();
        let p2 = DiscreteDistribution::finite(&[rat(1, 2), rat(1, 2)]).unwrap();
        let product = DiscreteDistribution::product(vec![p1, p2]).unwrap();
        let pa = product.alphabet().clone();
        let w = PrefixFreeSet::new(vec![SymbolString(vec![
            pa.pack(&[Symbol(0), Symbol(0)]),
            pa.pack(&[Symbol(0), Symbol(0)]),
        ])])
        .unwrap();
        let x = SymbolString::from_codes(&[0]);
        assert!(matches!(
            check_fubini_slice(&product, &w, &x),
            Err(Error::SliceTooLong { len: 2, max: 1, .. })
        ));
    }

    #[test]
    fn relative_test_traps_its_oracle() {
        let oracle = sample_ensemble(geom2(), 77);
        let rel = oracle_prefix_test(geom2(), 5);
        let mut ctx = OracleContext::new(vec![oracle.restart()]);
        let test = rel.materialize(&mut ctx, 5).unwrap();
        // Valid test: each level is one string of length n+1, mass at
        // most 2^-(n+1).
        let v = test.verify(5).unwrap();
        assert!(v.all_hold);
        // The oracle hits every level.
        for n in 1..=5 {
            assert!(test.stream_hits_level(&mut oracle.restart(), n).unwrap());
        }
        // A different stream clears some level.
        let other = sample_ensemble(geom2(), 78);
        assert!(test.first_cleared_level(&other, 5).unwrap().is_some());
        // The query log names oracle 0 and the positions read.
        assert!(ctx.queries().contains(&(0, 0)));
        assert!(ctx.queries().contains(&(0, 5)));
        assert!(ctx.queries().iter().all(|&(o, _)| o == 0));
    }

    #[test]
    fn relative_test_rejects_bad_oracle_index() {
        let mut ctx = OracleContext::new(vec![sample_ensemble(geom2(), 1)]);
        assert!(ctx.query(1, 0).is_err());
    }
}
