//! Measure representations on string space and their structural checks.
//!
//! A measure representation assigns each finite string a nonnegative
//! rational that splits across its one-symbol extensions:
//! `r(σ) = Σ_a r(σa)`. The cylinder generated by `σ` then gets measure
//! `r(σ)`, open sets get the sum over a prefix-free generating set, and
//! the classical structure falls out as *checkable* statements:
//!
//! * restricting a prefix-free set to the extensions of an anchor `ρ`
//!   can only lose mass (`check_restriction_bound`),
//! * when the restricted set covers the anchor's whole cylinder, nothing
//!   is lost (`check_covering_equality`, up to an exact truncation
//!   residual when the alphabet is infinite),
//! * bigger open sets carry at least as much measure
//!   (`check_monotonicity`, on inclusions this module decides exactly),
//! * the measure of an open set does not depend on which prefix-free set
//!   generates it (`open_set_measure` over any generating family).
//!
//! All checks are exact rational arithmetic; nothing is sampled.

use num::{Signed, Zero};

use crate::error::Error;
use crate::ratio::Ratio;
use crate::space::{prefix_free_cover, DiscreteDistribution, PrefixFreeSet, Symbol, SymbolString};
use crate::DEFAULT_SCAN_BUDGET;

/// A measure representation backed by per-symbol masses: the value of a
/// string is the product of its symbol masses, scaled by the total mass
/// assigned to the empty string (one for probability measures).
#[derive(Debug, Clone)]
pub struct MeasureRepresentation {
    dist: DiscreteDistribution,
}

/// A prefix-free set restricted to the extensions of an anchor string.
#[derive(Debug, Clone)]
pub struct RestrictionSet {
    pub anchor: SymbolString,
    pub members: PrefixFreeSet,
}

/// Outcome of [`MeasureRepresentation::check_restriction_bound`].
#[derive(Debug, Clone)]
pub struct RestrictionBoundReport {
    pub restricted_mass: Ratio,
    pub anchor_mass: Ratio,
    /// `anchor_mass - restricted_mass`; the bound holds iff nonnegative.
    pub margin: Ratio,
    pub holds: bool,
}

/// Outcome of [`MeasureRepresentation::check_covering_equality`].
#[derive(Debug, Clone)]
pub struct CoveringReport {
    pub anchor_mass: Ratio,
    pub restricted_mass: Ratio,
    /// `anchor_mass - restricted_mass`, the mass the cover misses.
    pub gap: Ratio,
    /// Exact upper bound on the gap attributable to truncating the
    /// alphabet at the requested width; zero for finite alphabets checked
    /// at full width.
    pub residual: Ratio,
    /// Equality up to the truncation residual: `0 <= gap <= residual`.
    pub holds: bool,
}

/// Outcome of [`MeasureRepresentation::check_monotonicity`].
#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub smaller_mass: Ratio,
    pub larger_mass: Ratio,
    pub holds: bool,
}

/// Members of `e` that extend the anchor `rho`.
///
/// A subset of a prefix-free set stays prefix-free.
pub fn restrict(e: &PrefixFreeSet, rho: &SymbolString) -> RestrictionSet {
    let members: Vec<SymbolString> = e
        .members()
        .iter()
        .filter(|m| rho.is_prefix_of(m))
        .cloned()
        .collect();
    RestrictionSet {
        anchor: rho.clone(),
        members: PrefixFreeSet::from_members_unchecked(members),
    }
}

impl MeasureRepresentation {
    /// The measure representation induced by per-symbol masses.
    pub fn from_distribution(dist: DiscreteDistribution) -> Self {
        MeasureRepresentation { dist }
    }

    pub fn distribution(&self) -> &DiscreteDistribution {
        &self.dist
    }

    /// `r(σ)`, the measure of the cylinder generated by `σ`.
    pub fn eval(&self, s: &SymbolString) -> Result<Ratio, Error> {
        self.dist.string_mass(s)
    }

    /// Exact bound on `r(σ) - Σ_{a < m} r(σa)`, the extension mass not
    /// seen through the first `m` symbols: `r(σ)` times the tail bound.
    pub fn consistency_residual(&self, s: &SymbolString, m: u64) -> Result<Ratio, Error> {
        Ok(self.eval(s)? * self.dist.tail_bound(m))
    }

    /// Total measure of a restriction set.
    pub fn restriction_mass(&self, r: &RestrictionSet) -> Result<Ratio, Error> {
        self.dist.set_mass(&r.members)
    }

    /// Checks that restricting `e` to the extensions of `rho` carries no
    /// more mass than `rho` itself.
    pub fn check_restriction_bound(
        &self,
        e: &PrefixFreeSet,
        rho: &SymbolString,
    ) -> Result<RestrictionBoundReport, Error> {
        let restricted = restrict(e, rho);
        let restricted_mass = self.restriction_mass(&restricted)?;
        let anchor_mass = self.eval(rho)?;
        let margin = &anchor_mass - &restricted_mass;
        let holds = !margin.is_negative();
        Ok(RestrictionBoundReport {
            restricted_mass,
            anchor_mass,
            margin,
            holds,
        })
    }

    /// Checks the covering equality: when the members of `e` extending
    /// `rho` cover `rho`'s whole cylinder, their mass equals `rho`'s.
    ///
    /// Coverage is verified by expanding the extension tree of `rho` over
    /// the first `width` symbols down to the deepest member. A path that
    /// reaches that depth untouched disproves coverage and is returned as
    /// a [`Error::CoverGap`] witness. On an infinite alphabet the
    /// uncovered side branches beyond the width are charged exactly to
    /// `residual`, so `gap <= residual` is a certified equality statement
    /// rather than a tolerance.
    pub fn check_covering_equality(
        &self,
        e: &PrefixFreeSet,
        rho: &SymbolString,
        width: u64,
    ) -> Result<CoveringReport, Error> {
        let restricted = restrict(e, rho);
        let anchor_mass = self.eval(rho)?;
        let restricted_mass = self.restriction_mass(&restricted)?;

        let depth = restricted.members.max_len();
        let effective_width = match self.dist.alphabet().size() {
            Some(n) => width.min(n),
            None => width,
        };
        // Mass of a single step that escapes the truncation.
        let step_tail = self.dist.tail_bound(effective_width);
        let full_width = self.dist.alphabet().size() == Some(effective_width);

        let mut residual = Ratio::zero();
        let mut budget = DEFAULT_SCAN_BUDGET;
        // Depth-first over uncovered extensions of rho within the width.
        let mut stack: Vec<SymbolString> = vec![rho.clone()];
        while let Some(node) = stack.pop() {
            if budget == 0 {
                return Err(Error::BudgetExhausted {
                    what: "covering check".to_string(),
                    budget: DEFAULT_SCAN_BUDGET,
                    spent: DEFAULT_SCAN_BUDGET,
                });
            }
            budget -= 1;
            if restricted.members.covers(&node) {
                continue;
            }
            if node.len() >= depth {
                return Err(Error::CoverGap {
                    anchor: rho.to_string(),
                    depth,
                    witness: node.to_string(),
                });
            }
            if !full_width {
                residual += self.eval(&node)? * &step_tail;
            }
            for i in 0..effective_width {
                stack.push(node.push(self.dist.alphabet().enumerate(i)));
            }
        }

        let gap = &anchor_mass - &restricted_mass;
        let holds = !gap.is_negative() && gap <= residual;
        Ok(CoveringReport {
            anchor_mass,
            restricted_mass,
            gap,
            residual,
            holds,
        })
    }

    /// Measure of the open set generated by an arbitrary finite family of
    /// strings: the mass of its minimal prefix-free cover. Families
    /// generating the same open set get the same value.
    pub fn open_set_measure(&self, strings: &[SymbolString]) -> Result<Ratio, Error> {
        self.dist.set_mass(&prefix_free_cover(strings))
    }

    /// Decides the inclusion of generated open sets exactly, then checks
    /// the induced measure inequality.
    ///
    /// For an infinite alphabet, the cylinder of a member of `e` is
    /// contained in the open set of `f` exactly when some member of `f`
    /// is its prefix: a finite set cannot close off infinitely many side
    /// branches. For a finite alphabet the check recurses over all
    /// children. A definite escape path is reported as
    /// [`Error::InclusionGap`].
    pub fn check_monotonicity(
        &self,
        e: &PrefixFreeSet,
        f: &PrefixFreeSet,
    ) -> Result<MonotonicityReport, Error> {
        for sigma in e.members() {
            self.verify_cylinder_inclusion(sigma, f)?;
        }
        let smaller_mass = self.dist.set_mass(e)?;
        let larger_mass = self.dist.set_mass(f)?;
        let holds = smaller_mass <= larger_mass;
        Ok(MonotonicityReport {
            smaller_mass,
            larger_mass,
            holds,
        })
    }

    /// Verifies `⟦σ⟧ ⊆ ⟦f⟧`, erring with an escape witness otherwise.
    fn verify_cylinder_inclusion(
        &self,
        sigma: &SymbolString,
        f: &PrefixFreeSet,
    ) -> Result<(), Error> {
        let finite_size = self.dist.alphabet().size();
        let mut budget = DEFAULT_SCAN_BUDGET;
        let mut stack: Vec<SymbolString> = vec![sigma.clone()];
        while let Some(node) = stack.pop() {
            if budget == 0 {
                return Err(Error::BudgetExhausted {
                    what: "inclusion check".to_string(),
                    budget: DEFAULT_SCAN_BUDGET,
                    spent: DEFAULT_SCAN_BUDGET,
                });
            }
            budget -= 1;
            if f.covers(&node) {
                continue;
            }
            let extending: Vec<&SymbolString> = f
                .members()
                .iter()
                .filter(|m| node.is_prefix_of(m))
                .collect();
            if extending.is_empty() {
                // Nothing in f is comparable with node, so its whole
                // cylinder escapes.
                return Err(Error::InclusionGap {
                    witness: node.to_string(),
                });
            }
            match finite_size {
                Some(n) => {
                    for i in 0..n {
                        stack.push(node.push(self.dist.alphabet().enumerate(i)));
                    }
                }
                None => {
                    // Infinitely many children, finitely many members of f
                    // to meet them: pick a child none of them continues.
                    let used: std::collections::HashSet<Symbol> =
                        extending.iter().map(|m| m.symbols()[node.len()]).collect();
                    let mut i = 0;
                    let escape = loop {
                        let cand = self.dist.alphabet().enumerate(i);
                        if !used.contains(&cand) {
                            break cand;
                        }
                        i += 1;
                    };
                    return Err(Error::InclusionGap {
                        witness: node.push(escape).to_string(),
                    });
                }
            }
        }
        Ok(())
    }
}
