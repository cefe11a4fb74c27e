//! Property-based invariants for the measure and stream layers.
//!
//! Strategies build random finite distributions and random prefix-free
//! sets (as antichains of a bounded tree), then check the structural
//! laws that must hold for every input: mass bounds, extension-sum
//! consistency, cover invariance, restriction and monotonicity, and
//! stream determinism.

use proptest::prelude::*;

use ensembles::measure::MeasureRepresentation;
use ensembles::ratio::{rat, Ratio};
use ensembles::space::{
    prefix_free_cover, DiscreteDistribution, PrefixFreeSet, Symbol, SymbolString,
};
use ensembles::transform::{sample_ensemble, EventPredicate, RandomVariable, SelectionRule};
use num::{One, Signed, Zero};

/// A finite distribution over `width` symbols with positive rational
/// masses summing to one.
fn dist_strategy(width: usize) -> impl Strategy<Value = DiscreteDistribution> {
    prop::collection::vec(1u64..20, width).prop_map(|weights| {
        let total: u64 = weights.iter().sum();
        let masses: Vec<Ratio> = weights
            .iter()
            .map(|&w| rat(w as i64, total as i64))
            .collect();
        DiscreteDistribution::finite(&masses).expect("weights normalize")
    })
}

/// A random antichain over strings of length 1..=3 on `width` symbols,
/// built by cutting a random subset of tree nodes, outermost first.
fn antichain_strategy(width: u64) -> impl Strategy<Value = PrefixFreeSet> {
    prop::collection::vec(0u8..4, 40).prop_map(move |choices| {
        let mut members = Vec::new();
        let mut idx = 0;
        let mut take = |_: &()| {
            let c = choices[idx % choices.len()];
            idx += 1;
            c
        };
        fn walk(
            prefix: &mut Vec<Symbol>,
            width: u64,
            depth: usize,
            take: &mut impl FnMut(&()) -> u8,
            members: &mut Vec<SymbolString>,
        ) {
            for a in 0..width {
                prefix.push(Symbol(a));
                let c = take(&());
                // 0: member here; 1: recurse deeper; 2, 3: skip.
                if c == 0 || (depth == 3 && c == 1) {
                    members.push(SymbolString(prefix.clone()));
                } else if c == 1 {
                    walk(prefix, width, depth + 1, take, members);
                }
                prefix.pop();
            }
        }
        let mut prefix = Vec::new();
        walk(&mut prefix, width, 1, &mut take, &mut members);
        PrefixFreeSet::new(members).expect("construction is prefix-free")
    })
}

/// Random string of length 0..=4 over `width` symbols.
fn string_strategy(width: u64) -> impl Strategy<Value = SymbolString> {
    prop::collection::vec(0..width, 0..=4)
        .prop_map(|codes| SymbolString(codes.into_iter().map(Symbol).collect()))
}

proptest! {
    /// The mass of any prefix-free set never exceeds one.
    #[test]
    fn prop_prefix_free_mass_bounded(
        dist in dist_strategy(3),
        set in antichain_strategy(3),
    ) {
        let mass = dist.set_mass(&set).unwrap();
        prop_assert!(mass <= Ratio::one());
        prop_assert!(mass >= Ratio::zero());
    }

    /// A cylinder's mass is exactly the sum of its one-symbol extensions
    /// over a finite alphabet.
    #[test]
    fn prop_extension_sums_are_consistent(
        dist in dist_strategy(4),
        s in string_strategy(4),
    ) {
        let whole = dist.string_mass(&s).unwrap();
        let mut parts = Ratio::zero();
        for a in 0..4u64 {
            parts += dist.string_mass(&s.push(Symbol(a))).unwrap();
        }
        prop_assert_eq!(whole, parts);
    }

    /// Extension sums truncated at width m, plus the consistency
    /// residual, bracket the cylinder mass over the naturals.
    #[test]
    fn prop_truncated_extensions_bracket(
        s in string_strategy(3),
        m in 1u64..12,
    ) {
        let dist = DiscreteDistribution::geometric(rat(1, 2)).unwrap();
        let rep = MeasureRepresentation::from_distribution(dist.clone());
        let whole = rep.eval(&s).unwrap();
        let mut partial = Ratio::zero();
        for a in 0..m {
            partial += rep.eval(&s.push(Symbol(a))).unwrap();
        }
        let residual = rep.consistency_residual(&s, m).unwrap();
        prop_assert!(partial <= whole);
        prop_assert_eq!(&partial + &residual, whole);
    }

    /// Covering a list of strings is idempotent and presentation
    /// invariant: permutations and duplicates leave the open set's
    /// measure unchanged.
    #[test]
    fn prop_cover_presentation_invariance(
        dist in dist_strategy(3),
        set in antichain_strategy(3),
        dup_index in 0usize..64,
    ) {
        let rep = MeasureRepresentation::from_distribution(dist);
        let mut strings: Vec<SymbolString> = set.members().to_vec();
        let baseline = rep.open_set_measure(&strings).unwrap();
        // Idempotence.
        let cover = prefix_free_cover(&strings);
        let covered_again = prefix_free_cover(cover.members());
        prop_assert_eq!(cover.members(), covered_again.members());
        // Duplicate a member and extend another; the open set is the
        // same set of sequences, so the measure must not move.
        if !strings.is_empty() {
            let pick = strings[dup_index % strings.len()].clone();
            strings.push(pick.push(Symbol(0)));
            strings.push(pick);
            strings.reverse();
        }
        let shuffled = rep.open_set_measure(&strings).unwrap();
        prop_assert_eq!(baseline, shuffled);
    }

    /// Restricting any set under any anchor obeys the mass bound.
    #[test]
    fn prop_restriction_bound(
        dist in dist_strategy(3),
        set in antichain_strategy(3),
        anchor in string_strategy(3),
    ) {
        let rep = MeasureRepresentation::from_distribution(dist);
        let report = rep.check_restriction_bound(&set, &anchor).unwrap();
        prop_assert!(report.holds);
        prop_assert!(report.restricted_mass <= report.anchor_mass);
    }

    /// On a finite alphabet, verified cylinder inclusion implies the
    /// measure inequality; refuted inclusion names an escape witness
    /// outside the larger set.
    #[test]
    fn prop_monotonicity_on_verified_inclusions(
        dist in dist_strategy(3),
        e in antichain_strategy(3),
        f in antichain_strategy(3),
    ) {
        let rep = MeasureRepresentation::from_distribution(dist);
        match rep.check_monotonicity(&e, &f) {
            Ok(report) => {
                prop_assert!(report.holds);
                prop_assert!(report.smaller_mass <= report.larger_mass);
            }
            Err(ensembles::Error::InclusionGap { witness }) => {
                // The witness extends some member of e and must escape
                // every member of f.
                let w = ensembles::io::parse_symbol_string(&witness).unwrap();
                prop_assert!(!f.covers(&w));
            }
            Err(other) => return Err(TestCaseError::fail(format!("unexpected error {other}"))),
        }
    }

    /// Sampling is a pure function of the seed.
    #[test]
    fn prop_sampling_is_deterministic(
        dist in dist_strategy(4),
        seed in any::<u64>(),
    ) {
        let mut a = sample_ensemble(dist.clone(), seed);
        let mut b = sample_ensemble(dist, seed);
        let pa = a.take_prefix(64).unwrap();
        let pb = b.take_prefix(64).unwrap();
        prop_assert_eq!(pa, pb);
    }

    /// Transform pipelines restart to the identical sequence.
    #[test]
    fn prop_pipeline_restarts_replay(
        dist in dist_strategy(4),
        seed in any::<u64>(),
    ) {
        let mut s = sample_ensemble(dist, seed)
            .map_stream(RandomVariable::modulo(3))
            .select(SelectionRule::even_length());
        let first = s.take_prefix(20).unwrap();
        let mut again = s.restart();
        prop_assert_eq!(again.take_prefix(20).unwrap(), first);
    }

    /// Conditioned streams only ever emit members of the event.
    #[test]
    fn prop_conditioning_emits_members_only(
        dist in dist_strategy(4),
        seed in any::<u64>(),
        keep in prop::collection::btree_set(0u64..4, 1..4),
    ) {
        let codes: Vec<u64> = keep.into_iter().collect();
        let event = EventPredicate::members(codes.clone());
        // Guard: the event must carry positive mass to sample from.
        let mass: Ratio = codes.iter().map(|&c| dist.mass(Symbol(c))).sum();
        prop_assume!(mass.is_positive());
        let mut s = sample_ensemble(dist, seed).condition(event);
        for _ in 0..40 {
            let got = s.next().unwrap();
            prop_assert!(codes.contains(&got.code()));
        }
    }
}
