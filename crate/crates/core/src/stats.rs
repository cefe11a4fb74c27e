//! Empirical checks tying sampled streams back to their distributions.
//!
//! Everything here is a deterministic function of (stream construction,
//! parameters): draws are consumed from the supplied streams, counted,
//! and compared against exact targets with explicit envelopes, so a
//! verdict is reproducible bit for bit. Frequency checks gate each
//! symbol's deviation at k standard deviations of the binomial; the
//! independence checks compare empirical cell frequencies against the
//! product law in total variation, with a chi-square statistic on the
//! side.
//!
//! The chi-square gate uses the Wilson-Hilferty cube approximation for
//! the quantile, accurate to about a percent over the degrees of freedom
//! used here; the pass margins these checks run at are orders of
//! magnitude wider.

use serde::Serialize;

use crate::error::Error;
use crate::ratio::{format_ratio, to_f64};
use crate::space::{DiscreteDistribution, Symbol};
use crate::transform::{EnsembleStream, EventPredicate};

/// Normal quantile z for 1 - 1e-4, the alpha level of the chi-square
/// gate.
pub const Z_ALPHA: f64 = 3.719;

/// Chi-square quantile by the Wilson-Hilferty approximation: the
/// distribution of (X/df)^(1/3) is close to a normal with mean
/// 1 - 2/(9 df) and variance 2/(9 df).
pub fn chi_square_quantile(df: f64, z: f64) -> f64 {
    let a = 2.0 / (9.0 * df);
    df * (1.0 - a + z * a.sqrt()).powi(3)
}

/// One symbol's frequency verdict.
#[derive(Debug, Clone, Serialize)]
pub struct FrequencyEntry {
    pub symbol: u64,
    /// Exact target mass, as a rational string.
    pub target: String,
    pub count: u64,
    pub frequency: f64,
    /// k_sigma * sqrt(p (1-p) / n).
    pub envelope: f64,
    pub within: bool,
}

/// Outcome of a long-run frequency check.
#[derive(Debug, Clone, Serialize)]
pub struct FrequencyReport {
    pub n: u64,
    pub k_sigma: f64,
    pub entries: Vec<FrequencyEntry>,
    pub pass: bool,
}

/// Draws `n` symbols and checks each listed symbol's empirical frequency
/// against its exact mass under `target`, within `k_sigma` binomial
/// standard deviations.
///
/// A zero-mass symbol gets a zero envelope: a single occurrence fails.
pub fn lln_check(
    stream: &mut EnsembleStream,
    target: &DiscreteDistribution,
    n: u64,
    symbols: &[Symbol],
    k_sigma: f64,
) -> Result<FrequencyReport, Error> {
    let mut counts = vec![0u64; symbols.len()];
    for _ in 0..n {
        let s = stream.next()?;
        if let Some(i) = symbols.iter().position(|&x| x == s) {
            counts[i] += 1;
        }
    }
    let mut entries = Vec::with_capacity(symbols.len());
    let mut pass = true;
    for (i, &s) in symbols.iter().enumerate() {
        let mass = target.mass(s);
        let p = to_f64(&mass);
        let frequency = counts[i] as f64 / n as f64;
        let envelope = k_sigma * (p * (1.0 - p) / n as f64).sqrt();
        let within = (frequency - p).abs() <= envelope;
        pass &= within;
        entries.push(FrequencyEntry {
            symbol: s.code(),
            target: format_ratio(&mass),
            count: counts[i],
            frequency,
            envelope,
            within,
        });
    }
    Ok(FrequencyReport {
        n,
        k_sigma,
        entries,
        pass,
    })
}

/// One symbol's two-sample verdict.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceEntry {
    pub symbol: u64,
    pub freq_a: f64,
    pub freq_b: f64,
    /// k_sigma * sqrt(pooled (1-pooled) * 2/n).
    pub envelope: f64,
    pub within: bool,
}

/// Outcome of comparing two streams symbol by symbol.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub n: u64,
    pub k_sigma: f64,
    pub entries: Vec<EquivalenceEntry>,
    pub pass: bool,
}

/// Draws `n` symbols from each stream and checks that the two empirical
/// frequencies of every listed symbol agree within `k_sigma` pooled
/// standard deviations.
pub fn equivalence_check(
    a: &mut EnsembleStream,
    b: &mut EnsembleStream,
    n: u64,
    symbols: &[Symbol],
    k_sigma: f64,
) -> Result<EquivalenceReport, Error> {
    let mut ca = vec![0u64; symbols.len()];
    let mut cb = vec![0u64; symbols.len()];
    for _ in 0..n {
        let s = a.next()?;
        if let Some(i) = symbols.iter().position(|&x| x == s) {
            ca[i] += 1;
        }
        let s = b.next()?;
        if let Some(i) = symbols.iter().position(|&x| x == s) {
            cb[i] += 1;
        }
    }
    let mut entries = Vec::with_capacity(symbols.len());
    let mut pass = true;
    for (i, &s) in symbols.iter().enumerate() {
        let fa = ca[i] as f64 / n as f64;
        let fb = cb[i] as f64 / n as f64;
        let pooled = (ca[i] + cb[i]) as f64 / (2.0 * n as f64);
        let envelope = k_sigma * (pooled * (1.0 - pooled) * 2.0 / n as f64).sqrt();
        let within = (fa - fb).abs() <= envelope;
        pass &= within;
        entries.push(EquivalenceEntry {
            symbol: s.code(),
            freq_a: fa,
            freq_b: fb,
            envelope,
            within,
        });
    }
    Ok(EquivalenceReport {
        n,
        k_sigma,
        entries,
        pass,
    })
}

/// Outcome of a joint-cell independence check across streams.
#[derive(Debug, Clone, Serialize)]
pub struct IndependenceReport {
    pub n: u64,
    /// Enumeration ranks kept per component; everything further is one
    /// shared overflow cell.
    pub top: u64,
    pub cells: usize,
    /// Total variation between the empirical joint law and the exact
    /// product of the targets.
    pub tv: f64,
    pub tv_threshold: f64,
    pub chi_square: f64,
    pub chi_quantile: f64,
    pub df: usize,
    pub pass: bool,
}

/// Draws `n` joint samples (one symbol from every stream per step), bins
/// each component into its first `top` enumeration ranks plus an
/// overflow cell, and compares the empirical joint distribution against
/// the exact product of the targets: total variation at `tv_threshold`,
/// plus a chi-square gate at significance 1e-4.
///
/// Independent correctly-distributed streams pass both; dependence or a
/// wrong marginal shows up in each.
pub fn independence_check(
    streams: &mut [EnsembleStream],
    targets: &[DiscreteDistribution],
    n: u64,
    top: u64,
    tv_threshold: f64,
) -> Result<IndependenceReport, Error> {
    if streams.is_empty() || streams.len() != targets.len() {
        return Err(Error::Config(format!(
            "independence check needs matching streams and targets, got {} and {}",
            streams.len(),
            targets.len()
        )));
    }
    let m = streams.len();
    let base = (top + 1) as usize;
    let cells = base
        .checked_pow(u32::try_from(m).expect("too many streams"))
        .filter(|&c| c <= (1 << 24))
        .ok_or_else(|| Error::TooManyCells {
            m,
            cells: format!("{base}^{m}"),
            max: 1 << 24,
        })?;
    // Per-component cell probabilities: exact masses of the first `top`
    // symbols, and whatever is left for the overflow cell.
    let mut probs: Vec<Vec<f64>> = Vec::with_capacity(m);
    for t in targets {
        let mut row = Vec::with_capacity(base);
        let mut covered = crate::ratio::Ratio::new(0.into(), 1.into());
        for r in 0..top {
            match t.alphabet().try_enumerate(r) {
                Some(s) => {
                    let mass = t.mass(s);
                    covered += &mass;
                    row.push(to_f64(&mass));
                }
                None => row.push(0.0),
            }
        }
        let leftover = crate::ratio::Ratio::new(1.into(), 1.into()) - covered;
        row.push(to_f64(&leftover).max(0.0));
        probs.push(row);
    }
    // Count joint cells.
    let mut counts = vec![0u64; cells];
    for _ in 0..n {
        let mut index = 0usize;
        for (i, stream) in streams.iter_mut().enumerate() {
            let s = stream.next()?;
            let rank = targets[i].alphabet().index_of(s);
            let cell = match rank {
                Some(r) if r < top => r as usize,
                _ => top as usize,
            };
            index = index * base + cell;
        }
        counts[index] += 1;
    }
    // Compare against the product law.
    let mut tv = 0.0f64;
    let mut chi = 0.0f64;
    let mut df = 0usize;
    for (cell, &count) in counts.iter().enumerate() {
        let mut expected = 1.0f64;
        let mut rest = cell;
        for i in (0..m).rev() {
            expected *= probs[i][rest % base];
            rest /= base;
        }
        let emp = count as f64 / n as f64;
        tv += (emp - expected).abs();
        if expected > 0.0 {
            let e = expected * n as f64;
            chi += (count as f64 - e) * (count as f64 - e) / e;
            df += 1;
        } else if count > 0 {
            chi = f64::INFINITY;
        }
    }
    tv /= 2.0;
    let df = df.saturating_sub(1);
    let chi_quantile = chi_square_quantile(df.max(1) as f64, Z_ALPHA);
    let pass = tv <= tv_threshold && chi <= chi_quantile;
    Ok(IndependenceReport {
        n,
        top,
        cells,
        tv,
        tv_threshold,
        chi_square: chi,
        chi_quantile,
        df,
        pass,
    })
}

/// Outcome of an event-level independence check within one stream.
#[derive(Debug, Clone, Serialize)]
pub struct EventIndependenceReport {
    pub n: u64,
    pub events: Vec<String>,
    /// Total variation between the empirical joint law of the indicator
    /// vector and the product of its empirical marginals.
    pub tv: f64,
    pub tv_threshold: f64,
    pub pass: bool,
}

/// Draws `n` symbols and tests whether the listed events look
/// independent: the empirical joint law of the indicator vector is
/// compared in total variation against the product of its own empirical
/// marginals, so only the dependence structure is being judged, not the
/// marginals themselves. At most 16 events (65536 cells).
pub fn event_independence_check(
    stream: &mut EnsembleStream,
    events: &[EventPredicate],
    n: u64,
    tv_threshold: f64,
) -> Result<EventIndependenceReport, Error> {
    let m = events.len();
    if m == 0 || m > 16 {
        return Err(Error::TooManyCells {
            m,
            cells: format!("2^{m}"),
            max: 1 << 16,
        });
    }
    let cells = 1usize << m;
    let mut counts = vec![0u64; cells];
    let mut marginals = vec![0u64; m];
    for _ in 0..n {
        let s = stream.next()?;
        let mut mask = 0usize;
        for (i, ev) in events.iter().enumerate() {
            if ev.contains(s) {
                mask |= 1 << i;
                marginals[i] += 1;
            }
        }
        counts[mask] += 1;
    }
    let mut tv = 0.0f64;
    for (mask, &count) in counts.iter().enumerate() {
        let emp = count as f64 / n as f64;
        let mut product = 1.0f64;
        for (i, &mc) in marginals.iter().enumerate() {
            let p = mc as f64 / n as f64;
            product *= if mask & (1 << i) != 0 { p } else { 1.0 - p };
        }
        tv += (emp - product).abs();
    }
    tv /= 2.0;
    let pass = tv <= tv_threshold;
    Ok(EventIndependenceReport {
        n,
        events: events.iter().map(|e| e.name()).collect(),
        tv,
        tv_threshold,
        pass,
    })
}
