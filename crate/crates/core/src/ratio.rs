//! Exact rational arithmetic helpers.
//!
//! All masses in this crate are [`BigRational`](num::BigRational) values.
//! This module adds the few operations the rest of the crate needs beyond
//! what `num` provides: parsing and formatting in the `num/den` wire form,
//! nonnegative integer powers, and conversion to `f64` for the statistical
//! layer.

use num::bigint::BigInt;
use num::{BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Exact rational number, arbitrary precision.
pub type Ratio = BigRational;

/// Builds `n / d` from machine integers. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Ratio {
    Ratio::new(BigInt::from(n), BigInt::from(d))
}

/// `r^k` for a nonnegative exponent.
pub fn pow(r: &Ratio, k: u32) -> Ratio {
    if k == 0 {
        return Ratio::one();
    }
    Ratio::new(r.numer().pow(k), r.denom().pow(k))
}

/// `2^-k` as an exact rational.
pub fn two_pow_neg(k: u32) -> Ratio {
    Ratio::new(BigInt::one(), BigInt::one() << k)
}

/// Parses the `num/den` wire form; a bare integer means denominator 1.
pub fn parse_ratio(s: &str) -> Result<Ratio, Error> {
    let s = s.trim();
    let mk_err = || Error::ParseRatio(s.to_string());
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = n.trim().parse().map_err(|_| mk_err())?;
    let d: BigInt = d.trim().parse().map_err(|_| mk_err())?;
    if d.is_zero() {
        return Err(mk_err());
    }
    Ok(Ratio::new(n, d))
}

/// Formats in the `num/den` wire form, omitting `/1`.
pub fn format_ratio(r: &Ratio) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Nearest `f64`; values far outside the double range saturate.
pub fn to_f64(r: &Ratio) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        for s in ["0", "1", "3/4", "-7/16", "12345/67890"] {
            let r = parse_ratio(s).unwrap();
            let back = parse_ratio(&format_ratio(&r)).unwrap();
            assert_eq!(r, back);
        }
        assert_eq!(format_ratio(&rat(2, 4)), "1/2");
        assert_eq!(format_ratio(&rat(3, 1)), "3");
    }

    #[test]
    fn parse_rejects_garbage() {
        for s in ["", "a/b", "1/0", "1/2/3"] {
            assert!(parse_ratio(s).is_err(), "accepted {s:?}");
        }
    }

    #[test]
    fn powers() {
        assert_eq!(pow(&rat(1, 2), 0), rat(1, 1));
        assert_eq!(pow(&rat(2, 3), 3), rat(8, 27));
        assert_eq!(two_pow_neg(4), rat(1, 16));
    }
}
