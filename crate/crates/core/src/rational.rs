//! Rational number helpers shared across the crate.
//!
//! All exact arithmetic uses [`num_rational::BigRational`]. Values cross the
//! serialization boundary as `"num/den"` strings so no precision is lost.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

use crate::error::Error;

/// Exact rational scalar used throughout the deterministic core.
pub type Rat = BigRational;

/// Builds a rational from an integer pair. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Builds a rational from an integer.
pub fn rint(num: i64) -> Rat {
    Rat::from_integer(BigInt::from(num))
}

/// Converts to `f64`, saturating on overflow. Exact rationals in this crate
/// stay far inside `f64` range, so saturation never triggers in practice.
pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(if x.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

/// Parses `"num/den"`, `"num"`, or a decimal literal such as `"0.25"`.
pub fn parse_rat(s: &str) -> Result<Rat, Error> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty rational literal".into()));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad numerator in {s:?}")))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad denominator in {s:?}")))?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let sign = if int.trim_start().starts_with('-') { -1 } else { 1 };
        let i: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse()
                .map_err(|_| Error::Parse(format!("bad decimal in {s:?}")))?
        };
        if frac.is_empty() {
            return Ok(Rat::from_integer(i));
        }
        let f: BigInt = frac
            .parse()
            .map_err(|_| Error::Parse(format!("bad decimal in {s:?}")))?;
        if f.is_negative() {
            return Err(Error::Parse(format!("bad decimal in {s:?}")));
        }
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part = Rat::new(f, scale);
        let int_part = Rat::from_integer(i);
        return Ok(if sign < 0 { int_part - frac_part } else { int_part + frac_part });
    }
    let n: BigInt = s
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational literal {s:?}")))?;
    Ok(Rat::from_integer(n))
}

/// Formats as `"num/den"`, or `"num"` when the denominator is one.
pub fn format_rat(x: &Rat) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Extended rational with both infinities. Ordered as expected:
/// `NegInf < Fin(_) < PosInf`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtRat {
    NegInf,
    Fin(Rat),
    PosInf,
}

impl ExtRat {
    pub fn fin(x: Rat) -> Self {
        ExtRat::Fin(x)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtRat::Fin(_))
    }

    /// Finite payload, if any.
    pub fn finite(&self) -> Option<&Rat> {
        match self {
            ExtRat::Fin(x) => Some(x),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtRat::NegInf => f64::NEG_INFINITY,
            ExtRat::Fin(x) => to_f64(x),
            ExtRat::PosInf => f64::INFINITY,
        }
    }
}

impl PartialOrd for ExtRat {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtRat {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use ExtRat::*;
        use std::cmp::Ordering::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Equal,
            (NegInf, _) | (_, PosInf) => Less,
            (PosInf, _) | (_, NegInf) => Greater,
            (Fin(a), Fin(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ExtRat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRat::NegInf => write!(f, "-inf"),
            ExtRat::Fin(x) => write!(f, "{}", format_rat(x)),
            ExtRat::PosInf => write!(f, "inf"),
        }
    }
}

impl From<Rat> for ExtRat {
    fn from(x: Rat) -> Self {
        ExtRat::Fin(x)
    }
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// accepted only when it lands within `tol` of `x`. Used to snap numeric
/// solver output back onto exact arithmetic.
pub fn round_to_rational(x: f64, max_den: u64, tol: f64) -> Option<Rat> {
    if !x.is_finite() || max_den == 0 {
        return None;
    }
    let neg = x < 0.0;
    let ax = x.abs();
    let (num, den) = best_bounded_fraction(ax, max_den);
    let cand = num as f64 / den as f64;
    if (cand - ax).abs() > tol {
        return None;
    }
    let mut r = Rat::new(BigInt::from(num), BigInt::from(den));
    if neg {
        r = -r;
    }
    Some(r)
}

/// Continued-fraction best approximation with bounded denominator.
fn best_bounded_fraction(x: f64, max_den: u64) -> (u128, u64) {
    // Convergents h/k with h_{-1}=1, k_{-1}=0, h_0=a0, k_0=1.
    let (mut h_prev, mut k_prev): (u128, u128) = (1, 0);
    let mut a0 = x.floor();
    let (mut h, mut k): (u128, u128) = (a0 as u128, 1);
    let mut frac = x - a0;
    for _ in 0..64 {
        if frac.abs() < 1e-15 {
            break;
        }
        let inv = 1.0 / frac;
        a0 = inv.floor();
        frac = inv - a0;
        let a = a0 as u128;
        let k_next = a.saturating_mul(k).saturating_add(k_prev);
        if k_next > max_den as u128 {
            // Largest semiconvergent still within the bound.
            let room = (max_den as u128 - k_prev) / k;
            let h_semi = room * h + h_prev;
            let k_semi = room * k + k_prev;
            if k_semi > 0 {
                let full = h as f64 / k as f64;
                let semi = h_semi as f64 / k_semi as f64;
                if (semi - x).abs() < (full - x).abs() {
                    return (h_semi, k_semi as u64);
                }
            }
            return (h, k as u64);
        }
        let h_next = a.saturating_mul(h).saturating_add(h_prev);
        h_prev = h;
        k_prev = k;
        h = h_next;
        k = k_next;
    }
    (h, k as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip() {
        assert_eq!(parse_rat("3/4").unwrap(), rat(3, 4));
        assert_eq!(parse_rat("-3/4").unwrap(), rat(-3, 4));
        assert_eq!(parse_rat("7").unwrap(), rint(7));
        assert_eq!(parse_rat("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rat("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rat("2.").unwrap(), rint(2));
        assert_eq!(format_rat(&rat(3, 4)), "3/4");
        assert_eq!(format_rat(&rint(5)), "5");
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
    }

    #[test]
    fn ext_ordering() {
        assert!(ExtRat::NegInf < ExtRat::fin(rint(-100)));
        assert!(ExtRat::fin(rint(100)) < ExtRat::PosInf);
        assert!(ExtRat::fin(rat(1, 3)) < ExtRat::fin(rat(1, 2)));
        assert_eq!(ExtRat::PosInf, ExtRat::PosInf);
    }

    #[test]
    fn rounding_snaps_to_simple_fractions() {
        assert_eq!(round_to_rational(0.5, 100, 1e-9), Some(rat(1, 2)));
        assert_eq!(round_to_rational(1.0 / 3.0, 100, 1e-9), Some(rat(1, 3)));
        assert_eq!(round_to_rational(0.6667, 100, 1e-3), Some(rat(2, 3)));
        // Outside tolerance: no snap.
        assert_eq!(round_to_rational(0.6667, 100, 1e-9), None);
        // Denominator bound respected.
        let r = round_to_rational(std::f64::consts::PI, 1000, 1.0).unwrap();
        assert!(*r.denom() <= BigInt::from(1000));
    }

    #[test]
    fn rounding_handles_integers_and_negatives() {
        assert_eq!(round_to_rational(2.0, 10, 1e-12), Some(rint(2)));
        assert_eq!(round_to_rational(-0.25, 10, 1e-12), Some(rat(-1, 4)));
        assert_eq!(round_to_rational(f64::NAN, 10, 1.0), None);
    }
}
