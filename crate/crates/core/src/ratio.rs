//! Parsing, formatting and conversion helpers for exact rational arithmetic.
//!
//! All interval-map arithmetic in this crate is done over `BigRational` so
//! that greedy digit extraction and cylinder cut points are never decided by
//! floating-point rounding. Decimal input strings are converted to the exact
//! rational they denote.

use num_bigint::{BigInt, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseRatioError {
    #[error("empty numeric string")]
    Empty,
    #[error("malformed numeric string `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses `"p/q"`, an integer, or a decimal string into an exact rational.
pub fn parse_ratio(s: &str) -> Result<BigRational, ParseRatioError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(ParseRatioError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num
            .trim()
            .parse()
            .map_err(|_| ParseRatioError::Malformed(s.to_owned()))?;
        let den: BigInt = den
            .trim()
            .parse()
            .map_err(|_| ParseRatioError::Malformed(s.to_owned()))?;
        if den.is_zero() {
            return Err(ParseRatioError::ZeroDenominator(s.to_owned()));
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let neg = int_part.starts_with('-');
        let int_digits = int_part.strip_prefix(['-', '+']).unwrap_or(int_part);
        if !int_digits.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
            || frac_part.is_empty()
        {
            return Err(ParseRatioError::Malformed(s.to_owned()));
        }
        let int: BigInt = if int_digits.is_empty() {
            BigInt::zero()
        } else {
            int_digits
                .parse()
                .map_err(|_| ParseRatioError::Malformed(s.to_owned()))?
        };
        let frac: BigInt = frac_part
            .parse()
            .map_err(|_| ParseRatioError::Malformed(s.to_owned()))?;
        let scale = BigInt::from(10u32).pow(frac_part.len() as u32);
        let mut value = BigRational::from(int) + BigRational::new(frac, scale);
        if neg {
            value = -value;
        }
        return Ok(value);
    }
    let int: BigInt = s
        .parse()
        .map_err(|_| ParseRatioError::Malformed(s.to_owned()))?;
    Ok(BigRational::from(int))
}

/// Formats a rational as `p/q` (or just `p` when the denominator is one).
pub fn format_ratio(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Lossy conversion to `f64`, valid far beyond the `i64` range.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Extremely large numerator/denominator: fall back to a scaled division.
        let num = r.numer();
        let den = r.denom();
        let shift = (num.bits() as i64 - den.bits() as i64).clamp(-1000, 1000);
        let scaled = if shift > 0 {
            BigRational::new(num.clone(), den.clone() << shift as usize)
                .to_f64()
                .unwrap_or(f64::NAN)
                * 2f64.powi(shift as i32)
        } else {
            BigRational::new(num.clone() << (-shift) as usize, den.clone())
                .to_f64()
                .unwrap_or(f64::NAN)
                * 2f64.powi(shift as i32)
        };
        scaled
    })
}

/// Floor of a rational as `BigInt`.
pub fn ratio_floor(r: &BigRational) -> BigInt {
    r.floor().to_integer()
}

/// Floor as `u32`, for digit extraction of values known to be small.
pub fn ratio_floor_u32(r: &BigRational) -> Option<u32> {
    let f = ratio_floor(r);
    if f.sign() == Sign::Minus {
        return None;
    }
    f.to_u32()
}

pub fn ratio_is_negative(r: &BigRational) -> bool {
    r.is_negative()
}
