//! Finite digit words with an implicit zero tail.
//!
//! A `Word` stores the first `len` digits of a point's expansion; every digit
//! beyond the stored prefix is zero. Points handled this way are exactly the
//! rationals whose expansion terminates, which makes both the shift map and
//! the successor map exact integer operations.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// A finite digit sequence `d_1, d_2, ..., d_L` (1-based in the math,
/// 0-based in storage) with implicit zero tail.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Word {
    digits: Vec<u32>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseWordError {
    #[error("malformed digit `{0}`")]
    BadDigit(String),
}

impl Word {
    pub fn new(digits: Vec<u32>) -> Self {
        Word { digits }
    }

    pub fn empty() -> Self {
        Word { digits: Vec::new() }
    }

    /// All-zero word of the given length.
    pub fn zeros(len: usize) -> Self {
        Word {
            digits: vec![0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn digits_mut(&mut self) -> &mut Vec<u32> {
        &mut self.digits
    }

    pub fn into_digits(self) -> Vec<u32> {
        self.digits
    }

    /// Digit `d_k`, 1-based; zero beyond the stored prefix.
    pub fn digit(&self, k: usize) -> u32 {
        debug_assert!(k >= 1);
        self.digits.get(k - 1).copied().unwrap_or(0)
    }

    /// 0-based digit access with implicit zero tail.
    pub fn digit0(&self, i: usize) -> u32 {
        self.digits.get(i).copied().unwrap_or(0)
    }

    /// True if every stored digit is zero (the point 0).
    pub fn is_zero(&self) -> bool {
        self.digits.iter().all(|&d| d == 0)
    }

    /// The word of `T^k x`: drop the first `k` digits.
    pub fn shift(&self, k: usize) -> Word {
        if k >= self.digits.len() {
            Word::empty()
        } else {
            Word::new(self.digits[k..].to_vec())
        }
    }

    /// Index of the last nonzero digit plus one (effective length).
    pub fn trimmed_len(&self) -> usize {
        let mut n = self.digits.len();
        while n > 0 && self.digits[n - 1] == 0 {
            n -= 1;
        }
        n
    }

    /// Comparison in the reverse lexicographic order: compare at the *last*
    /// index where the (zero-padded) sequences differ.
    pub fn cmp_rev(&self, other: &Word) -> Ordering {
        let n = self.digits.len().max(other.digits.len());
        for i in (0..n).rev() {
            let a = self.digit0(i);
            let b = other.digit0(i);
            if a != b {
                return a.cmp(&b);
            }
        }
        Ordering::Equal
    }

    /// Equality as points of `[0,1)` (ignores trailing zeros).
    pub fn eq_point(&self, other: &Word) -> bool {
        self.cmp_rev(other) == Ordering::Equal
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for d in &self.digits {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
            first = false;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = ParseWordError;

    /// Parses the comma-separated serialization, e.g. `1,0,1,1`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Word::empty());
        }
        let digits = s
            .split(',')
            .map(|part| {
                part.trim()
                    .parse::<u32>()
                    .map_err(|_| ParseWordError::BadDigit(part.to_owned()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Word::new(digits))
    }
}

impl From<Vec<u32>> for Word {
    fn from(digits: Vec<u32>) -> Self {
        Word::new(digits)
    }
}

/// Least 1-based index `N` such that the two words agree at every position
/// `>= N` (both padded with zeros). Identical words give 1.
pub fn agree_index(a: &Word, b: &Word) -> usize {
    let n = a.len().max(b.len());
    for i in (0..n).rev() {
        if a.digit0(i) != b.digit0(i) {
            return i + 2;
        }
    }
    1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        let w: Word = "1,0,1,1".parse().unwrap();
        assert_eq!(w.digits(), &[1, 0, 1, 1]);
        assert_eq!(w.to_string(), "1,0,1,1");
        assert_eq!("".parse::<Word>().unwrap(), Word::empty());
        assert!("1,x".parse::<Word>().is_err());
    }

    #[test]
    fn rev_lex_compares_at_last_difference() {
        let a: Word = "1".parse().unwrap();
        let b: Word = "0,1".parse().unwrap();
        // 1 = .d(1), 0,1 = .d(01); they differ last at position 2.
        assert_eq!(a.cmp_rev(&b), Ordering::Less);
        assert_eq!(b.cmp_rev(&a), Ordering::Greater);
        let c: Word = "1,0,0".parse().unwrap();
        assert_eq!(a.cmp_rev(&c), Ordering::Equal);
    }

    #[test]
    fn agree_index_examples() {
        let x: Word = "1,0,1,1".parse().unwrap();
        assert_eq!(agree_index(&x, &x), 1);
        let y: Word = "2,0,1,1".parse().unwrap();
        assert_eq!(agree_index(&x, &y), 2);
        let z: Word = "0,1,1,1".parse().unwrap();
        assert_eq!(agree_index(&y, &z), 3);
        // Trailing zeros are tail, not content.
        let p: Word = "1,0".parse().unwrap();
        let q: Word = "1".parse().unwrap();
        assert_eq!(agree_index(&p, &q), 1);
    }
}
