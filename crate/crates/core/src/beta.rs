//! The base `beta`, greedy expansions, admissibility, and cylinder geometry.
//!
//! `Beta` holds the expansion of one `d(1,beta)` to a fixed working depth
//! plus the exact orbit tails `T^m(1)`. Admissibility of a digit word is the
//! strict lexicographic condition on every suffix; comparisons that would
//! need digits of `d(1,beta)` beyond the working depth fail loudly with
//! `DepthExceeded` instead of guessing.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use thiserror::Error;

use crate::ratio::{format_ratio, ratio_floor_u32, ratio_to_f64};
use crate::word::Word;

/// Default number of digits of `d(1,beta)` computed at construction.
pub const DEFAULT_ONE_DEPTH: usize = 4096;

/// Guard digits kept beyond a requested working depth.
pub const GUARD_DIGITS: usize = 64;

/// Cap on `beta^k` cylinder/preimage enumerations.
pub const ENUMERATION_CAP: u128 = 20_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BetaError {
    #[error("beta must be a rational > 1")]
    InvalidBeta,
    #[error("point must lie in [0,1)")]
    InvalidPoint,
    #[error("floor computation undecidable at step {step}: error radius too large")]
    AmbiguousBoundary { step: usize },
    #[error("comparison ran past the {depth} computed digits of d(1,beta)")]
    DepthExceeded { depth: usize },
    #[error("enumeration too large: {0}")]
    EnumerationTooLarge(String),
}

/// The transformation base together with its expansion-of-one data.
#[derive(Debug, Clone)]
pub struct Beta {
    value: BigRational,
    value_f64: f64,
    digit_max: u32,
    /// Digits of d(1,beta), 0-based storage (entry 0 is d_1 = floor(beta)).
    one_digits: Vec<u32>,
    /// Exact orbit of 1: entry m is T^m(1), with entry 0 equal to 1.
    one_tails: Vec<BigRational>,
    one_tails_f64: Vec<f64>,
    /// next_nonzero[i] = least j >= i with one_digits[j] > 0 (= depth if none).
    next_nonzero: Vec<u32>,
    /// Detected tail period of the computed prefix of d(1,beta), if any.
    periodicity_warning: Option<usize>,
}

impl Beta {
    pub fn new(value: BigRational) -> Result<Self, BetaError> {
        Self::with_depth(value, DEFAULT_ONE_DEPTH)
    }

    /// Builds the base with `depth` digits of `d(1,beta)` precomputed.
    pub fn with_depth(value: BigRational, depth: usize) -> Result<Self, BetaError> {
        if value <= BigRational::one() {
            return Err(BetaError::InvalidBeta);
        }
        let digit_max = ratio_floor_u32(&value).ok_or(BetaError::InvalidBeta)?;
        let mut one_digits = Vec::with_capacity(depth);
        let mut one_tails = Vec::with_capacity(depth + 1);
        let mut one_tails_f64 = Vec::with_capacity(depth + 1);
        one_tails.push(BigRational::one());
        one_tails_f64.push(1.0);
        // T(1) := beta - floor(beta); afterwards the ordinary greedy orbit.
        let mut t = &value - BigRational::from_integer(digit_max.into());
        one_digits.push(digit_max);
        for _ in 1..depth {
            one_tails_f64.push(ratio_to_f64(&t));
            one_tails.push(t.clone());
            let bt = &t * &value;
            let d = ratio_floor_u32(&bt).ok_or(BetaError::InvalidBeta)?;
            one_digits.push(d);
            t = bt - BigRational::from_integer(d.into());
        }
        one_tails_f64.push(ratio_to_f64(&t));
        one_tails.push(t);

        let mut next_nonzero = vec![depth as u32; depth + 1];
        for i in (0..depth).rev() {
            next_nonzero[i] = if one_digits[i] > 0 {
                i as u32
            } else {
                next_nonzero[i + 1]
            };
        }

        let periodicity_warning = detect_tail_period(&one_digits);
        Ok(Beta {
            value_f64: ratio_to_f64(&value),
            value,
            digit_max,
            one_digits,
            one_tails,
            one_tails_f64,
            next_nonzero,
            periodicity_warning,
        })
    }

    pub fn from_str_depth(s: &str, depth: usize) -> Result<Self, BetaError> {
        let value = crate::ratio::parse_ratio(s).map_err(|_| BetaError::InvalidBeta)?;
        Self::with_depth(value, depth)
    }

    pub fn value(&self) -> &BigRational {
        &self.value
    }

    pub fn value_f64(&self) -> f64 {
        self.value_f64
    }

    pub fn digit_max(&self) -> u32 {
        self.digit_max
    }

    pub fn one_depth(&self) -> usize {
        self.one_digits.len()
    }

    /// Digit `d_k(1,beta)`, 1-based.
    pub fn one_digit(&self, k: usize) -> Result<u32, BetaError> {
        self.one_digits
            .get(k - 1)
            .copied()
            .ok_or(BetaError::DepthExceeded {
                depth: self.one_digits.len(),
            })
    }

    pub fn one_digits(&self) -> &[u32] {
        &self.one_digits
    }

    /// First `depth` digits of the expansion of 1.
    pub fn one_word(&self, depth: usize) -> Result<Word, BetaError> {
        if depth > self.one_digits.len() {
            return Err(BetaError::DepthExceeded {
                depth: self.one_digits.len(),
            });
        }
        Ok(Word::new(self.one_digits[..depth].to_vec()))
    }

    /// Exact `T^m(1)`; index 0 gives 1.
    pub fn one_tail(&self, m: usize) -> Result<&BigRational, BetaError> {
        self.one_tails.get(m).ok_or(BetaError::DepthExceeded {
            depth: self.one_digits.len(),
        })
    }

    pub fn one_tail_f64(&self, m: usize) -> Result<f64, BetaError> {
        self.one_tails_f64
            .get(m)
            .copied()
            .ok_or(BetaError::DepthExceeded {
                depth: self.one_digits.len(),
            })
    }

    pub fn periodicity_warning(&self) -> Option<usize> {
        self.periodicity_warning
    }

    /// Is `(first, rest..., 0, 0, ...)` strictly below `d(1,beta)` in
    /// lexicographic order?
    pub fn word_below_one(&self, first: u32, rest: &[u32]) -> Result<bool, BetaError> {
        let one = &self.one_digits;
        let d1 = one[0];
        if first != d1 {
            return Ok(first < d1);
        }
        let mut i = 1usize;
        for &w in rest {
            if i >= one.len() {
                return Err(BetaError::DepthExceeded { depth: one.len() });
            }
            let d = one[i];
            if w != d {
                return Ok(w < d);
            }
            i += 1;
        }
        // Zero tail from here on: strictly below iff d(1,beta) still has a
        // nonzero digit somewhere at or past position i.
        if (self.next_nonzero[i] as usize) < one.len() {
            Ok(true)
        } else {
            Err(BetaError::DepthExceeded { depth: one.len() })
        }
    }

    /// Would incrementing the digit at 0-based `pos` (implicit zero beyond
    /// the stored prefix) leave the suffix starting there admissible?
    pub fn increment_ok(&self, digits: &[u32], pos: usize) -> Result<bool, BetaError> {
        let cur = digits.get(pos).copied().unwrap_or(0);
        let rest = if pos + 1 < digits.len() {
            &digits[pos + 1..]
        } else {
            &[]
        };
        self.word_below_one(cur + 1, rest)
    }

    /// Strict Parry admissibility of `w` with zero tail: every suffix is
    /// lexicographically below `d(1,beta)`.
    pub fn is_admissible(&self, w: &Word) -> Result<bool, BetaError> {
        let digits = w.digits();
        for j in 0..digits.len() {
            if !self.word_below_one(digits[j], &digits[j + 1..])? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Greedy digits of `x in [0,1)`; returns the word and the exact
    /// residual `T^depth(x)` for orbit continuation.
    pub fn expand(&self, x: &BigRational, depth: usize) -> Result<(Word, BigRational), BetaError> {
        if x.is_negative() || *x >= BigRational::one() {
            return Err(BetaError::InvalidPoint);
        }
        let mut digits = Vec::with_capacity(depth);
        let mut t = x.clone();
        for _ in 0..depth {
            let bt = &t * &self.value;
            let d = ratio_floor_u32(&bt).ok_or(BetaError::InvalidPoint)?;
            digits.push(d);
            t = bt - BigRational::from_integer(d.into());
        }
        Ok((Word::new(digits), t))
    }

    /// Greedy digits of a point known only up to an error radius. Each floor
    /// must be certified; otherwise the caller has to raise precision.
    pub fn expand_with_radius(
        &self,
        x: &BigRational,
        radius: &BigRational,
        depth: usize,
    ) -> Result<(Word, BigRational), BetaError> {
        if x.is_negative() || *x >= BigRational::one() {
            return Err(BetaError::InvalidPoint);
        }
        let mut digits = Vec::with_capacity(depth);
        let mut t = x.clone();
        let mut r = radius.clone();
        for step in 0..depth {
            let lo = (&t - &r) * &self.value;
            let hi = (&t + &r) * &self.value;
            let d_lo = lo.floor().to_integer().to_i64().unwrap_or(-1).max(0) as u32;
            let d_hi = ratio_floor_u32(&hi).ok_or(BetaError::InvalidPoint)?;
            if d_lo != d_hi {
                return Err(BetaError::AmbiguousBoundary { step });
            }
            digits.push(d_hi);
            t = &t * &self.value - BigRational::from_integer(d_hi.into());
            r *= &self.value;
        }
        Ok((Word::new(digits), t))
    }

    /// Exact value of a digit word: sum of `d_k beta^{-k}`.
    pub fn value_of(&self, w: &Word) -> BigRational {
        let mut v = BigRational::zero();
        for &d in w.digits().iter().rev() {
            v = (v + BigRational::from_integer(d.into())) / &self.value;
        }
        v
    }

    /// Floating-point value of a digit word (Horner from the right).
    pub fn value_f64_of(&self, w: &Word) -> f64 {
        self.value_f64_of_slice(w.digits())
    }

    pub fn value_f64_of_slice(&self, digits: &[u32]) -> f64 {
        let mut v = 0.0f64;
        for &d in digits.iter().rev() {
            v = (v + d as f64) / self.value_f64;
        }
        v
    }

    /// Uniform sample of the first `depth` digits of a Lebesgue-random point,
    /// realized as the exact expansion of a random rational with denominator
    /// `2^128`.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, depth: usize, rng: &mut R) -> Word {
        let mut bytes = [0u8; 16];
        rng.fill_bytes(&mut bytes);
        let numer = BigUint::from_bytes_le(&bytes);
        let denom: BigUint = BigUint::one() << 128u32;
        let x = BigRational::new(numer.into(), denom.into());
        let (word, _) = self.expand(&x, depth).expect("uniform sample in [0,1)");
        word
    }

    /// Uniform digit sampling via the cylinder-state chain: conditioned on
    /// the digits so far ending in automaton state m, the orbit point is
    /// uniform on [0, T^m(1)). Cheap at any depth.
    pub fn sample_uniform_markov<R: Rng + ?Sized>(
        &self,
        depth: usize,
        rng: &mut R,
    ) -> Result<Word, BetaError> {
        let mut digits = Vec::with_capacity(depth);
        let mut state = 0usize;
        for _ in 0..depth {
            if state + 1 >= self.one_tails_f64.len() {
                return Err(BetaError::DepthExceeded {
                    depth: self.one_digits.len(),
                });
            }
            let sup = self.one_tails_f64[state];
            let bound = self.one_digits[state];
            let u = rng.gen::<f64>() * sup;
            let d = ((self.value_f64 * u) as u32).min(bound);
            digits.push(d);
            state = if d == bound { state + 1 } else { 0 };
        }
        Ok(Word::new(digits))
    }

    /// Automaton state reached after reading `w` from state 0, or `None`
    /// when a transition is forbidden (dead prefix).
    pub fn prefix_state(&self, w: &[u32]) -> Result<Option<usize>, BetaError> {
        let mut state = 0usize;
        for &d in w {
            match self.transition(state, d)? {
                Some(s) => state = s,
                None => return Ok(None),
            }
        }
        Ok(Some(state))
    }

    /// One automaton step: from a state matching the first `state` digits of
    /// `d(1,beta)`, reading `digit`.
    pub fn transition(&self, state: usize, digit: u32) -> Result<Option<usize>, BetaError> {
        let bound = *self
            .one_digits
            .get(state)
            .ok_or(BetaError::DepthExceeded {
                depth: self.one_digits.len(),
            })?;
        Ok(if digit < bound {
            Some(0)
        } else if digit == bound {
            Some(state + 1)
        } else {
            None
        })
    }

    /// Whether appending an all-zero tail from `state` stays admissible;
    /// errors out if this cannot be decided within the working depth.
    pub fn zero_tail_ok(&self, state: usize) -> Result<(), BetaError> {
        if (self.next_nonzero[state.min(self.next_nonzero.len() - 1)] as usize)
            < self.one_digits.len()
        {
            Ok(())
        } else {
            Err(BetaError::DepthExceeded {
                depth: self.one_digits.len(),
            })
        }
    }

    /// The cylinder set of a digit prefix: its interval, exact measure and
    /// fullness. `None` when no point starts with the prefix.
    pub fn cylinder(&self, w: &Word) -> Result<Option<Cylinder>, BetaError> {
        let state = match self.prefix_state(w.digits())? {
            Some(s) => s,
            None => return Ok(None),
        };
        let sup = self.one_tail(state)?.clone();
        let rank = w.len() as i32;
        let measure = sup * self.value.pow(-rank);
        let lo = self.value_of(w);
        Ok(Some(Cylinder {
            word: w.clone(),
            lo,
            measure,
            is_full: state == 0,
            end_state: state,
        }))
    }

    /// Maximal disjoint family of full cylinders of ranks `k` and `k+1`
    /// (rank-(k+1) cylinders are taken inside non-full rank-k ones), plus
    /// the exact Lebesgue measure left uncovered.
    pub fn full_cylinder_cover(&self, k: usize) -> Result<CoverReport, BetaError> {
        if k == 0 {
            return Err(BetaError::EnumerationTooLarge("rank must be >= 1".into()));
        }
        let est = (self.value_f64).powi(k as i32 + 1);
        if !est.is_finite() || est > ENUMERATION_CAP as f64 {
            return Err(BetaError::EnumerationTooLarge(format!(
                "beta^{} cylinders",
                k + 1
            )));
        }
        let mut full_rank_k = Vec::new();
        let mut full_rank_k1 = Vec::new();
        let mut covered = BigRational::zero();
        let mut word = Vec::with_capacity(k + 1);
        self.cover_rec(
            0,
            k,
            &mut word,
            &mut full_rank_k,
            &mut full_rank_k1,
            &mut covered,
        )?;
        let uncovered = BigRational::one() - covered;
        Ok(CoverReport {
            rank: k,
            full_rank_k,
            full_rank_k1,
            uncovered,
        })
    }

    fn cover_rec(
        &self,
        state: usize,
        remaining: usize,
        word: &mut Vec<u32>,
        full_k: &mut Vec<Cylinder>,
        full_k1: &mut Vec<Cylinder>,
        covered: &mut BigRational,
    ) -> Result<(), BetaError> {
        if remaining == 0 {
            if state == 0 {
                // Full rank-k cylinder.
                let cyl = self.make_cylinder(word, state)?;
                *covered += cyl.measure.clone();
                full_k.push(cyl);
            } else if !self.one_tail(state)?.is_zero() {
                // Non-full: collect its full rank-(k+1) children.
                let bound = self.one_digits[state];
                for d in 0..bound {
                    word.push(d);
                    let cyl = self.make_cylinder(word, 0)?;
                    *covered += cyl.measure.clone();
                    full_k1.push(cyl);
                    word.pop();
                }
            }
            return Ok(());
        }
        let bound = *self.one_digits.get(state).ok_or(BetaError::DepthExceeded {
            depth: self.one_digits.len(),
        })?;
        for d in 0..=bound {
            let next = if d == bound { state + 1 } else { 0 };
            word.push(d);
            self.cover_rec(next, remaining - 1, word, full_k, full_k1, covered)?;
            word.pop();
        }
        Ok(())
    }

    fn make_cylinder(&self, word: &[u32], state: usize) -> Result<Cylinder, BetaError> {
        let w = Word::new(word.to_vec());
        let sup = self.one_tail(state)?.clone();
        let measure = sup * self.value.pow(-(w.len() as i32));
        let lo = self.value_of(&w);
        Ok(Cylinder {
            word: w,
            lo,
            measure,
            is_full: state == 0,
            end_state: state,
        })
    }

    /// Config/display form: `p/q`.
    pub fn label(&self) -> String {
        format_ratio(&self.value)
    }
}

/// A cylinder set `[d_1,...,d_k]` with its exact interval data.
#[derive(Debug, Clone)]
pub struct Cylinder {
    pub word: Word,
    pub lo: BigRational,
    pub measure: BigRational,
    pub is_full: bool,
    pub end_state: usize,
}

impl Cylinder {
    pub fn hi(&self) -> BigRational {
        &self.lo + &self.measure
    }
}

/// Result of [`Beta::full_cylinder_cover`].
#[derive(Debug, Clone)]
pub struct CoverReport {
    pub rank: usize,
    pub full_rank_k: Vec<Cylinder>,
    pub full_rank_k1: Vec<Cylinder>,
    pub uncovered: BigRational,
}

/// Heuristic detector for an eventually periodic expansion of one. A period
/// `q` must repeat over a window of at least `max(4q, 32)` trailing digits;
/// short coincidences are not enough to warn.
fn detect_tail_period(digits: &[u32]) -> Option<usize> {
    let n = digits.len();
    for q in 1..=64usize {
        let window = (4 * q).max(32);
        if window + q > n {
            break;
        }
        if (n - window - q..n - q).all(|i| digits[i] == digits[i + q]) {
            return Some(q);
        }
    }
    None
}
