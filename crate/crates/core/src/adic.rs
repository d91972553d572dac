//! The adic successor map and its inverse, extremal-point tests, and the
//! block quantities built from them.
//!
//! The successor of an admissible word is the next admissible word in
//! reverse lexicographic order: find the first position whose digit can be
//! incremented while the suffix starting there stays admissible, increment
//! it, and zero everything before it. For a finite word with zero tail such
//! a position always exists at or before one past the end, so iterating the
//! successor only ever grows a word by one digit at a time.

use thiserror::Error;

use crate::automaton::Automaton;
use crate::beta::{Beta, BetaError};
use crate::word::Word;

/// Hard cap on word growth under successor iteration.
pub const MAX_WORD_LEN: usize = 1 << 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AdicError {
    #[error("point is maximal within the search horizon; successor undefined")]
    MaximalPoint,
    #[error("all-zero word has no predecessor")]
    MinimalPoint,
    #[error(transparent)]
    Beta(#[from] BetaError),
    #[error("operation would exceed the step budget of {0}")]
    FeasibilityExceeded(u64),
}

/// One successor application: the index `n0` of zeroed positions and the
/// resulting word `(0^{n0}, d_{n0+1}+1, d_{n0+2}, ...)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdicStep {
    pub n0: usize,
    pub word: Word,
}

/// First 0-based position whose digit can be incremented with the suffix
/// from there staying admissible. This is the quantity `n0` of the
/// successor formula; for a word with zero tail it is at most `len`.
pub fn first_incrementable(beta: &Beta, digits: &[u32]) -> Result<usize, AdicError> {
    for pos in 0..=digits.len() {
        if beta.increment_ok(digits, pos)? {
            return Ok(pos);
        }
    }
    // Unreachable for zero-tail words: position `len` increments a zero to 1
    // and (1, 0, 0, ...) is admissible for every base.
    Err(AdicError::MaximalPoint)
}

/// In-place successor; returns `n0`. The hot path for orbit simulation.
pub fn successor_in_place(beta: &Beta, digits: &mut Vec<u32>) -> Result<usize, AdicError> {
    let n0 = first_incrementable(beta, digits)?;
    if n0 == digits.len() {
        if digits.len() >= MAX_WORD_LEN {
            return Err(AdicError::Beta(BetaError::DepthExceeded {
                depth: MAX_WORD_LEN,
            }));
        }
        digits.push(0);
    }
    digits[n0] += 1;
    for d in digits[..n0].iter_mut() {
        *d = 0;
    }
    Ok(n0)
}

/// Successor in reverse lexicographic order among admissible words.
pub fn successor(beta: &Beta, w: &Word) -> Result<AdicStep, AdicError> {
    let mut digits = w.digits().to_vec();
    let n0 = successor_in_place(beta, &mut digits)?;
    Ok(AdicStep {
        n0,
        word: Word::new(digits),
    })
}

/// Inverse of [`successor`]: decrement the first nonzero digit and refill
/// the positions before it, right to left, with the largest digit that
/// keeps the suffix admissible.
pub fn predecessor(beta: &Beta, w: &Word) -> Result<Word, AdicError> {
    let mut digits = w.digits().to_vec();
    let k = match digits.iter().position(|&d| d > 0) {
        Some(k) => k,
        None => return Err(AdicError::MinimalPoint),
    };
    digits[k] -= 1;
    let dm = beta.digit_max();
    for pos in (0..k).rev() {
        let keep_max = beta.word_below_one(dm, &digits[pos + 1..])?;
        digits[pos] = if keep_max { dm } else { dm - 1 };
    }
    Ok(Word::new(digits))
}

/// Is the length-`n` prefix of `w` the reverse-lex least (all zeros) or
/// greatest admissible prefix compatible with the tail?
pub fn is_n_extremal(beta: &Beta, w: &Word, n: usize) -> Result<(bool, bool), AdicError> {
    let digits = w.digits();
    let minimal = digits.iter().take(n).all(|&d| d == 0);
    let maximal = first_incrementable(beta, digits)? >= n;
    Ok((minimal, maximal))
}

/// Block quantities of the successor orbit at rank `n`:
/// `k_n` counts successor steps to the next n-maximal point, `j_n` is the
/// fiber cardinality `#T^{-n}(T^n x)`, and `k_n_r` accumulates `k_n` over
/// `r` fibers. `orbit_steps = k_n_r + r` is the exact number of successor
/// steps from `x` to the r-th following n-minimal point (each fiber
/// traversal ends with one extra step that jumps to the next fiber).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStats {
    pub n: usize,
    pub r: usize,
    pub k_n: u64,
    pub j_n: u128,
    pub k_n_r: u64,
    pub orbit_steps: u64,
    /// The point `tau_n^r(x)` (for `r >= 1`), i.e. the word after
    /// `orbit_steps` successor applications.
    pub end: Word,
}

/// Computes [`BlockStats`] by direct successor iteration, with `step_cap`
/// bounding the total number of steps.
pub fn block_stats(
    beta: &Beta,
    w: &Word,
    n: usize,
    r: usize,
    step_cap: u64,
) -> Result<BlockStats, AdicError> {
    let automaton = Automaton::new(beta);
    let j_n = automaton.count_prefixes(n, &w.shift(n))?;
    let mut digits = w.digits().to_vec();
    let mut total = 0u64;
    let mut k_n = 0u64;
    let mut k_n_r = 0u64;
    for j in 0..r {
        if j > 0 {
            // Jump from the n-maximal point to the next n-minimal one.
            successor_in_place(beta, &mut digits)?;
            total += 1;
        }
        let mut steps = 0u64;
        while first_incrementable(beta, &digits)? < n {
            successor_in_place(beta, &mut digits)?;
            steps += 1;
            total += 1;
            if total > step_cap {
                return Err(AdicError::FeasibilityExceeded(step_cap));
            }
        }
        if j == 0 {
            k_n = steps;
        }
        k_n_r += steps;
    }
    if r > 0 {
        successor_in_place(beta, &mut digits)?;
        total += 1;
    }
    Ok(BlockStats {
        n,
        r,
        k_n,
        j_n,
        k_n_r,
        orbit_steps: total,
        end: Word::new(digits),
    })
}

pub use crate::word::agree_index;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::parse_ratio;
    use num_rational::BigRational;

    fn beta52() -> Beta {
        Beta::with_depth(parse_ratio("5/2").unwrap(), 256).unwrap()
    }

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    /// All admissible words of length `len` (zero tail), in reverse
    /// lexicographic order. The enumeration oracle for successor tests.
    fn enumerate_sorted(beta: &Beta, len: usize) -> Vec<Word> {
        let automaton = Automaton::new(beta);
        let mut words = Vec::new();
        automaton
            .for_each_preimage(len, &Word::empty(), |prefix| {
                words.push(Word::new(prefix.to_vec()));
            })
            .unwrap();
        words.sort_by(|a, b| a.cmp_rev(b));
        words
    }

    #[test]
    fn successor_examples() {
        let b = beta52();
        assert_eq!(successor(&b, &w("0,0,0")).unwrap().word, w("1,0,0"));
        assert_eq!(successor(&b, &w("1,0,1,1")).unwrap().word, w("2,0,1,1"));
        let step = successor(&b, &w("2,0,1,1")).unwrap();
        assert_eq!(step.word, w("0,1,1,1"));
        assert_eq!(step.n0, 1);
    }

    #[test]
    fn successor_matches_enumeration_oracle() {
        let b = beta52();
        let words = enumerate_sorted(&b, 6);
        for pair in words.windows(2) {
            let next = successor(&b, &pair[0]).unwrap().word;
            assert!(
                next.eq_point(&pair[1]),
                "successor({}) = {} but the next admissible word is {}",
                pair[0],
                next,
                pair[1]
            );
        }
        // The global maximum of the enumeration escapes rank 6: its
        // successor changes a digit beyond position 6.
        let last = words.last().unwrap();
        let step = successor(&b, last).unwrap();
        assert!(step.n0 >= 6);
    }

    #[test]
    fn predecessor_examples_and_inverse() {
        let b = beta52();
        assert_eq!(predecessor(&b, &w("1,0,0")).unwrap(), w("0,0,0"));
        assert_eq!(predecessor(&b, &w("0,1,1,1")).unwrap(), w("2,0,1,1"));
        assert_eq!(predecessor(&b, &w("0,0,0")), Err(AdicError::MinimalPoint));

        let words = enumerate_sorted(&b, 6);
        for word in &words {
            let next = successor(&b, word).unwrap().word;
            assert!(predecessor(&b, &next).unwrap().eq_point(word));
            if !word.is_zero() {
                let prev = predecessor(&b, word).unwrap();
                assert!(successor(&b, &prev).unwrap().word.eq_point(word));
            }
        }
    }

    #[test]
    fn bijectivity_on_random_words() {
        let b = beta52();
        let mut rng = crate::experiments::rng_stream(31, 0);
        for _ in 0..10_000 {
            let word = b.sample_uniform_markov(20, &mut rng).unwrap();
            let next = successor(&b, &word).unwrap().word;
            assert!(b.is_admissible(&next).unwrap());
            assert!(predecessor(&b, &next).unwrap().eq_point(&word));
        }
    }

    #[test]
    fn successor_preserves_the_tail_exactly() {
        let b = beta52();
        let mut rng = crate::experiments::rng_stream(32, 0);
        for _ in 0..200 {
            let word = b.sample_uniform(16, &mut rng);
            let step = successor(&b, &word).unwrap();
            let k = step.n0 + 1;
            // T^{n0+1} x = T^{n0+1} (tau x), in exact rational arithmetic.
            let (_, res_a) = b.expand(&b.value_of(&word), k).unwrap();
            let (_, res_b) = b.expand(&b.value_of(&step.word), k).unwrap();
            assert_eq!(res_a, res_b);
            // And strictly above in reverse lexicographic order.
            assert_eq!(word.cmp_rev(&step.word), std::cmp::Ordering::Less);
        }
    }

    #[test]
    fn extremal_examples() {
        let b = beta52();
        assert_eq!(is_n_extremal(&b, &w("0,1"), 1).unwrap(), (true, false));
        assert_eq!(is_n_extremal(&b, &w("2,1"), 1).unwrap(), (false, true));
        assert_eq!(is_n_extremal(&b, &w("1,0"), 1).unwrap(), (false, false));
    }

    #[test]
    fn block_stats_examples() {
        let b = beta52();
        let stats = block_stats(&b, &w("0,0"), 1, 1, 1 << 20).unwrap();
        assert_eq!(stats.k_n, 2);
        assert_eq!(stats.j_n, 3);
        assert_eq!(stats.k_n_r, 2);

        let stats = block_stats(&b, &w("0,0"), 1, 2, 1 << 20).unwrap();
        assert_eq!(stats.k_n_r, 4);
        assert_eq!(stats.orbit_steps, 6);

        // An n-maximal start has k_n = 0.
        let stats = block_stats(&b, &w("2,1"), 1, 1, 1 << 20).unwrap();
        assert_eq!(stats.k_n, 0);

        // r = 0 is the empty block.
        let stats = block_stats(&b, &w("0,0"), 1, 0, 1 << 20).unwrap();
        assert_eq!(stats.k_n_r, 0);
        assert_eq!(stats.orbit_steps, 0);
    }

    #[test]
    fn k_n_is_fiber_size_minus_one_from_minimal_points() {
        let b = beta52();
        let mut rng = crate::experiments::rng_stream(33, 0);
        for _ in 0..50 {
            let tail = b.sample_uniform(6, &mut rng);
            for n in 1..=4usize {
                let mut digits = vec![0u32; n];
                digits.extend_from_slice(tail.digits());
                let word = Word::new(digits);
                let stats = block_stats(&b, &word, n, 1, 1 << 24).unwrap();
                assert_eq!(u128::from(stats.k_n) + 1, stats.j_n, "word {word}, n {n}");
            }
        }
    }

    #[test]
    fn tau_n_commutes_with_the_shift() {
        // T^n(tau_n x) = tau(T^n x).
        let b = beta52();
        let mut rng = crate::experiments::rng_stream(34, 0);
        for _ in 0..40 {
            let word = b.sample_uniform(12, &mut rng);
            for n in 1..=6usize {
                let stats = block_stats(&b, &word, n, 1, 1 << 24).unwrap();
                let left = stats.end.shift(n);
                let right = successor(&b, &word.shift(n)).unwrap().word;
                assert!(left.eq_point(&right), "word {word}, n {n}");
            }
        }
    }

    #[test]
    fn block_size_tracks_beta_to_the_n() {
        // K_n^r(x) = beta^n r (1 +- eps) on most of the space; a smaller
        // desk check of the acceptance-scale estimate.
        let b = beta52();
        let mut rng = crate::experiments::rng_stream(35, 0);
        let n = 6;
        let r = 20;
        let scale = b.value_f64().powi(n as i32) * r as f64;
        let mut hits = 0;
        let total = 40;
        for _ in 0..total {
            let word = b.sample_uniform(20, &mut rng);
            let stats = block_stats(&b, &word, n, r, 1 << 26).unwrap();
            let ratio = stats.k_n_r as f64 / scale;
            if (0.85..=1.15).contains(&ratio) {
                hits += 1;
            }
        }
        assert!(hits * 10 >= total * 8, "only {hits}/{total} within 15%");
    }

    #[test]
    fn maximal_points_do_not_occur_among_samples() {
        let b = beta52();
        let mut rng = crate::experiments::rng_stream(36, 0);
        let mut failures = 0u32;
        for _ in 0..100_000 {
            let word = b.sample_uniform_markov(30, &mut rng).unwrap();
            if successor(&b, &word).is_err() {
                failures += 1;
            }
        }
        assert_eq!(failures, 0);
    }

    #[test]
    fn successor_value_is_measure_preserving_in_distribution() {
        let b = beta52();
        let mut rng = crate::experiments::rng_stream(37, 0);
        let mut pushed: Vec<f64> = (0..20_000)
            .map(|_| {
                let word = b.sample_uniform_markov(30, &mut rng).unwrap();
                b.value_f64_of(&successor(&b, &word).unwrap().word)
            })
            .collect();
        let mut fresh: Vec<f64> = (0..20_000)
            .map(|_| {
                let word = b.sample_uniform_markov(30, &mut rng).unwrap();
                b.value_f64_of(&word)
            })
            .collect();
        let d = crate::stats::ks_two_sample(&mut pushed, &mut fresh);
        assert!(d < 0.02, "ks = {d}");
    }

    #[test]
    fn word_growth_is_logarithmic() {
        let b = beta52();
        let mut digits = vec![0u32];
        let mut max_len = 0usize;
        for _ in 0..100_000u64 {
            successor_in_place(&b, &mut digits).unwrap();
            max_len = max_len.max(digits.len());
        }
        // log_{5/2}(1e5) is about 12.6; growth stays in that ballpark.
        assert!(max_len <= 16, "grew to {max_len}");
        let v = b.value_of(&Word::new(digits.clone()));
        assert!(v < BigRational::from_integer(1.into()));
    }
}
