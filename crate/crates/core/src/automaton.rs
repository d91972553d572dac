//! Follower-state automaton for the admissibility condition.
//!
//! State `m` means "the suffix of the word read so far matches the first `m`
//! digits of d(1,beta)". Reading a digit strictly below the next bound digit
//! resets to state 0, matching it advances, exceeding it is forbidden. This
//! collapse to a single live constraint is what makes counting preimages a
//! small dynamic program.

use crate::beta::{Beta, BetaError, ENUMERATION_CAP};
use crate::word::Word;

/// Admissibility automaton over a fixed base, truncated at the base's
/// working depth.
#[derive(Debug, Clone, Copy)]
pub struct Automaton<'b> {
    beta: &'b Beta,
}

impl<'b> Automaton<'b> {
    pub fn new(beta: &'b Beta) -> Self {
        Automaton { beta }
    }

    pub fn depth(&self) -> usize {
        self.beta.one_depth()
    }

    /// Transition from `state` on `digit`; `None` is the dead state.
    pub fn transition(&self, state: usize, digit: u32) -> Result<Option<usize>, BetaError> {
        self.beta.transition(state, digit)
    }

    /// Acceptance of `w` with implicit zero tail. Agrees with the direct
    /// suffix comparison [`Beta::is_admissible`].
    pub fn accepts(&self, w: &Word) -> Result<bool, BetaError> {
        match self.beta.prefix_state(w.digits())? {
            None => Ok(false),
            Some(state) => {
                self.beta.zero_tail_ok(state)?;
                Ok(true)
            }
        }
    }

    /// For every automaton state `0..=max_state`, whether reading
    /// `tail` followed by zeros from that state stays admissible.
    fn tail_acceptance(&self, max_state: usize, tail: &Word) -> Result<Vec<bool>, BetaError> {
        let mut ok = vec![false; max_state + 1];
        for (s, slot) in ok.iter_mut().enumerate() {
            let mut state = Some(s);
            for &d in tail.digits() {
                state = match state {
                    Some(m) => self.beta.transition(m, d)?,
                    None => break,
                };
            }
            *slot = match state {
                Some(m) => {
                    self.beta.zero_tail_ok(m)?;
                    true
                }
                None => false,
            };
        }
        Ok(ok)
    }

    /// Number of length-`n` prefixes `w` such that `w . tail . 0^inf` is
    /// admissible; equals the cardinality of `T^{-n}(value(tail))`.
    pub fn count_prefixes(&self, n: usize, tail: &Word) -> Result<u128, BetaError> {
        let tail_ok = self.tail_acceptance(n, tail)?;
        // dp[s] = number of length-i prefixes ending in state s; a prefix of
        // length i can only reach states 0..=i.
        let mut dp = vec![0u128; n + 2];
        dp[0] = 1;
        for i in 0..n {
            let mut next = vec![0u128; n + 2];
            for (s, &c) in dp.iter().enumerate().take(i + 1) {
                if c == 0 {
                    continue;
                }
                let bound = self.beta.one_digit(s + 1)? as u128;
                // `bound` digits reset to state 0, one digit advances.
                next[0] = next[0]
                    .checked_add(c.checked_mul(bound).ok_or_else(overflow)?)
                    .ok_or_else(overflow)?;
                next[s + 1] = next[s + 1].checked_add(c).ok_or_else(overflow)?;
            }
            dp = next;
        }
        let mut total = 0u128;
        for (s, &c) in dp.iter().enumerate() {
            if s < tail_ok.len() && tail_ok[s] {
                total = total.checked_add(c).ok_or_else(overflow)?;
            }
        }
        Ok(total)
    }

    /// Visits every admissible length-`n` prefix of `tail` (the preimages of
    /// `value(tail)` under `T^n`), passing the prefix digits to `visit`.
    pub fn for_each_preimage<F: FnMut(&[u32])>(
        &self,
        n: usize,
        tail: &Word,
        mut visit: F,
    ) -> Result<u64, BetaError> {
        let expected = self.count_prefixes(n, tail)?;
        if expected > ENUMERATION_CAP {
            return Err(BetaError::EnumerationTooLarge(format!(
                "{expected} preimages at rank {n}"
            )));
        }
        let tail_ok = self.tail_acceptance(n, tail)?;
        let mut prefix = vec![0u32; n];
        let mut visited = 0u64;
        self.preimage_rec(0, 0, n, &tail_ok, &mut prefix, &mut visited, &mut visit)?;
        debug_assert_eq!(visited as u128, expected);
        Ok(visited)
    }

    #[allow(clippy::too_many_arguments)]
    fn preimage_rec<F: FnMut(&[u32])>(
        &self,
        state: usize,
        depth: usize,
        n: usize,
        tail_ok: &[bool],
        prefix: &mut Vec<u32>,
        visited: &mut u64,
        visit: &mut F,
    ) -> Result<(), BetaError> {
        if depth == n {
            if tail_ok[state] {
                *visited += 1;
                visit(prefix);
            }
            return Ok(());
        }
        let bound = self.beta.one_digit(state + 1)?;
        for d in 0..=bound {
            let next = if d == bound { state + 1 } else { 0 };
            prefix[depth] = d;
            self.preimage_rec(next, depth + 1, n, tail_ok, prefix, visited, visit)?;
        }
        prefix[depth] = 0;
        Ok(())
    }
}

fn overflow() -> BetaError {
    BetaError::EnumerationTooLarge("prefix count overflows u128".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::parse_ratio;

    fn beta52() -> Beta {
        Beta::with_depth(parse_ratio("5/2").unwrap(), 256).unwrap()
    }

    #[test]
    fn automaton_agrees_with_direct_comparison_exhaustively() {
        // All words of length <= 10 over {0,1,2} for beta = 5/2.
        let b = beta52();
        let a = Automaton::new(&b);
        let mut word = Vec::new();
        fn rec(b: &Beta, a: &Automaton, word: &mut Vec<u32>, len: usize) {
            if len == 0 {
                let w = Word::new(word.clone());
                assert_eq!(
                    a.accepts(&w).unwrap(),
                    b.is_admissible(&w).unwrap(),
                    "disagreement on {w}"
                );
                return;
            }
            for d in 0..=2 {
                word.push(d);
                rec(b, a, word, len - 1);
                word.pop();
            }
        }
        for len in 0..=10 {
            rec(&b, &a, &mut word, len);
        }
    }

    #[test]
    fn preimage_count_examples() {
        let b = beta52();
        let a = Automaton::new(&b);
        // Preimages of 0 under T: {0, 2/5, 4/5}.
        assert_eq!(a.count_prefixes(1, &Word::empty()).unwrap(), 3);
        assert_eq!(a.count_prefixes(0, &"1,0,1".parse().unwrap()).unwrap(), 1);
    }

    #[test]
    fn count_matches_exhaustive_enumeration() {
        let b = beta52();
        let a = Automaton::new(&b);
        let mut rng = crate::experiments::rng_stream(21, 0);
        for trial in 0..100 {
            let tail = if trial == 0 {
                Word::empty()
            } else {
                b.sample_uniform(8, &mut rng)
            };
            for n in 0..=6 {
                // Oracle: brute-force scan of all words over the alphabet.
                let mut expected = 0u128;
                let alphabet = b.digit_max();
                let total = (alphabet as u64 + 1).pow(n as u32);
                for code in 0..total {
                    let mut c = code;
                    let mut digits = Vec::with_capacity(n + tail.len());
                    for _ in 0..n {
                        digits.push((c % (alphabet as u64 + 1)) as u32);
                        c /= alphabet as u64 + 1;
                    }
                    digits.extend_from_slice(tail.digits());
                    if b.is_admissible(&Word::new(digits)).unwrap() {
                        expected += 1;
                    }
                }
                assert_eq!(
                    a.count_prefixes(n, &tail).unwrap(),
                    expected,
                    "n = {n}, tail = {tail}"
                );
            }
        }
    }

    #[test]
    fn preimage_visitor_agrees_with_count() {
        let b = beta52();
        let a = Automaton::new(&b);
        let tail: Word = "1,0,1,1".parse().unwrap();
        let mut seen = Vec::new();
        let visited = a
            .for_each_preimage(3, &tail, |prefix| seen.push(prefix.to_vec()))
            .unwrap();
        assert_eq!(visited as usize, seen.len());
        assert_eq!(visited as u128, a.count_prefixes(3, &tail).unwrap());
        // Every visited word really is admissible and distinct.
        seen.sort();
        let mut dedup = seen.clone();
        dedup.dedup();
        assert_eq!(seen.len(), dedup.len());
        for p in &seen {
            let mut digits = p.clone();
            digits.extend_from_slice(tail.digits());
            assert!(b.is_admissible(&Word::new(digits)).unwrap());
        }
    }
}
