//! Finite words over a countable alphabet, cylinders of the full shift, and
//! the ultrametric `dist(a, b) = λ^{|a ∧ b|}`.
//!
//! Infinite sequences never appear directly: every consumer works with a
//! finite truncation and carries its own error budget. Letters are dense
//! indices `0..m` and are never interpreted here.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite word `ω ∈ A*`. The empty word addresses the whole shift space.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(letters: Vec<usize>) -> Self {
        Word(letters)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// The word `letter^n`.
    pub fn repeat(letter: usize, n: usize) -> Self {
        Word(vec![letter; n])
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> Option<usize> {
        self.0.first().copied()
    }

    /// `self · letter`
    pub fn child(&self, letter: usize) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.extend_from_slice(&self.0);
        v.push(letter);
        Word(v)
    }

    pub fn push(&mut self, letter: usize) {
        self.0.push(letter);
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// The initial segment of length `n` (or the whole word if shorter).
    pub fn prefix(&self, n: usize) -> Word {
        Word(self.0[..n.min(self.0.len())].to_vec())
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.len() >= self.0.len() && other.0[..self.0.len()] == self.0[..]
    }

    /// Largest letter plus one, i.e. the smallest alphabet containing the word.
    pub fn alphabet_bound(&self) -> usize {
        self.0.iter().map(|&a| a + 1).max().unwrap_or(0)
    }

    /// Index of this word among all words of the same length over an
    /// alphabet of size `m`, in lexicographic order.
    pub fn index(&self, m: usize) -> usize {
        self.0.iter().fold(0, |acc, &a| acc * m + a)
    }

    /// Inverse of [`Word::index`].
    pub fn from_index(mut index: usize, m: usize, len: usize) -> Word {
        let mut v = vec![0; len];
        for slot in v.iter_mut().rev() {
            *slot = index % m;
            index /= m;
        }
        Word(v)
    }

    /// The truncation of the periodic sequence `self^∞` to `len` letters.
    pub fn periodic_truncation(&self, len: usize) -> Word {
        if self.0.is_empty() {
            return Word::empty();
        }
        Word((0..len).map(|i| self.0[i % self.0.len()]).collect())
    }
}

impl From<Vec<usize>> for Word {
    fn from(v: Vec<usize>) -> Self {
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "ε");
        }
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// Parameters of the symbolic metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymbolicMetricParams {
    lambda: f64,
}

impl SymbolicMetricParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "symbolic metric needs 0 < λ < 1, got {lambda}"
            )));
        }
        Ok(SymbolicMetricParams { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// The maximal common initial segment `a ∧ b`.
pub fn longest_common_prefix(a: &Word, b: &Word) -> Word {
    let n = a
        .letters()
        .iter()
        .zip(b.letters())
        .take_while(|(x, y)| x == y)
        .count();
    a.prefix(n)
}

/// `λ^{|a ∧ b|}`. For equal finite words this is the upper bound `λ^{|a|}`
/// on the distance of any two infinite extensions.
pub fn symbolic_dist(a: &Word, b: &Word, params: SymbolicMetricParams) -> f64 {
    let n = longest_common_prefix(a, b).len();
    params.lambda.powi(n as i32)
}

/// The left shift `σ`, dropping the first letter.
pub fn shift(w: &Word) -> Result<Word> {
    if w.is_empty() {
        return Err(Error::EmptyWord);
    }
    Ok(Word(w.0[1..].to_vec()))
}

/// Lexicographic enumeration of all words of length `n` over `m` letters.
pub fn words_of_length(m: usize, n: usize) -> impl Iterator<Item = Word> {
    let count = m.checked_pow(n as u32).unwrap_or(usize::MAX);
    (0..count).map(move |i| Word::from_index(i, m, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(v: &[usize]) -> Word {
        Word::new(v.to_vec())
    }

    #[test]
    fn common_prefix_examples() {
        assert_eq!(longest_common_prefix(&w(&[0, 1, 1]), &w(&[0, 1, 0])), w(&[0, 1]));
        assert_eq!(longest_common_prefix(&w(&[2, 2]), &w(&[2, 2])), w(&[2, 2]));
        assert_eq!(longest_common_prefix(&w(&[0, 5, 5]), &w(&[1, 5, 5])), Word::empty());
    }

    #[test]
    fn dist_examples() {
        let half = SymbolicMetricParams::new(0.5).unwrap();
        assert_eq!(symbolic_dist(&w(&[0, 1]), &w(&[0, 0]), half), 0.5);
        assert_eq!(symbolic_dist(&w(&[0, 1]), &w(&[0, 1]), half), 0.25);
        let third = SymbolicMetricParams::new(1.0 / 3.0).unwrap();
        assert_eq!(symbolic_dist(&w(&[1, 0]), &w(&[0, 0]), third), 1.0);
    }

    #[test]
    fn metric_params_reject_out_of_range() {
        assert!(SymbolicMetricParams::new(0.0).is_err());
        assert!(SymbolicMetricParams::new(1.0).is_err());
        assert!(SymbolicMetricParams::new(f64::NAN).is_err());
    }

    #[test]
    fn shift_examples() {
        assert_eq!(shift(&w(&[3, 1, 4])).unwrap(), w(&[1, 4]));
        assert_eq!(shift(&w(&[7])).unwrap(), Word::empty());
        assert_eq!(shift(&Word::empty()), Err(Error::EmptyWord));
        let mut cur = w(&[1, 2, 3, 4, 5]);
        for _ in 0..5 {
            cur = shift(&cur).unwrap();
        }
        assert!(cur.is_empty());
    }

    #[test]
    fn index_round_trip_and_enumeration_order() {
        let all: Vec<Word> = words_of_length(3, 2).collect();
        assert_eq!(all.len(), 9);
        assert_eq!(all[0], w(&[0, 0]));
        assert_eq!(all[5], w(&[1, 2]));
        for (i, word) in all.iter().enumerate() {
            assert_eq!(word.index(3), i);
        }
    }

    fn word_strategy() -> impl Strategy<Value = Word> {
        prop::collection::vec(0usize..3, 0..12).prop_map(Word::new)
    }

    proptest! {
        #[test]
        fn dist_is_ultrametric(a in word_strategy(), b in word_strategy(), c in word_strategy()) {
            let p = SymbolicMetricParams::new(0.4).unwrap();
            let ac = symbolic_dist(&a, &c, p);
            let bound = symbolic_dist(&a, &b, p).max(symbolic_dist(&b, &c, p));
            prop_assert!(ac <= bound + 1e-15);
            prop_assert_eq!(symbolic_dist(&a, &b, p), symbolic_dist(&b, &a, p));
        }

        #[test]
        fn common_prefix_is_maximal(a in word_strategy(), b in word_strategy()) {
            let lcp = longest_common_prefix(&a, &b);
            prop_assert!(lcp.is_prefix_of(&a));
            prop_assert!(lcp.is_prefix_of(&b));
            let n = lcp.len();
            if n < a.len() && n < b.len() {
                // one more letter is a prefix of at most one of them
                prop_assert_ne!(a.letters()[n], b.letters()[n]);
            }
        }
    }
}
