use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default cap on enumerated words (or sampled points).
pub const DEFAULT_WORD_CAP: usize = 2_000_000;

/// A reduced word in the free group on `rank` generators.
///
/// Letters are signed, 1-based generator indices: `k` is generator `k`, `-k`
/// its inverse. Words print as `g1.g2inv.g1`; the empty word prints as `e`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct GroupWord(Vec<i32>);

impl GroupWord {
    pub fn empty() -> Self {
        GroupWord(Vec::new())
    }

    pub fn new(letters: Vec<i32>) -> Result<Self> {
        if letters.contains(&0) {
            return Err(Error::InvalidWord("letter 0".into()));
        }
        if letters.windows(2).any(|w| w[0] == -w[1]) {
            return Err(Error::InvalidWord(format!("{letters:?} is not reduced")));
        }
        Ok(GroupWord(letters))
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<i32> {
        self.0.last().copied()
    }

    pub fn prefix(&self, n: usize) -> GroupWord {
        GroupWord(self.0[..n.min(self.0.len())].to_vec())
    }

    /// Appends a letter; `None` if it would cancel the last one.
    pub fn extended(&self, letter: i32) -> Option<GroupWord> {
        if letter == 0 || self.last() == Some(-letter) {
            return None;
        }
        let mut v = self.0.clone();
        v.push(letter);
        Some(GroupWord(v))
    }

    pub(crate) fn push_unchecked(&mut self, letter: i32) {
        self.0.push(letter);
    }

    pub fn max_generator(&self) -> usize {
        self.0.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0)
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("e");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            if *l > 0 {
                write!(f, "g{l}")?;
            } else {
                write!(f, "g{}inv", -l)?;
            }
        }
        Ok(())
    }
}

impl FromStr for GroupWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "e" {
            return Ok(GroupWord::empty());
        }
        let mut letters = Vec::new();
        for tok in s.split('.') {
            let bad = || Error::InvalidWord(format!("bad letter {tok:?}"));
            let body = tok.strip_prefix('g').ok_or_else(bad)?;
            let (digits, sign) = match body.strip_suffix("inv") {
                Some(d) => (d, -1),
                None => (body, 1),
            };
            let k: i32 = digits.parse().map_err(|_| bad())?;
            if k <= 0 {
                return Err(bad());
            }
            letters.push(sign * k);
        }
        GroupWord::new(letters)
    }
}

impl Serialize for GroupWord {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GroupWord {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Letters of the rank-`g` free group in canonical order `1, -1, 2, -2, ...`.
pub fn letters(rank: usize) -> Vec<i32> {
    (1..=rank as i32).flat_map(|k| [k, -k]).collect()
}

/// Number of reduced words of length exactly `len`.
pub fn words_of_length(rank: usize, len: usize) -> Option<u128> {
    if len == 0 {
        return Some(1);
    }
    let g = rank as u128;
    let mut n = 2 * g;
    for _ in 1..len {
        n = n.checked_mul(2 * g - 1)?;
    }
    Some(n)
}

/// `1 + sum_{k=1..max_len} 2g (2g-1)^(k-1)`.
pub fn free_group_word_count(rank: usize, max_len: usize) -> Option<u128> {
    let mut total: u128 = 0;
    for k in 0..=max_len {
        total = total.checked_add(words_of_length(rank, k)?)?;
    }
    Some(total)
}

/// All reduced words of length exactly `len`, in canonical order.
pub fn enumerate_reduced_words(rank: usize, len: usize) -> Vec<GroupWord> {
    let mut level = vec![GroupWord::empty()];
    for _ in 0..len {
        level = level.iter().flat_map(|w| letters(rank).into_iter().filter_map(move |l| w.extended(l))).collect();
    }
    level
}

pub(crate) fn check_budget(requested: Option<u128>, cap: usize) -> Result<()> {
    match requested {
        Some(n) if n <= cap as u128 => Ok(()),
        Some(n) => Err(Error::WordBudgetExceeded { requested: n, cap }),
        None => Err(Error::WordBudgetExceeded { requested: u128::MAX, cap }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumerated_words_match_counts() {
        for len in 0..5 {
            let words = enumerate_reduced_words(2, len);
            assert_eq!(words.len() as u128, words_of_length(2, len).unwrap());
            assert!(words.iter().all(|w| w.len() == len));
        }
        assert_eq!(
            enumerate_reduced_words(2, 1).iter().map(|w| w.to_string()).collect::<Vec<_>>(),
            ["g1", "g1inv", "g2", "g2inv"]
        );
    }

    #[test]
    fn display_and_parse() {
        let w = GroupWord::new(vec![1, -2, -2]).unwrap();
        assert_eq!(w.to_string(), "g1.g2inv.g2inv");
        assert_eq!("g1.g2inv.g2inv".parse::<GroupWord>().unwrap(), w);
        assert_eq!("e".parse::<GroupWord>().unwrap(), GroupWord::empty());
        assert!("g1.g1inv".parse::<GroupWord>().is_err());
        assert!("h3".parse::<GroupWord>().is_err());
        assert!("g0".parse::<GroupWord>().is_err());
    }

    #[test]
    fn reduced_only() {
        assert!(GroupWord::new(vec![2, -2]).is_err());
        let w = GroupWord::new(vec![2]).unwrap();
        assert!(w.extended(-2).is_none());
        assert_eq!(w.extended(2).unwrap().letters(), &[2, 2]);
    }

    #[test]
    fn counting_formula() {
        assert_eq!(free_group_word_count(2, 0), Some(1));
        assert_eq!(free_group_word_count(2, 1), Some(5));
        assert_eq!(free_group_word_count(2, 3), Some(53));
        assert_eq!(free_group_word_count(1, 4), Some(9));
        assert_eq!(free_group_word_count(2, 8), Some(13121));
    }
}
