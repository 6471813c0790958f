//! Word vocabulary with reserved padding and unknown tokens.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Bidirectional word↔index map with frequency counts.
///
/// Index 0 is the padding token and index 1 the unknown token; real words
/// start at index 2, ordered by descending corpus frequency with
/// lexicographic tie-breaks. Every retained word has frequency ≥ the
/// pruning threshold used to build the vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Count words over token sequences and keep those with frequency
    /// ≥ `min_count`. Errors when no word survives pruning.
    pub fn build<'a, I, S>(sequences: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = &'a str>,
    {
        let mut counts: HashMap<&str, u64> = HashMap::new();
        let mut saw_any = false;
        for seq in sequences {
            for tok in seq {
                saw_any = true;
                *counts.entry(tok).or_insert(0) += 1;
            }
        }
        if !saw_any {
            return Err(Error::EmptyCorpus);
        }
        let mut retained: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        if retained.is_empty() {
            return Err(Error::InsufficientData(format!(
                "no word reaches frequency {min_count}"
            )));
        }
        retained.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut words = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        let mut freq = vec![0u64, 0u64];
        for (w, c) in retained {
            words.push(w.to_string());
            freq.push(c);
        }
        Ok(Vocabulary::from_parts(words, freq))
    }

    pub(crate) fn from_parts(words: Vec<String>, counts: Vec<u64>) -> Self {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocabulary {
            words,
            counts,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Index of `word`, or the unknown index.
    pub fn get_or_unk(&self, word: &str) -> usize {
        self.get(word).unwrap_or(UNK_INDEX)
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Total corpus tokens covered by retained words.
    pub fn total_count(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prunes_singletons() {
        let v = Vocabulary::build(vec![vec!["a", "a", "b"]], 2).unwrap();
        assert_eq!(v.len(), 3); // pad, unk, a
        assert_eq!(v.word(PAD_INDEX), PAD_TOKEN);
        assert_eq!(v.word(UNK_INDEX), UNK_TOKEN);
        assert_eq!(v.get("a"), Some(2));
        assert_eq!(v.get("b"), None);
        assert_eq!(v.get_or_unk("b"), UNK_INDEX);
    }

    #[test]
    fn ties_break_lexicographically() {
        let v = Vocabulary::build(vec![vec!["y", "x", "y", "x"]], 2).unwrap();
        assert_eq!(v.get("x"), Some(2));
        assert_eq!(v.get("y"), Some(3));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let empty: Vec<Vec<&str>> = vec![];
        assert!(Vocabulary::build(empty, 2).is_err());
        assert!(Vocabulary::build(vec![vec!["once"]], 2).is_err());
    }

    #[test]
    fn indices_are_dense() {
        let v = Vocabulary::build(
            vec![vec!["a", "a", "b", "b", "c", "c", "c"]],
            2,
        )
        .unwrap();
        let max = (0..v.len()).max().unwrap();
        assert_eq!(max, v.len() - 1);
        for i in 0..v.len() {
            assert_eq!(v.get(v.word(i)), Some(i));
        }
    }

    #[test]
    fn frequency_ordering() {
        let v = Vocabulary::build(
            vec![vec!["rare", "rare", "common", "common", "common"]],
            2,
        )
        .unwrap();
        assert_eq!(v.get("common"), Some(2));
        assert_eq!(v.get("rare"), Some(3));
        assert_eq!(v.count(2), 3);
        assert_eq!(v.count(3), 2);
    }
}
