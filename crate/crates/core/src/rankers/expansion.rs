//! Document expansion from a ranked token distribution: only tokens not
//! already present in the document are appended.

use std::collections::{BTreeMap, HashSet};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::textproc::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpansionConfig {
    /// Number of top-ranked tokens considered.
    pub m: usize,
    pub exclude_continuation_pieces: bool,
    pub exclude_special_tokens: bool,
}

impl ExpansionConfig {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            exclude_continuation_pieces: true,
            exclude_special_tokens: true,
        }
    }
}

/// Takes the top `m` entries of `distribution` (already sorted by
/// log-probability, descending), drops filtered tokens, and returns in rank
/// order those absent from `doc_token_ids`.
pub fn expand_document<S: Scalar>(
    doc_token_ids: &HashSet<u32>,
    distribution: &[(u32, S)],
    config: &ExpansionConfig,
    vocab: &Vocabulary,
) -> Vec<u32> {
    let mut seen = HashSet::new();
    distribution
        .iter()
        .take(config.m)
        .map(|&(t, _)| t)
        .filter(|&t| !(config.exclude_special_tokens && vocab.is_special(t)))
        .filter(|&t| !(config.exclude_continuation_pieces && vocab.is_continuation(t)))
        .filter(|t| !doc_token_ids.contains(t))
        .filter(|&t| seen.insert(t))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionStats {
    pub mean_added: f64,
    pub per_doc: BTreeMap<String, usize>,
}

/// Mean number of appended tokens per document.
pub fn expansion_stats(additions: &BTreeMap<String, Vec<u32>>) -> Result<ExpansionStats> {
    if additions.is_empty() {
        return Err(Error::Empty("expansion additions"));
    }
    let per_doc: BTreeMap<String, usize> = additions.iter().map(|(d, a)| (d.clone(), a.len())).collect();
    let total: usize = per_doc.values().sum();
    Ok(ExpansionStats {
        mean_added: total as f64 / per_doc.len() as f64,
        per_doc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> Vocabulary {
        let toks = ["[PAD]", "[UNK]", "[CLS]", "t1", "t2", "t3", "##x", "t4"];
        Vocabulary::from_tokens(toks.iter().map(|s| s.to_string()).collect(), "[UNK]", "##").unwrap()
    }

    #[test]
    fn only_new_terms_are_added() {
        let doc: HashSet<u32> = [4].into();
        let dist = [(3u32, -0.1f64), (4, -0.2), (5, -0.3), (7, -0.4)];
        assert_eq!(expand_document(&doc, &dist, &ExpansionConfig::new(3), &vocab()), [3, 5]);
        assert!(expand_document(&doc, &dist, &ExpansionConfig::new(0), &vocab()).is_empty());
    }

    #[test]
    fn filters_special_and_continuation_tokens() {
        let dist = [(2u32, -0.1f64), (6, -0.2), (3, -0.3)];
        let cfg = ExpansionConfig::new(3);
        assert_eq!(expand_document(&HashSet::new(), &dist, &cfg, &vocab()), [3]);
        let cfg = ExpansionConfig {
            exclude_continuation_pieces: false,
            ..cfg
        };
        assert_eq!(expand_document(&HashSet::new(), &dist, &cfg, &vocab()), [6, 3]);
    }

    #[test]
    fn stats_mean() {
        let a: BTreeMap<String, Vec<u32>> = [("a".into(), vec![1, 2]), ("b".into(), vec![1, 2, 3, 4])].into();
        assert_eq!(expansion_stats(&a).unwrap().mean_added, 3.0);
        let z: BTreeMap<String, Vec<u32>> = [("a".into(), vec![]), ("b".into(), vec![])].into();
        assert_eq!(expansion_stats(&z).unwrap().mean_added, 0.0);
        let one: BTreeMap<String, Vec<u32>> = [("a".into(), vec![1, 2, 3, 4, 5])].into();
        assert_eq!(expansion_stats(&one).unwrap().mean_added, 5.0);
        assert!(expansion_stats(&BTreeMap::new()).is_err());
    }
}
