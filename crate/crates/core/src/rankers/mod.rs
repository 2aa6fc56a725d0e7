//! Relevance scorers and candidate-pool reranking.
//!
//! Four scorers share one interface: BM25 and LM with Jelinek-Mercer
//! smoothing over an [`InvertedIndex`], TILDE query likelihood over a
//! [`TildeDistributionStore`], and TILDEv2 exact-match impacts over an
//! [`ImpactStore`]. Every ranking leaves the engine as a [`ScoredList`] with
//! one deterministic order: score descending, doc id ascending on ties.

mod bm25;
mod expansion;
mod lm;
mod tilde;

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::corpus::CandidatePool;
use crate::error::{Error, Result};
use crate::lexindex::{ImpactStore, InvertedIndex, TildeDistributionStore};
use crate::scalar::Scalar;
use crate::textproc::Token;

pub use bm25::{bm25_idf, bm25_score, bm25_term_score, Bm25Params};
pub use expansion::{expand_document, expansion_stats, ExpansionConfig, ExpansionStats};
pub use lm::{lm_jm_score, lm_jm_term_score, LmJmParams};
pub use tilde::{tilde_ql, tildev2_score};

/// One query's candidates in ranked order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredList<S> {
    query_id: String,
    entries: Vec<(String, S)>,
}

/// Score descending, then doc id ascending.
pub(crate) fn rank_order<S: Scalar>(a: &(String, S), b: &(String, S)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.cmp(&b.0))
}

impl<S: Scalar> ScoredList<S> {
    /// Sorts `entries` into rank order. Rejects duplicate doc ids and NaN
    /// scores.
    pub fn new(query_id: impl Into<String>, mut entries: Vec<(String, S)>) -> Result<Self> {
        let query_id = query_id.into();
        if let Some((doc, _)) = entries.iter().find(|(_, s)| s.is_nan()) {
            return Err(Error::Validation(format!("query {query_id:?}: NaN score for {doc:?}")));
        }
        entries.sort_by(rank_order);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Conflict {
                what: "doc_id in ranking",
                id: format!("{query_id}/{}", w[0].0),
            });
        }
        Ok(Self { query_id, entries })
    }

    /// Keeps the given order, which must already be non-increasing in score.
    /// Used when reading ranked files whose printed scores may tie after
    /// rounding.
    pub fn from_ranked(query_id: impl Into<String>, entries: Vec<(String, S)>) -> Result<Self> {
        let query_id = query_id.into();
        if let Some((doc, _)) = entries.iter().find(|(_, s)| s.is_nan()) {
            return Err(Error::Validation(format!("query {query_id:?}: NaN score for {doc:?}")));
        }
        if let Some(w) = entries.windows(2).find(|w| w[0].1 < w[1].1) {
            return Err(Error::Validation(format!(
                "query {query_id:?}: {:?} ranked above {:?} with a lower score",
                w[0].0, w[1].0
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some((doc, _)) = entries.iter().find(|(d, _)| !seen.insert(d.as_str())) {
            return Err(Error::Conflict {
                what: "doc_id in ranking",
                id: format!("{query_id}/{doc}"),
            });
        }
        Ok(Self { query_id, entries })
    }

    pub fn query_id(&self) -> &str {
        &self.query_id
    }

    pub fn entries(&self) -> &[(String, S)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(d, _)| d.as_str())
    }

    pub fn doc_set(&self) -> BTreeSet<&str> {
        self.doc_ids().collect()
    }

    pub fn into_entries(self) -> Vec<(String, S)> {
        self.entries
    }
}

/// A scorer together with the data it reads.
#[derive(Debug, Clone, Copy)]
pub enum Scorer<'a, S> {
    Bm25 {
        index: &'a InvertedIndex,
        params: Bm25Params<S>,
    },
    LmJm {
        index: &'a InvertedIndex,
        params: LmJmParams<S>,
    },
    Tilde {
        store: &'a TildeDistributionStore<S>,
    },
    TildeV2 {
        store: &'a ImpactStore<S>,
    },
}

pub(crate) fn token_ids(query: &[Token]) -> Result<Vec<u32>> {
    query
        .iter()
        .map(|t| {
            t.id.ok_or_else(|| {
                Error::Config(format!(
                    "token {:?} has no vocabulary id; contextualized scorers need subword analysis",
                    t.surface
                ))
            })
        })
        .collect()
}

fn terms(query: &[Token]) -> Vec<&str> {
    query.iter().map(|t| t.surface.as_str()).collect()
}

impl<S: Scalar> Scorer<'_, S> {
    pub fn name(&self) -> &'static str {
        match self {
            Scorer::Bm25 { .. } => "bm25",
            Scorer::LmJm { .. } => "lmjm",
            Scorer::Tilde { .. } => "tilde",
            Scorer::TildeV2 { .. } => "tildev2",
        }
    }

    /// Scores one (query, document) pair.
    pub fn score(&self, query: &[Token], doc_id: &str) -> Result<S> {
        match self {
            Scorer::Bm25 { index, params } => bm25_score(&terms(query), doc_id, index, params),
            Scorer::LmJm { index, params } => lm_jm_score(&terms(query), doc_id, index, params),
            Scorer::Tilde { store } => tilde_ql(&token_ids(query)?, doc_id, store),
            Scorer::TildeV2 { store } => tildev2_score(&token_ids(query)?, doc_id, store),
        }
    }
}

/// Scores every candidate of `pool` against the analyzed query and returns
/// them in rank order. Any candidate failure aborts the query.
pub fn rerank<S: Scalar>(query: &[Token], pool: &CandidatePool, scorer: &Scorer<'_, S>) -> Result<ScoredList<S>> {
    let with_context = |e: Error| match e {
        Error::NotFound { what, id } => Error::NotFound {
            what,
            id: format!("{id} (query {})", pool.query_id),
        },
        other => other,
    };
    let entries = match scorer {
        Scorer::Bm25 { index, params } => {
            let prepared = bm25::PreparedQuery::new(&terms(query), index, params);
            pool.candidates
                .iter()
                .map(|d| Ok((d.clone(), prepared.score(d)?)))
                .collect::<Result<Vec<_>>>()
        }
        Scorer::TildeV2 { store } => {
            let prepared = tilde::PreparedImpactQuery::new(&token_ids(query)?);
            pool.candidates
                .iter()
                .map(|d| Ok((d.clone(), prepared.score(d, store)?)))
                .collect::<Result<Vec<_>>>()
        }
        _ => pool
            .candidates
            .iter()
            .map(|d| Ok((d.clone(), scorer.score(query, d)?)))
            .collect::<Result<Vec<_>>>(),
    }
    .map_err(with_context)?;
    ScoredList::new(pool.query_id.clone(), entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(scores: &[(&str, f64)]) -> ScoredList<f64> {
        ScoredList::new("q", scores.iter().map(|(d, s)| (d.to_string(), *s)).collect()).unwrap()
    }

    #[test]
    fn sorts_by_score_then_doc_id() {
        let l = list(&[("d1", 1.0), ("d2", 2.0)]);
        assert_eq!(l.doc_ids().collect::<Vec<_>>(), ["d2", "d1"]);
        let l = list(&[("d2", 1.0), ("d1", 1.0)]);
        assert_eq!(l.doc_ids().collect::<Vec<_>>(), ["d1", "d2"]);
        let l = list(&[("b", 0.0), ("a", -0.0)]);
        assert_eq!(l.doc_ids().collect::<Vec<_>>(), ["a", "b"], "signed zeros tie");
    }

    #[test]
    fn rejects_duplicates_and_nan() {
        assert!(ScoredList::new("q", vec![("d".into(), 1.0), ("d".into(), 2.0)]).is_err());
        assert!(ScoredList::new("q", vec![("d".to_string(), f64::NAN)]).is_err());
    }

    #[test]
    fn rerank_returns_a_permutation_of_the_pool() {
        let mut store = ImpactStore::<f64>::new(100);
        let candidates: Vec<String> = (0..30).map(|i| format!("d{i:02}")).collect();
        for (i, d) in candidates.iter().enumerate() {
            store.insert(d, vec![((i % 7) as u32, i as f64 * 0.1)]).unwrap();
        }
        let pool = CandidatePool::new("q", candidates.clone());
        let query: Vec<Token> = (0..7u32)
            .map(|i| Token {
                surface: format!("t{i}"),
                id: Some(i),
            })
            .collect();
        let ranked = rerank(&query, &pool, &Scorer::TildeV2 { store: &store }).unwrap();
        assert_eq!(ranked.len(), 30);
        let mut ids: Vec<_> = ranked.doc_ids().map(str::to_owned).collect();
        ids.sort();
        assert_eq!(ids, candidates);
        assert_eq!(ranked, rerank(&query, &pool, &Scorer::TildeV2 { store: &store }).unwrap());
    }

    #[test]
    fn rerank_reports_unknown_candidate_with_query() {
        let store = ImpactStore::<f64>::new(10);
        let pool = CandidatePool::new("q7", vec!["missing".into()]);
        let err = rerank(&[], &pool, &Scorer::TildeV2 { store: &store }).unwrap_err();
        assert!(err.to_string().contains("q7"), "{err}");
    }

    #[test]
    fn contextual_scorers_need_ids() {
        let store = ImpactStore::<f64>::new(10);
        let err = Scorer::TildeV2 { store: &store }
            .score(&[Token::term("x")], "d")
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
