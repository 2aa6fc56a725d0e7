//! Lucene-style BM25.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lexindex::{InvertedIndex, Posting};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bm25Params<S> {
    pub k1: S,
    pub b: S,
    /// Weight each distinct query term by its number of occurrences in the
    /// query. Off by default: each distinct term counts once.
    pub query_multiplicity: bool,
}

impl<S: Scalar> Default for Bm25Params<S> {
    fn default() -> Self {
        Self {
            k1: S::of(2.75),
            b: S::one(),
            query_multiplicity: false,
        }
    }
}

impl<S: Scalar> Bm25Params<S> {
    pub fn new(k1: S, b: S) -> Result<Self> {
        let p = Self {
            k1,
            b,
            query_multiplicity: false,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k1 >= S::zero()) {
            return Err(Error::Config(format!("BM25 k1 = {} must be >= 0", self.k1)));
        }
        if !(self.b >= S::zero() && self.b <= S::one()) {
            return Err(Error::Config(format!("BM25 b = {} must lie in [0, 1]", self.b)));
        }
        Ok(())
    }
}

/// ln(1 + (N - df + 0.5) / (df + 0.5)).
pub fn bm25_idf<S: Scalar>(num_docs: u64, df: u64) -> S {
    let half = S::of(0.5);
    let n = S::of(num_docs as f64);
    let df = S::of(df as f64);
    (S::one() + (n - df + half) / (df + half)).ln()
}

/// Contribution of a single term: idf * tf / (tf + k1 * (1 - b + b * dl / avgdl)).
/// Zero when `tf` is zero.
pub fn bm25_term_score<S: Scalar>(tf: S, idf: S, doc_len: S, avg_doc_len: S, params: &Bm25Params<S>) -> S {
    if tf <= S::zero() {
        return S::zero();
    }
    let norm = params.k1 * (S::one() - params.b + params.b * doc_len / avg_doc_len);
    idf * tf / (tf + norm)
}

pub(crate) struct PreparedQuery<'a, S> {
    index: &'a InvertedIndex,
    params: Bm25Params<S>,
    avg_doc_len: S,
    /// (postings, idf * query weight), one per distinct indexed query term.
    terms: Vec<(&'a [Posting], S, S)>,
}

impl<'a, S: Scalar> PreparedQuery<'a, S> {
    pub(crate) fn new(query_terms: &[&str], index: &'a InvertedIndex, params: &Bm25Params<S>) -> Self {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for t in query_terms {
            *counts.entry(t).or_insert(0) += 1;
        }
        let n = index.stats().num_docs;
        let terms = counts
            .into_iter()
            .filter_map(|(term, count)| {
                let postings = index.postings(term);
                if postings.is_empty() {
                    return None;
                }
                let qw = if params.query_multiplicity { S::of_count(count) } else { S::one() };
                Some((postings, bm25_idf::<S>(n, postings.len() as u64), qw))
            })
            .collect();
        Self {
            index,
            params: *params,
            avg_doc_len: S::of(index.stats().avg_doc_len),
            terms,
        }
    }

    pub(crate) fn score(&self, doc_id: &str) -> Result<S> {
        let ord = self.index.require(doc_id)?;
        let dl = S::of(self.index.doc_len(ord) as f64);
        let mut total = S::zero();
        for &(postings, idf, qw) in &self.terms {
            if let Ok(i) = postings.binary_search_by_key(&ord, |p| p.0) {
                let tf = S::of(f64::from(postings[i].1));
                total = total + qw * bm25_term_score(tf, idf, dl, self.avg_doc_len, &self.params);
            }
        }
        Ok(total)
    }
}

/// BM25 score of `doc_id` for the analyzed query terms.
pub fn bm25_score<S: Scalar>(
    query_terms: &[&str],
    doc_id: &str,
    index: &InvertedIndex,
    params: &Bm25Params<S>,
) -> Result<S> {
    PreparedQuery::new(query_terms, index, params).score(doc_id)
}
