//! Language-model scoring with Jelinek-Mercer smoothing, in the form used by
//! Lucene's `LMJelinekMercerSimilarity`.

use crate::error::{Error, Result};
use crate::lexindex::InvertedIndex;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmJmParams<S> {
    pub lambda: S,
}

impl<S: Scalar> Default for LmJmParams<S> {
    fn default() -> Self {
        Self { lambda: S::of(0.1) }
    }
}

impl<S: Scalar> LmJmParams<S> {
    pub fn new(lambda: S) -> Result<Self> {
        if !(lambda > S::zero() && lambda < S::one()) {
            return Err(Error::Config(format!("LM-JM lambda = {lambda} must lie in (0, 1)")));
        }
        Ok(Self { lambda })
    }
}

/// ln(1 + ((1 - λ) tf/dl) / (λ cf/T)) for a matching term; zero when tf = 0.
pub fn lm_jm_term_score<S: Scalar>(tf: S, doc_len: S, cf: S, total_tokens: S, params: &LmJmParams<S>) -> S {
    if tf <= S::zero() {
        return S::zero();
    }
    let lambda = params.lambda;
    let p_doc = (S::one() - lambda) * tf / doc_len;
    let p_coll = lambda * cf / total_tokens;
    (S::one() + p_doc / p_coll).ln()
}

/// Sums the term score over every query token occurrence that matches.
pub fn lm_jm_score<S: Scalar>(
    query_terms: &[&str],
    doc_id: &str,
    index: &InvertedIndex,
    params: &LmJmParams<S>,
) -> Result<S> {
    let ord = index.require(doc_id)?;
    let dl = S::of(index.doc_len(ord) as f64);
    let total = S::of(index.stats().total_tokens as f64);
    let mut score = S::zero();
    for term in query_terms {
        let tf = index.term_frequency(term, ord);
        if tf > 0 {
            let cf = S::of(index.cf(term) as f64);
            score = score + lm_jm_term_score(S::of(f64::from(tf)), dl, cf, total, params);
        }
    }
    Ok(score)
}
