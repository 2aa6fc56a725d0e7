//! Scorers over precomputed contextualized weights.

use crate::error::Result;
use crate::lexindex::{ImpactStore, TildeDistributionStore};
use crate::scalar::Scalar;
use crate::textproc::unique_counts;

/// Query likelihood: sum of the document's log-probability for every query
/// token occurrence. Queries are never truncated.
pub fn tilde_ql<S: Scalar>(query_token_ids: &[u32], doc_id: &str, store: &TildeDistributionStore<S>) -> Result<S> {
    store.sum_logprobs(doc_id, query_token_ids)
}

pub(crate) struct PreparedImpactQuery<S> {
    /// (token id, occurrence count) per unique query token.
    counts: Vec<(u32, S)>,
}

impl<S: Scalar> PreparedImpactQuery<S> {
    pub(crate) fn new(query_token_ids: &[u32]) -> Self {
        Self {
            counts: unique_counts(query_token_ids.iter().copied())
                .into_iter()
                .map(|(t, c)| (t, S::of_count(c)))
                .collect(),
        }
    }

    pub(crate) fn score(&self, doc_id: &str, store: &ImpactStore<S>) -> Result<S> {
        let weights = store.weights(doc_id)?;
        let mut total = S::zero();
        for &(token, count) in &self.counts {
            if let Ok(i) = weights.binary_search_by_key(&token, |w| w.0) {
                total = total + count * weights[i].1;
            }
        }
        Ok(total)
    }
}

/// Exact-match impact score: for each unique query token, its query count
/// times the document's stored (maximum) weight for that token.
pub fn tildev2_score<S: Scalar>(query_token_ids: &[u32], doc_id: &str, store: &ImpactStore<S>) -> Result<S> {
    PreparedImpactQuery::new(query_token_ids).score(doc_id, store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexindex::DEFAULT_FLOOR_LOGPROB;

    #[test]
    fn query_likelihood_sums_occurrences() {
        let mut s = TildeDistributionStore::<f64>::new(16, DEFAULT_FLOOR_LOGPROB).unwrap();
        s.insert("d", vec![(5, -1.0), (9, -2.0)], None).unwrap();
        assert_eq!(tilde_ql(&[5, 9], "d", &s).unwrap(), -3.0);
        assert_eq!(tilde_ql(&[5, 5], "d", &s).unwrap(), -2.0);
        assert_eq!(tilde_ql(&[7], "d", &s).unwrap(), DEFAULT_FLOOR_LOGPROB);
        assert_eq!(tilde_ql(&[], "d", &s).unwrap(), 0.0);
        assert!(tilde_ql(&[1], "nope", &s).is_err());
    }

    #[test]
    fn exact_match_impacts() {
        let (a, b, c) = (1u32, 2u32, 3u32);
        let mut s = ImpactStore::<f64>::new(8);
        s.insert("d", vec![(a, 0.5), (c, 0.3)]).unwrap();
        s.insert("z", vec![(a, 0.0)]).unwrap();
        assert_eq!(tildev2_score(&[a, b, a], "d", &s).unwrap(), 1.0);
        assert_eq!(tildev2_score(&[b], "d", &s).unwrap(), 0.0);
        assert_eq!(tildev2_score(&[a], "z", &s).unwrap(), 0.0);
        assert!(tildev2_score(&[a], "nope", &s).is_err());
    }
}
