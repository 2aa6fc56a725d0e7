//! Batch orchestration shared by the command-line tool and the end-to-end
//! tests. Work is spread over a rayon pool per query or per document; results
//! are always collected in input order so outputs do not depend on the worker
//! count.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{compose_text, CandidatePool, Corpus, TextOrder};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::lexindex::TildeDistributionStore;
use crate::rankers::{expand_document, rerank, ExpansionConfig, ScoredList, Scorer};
use crate::scalar::Scalar;
use crate::textproc::{Analyzer, Token};

/// Runs `f` on a dedicated pool of `threads` workers (0 = one per core).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

/// Analyzes the seed document of every pool.
pub fn analyze_queries(
    corpus: &Corpus,
    pools: &[CandidatePool],
    analyzer: &Analyzer,
    order: TextOrder,
) -> Result<Vec<Vec<Token>>> {
    pools
        .par_iter()
        .map(|p| {
            let doc = corpus.require(&p.query().doc_id)?;
            Ok(analyzer.analyze(&compose_text(doc, order)))
        })
        .collect()
}

/// Reranks every pool; `queries[i]` holds the analyzed query of `pools[i]`.
pub fn rerank_all<S: Scalar>(
    pools: &[CandidatePool],
    queries: &[Vec<Token>],
    scorer: &Scorer<'_, S>,
) -> Result<Vec<ScoredList<S>>> {
    if pools.len() != queries.len() {
        return Err(Error::Validation(format!(
            "{} pools but {} analyzed queries",
            pools.len(),
            queries.len()
        )));
    }
    pools
        .par_iter()
        .zip(queries.par_iter())
        .map(|(p, q)| rerank(q, p, scorer))
        .collect()
}

/// Keys rankings by query id, rejecting repeats.
pub fn by_query<S>(lists: Vec<ScoredList<S>>) -> Result<BTreeMap<String, ScoredList<S>>>
where
    S: Scalar,
{
    let mut out = BTreeMap::new();
    for l in lists {
        let q = l.query_id().to_owned();
        if out.insert(q.clone(), l).is_some() {
            return Err(Error::Conflict { what: "query in run", id: q });
        }
    }
    Ok(out)
}

/// Expansion additions for every corpus document, keyed by doc id. Each
/// document must have a stored distribution.
pub fn expand_corpus<S: Scalar>(
    corpus: &Corpus,
    analyzer: &Analyzer,
    order: TextOrder,
    store: &TildeDistributionStore<S>,
    config: &ExpansionConfig,
) -> Result<BTreeMap<String, Vec<u32>>> {
    let vocab = analyzer
        .vocabulary()
        .ok_or_else(|| Error::Config("document expansion needs a subword vocabulary".into()))?;
    let rows: Vec<(String, Vec<u32>)> = corpus
        .documents()
        .par_iter()
        .map(|d| {
            let own: HashSet<u32> = analyzer
                .analyze(&compose_text(d, order))
                .into_iter()
                .filter_map(|t| t.id)
                .collect();
            let ranked = store.ranked(&d.doc_id)?;
            Ok((d.doc_id.clone(), expand_document(&own, &ranked, config, vocab)))
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().collect())
}

#[derive(Serialize)]
struct ExpansionRecord<'a> {
    doc_id: &'a str,
    added_token_ids: &'a [u32],
}

pub fn write_expansions<W: Write>(additions: &BTreeMap<String, Vec<u32>>, out: &mut W) -> std::io::Result<()> {
    for (doc_id, added) in additions {
        jsonl::write_record(
            out,
            &ExpansionRecord {
                doc_id,
                added_token_ids: added,
            },
        )?;
    }
    Ok(())
}

/// Writes any serializable records as JSON lines.
pub fn write_records<W: Write, T: Serialize>(records: &[T], out: &mut W) -> std::io::Result<()> {
    for r in records {
        jsonl::write_record(out, r)?;
    }
    Ok(())
}
