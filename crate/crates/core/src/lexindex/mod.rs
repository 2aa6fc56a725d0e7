//! Inverted index with the collection statistics BM25 and LM-JM need, and
//! the precomputed per-document stores consumed by the TILDE scorers.

mod stores;

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{compose_text, Corpus, TextOrder};
use crate::error::{Error, Result};
use crate::textproc::{unique_counts, Analyzer, AnalyzerSpec};

pub use stores::{
    load_impact_store, load_tilde_store, read_impact_store, read_tilde_store, write_impact_store,
    write_tilde_store, ImpactStore, TildeDistributionStore, DEFAULT_FLOOR_LOGPROB,
};

const INDEX_MAGIC: &str = "lexica-index";
const INDEX_VERSION: u32 = 1;

/// Collection statistics. Lengths count analyzed tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexStats {
    pub num_docs: u64,
    pub total_tokens: u64,
    pub avg_doc_len: f64,
    pub doc_len: BTreeMap<String, u64>,
    pub df: BTreeMap<String, u64>,
    pub cf: BTreeMap<String, u64>,
}

/// One posting: a document ordinal (see [`InvertedIndex::doc_id`]) and the
/// term frequency in that document.
pub type Posting = (u32, u32);

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    stats: IndexStats,
    analyzer: AnalyzerSpec,
    /// Sorted ascending; a document's ordinal is its position here.
    doc_ids: Vec<String>,
    ordinals: HashMap<String, u32>,
    doc_lens: Vec<u64>,
    postings: BTreeMap<String, Vec<Posting>>,
}

impl InvertedIndex {
    pub fn stats(&self) -> &IndexStats {
        &self.stats
    }

    pub fn analyzer(&self) -> &AnalyzerSpec {
        &self.analyzer
    }

    pub fn num_terms(&self) -> usize {
        self.postings.len()
    }

    pub fn doc_id(&self, ordinal: u32) -> &str {
        &self.doc_ids[ordinal as usize]
    }

    pub fn ordinal(&self, doc_id: &str) -> Option<u32> {
        self.ordinals.get(doc_id).copied()
    }

    pub fn doc_len(&self, ordinal: u32) -> u64 {
        self.doc_lens[ordinal as usize]
    }

    /// Postings for `term`, sorted by document id.
    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn term_frequency(&self, term: &str, ordinal: u32) -> u32 {
        let list = self.postings(term);
        list.binary_search_by_key(&ordinal, |p| p.0)
            .map(|i| list[i].1)
            .unwrap_or(0)
    }

    pub fn df(&self, term: &str) -> u64 {
        self.postings(term).len() as u64
    }

    pub fn cf(&self, term: &str) -> u64 {
        self.stats.cf.get(term).copied().unwrap_or(0)
    }

    /// Resolves a document id or fails with a not-found error.
    pub fn require(&self, doc_id: &str) -> Result<u32> {
        self.ordinal(doc_id).ok_or_else(|| Error::NotFound {
            what: "indexed document",
            id: doc_id.to_owned(),
        })
    }

    fn from_parts(analyzer: AnalyzerSpec, mut docs: Vec<(String, BTreeMap<String, usize>, u64)>) -> Self {
        docs.sort_by(|a, b| a.0.cmp(&b.0));
        let mut doc_ids = Vec::with_capacity(docs.len());
        let mut doc_lens = Vec::with_capacity(docs.len());
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        for (ord, (doc_id, counts, len)) in docs.into_iter().enumerate() {
            for (term, tf) in counts {
                postings.entry(term).or_default().push((ord as u32, tf as u32));
            }
            doc_ids.push(doc_id);
            doc_lens.push(len);
        }
        Self::assemble(analyzer, doc_ids, doc_lens, postings)
    }

    fn assemble(
        analyzer: AnalyzerSpec,
        doc_ids: Vec<String>,
        doc_lens: Vec<u64>,
        postings: BTreeMap<String, Vec<Posting>>,
    ) -> Self {
        let total_tokens: u64 = doc_lens.iter().sum();
        let num_docs = doc_ids.len() as u64;
        let stats = IndexStats {
            num_docs,
            total_tokens,
            avg_doc_len: if num_docs == 0 { 0.0 } else { total_tokens as f64 / num_docs as f64 },
            doc_len: doc_ids.iter().cloned().zip(doc_lens.iter().copied()).collect(),
            df: postings.iter().map(|(t, p)| (t.clone(), p.len() as u64)).collect(),
            cf: postings
                .iter()
                .map(|(t, p)| (t.clone(), p.iter().map(|&(_, tf)| u64::from(tf)).sum()))
                .collect(),
        };
        let ordinals = doc_ids
            .iter()
            .enumerate()
            .map(|(i, d)| (d.clone(), i as u32))
            .collect();
        Self {
            stats,
            analyzer,
            doc_ids,
            ordinals,
            doc_lens,
            postings,
        }
    }
}

/// Analyzes every document (title and abstract composed in `order`, no
/// truncation) and builds postings plus statistics. Per-document analysis
/// runs on the current rayon pool; the merged result is independent of
/// scheduling.
pub fn build_index(corpus: &Corpus, analyzer: &Analyzer, order: TextOrder) -> Result<InvertedIndex> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus to index"));
    }
    let docs: Vec<(String, BTreeMap<String, usize>, u64)> = corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let tokens = analyzer.analyze(&compose_text(doc, order));
            let len = tokens.len() as u64;
            let counts = unique_counts(tokens.into_iter().map(|t| t.surface));
            (doc.doc_id.clone(), counts, len)
        })
        .collect();
    Ok(InvertedIndex::from_parts(analyzer.spec().clone(), docs))
}

#[derive(Serialize, Deserialize)]
struct IndexBody {
    analyzer: AnalyzerSpec,
    doc_ids: Vec<String>,
    doc_lens: Vec<u64>,
    postings: BTreeMap<String, Vec<Posting>>,
}

/// Writes a versioned header line followed by a JSON body. Output is a pure
/// function of the index contents.
pub fn persist_index<W: Write>(index: &InvertedIndex, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{INDEX_MAGIC} v{INDEX_VERSION}")?;
    let body = IndexBody {
        analyzer: index.analyzer.clone(),
        doc_ids: index.doc_ids.clone(),
        doc_lens: index.doc_lens.clone(),
        postings: index.postings.clone(),
    };
    serde_json::to_writer(&mut *out, &body)?;
    out.write_all(b"\n")
}

pub fn read_index<R: BufRead>(mut reader: R) -> Result<InvertedIndex> {
    let mut header = String::new();
    reader
        .read_line(&mut header)
        .map_err(|e| Error::Format(format!("cannot read index header: {e}")))?;
    let expected = format!("{INDEX_MAGIC} v{INDEX_VERSION}");
    let header = header.trim_end();
    if header != expected {
        return Err(Error::Format(format!("index header {header:?}, expected {expected:?}")));
    }
    let body: IndexBody =
        serde_json::from_reader(reader).map_err(|e| Error::Format(format!("corrupt index body: {e}")))?;
    if body.doc_ids.len() != body.doc_lens.len() {
        return Err(Error::Format("document table and length table differ in size".into()));
    }
    if body.doc_ids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Format("document table is not strictly sorted".into()));
    }
    let n = body.doc_ids.len() as u32;
    for (term, list) in &body.postings {
        if list.is_empty()
            || list.windows(2).any(|w| w[0].0 >= w[1].0)
            || list.iter().any(|&(d, tf)| d >= n || tf == 0)
        {
            return Err(Error::Format(format!("invalid postings for term {term:?}")));
        }
    }
    Ok(InvertedIndex::assemble(body.analyzer, body.doc_ids, body.doc_lens, body.postings))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<InvertedIndex> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_index(std::io::BufReader::new(file))
}
