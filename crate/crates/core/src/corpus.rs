//! Corpus, candidate pool and relevance judgment ingestion, plus the data
//! preparation steps (validation split, training triplets).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;

/// A unit of retrieval: a paper with a title and an abstract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default, rename = "abstract")]
    pub abstract_text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, title: impl Into<String>, abstract_text: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.doc_id.is_empty() {
            return Err(Error::Validation("document with empty doc_id".into()));
        }
        if self.title.is_empty() && self.abstract_text.is_empty() {
            return Err(Error::Validation(format!(
                "document {:?} has neither title nor abstract",
                self.doc_id
            )));
        }
        Ok(())
    }
}

/// Field order used when concatenating title and abstract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TextOrder {
    #[default]
    TitleFirst,
    AbstractFirst,
}

/// Joins title and abstract with a single space, skipping empty fields.
pub fn compose_text(doc: &Document, order: TextOrder) -> String {
    let (first, second) = match order {
        TextOrder::TitleFirst => (&doc.title, &doc.abstract_text),
        TextOrder::AbstractFirst => (&doc.abstract_text, &doc.title),
    };
    match (first.is_empty(), second.is_empty()) {
        (false, false) => format!("{first} {second}"),
        (false, true) => first.clone(),
        (true, false) => second.clone(),
        (true, true) => String::new(),
    }
}

/// An immutable collection of documents addressable by id. Iteration follows
/// insertion (file) order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    docs: Vec<Document>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    pub fn from_documents(docs: Vec<Document>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(docs.len());
        for (i, doc) in docs.iter().enumerate() {
            doc.validate()?;
            if by_id.insert(doc.doc_id.clone(), i).is_some() {
                return Err(Error::Conflict {
                    what: "doc_id",
                    id: doc.doc_id.clone(),
                });
            }
        }
        Ok(Self { docs, by_id })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.by_id.contains_key(doc_id)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.docs.iter()
    }

    pub fn documents(&self) -> &[Document] {
        &self.docs
    }

    pub fn require(&self, doc_id: &str) -> Result<&Document> {
        self.get(doc_id).ok_or_else(|| Error::NotFound {
            what: "doc_id",
            id: doc_id.to_owned(),
        })
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Document;
    type IntoIter = std::slice::Iter<'a, Document>;

    fn into_iter(self) -> Self::IntoIter {
        self.docs.iter()
    }
}

pub fn read_corpus<R: BufRead>(reader: R, origin: &Path) -> Result<Corpus> {
    let mut docs = Vec::new();
    let mut seen = HashMap::new();
    jsonl::for_each_record(reader, origin, |line, doc: Document| {
        doc.validate()
            .map_err(|e| Error::parse(origin, line, e.to_string()))?;
        if let Some(first) = seen.insert(doc.doc_id.clone(), line) {
            log::error!("{}:{line}: doc_id {:?} first seen on line {first}", origin.display(), doc.doc_id);
            return Err(Error::Conflict {
                what: "doc_id",
                id: doc.doc_id,
            });
        }
        docs.push(doc);
        Ok(())
    })?;
    Corpus::from_documents(docs)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    read_corpus(jsonl::open(path)?, path)
}

pub fn write_corpus<W: Write>(corpus: &Corpus, out: &mut W) -> std::io::Result<()> {
    for doc in corpus {
        jsonl::write_record(out, doc)?;
    }
    Ok(())
}

/// A seed document acting as the query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QbeQuery {
    pub query_id: String,
    pub doc_id: String,
}

/// Candidates to rerank for one query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePool {
    pub query_id: String,
    /// Document holding the query text. Defaults to `query_id`, which is the
    /// SciDocs convention (queries are papers of the same collection).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_doc_id: Option<String>,
    pub candidates: Vec<String>,
}

impl CandidatePool {
    pub fn new(query_id: impl Into<String>, candidates: Vec<String>) -> Self {
        Self {
            query_id: query_id.into(),
            query_doc_id: None,
            candidates,
        }
    }

    pub fn query(&self) -> QbeQuery {
        QbeQuery {
            query_id: self.query_id.clone(),
            doc_id: self.query_doc_id.clone().unwrap_or_else(|| self.query_id.clone()),
        }
    }

    pub fn validate(&self, corpus: &Corpus) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::Validation(format!(
                "candidate pool for query {:?} is empty",
                self.query_id
            )));
        }
        corpus.require(&self.query().doc_id)?;
        let mut seen = BTreeSet::new();
        for doc_id in &self.candidates {
            if !seen.insert(doc_id.as_str()) {
                return Err(Error::Conflict {
                    what: "candidate",
                    id: format!("{}/{}", self.query_id, doc_id),
                });
            }
            corpus.require(doc_id)?;
        }
        Ok(())
    }
}

pub fn read_pools<R: BufRead>(reader: R, origin: &Path, corpus: &Corpus) -> Result<Vec<CandidatePool>> {
    let mut pools = Vec::new();
    let mut seen = BTreeSet::new();
    jsonl::for_each_record(reader, origin, |line, pool: CandidatePool| {
        pool.validate(corpus)
            .map_err(|e| Error::parse(origin, line, e.to_string()))?;
        if !seen.insert(pool.query_id.clone()) {
            return Err(Error::Conflict {
                what: "query_id",
                id: pool.query_id,
            });
        }
        pools.push(pool);
        Ok(())
    })?;
    Ok(pools)
}

/// Loads candidate pools, checking every referenced document against `corpus`.
pub fn load_pools(path: impl AsRef<Path>, corpus: &Corpus) -> Result<Vec<CandidatePool>> {
    let path = path.as_ref();
    read_pools(jsonl::open(path)?, path, corpus)
}

pub fn write_pools<W: Write>(pools: &[CandidatePool], out: &mut W) -> std::io::Result<()> {
    for pool in pools {
        jsonl::write_record(out, pool)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelevanceJudgment {
    pub query_id: String,
    pub doc_id: String,
    pub grade: u8,
}

/// Binary relevance judgments keyed by query then document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    by_query: BTreeMap<String, BTreeMap<String, u8>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, judgment: RelevanceJudgment) -> Result<()> {
        if judgment.grade > 1 {
            return Err(Error::Validation(format!(
                "grade {} for ({:?}, {:?}) is not binary",
                judgment.grade, judgment.query_id, judgment.doc_id
            )));
        }
        let slot = self.by_query.entry(judgment.query_id.clone()).or_default();
        if slot.insert(judgment.doc_id.clone(), judgment.grade).is_some() {
            return Err(Error::Conflict {
                what: "judgment",
                id: format!("{}/{}", judgment.query_id, judgment.doc_id),
            });
        }
        Ok(())
    }

    pub fn for_query(&self, query_id: &str) -> Option<&BTreeMap<String, u8>> {
        self.by_query.get(query_id)
    }

    pub fn query_ids(&self) -> impl Iterator<Item = &str> {
        self.by_query.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.by_query.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_query.is_empty()
    }

    pub fn judgments(&self) -> impl Iterator<Item = RelevanceJudgment> + '_ {
        self.by_query.iter().flat_map(|(q, docs)| {
            docs.iter().map(move |(d, &g)| RelevanceJudgment {
                query_id: q.clone(),
                doc_id: d.clone(),
                grade: g,
            })
        })
    }
}

/// Reads TREC qrels (`query_id 0 doc_id grade`). When `corpus` is given,
/// every judged document must exist in it.
pub fn read_qrels<R: BufRead>(reader: R, origin: &Path, corpus: Option<&Corpus>) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 4 {
            return Err(Error::parse(origin, line_no, format!("expected 4 columns, found {}", cols.len())));
        }
        let grade: i64 = cols[3]
            .parse()
            .map_err(|_| Error::parse(origin, line_no, format!("grade {:?} is not an integer", cols[3])))?;
        if !(0..=1).contains(&grade) {
            return Err(Error::parse(origin, line_no, format!("grade {grade} is not in {{0,1}}")));
        }
        if let Some(corpus) = corpus {
            if !corpus.contains(cols[2]) {
                return Err(Error::parse(origin, line_no, format!("unknown doc_id {:?}", cols[2])));
            }
        }
        qrels
            .insert(RelevanceJudgment {
                query_id: cols[0].to_owned(),
                doc_id: cols[2].to_owned(),
                grade: grade as u8,
            })
            .map_err(|e| Error::parse(origin, line_no, e.to_string()))?;
    }
    Ok(qrels)
}

pub fn load_qrels(path: impl AsRef<Path>, corpus: Option<&Corpus>) -> Result<Qrels> {
    let path = path.as_ref();
    read_qrels(jsonl::open(path)?, path, corpus)
}

pub fn write_qrels<W: Write>(qrels: &Qrels, out: &mut W) -> std::io::Result<()> {
    for j in qrels.judgments() {
        writeln!(out, "{} 0 {} {}", j.query_id, j.doc_id, j.grade)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train_query_ids: BTreeSet<String>,
    pub validation_query_ids: BTreeSet<String>,
    pub seed: u64,
}

/// Seeded Fisher-Yates shuffle followed by a prefix split; the first
/// `floor(train_fraction * n)` shuffled ids form the training set.
pub fn split_validation(query_ids: &[String], train_fraction: f64, seed: u64) -> Result<DatasetSplit> {
    if query_ids.is_empty() {
        return Err(Error::Empty("query ids to split"));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Config(format!("train fraction {train_fraction} must lie in (0, 1)")));
    }
    let mut shuffled = query_ids.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // 1e-9 absorbs representation error such as 0.29 * 100 = 28.999999999999996.
    let n_train = ((train_fraction * shuffled.len() as f64) + 1e-9).floor() as usize;
    let validation = shuffled.split_off(n_train.min(shuffled.len()));
    Ok(DatasetSplit {
        train_query_ids: shuffled.into_iter().collect(),
        validation_query_ids: validation.into_iter().collect(),
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingTriplet {
    pub query_id: String,
    pub positive_doc_id: String,
    pub negative_doc_id: String,
}

/// Emits `negatives_per_positive` triplets per relevant document. Negatives
/// are drawn without replacement for each positive, falling back to drawing
/// with replacement only when the negative pool is too small.
pub fn make_triplets(
    query_id: &str,
    judgments: &BTreeMap<String, u8>,
    negatives_per_positive: usize,
    seed: u64,
) -> Result<Vec<TrainingTriplet>> {
    if negatives_per_positive == 0 {
        return Err(Error::Config("negatives per positive must be at least 1".into()));
    }
    let positives: Vec<&String> = judgments.iter().filter(|(_, &g)| g > 0).map(|(d, _)| d).collect();
    let negatives: Vec<&String> = judgments.iter().filter(|(_, &g)| g == 0).map(|(d, _)| d).collect();
    if positives.is_empty() {
        return Ok(Vec::new());
    }
    if negatives.is_empty() {
        return Err(Error::Validation(format!(
            "query {query_id:?} has relevant documents but no non-relevant ones"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Vec::with_capacity(positives.len() * negatives_per_positive);
    for pos in positives {
        let picked: Vec<&String> = if negatives.len() >= negatives_per_positive {
            negatives
                .choose_multiple(&mut rng, negatives_per_positive)
                .copied()
                .collect()
        } else {
            (0..negatives_per_positive)
                .map(|_| *negatives.choose(&mut rng).expect("non-empty negatives"))
                .collect()
        };
        triplets.extend(picked.into_iter().map(|neg| TrainingTriplet {
            query_id: query_id.to_owned(),
            positive_doc_id: pos.clone(),
            negative_doc_id: neg.clone(),
        }));
    }
    Ok(triplets)
}

/// Tab-separated `query_id  positive_doc_id  negative_doc_id`.
pub fn write_triplets<W: Write>(triplets: &[TrainingTriplet], out: &mut W) -> std::io::Result<()> {
    for t in triplets {
        writeln!(out, "{}\t{}\t{}", t.query_id, t.positive_doc_id, t.negative_doc_id)?;
    }
    Ok(())
}

/// Stable per-key seed derivation (FNV-1a over the key, mixed with `seed`),
/// so per-query randomness does not depend on processing order.
pub fn derive_seed(seed: u64, key: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ seed;
    for b in key.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
