//! Precomputed contextualized weight stores.
//!
//! * [`TildeDistributionStore`]: per-document sparse token log-probabilities,
//!   with a floor returned for tokens that were not stored.
//! * [`ImpactStore`]: per-document scalar impact weights, one per token (the
//!   maximum over the token's positions); absent tokens weigh zero.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::scalar::Scalar;

/// ln(1e-6).
pub const DEFAULT_FLOOR_LOGPROB: f64 = -13.815_510_557_964_274;

fn unknown_doc(doc_id: &str) -> Error {
    Error::NotFound {
        what: "document in store",
        id: doc_id.to_owned(),
    }
}

fn lookup_sorted<S: Copy>(entries: &[(u32, S)], token_id: u32) -> Option<S> {
    entries
        .binary_search_by_key(&token_id, |e| e.0)
        .ok()
        .map(|i| entries[i].1)
}

#[derive(Debug, Clone, PartialEq)]
struct Distribution<S> {
    /// Sorted by token id.
    entries: Vec<(u32, S)>,
    floor: Option<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TildeDistributionStore<S> {
    docs: HashMap<String, Distribution<S>>,
    floor_logprob: S,
    vocab_size: u32,
}

impl<S: Scalar> TildeDistributionStore<S> {
    pub fn new(vocab_size: u32, floor_logprob: S) -> Result<Self> {
        if !(floor_logprob <= S::zero()) {
            return Err(Error::Validation(format!("floor log-probability {floor_logprob} must be <= 0")));
        }
        Ok(Self {
            docs: HashMap::new(),
            floor_logprob,
            vocab_size,
        })
    }

    pub fn floor_logprob(&self) -> S {
        self.floor_logprob
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.docs.contains_key(doc_id)
    }

    /// Adds one document. `floor` overrides the store floor for this document.
    pub fn insert(&mut self, doc_id: &str, entries: Vec<(u32, S)>, floor: Option<S>) -> Result<()> {
        if self.docs.contains_key(doc_id) {
            return Err(Error::Conflict {
                what: "doc_id in distribution store",
                id: doc_id.to_owned(),
            });
        }
        if let Some(f) = floor {
            if !(f <= S::zero()) {
                return Err(Error::Validation(format!("document {doc_id:?}: floor {f} must be <= 0")));
            }
        }
        let mut entries = entries;
        for &(token, lp) in &entries {
            if token >= self.vocab_size {
                return Err(Error::OutOfRange(format!(
                    "document {doc_id:?}: token {token} >= vocabulary size {}",
                    self.vocab_size
                )));
            }
            if !(lp <= S::zero()) {
                return Err(Error::Validation(format!(
                    "document {doc_id:?}: token {token} has log-probability {lp} > 0"
                )));
            }
        }
        entries.sort_by_key(|e| e.0);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::Validation(format!(
                "document {doc_id:?}: token {} listed twice",
                w[0].0
            )));
        }
        self.docs.insert(doc_id.to_owned(), Distribution { entries, floor });
        Ok(())
    }

    /// Log-probability of `token_id` under the document's distribution; the
    /// floor for tokens not stored.
    pub fn lookup(&self, doc_id: &str, token_id: u32) -> Result<S> {
        let dist = self.docs.get(doc_id).ok_or_else(|| unknown_doc(doc_id))?;
        Ok(lookup_sorted(&dist.entries, token_id).unwrap_or_else(|| dist.floor.unwrap_or(self.floor_logprob)))
    }

    /// Sum of log-probabilities over every token occurrence.
    pub fn sum_logprobs(&self, doc_id: &str, token_ids: &[u32]) -> Result<S> {
        let dist = self.docs.get(doc_id).ok_or_else(|| unknown_doc(doc_id))?;
        let floor = dist.floor.unwrap_or(self.floor_logprob);
        Ok(token_ids.iter().fold(S::zero(), |acc, &t| {
            acc + lookup_sorted(&dist.entries, t).unwrap_or(floor)
        }))
    }

    /// Stored entries ordered by log-probability descending, token id
    /// ascending on ties.
    pub fn ranked(&self, doc_id: &str) -> Result<Vec<(u32, S)>> {
        let dist = self.docs.get(doc_id).ok_or_else(|| unknown_doc(doc_id))?;
        let mut ranked = dist.entries.clone();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite log-probabilities").then(a.0.cmp(&b.0)));
        Ok(ranked)
    }

    fn sorted_doc_ids(&self) -> Vec<&String> {
        let mut ids: Vec<&String> = self.docs.keys().collect();
        ids.sort();
        ids
    }
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct TildeRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    doc_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    entries: Option<Vec<(u32, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    floor: Option<f64>,
    /// File-level floor; only valid on a record without `doc_id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    floor_logprob: Option<f64>,
}

fn finite<S: Scalar>(v: f64, origin: &Path, line: usize) -> Result<S> {
    if v.is_finite() {
        Ok(S::of(v))
    } else {
        Err(Error::parse(origin, line, format!("non-finite value {v}")))
    }
}

/// Reads `{doc_id, entries: [[token_id, logprob], ...], floor?}` records. A
/// record carrying only `floor_logprob` sets the floor for the whole file,
/// overriding `default_floor`.
pub fn read_tilde_store<S: Scalar, R: BufRead>(
    reader: R,
    origin: &Path,
    vocab_size: u32,
    default_floor: S,
) -> Result<TildeDistributionStore<S>> {
    let mut store = TildeDistributionStore::new(vocab_size, default_floor)?;
    let mut file_floor_seen = false;
    jsonl::for_each_record(reader, origin, |line, rec: TildeRecord| {
        let in_line = |e: Error| Error::parse(origin, line, e.to_string());
        match rec.doc_id {
            None => {
                let floor = rec
                    .floor_logprob
                    .ok_or_else(|| Error::parse(origin, line, "record has neither doc_id nor floor_logprob"))?;
                if file_floor_seen || !store.is_empty() {
                    return Err(Error::parse(origin, line, "file-level floor must be the first record"));
                }
                let floor = finite::<S>(floor, origin, line)?;
                if !(floor <= S::zero()) {
                    return Err(Error::parse(origin, line, format!("floor {floor} must be <= 0")));
                }
                store.floor_logprob = floor;
                file_floor_seen = true;
                Ok(())
            }
            Some(doc_id) => {
                let entries = rec
                    .entries
                    .unwrap_or_default()
                    .into_iter()
                    .map(|(t, lp)| Ok((t, finite::<S>(lp, origin, line)?)))
                    .collect::<Result<Vec<_>>>()?;
                let floor = rec.floor.map(|f| finite::<S>(f, origin, line)).transpose()?;
                store.insert(&doc_id, entries, floor).map_err(in_line)
            }
        }
    })?;
    Ok(store)
}

pub fn load_tilde_store<S: Scalar>(
    path: impl AsRef<Path>,
    vocab_size: u32,
    floor_logprob: S,
) -> Result<TildeDistributionStore<S>> {
    let path = path.as_ref();
    read_tilde_store(jsonl::open(path)?, path, vocab_size, floor_logprob)
}

/// Writes the store in the same format it is read from, documents sorted by id.
pub fn write_tilde_store<S: Scalar, W: Write>(store: &TildeDistributionStore<S>, out: &mut W) -> std::io::Result<()> {
    jsonl::write_record(
        out,
        &TildeRecord {
            floor_logprob: Some(store.floor_logprob.as_f64()),
            ..Default::default()
        },
    )?;
    for doc_id in store.sorted_doc_ids() {
        let dist = &store.docs[doc_id];
        jsonl::write_record(
            out,
            &TildeRecord {
                doc_id: Some(doc_id.clone()),
                entries: Some(dist.entries.iter().map(|&(t, lp)| (t, lp.as_f64())).collect()),
                floor: dist.floor.map(Scalar::as_f64),
                floor_logprob: None,
            },
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpactStore<S> {
    /// Per document, sorted by token id, one weight per token.
    docs: HashMap<String, Vec<(u32, S)>>,
    vocab_size: u32,
}

impl<S: Scalar> ImpactStore<S> {
    pub fn new(vocab_size: u32) -> Self {
        Self {
            docs: HashMap::new(),
            vocab_size,
        }
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.docs.contains_key(doc_id)
    }

    /// Adds one document from per-position `(token_id, weight)` pairs,
    /// keeping the maximum weight per token.
    pub fn insert(&mut self, doc_id: &str, weights: Vec<(u32, S)>) -> Result<()> {
        if self.docs.contains_key(doc_id) {
            return Err(Error::Conflict {
                what: "doc_id in impact store",
                id: doc_id.to_owned(),
            });
        }
        let collapsed = self.collapse(doc_id, weights)?;
        self.docs.insert(doc_id.to_owned(), collapsed);
        Ok(())
    }

    fn collapse(&self, doc_id: &str, mut weights: Vec<(u32, S)>) -> Result<Vec<(u32, S)>> {
        for &(token, w) in &weights {
            if token >= self.vocab_size {
                return Err(Error::OutOfRange(format!(
                    "document {doc_id:?}: token {token} >= vocabulary size {}",
                    self.vocab_size
                )));
            }
            if !(w >= S::zero()) || !w.is_finite() {
                return Err(Error::Validation(format!(
                    "document {doc_id:?}: token {token} has weight {w}, expected a finite value >= 0"
                )));
            }
        }
        weights.sort_by_key(|e| e.0);
        let mut out: Vec<(u32, S)> = Vec::with_capacity(weights.len());
        for (t, w) in weights {
            match out.last_mut() {
                Some(last) if last.0 == t => last.1 = last.1.max(w),
                _ => out.push((t, w)),
            }
        }
        Ok(out)
    }

    /// Folds additional weights (e.g. for expansion tokens) into an existing
    /// or new document entry, keeping per-token maxima.
    pub fn merge(&mut self, doc_id: &str, weights: Vec<(u32, S)>) -> Result<()> {
        let mut combined = self.docs.remove(doc_id).unwrap_or_default();
        combined.extend(weights);
        let collapsed = self.collapse(doc_id, combined)?;
        self.docs.insert(doc_id.to_owned(), collapsed);
        Ok(())
    }

    /// Merges every document of `other` into `self`.
    pub fn merge_store(&mut self, other: ImpactStore<S>) -> Result<()> {
        let mut ids: Vec<String> = other.docs.keys().cloned().collect();
        ids.sort();
        let mut other = other;
        for id in ids {
            let w = other.docs.remove(&id).expect("key listed above");
            self.merge(&id, w)?;
        }
        Ok(())
    }

    /// Weight of `token_id` in the document; zero when the token is absent.
    pub fn lookup(&self, doc_id: &str, token_id: u32) -> Result<S> {
        let entries = self.docs.get(doc_id).ok_or_else(|| unknown_doc(doc_id))?;
        Ok(lookup_sorted(entries, token_id).unwrap_or_else(S::zero))
    }

    pub fn weights(&self, doc_id: &str) -> Result<&[(u32, S)]> {
        self.docs
            .get(doc_id)
            .map(Vec::as_slice)
            .ok_or_else(|| unknown_doc(doc_id))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ImpactRecord {
    doc_id: String,
    weights: Vec<(u32, f64)>,
}

/// Reads `{doc_id, weights: [[token_id, weight], ...]}` records. Repeated
/// tokens within a record collapse to their maximum weight.
pub fn read_impact_store<S: Scalar, R: BufRead>(reader: R, origin: &Path, vocab_size: u32) -> Result<ImpactStore<S>> {
    let mut store = ImpactStore::new(vocab_size);
    jsonl::for_each_record(reader, origin, |line, rec: ImpactRecord| {
        let weights = rec
            .weights
            .into_iter()
            .map(|(t, w)| Ok((t, finite::<S>(w, origin, line)?)))
            .collect::<Result<Vec<_>>>()?;
        store
            .insert(&rec.doc_id, weights)
            .map_err(|e| Error::parse(origin, line, e.to_string()))
    })?;
    Ok(store)
}

pub fn load_impact_store<S: Scalar>(path: impl AsRef<Path>, vocab_size: u32) -> Result<ImpactStore<S>> {
    let path = path.as_ref();
    read_impact_store(jsonl::open(path)?, path, vocab_size)
}

pub fn write_impact_store<S: Scalar, W: Write>(store: &ImpactStore<S>, out: &mut W) -> std::io::Result<()> {
    let mut ids: Vec<&String> = store.docs.keys().collect();
    ids.sort();
    for id in ids {
        jsonl::write_record(
            out,
            &ImpactRecord {
                doc_id: id.clone(),
                weights: store.docs[id].iter().map(|&(t, w)| (t, w.as_f64())).collect(),
            },
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn tilde_lookup_and_floor() {
        let s: TildeDistributionStore<f64> = read_tilde_store(
            Cursor::new("{\"doc_id\":\"d\",\"entries\":[[5,-1.0],[9,-2.0]]}\n"),
            p(),
            16,
            DEFAULT_FLOOR_LOGPROB,
        )
        .unwrap();
        assert_eq!(s.lookup("d", 9).unwrap(), -2.0);
        assert_eq!(s.lookup("d", 7).unwrap(), DEFAULT_FLOOR_LOGPROB);
        assert!(matches!(s.lookup("x", 7), Err(Error::NotFound { .. })));
        assert_eq!(s.ranked("d").unwrap(), vec![(5, -1.0), (9, -2.0)]);
    }

    #[test]
    fn tilde_rejects_positive_logprob_and_range() {
        let err = read_tilde_store::<f64, _>(
            Cursor::new("{\"doc_id\":\"d\",\"entries\":[[5,0.1]]}\n"),
            p(),
            16,
            -10.0,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("\"d\"") && msg.contains("token 5"), "{msg}");
        let err = read_tilde_store::<f64, _>(
            Cursor::new("{\"doc_id\":\"d\",\"entries\":[[16,-0.1]]}\n"),
            p(),
            16,
            -10.0,
        )
        .unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn tilde_file_and_document_floors() {
        let data = "{\"floor_logprob\":-5.0}\n{\"doc_id\":\"a\",\"entries\":[]}\n{\"doc_id\":\"b\",\"entries\":[],\"floor\":-3.0}\n";
        let s: TildeDistributionStore<f64> = read_tilde_store(Cursor::new(data), p(), 4, -13.0).unwrap();
        assert_eq!(s.lookup("a", 1).unwrap(), -5.0);
        assert_eq!(s.lookup("b", 1).unwrap(), -3.0);
        let mut buf = Vec::new();
        write_tilde_store(&s, &mut buf).unwrap();
        let back: TildeDistributionStore<f64> = read_tilde_store(buf.as_slice(), p(), 4, -13.0).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn impact_lookup_and_validation() {
        let s: ImpactStore<f64> =
            read_impact_store(Cursor::new("{\"doc_id\":\"d\",\"weights\":[[3,0.5],[3,0.25]]}\n"), p(), 8).unwrap();
        assert_eq!(s.lookup("d", 3).unwrap(), 0.5);
        assert_eq!(s.lookup("d", 4).unwrap(), 0.0);
        assert!(read_impact_store::<f64, _>(Cursor::new("{\"doc_id\":\"d\",\"weights\":[[3,-0.5]]}\n"), p(), 8).is_err());
        assert!(matches!(
            read_impact_store::<f64, _>(Cursor::new("{\"doc_id\":\"d\",\"weights\":[[8,0.5]]}\n"), p(), 8),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn impact_merge_keeps_maxima() {
        let mut s = ImpactStore::<f32>::new(10);
        s.insert("d", vec![(1, 0.5), (2, 0.1)]).unwrap();
        s.merge("d", vec![(2, 0.3), (7, 0.2)]).unwrap();
        assert_eq!(s.weights("d").unwrap(), &[(1, 0.5), (2, 0.3), (7, 0.2)]);
        let mut buf = Vec::new();
        write_impact_store(&s, &mut buf).unwrap();
        assert_eq!(read_impact_store::<f32, _>(buf.as_slice(), p(), 10).unwrap(), s);
    }
}
