//! Synthetic reranking tasks with the shape of SciDocs: each query is a paper
//! with a pool of up to five relevant and the remaining non-relevant
//! candidates, plus a BERT-sized subword vocabulary and contextualized weight
//! stores over it. Everything derives from one seed.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::corpus::{derive_seed, CandidatePool, Corpus, Document, Qrels, RelevanceJudgment, TextOrder};
use crate::corpus::compose_text;
use crate::error::{Error, Result};
use crate::lexindex::{ImpactStore, TildeDistributionStore, DEFAULT_FLOOR_LOGPROB};
use crate::scalar::Scalar;
use crate::textproc::{Analyzer, AnalyzerSpec, Vocabulary, DEFAULT_CONTINUATION_PREFIX, DEFAULT_UNK_TOKEN};

const CONSONANTS: &[u8] = b"bcdfghjklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const SPECIALS: [&str; 5] = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_queries: usize,
    pub candidates_per_query: usize,
    pub max_positives: usize,
    pub vocab_size: usize,
    pub title_words: usize,
    pub abstract_words: usize,
    /// Distribution entries stored per document beyond its own tokens.
    pub extra_tilde_entries: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_queries: 1000,
            candidates_per_query: 30,
            max_positives: 5,
            vocab_size: 30_522,
            title_words: 10,
            abstract_words: 70,
            extra_tilde_entries: 16,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset<S> {
    pub corpus: Corpus,
    pub pools: Vec<CandidatePool>,
    pub qrels: Qrels,
    pub vocab: Arc<Vocabulary>,
    pub tilde: TildeDistributionStore<S>,
    pub impacts: ImpactStore<S>,
}

fn syllables() -> Vec<String> {
    CONSONANTS
        .iter()
        .flat_map(|&c| VOWELS.iter().map(move |&v| String::from_utf8(vec![c, v]).unwrap()))
        .collect()
}

/// Special tokens, `##` pieces of one and two syllables, then whole words of
/// one, two and three syllables until `size` entries exist.
pub fn synthetic_vocabulary(size: usize) -> Result<Vocabulary> {
    let syl = syllables();
    let mut tokens: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
    let pairs: Vec<String> = syl.iter().flat_map(|a| syl.iter().map(move |b| format!("{a}{b}"))).collect();
    tokens.extend(syl.iter().chain(&pairs).map(|s| format!("{DEFAULT_CONTINUATION_PREFIX}{s}")));
    let words = syl
        .iter()
        .cloned()
        .chain(pairs.iter().cloned())
        .chain(pairs.iter().flat_map(|p| syl.iter().map(move |s| format!("{p}{s}"))));
    let need = size
        .checked_sub(tokens.len())
        .filter(|&n| n > syl.len() + 1000)
        .ok_or_else(|| Error::Config(format!("synthetic vocabulary needs more than {} entries", tokens.len() + syl.len() + 1000)))?;
    tokens.extend(words.take(need));
    if tokens.len() != size {
        return Err(Error::Config(format!("synthetic vocabulary cannot reach {size} entries")));
    }
    Vocabulary::from_tokens(tokens, DEFAULT_UNK_TOKEN, DEFAULT_CONTINUATION_PREFIX)
}

struct Lexicon<'a> {
    words: Vec<&'a str>,
}

impl Lexicon<'_> {
    /// Skewed towards low ranks so that some words are frequent.
    fn background(&self, rng: &mut ChaCha8Rng) -> &str {
        let u: f64 = rng.random();
        self.words[((u.powf(2.5) * self.words.len() as f64) as usize).min(self.words.len() - 1)]
    }

    fn text(&self, rng: &mut ChaCha8Rng, topic: &[&str], topical: f64, len: usize) -> String {
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let w = if rng.random_bool(topical) {
                topic[rng.random_range(0..topic.len())].to_owned()
            } else if rng.random_bool(0.05) {
                // Out-of-vocabulary compound, split into pieces by WordPiece.
                format!("{}{}", self.background(rng), self.background(rng))
            } else {
                self.background(rng).to_owned()
            };
            out.push(w);
        }
        out.join(" ")
    }
}

pub fn generate<S: Scalar>(config: &SynthConfig) -> Result<SynthDataset<S>> {
    if config.num_queries == 0 || config.candidates_per_query == 0 {
        return Err(Error::Config("synthetic dataset needs queries and candidates".into()));
    }
    let max_pos = config.max_positives.clamp(1, config.candidates_per_query);
    let vocab = Arc::new(synthetic_vocabulary(config.vocab_size)?);
    let lexicon = Lexicon {
        words: vocab
            .tokens()
            .iter()
            .map(String::as_str)
            .filter(|t| t.len() > 2 && !t.starts_with('[') && !t.starts_with(DEFAULT_CONTINUATION_PREFIX))
            .collect(),
    };

    let per_query: Vec<(Vec<Document>, CandidatePool, Vec<RelevanceJudgment>)> = (0..config.num_queries)
        .into_par_iter()
        .map(|qi| {
            let query_id = format!("q{qi:05}");
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &query_id));
            let topic: Vec<&str> = (0..30).map(|_| lexicon.background(&mut rng)).collect();
            let doc = |rng: &mut ChaCha8Rng, id: String, topical: f64| {
                Document::new(
                    id,
                    lexicon.text(rng, &topic, topical, config.title_words),
                    lexicon.text(rng, &topic, topical, config.abstract_words),
                )
            };
            let mut docs = vec![doc(&mut rng, query_id.clone(), 0.4)];
            let positives = rng.random_range(1..=max_pos);
            let mut candidates = Vec::with_capacity(config.candidates_per_query);
            let mut judgments = Vec::new();
            for ci in 0..config.candidates_per_query {
                let id = format!("{query_id}c{ci:02}");
                let relevant = ci < positives;
                let topical = if relevant { rng.random_range(0.1..0.35) } else { rng.random_range(0.0..0.15) };
                docs.push(doc(&mut rng, id.clone(), topical));
                judgments.push(RelevanceJudgment {
                    query_id: query_id.clone(),
                    doc_id: id.clone(),
                    grade: u8::from(relevant),
                });
                candidates.push(id);
            }
            candidates.shuffle(&mut rng);
            (docs, CandidatePool::new(query_id, candidates), judgments)
        })
        .collect();

    let mut all_docs = Vec::new();
    let mut pools = Vec::with_capacity(per_query.len());
    let mut qrels = Qrels::new();
    for (docs, pool, judgments) in per_query {
        all_docs.extend(docs);
        pools.push(pool);
        for j in judgments {
            qrels.insert(j)?;
        }
    }
    let corpus = Corpus::from_documents(all_docs)?;

    let analyzer = Analyzer::with_vocabulary(AnalyzerSpec::subword("synthetic"), vocab.clone());
    let vocab_size = vocab.len() as u32;
    let weights: Vec<(String, Vec<(u32, S)>, Vec<(u32, S)>)> = corpus
        .documents()
        .par_iter()
        .map(|d| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed ^ 0x5eed, &d.doc_id));
            let ids: BTreeMap<u32, ()> = analyzer
                .analyze(&compose_text(d, TextOrder::TitleFirst))
                .into_iter()
                .filter_map(|t| t.id)
                .map(|i| (i, ()))
                .collect();
            let mut dist: BTreeMap<u32, S> = ids
                .keys()
                .map(|&i| (i, S::of(-rng.random_range(0.5..7.0))))
                .collect();
            for _ in 0..config.extra_tilde_entries {
                let t = rng.random_range(SPECIALS.len() as u32..vocab_size);
                dist.entry(t).or_insert_with(|| S::of(-rng.random_range(7.0..12.0)));
            }
            let impacts = ids
                .keys()
                .map(|&i| {
                    let w = if rng.random_bool(0.1) { 0.0 } else { rng.random_range(0.0..3.0) };
                    (i, S::of(w))
                })
                .collect();
            (d.doc_id.clone(), dist.into_iter().collect(), impacts)
        })
        .collect();
    let mut tilde = TildeDistributionStore::new(vocab_size, S::of(DEFAULT_FLOOR_LOGPROB))?;
    let mut impacts = ImpactStore::new(vocab_size);
    for (doc_id, dist, imp) in weights {
        tilde.insert(&doc_id, dist, None)?;
        impacts.insert(&doc_id, imp)?;
    }
    Ok(SynthDataset {
        corpus,
        pools,
        qrels,
        vocab,
        tilde,
        impacts,
    })
}
