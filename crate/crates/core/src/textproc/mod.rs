//! Text analysis pipelines: standard word segmentation, two Porter-stemmed
//! variants, and BERT-style subword tokenization.
//!
//! | kind    | segmentation            | normalisation            |
//! |---------|-------------------------|--------------------------|
//! | SA      | UAX #29 word boundaries | lowercase                |
//! | STM1    | whitespace              | lowercase, Porter stem   |
//! | STM2    | UAX #29 word boundaries | lowercase, Porter stem   |
//! | Subword | BERT basic split        | lowercase, strip accents, WordPiece |

mod porter;
mod wordpiece;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;
use unicode_segmentation::UnicodeSegmentation;

use crate::error::{Error, Result};

pub use porter::porter_stem;
pub use wordpiece::{
    wordpiece_tokenize, Vocabulary, DEFAULT_CONTINUATION_PREFIX, DEFAULT_MAX_WORD_CHARS, DEFAULT_UNK_TOKEN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalyzerKind {
    /// Standard analyzer.
    Sa,
    /// Whitespace tokenizer + lowercase + Porter.
    Stm1,
    /// Standard tokenizer + lowercase + Porter.
    Stm2,
    Subword,
}

impl std::str::FromStr for AnalyzerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sa" => Ok(Self::Sa),
            "stm1" => Ok(Self::Stm1),
            "stm2" => Ok(Self::Stm2),
            "subword" => Ok(Self::Subword),
            other => Err(Error::Config(format!("unknown analyzer {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalyzerSpec {
    pub kind: AnalyzerKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab_path: Option<PathBuf>,
    pub lowercase: bool,
    /// Only consulted by subword analysis.
    pub strip_accents: bool,
}

impl AnalyzerSpec {
    pub fn new(kind: AnalyzerKind) -> Self {
        Self {
            kind,
            vocab_path: None,
            lowercase: true,
            strip_accents: true,
        }
    }

    pub fn subword(vocab_path: impl Into<PathBuf>) -> Self {
        Self {
            vocab_path: Some(vocab_path.into()),
            ..Self::new(AnalyzerKind::Subword)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == AnalyzerKind::Subword && self.vocab_path.is_none() {
            return Err(Error::Config("subword analysis requires a vocabulary path".into()));
        }
        Ok(())
    }
}

/// An analyzed token. `id` is set only by subword analysis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token {
    pub surface: String,
    pub id: Option<u32>,
}

impl Token {
    pub fn term(surface: impl Into<String>) -> Self {
        Self {
            surface: surface.into(),
            id: None,
        }
    }
}

/// A ready-to-use analysis pipeline built from an [`AnalyzerSpec`].
#[derive(Debug, Clone)]
pub struct Analyzer {
    spec: AnalyzerSpec,
    vocab: Option<Arc<Vocabulary>>,
    max_word_chars: usize,
}

impl Analyzer {
    /// Builds the analyzer, reading the vocabulary file for subword specs.
    pub fn new(spec: AnalyzerSpec) -> Result<Self> {
        spec.validate()?;
        let vocab = match (&spec.kind, &spec.vocab_path) {
            (AnalyzerKind::Subword, Some(path)) => Some(Arc::new(Vocabulary::load(path)?)),
            _ => None,
        };
        Ok(Self {
            spec,
            vocab,
            max_word_chars: DEFAULT_MAX_WORD_CHARS,
        })
    }

    /// Subword analyzer over an already-loaded vocabulary.
    pub fn with_vocabulary(spec: AnalyzerSpec, vocab: Arc<Vocabulary>) -> Self {
        Self {
            spec,
            vocab: Some(vocab),
            max_word_chars: DEFAULT_MAX_WORD_CHARS,
        }
    }

    pub fn spec(&self) -> &AnalyzerSpec {
        &self.spec
    }

    pub fn vocabulary(&self) -> Option<&Arc<Vocabulary>> {
        self.vocab.as_ref()
    }

    pub fn analyze(&self, text: &str) -> Vec<Token> {
        let lower = |w: &str| if self.spec.lowercase { w.to_lowercase() } else { w.to_owned() };
        match self.spec.kind {
            AnalyzerKind::Sa => text.unicode_words().map(|w| Token::term(lower(w))).collect(),
            AnalyzerKind::Stm1 => text
                .split_whitespace()
                .map(|w| Token::term(porter_stem(&lower(w))))
                .collect(),
            AnalyzerKind::Stm2 => text
                .unicode_words()
                .map(|w| Token::term(porter_stem(&lower(w))))
                .collect(),
            AnalyzerKind::Subword => {
                let vocab = self
                    .vocab
                    .as_deref()
                    .expect("subword analyzer constructed without vocabulary");
                basic_tokenize(text, self.spec.lowercase, self.spec.strip_accents)
                    .iter()
                    .flat_map(|w| wordpiece_tokenize(w, vocab, self.max_word_chars))
                    .collect()
            }
        }
    }
}

/// Convenience wrapper that builds an analyzer for a single call.
pub fn analyze(text: &str, spec: &AnalyzerSpec) -> Result<Vec<Token>> {
    Ok(Analyzer::new(spec.clone())?.analyze(text))
}

/// Histogram of token surfaces.
pub fn unique_token_counts(tokens: &[Token]) -> BTreeMap<String, usize> {
    unique_counts(tokens.iter().map(|t| t.surface.clone()))
}

pub fn unique_counts<T: Ord>(items: impl IntoIterator<Item = T>) -> BTreeMap<T, usize> {
    let mut counts = BTreeMap::new();
    for item in items {
        *counts.entry(item).or_insert(0) += 1;
    }
    counts
}

fn general_category(c: char) -> &'static str {
    unicode_general_category::get_general_category(c).abbreviation()
}

fn is_whitespace(c: char) -> bool {
    matches!(c, ' ' | '\t' | '\n' | '\r') || general_category(c) == "Zs"
}

fn is_control(c: char) -> bool {
    !matches!(c, '\t' | '\n' | '\r') && general_category(c).starts_with('C')
}

fn is_punctuation(c: char) -> bool {
    let cp = c as u32;
    (33..=47).contains(&cp)
        || (58..=64).contains(&cp)
        || (91..=96).contains(&cp)
        || (123..=126).contains(&cp)
        || general_category(c).starts_with('P')
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x4E00..=0x9FFF
        | 0x3400..=0x4DBF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2B73F
        | 0x2B740..=0x2B81F
        | 0x2B820..=0x2CEAF
        | 0xF900..=0xFAFF
        | 0x2F800..=0x2FA1F)
}

/// BERT basic tokenization: drop control characters, isolate CJK characters
/// and punctuation, optionally lowercase and strip combining marks.
pub fn basic_tokenize(text: &str, lowercase: bool, strip_accents: bool) -> Vec<String> {
    let mut cleaned = String::with_capacity(text.len());
    for c in text.nfc() {
        if c == '\0' || c == '\u{FFFD}' || is_control(c) {
            continue;
        }
        if is_whitespace(c) {
            cleaned.push(' ');
        } else if is_cjk(c) {
            cleaned.push(' ');
            cleaned.push(c);
            cleaned.push(' ');
        } else {
            cleaned.push(c);
        }
    }

    let mut out = Vec::new();
    for word in cleaned.split_whitespace() {
        let mut word = if lowercase { word.to_lowercase() } else { word.to_owned() };
        if strip_accents {
            word = word.nfd().filter(|&c| general_category(c) != "Mn").collect();
        }
        let mut current = String::new();
        for c in word.chars() {
            if is_punctuation(c) {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
                out.push(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            out.push(current);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surfaces(t: &[Token]) -> Vec<&str> {
        t.iter().map(|t| t.surface.as_str()).collect()
    }

    #[test]
    fn stm2_stems_word_boundary_tokens() {
        let a = Analyzer::new(AnalyzerSpec::new(AnalyzerKind::Stm2)).unwrap();
        assert_eq!(surfaces(&a.analyze("Ponies run!")), ["poni", "run"]);
    }

    #[test]
    fn stm1_keeps_punctuation_attached() {
        let a = Analyzer::new(AnalyzerSpec::new(AnalyzerKind::Stm1)).unwrap();
        assert_eq!(surfaces(&a.analyze("Ponies run!")), ["poni", "run!"]);
    }

    #[test]
    fn sa_lowercases_without_stemming() {
        let a = Analyzer::new(AnalyzerSpec::new(AnalyzerKind::Sa)).unwrap();
        assert_eq!(surfaces(&a.analyze("The Ponies, running.")), ["the", "ponies", "running"]);
    }

    #[test]
    fn empty_text_yields_nothing() {
        for kind in [AnalyzerKind::Sa, AnalyzerKind::Stm1, AnalyzerKind::Stm2] {
            assert!(Analyzer::new(AnalyzerSpec::new(kind)).unwrap().analyze("").is_empty());
        }
    }

    #[test]
    fn subword_spec_requires_vocab() {
        assert!(matches!(
            Analyzer::new(AnalyzerSpec::new(AnalyzerKind::Subword)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn subword_analysis_assigns_ids() {
        let toks = ["[UNK]", "un", "##aff", "##able"];
        let vocab = Vocabulary::from_tokens(toks.iter().map(|s| s.to_string()).collect(), "[UNK]", "##").unwrap();
        let a = Analyzer::with_vocabulary(AnalyzerSpec::subword("toy"), Arc::new(vocab));
        let out = a.analyze("unaffable");
        assert_eq!(out.iter().map(|t| t.id.unwrap()).collect::<Vec<_>>(), [1, 2, 3]);
        assert!(a.analyze("").is_empty());
    }

    #[test]
    fn basic_split_isolates_punctuation_and_accents() {
        assert_eq!(basic_tokenize("Héllo, wörld!", true, true), ["hello", ",", "world", "!"]);
        assert_eq!(basic_tokenize("Héllo", false, false), ["Héllo"]);
        assert_eq!(basic_tokenize("a\u{0007}b 中文", true, true), ["ab", "中", "文"]);
    }

    #[test]
    fn histogram() {
        let t: Vec<Token> = ["a", "b", "a"].iter().map(|s| Token::term(*s)).collect();
        let h = unique_token_counts(&t);
        assert_eq!(h.len(), 2);
        assert_eq!(h["a"], 2);
        assert_eq!(h["b"], 1);
        assert!(unique_token_counts(&[]).is_empty());
        let many = vec![Token::term("z"); 7];
        assert_eq!(unique_token_counts(&many)["z"], 7);
    }
}
