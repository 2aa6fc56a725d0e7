//! Vocabulary files and greedy longest-match-first subword segmentation.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::textproc::Token;

pub const DEFAULT_UNK_TOKEN: &str = "[UNK]";
pub const DEFAULT_CONTINUATION_PREFIX: &str = "##";
pub const DEFAULT_MAX_WORD_CHARS: usize = 100;

/// Token inventory where a token's position is its id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    unk_id: u32,
    continuation_prefix: String,
}

impl Vocabulary {
    pub fn from_tokens(tokens: Vec<String>, unk_token: &str, continuation_prefix: &str) -> Result<Self> {
        if tokens.len() > u32::MAX as usize {
            return Err(Error::Config("vocabulary exceeds u32 id space".into()));
        }
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if tok.is_empty() {
                return Err(Error::Config(format!("vocabulary entry {i} is empty")));
            }
            if let Some(prev) = ids.insert(tok.clone(), i as u32) {
                return Err(Error::Config(format!(
                    "vocabulary token {tok:?} appears at ids {prev} and {i}"
                )));
            }
        }
        let unk_id = *ids
            .get(unk_token)
            .ok_or_else(|| Error::Config(format!("unknown-token {unk_token:?} missing from vocabulary")))?;
        Ok(Self {
            tokens,
            ids,
            unk_id,
            continuation_prefix: continuation_prefix.to_owned(),
        })
    }

    /// Reads a `vocab.txt` file: one token per line, line number = id.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read vocabulary {}: {e}", path.display())))?;
        let tokens = text
            .lines()
            .map(|l| l.trim_end_matches('\r').to_owned())
            .collect();
        Self::from_tokens(tokens, DEFAULT_UNK_TOKEN, DEFAULT_CONTINUATION_PREFIX)
    }

    /// Writes the `vocab.txt` form read by [`Vocabulary::load`].
    pub fn write<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        for tok in &self.tokens {
            writeln!(out, "{tok}")?;
        }
        Ok(())
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn unk_id(&self) -> u32 {
        self.unk_id
    }

    pub fn unk_token(&self) -> &str {
        &self.tokens[self.unk_id as usize]
    }

    pub fn continuation_prefix(&self) -> &str {
        &self.continuation_prefix
    }

    /// Bracketed control entries such as `[CLS]`, `[PAD]` or `[unused7]`.
    pub fn is_special(&self, id: u32) -> bool {
        self.token(id)
            .is_some_and(|t| t.len() > 2 && t.starts_with('[') && t.ends_with(']'))
    }

    pub fn is_continuation(&self, id: u32) -> bool {
        self.token(id)
            .is_some_and(|t| t.len() > self.continuation_prefix.len() && t.starts_with(&self.continuation_prefix))
    }

    fn unk(&self) -> Token {
        Token {
            surface: self.unk_token().to_owned(),
            id: Some(self.unk_id),
        }
    }
}

/// Segments one basic token. Any word longer than `max_word_chars` characters,
/// or with no complete segmentation, becomes a single unknown token.
pub fn wordpiece_tokenize(word: &str, vocab: &Vocabulary, max_word_chars: usize) -> Vec<Token> {
    if word.is_empty() {
        return Vec::new();
    }
    if word.chars().count() > max_word_chars {
        return vec![vocab.unk()];
    }
    let mut bounds: Vec<usize> = word.char_indices().map(|(i, _)| i).collect();
    bounds.push(word.len());

    let mut pieces = Vec::new();
    let mut candidate = String::with_capacity(word.len() + vocab.continuation_prefix.len());
    let mut start = 0; // index into `bounds`
    while start < bounds.len() - 1 {
        let mut end = bounds.len() - 1;
        let mut found = None;
        while end > start {
            candidate.clear();
            if start > 0 {
                candidate.push_str(&vocab.continuation_prefix);
            }
            candidate.push_str(&word[bounds[start]..bounds[end]]);
            if let Some(id) = vocab.id(&candidate) {
                found = Some(id);
                break;
            }
            end -= 1;
        }
        match found {
            Some(id) => pieces.push(Token {
                surface: candidate.clone(),
                id: Some(id),
            }),
            None => return vec![vocab.unk()],
        }
        start = end;
    }
    pieces
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Vocabulary {
        let toks = ["[UNK]", "un", "##aff", "##able", "[CLS]", "##", "a"];
        Vocabulary::from_tokens(toks.iter().map(|s| s.to_string()).collect(), "[UNK]", "##").unwrap()
    }

    fn surfaces(t: &[Token]) -> Vec<&str> {
        t.iter().map(|t| t.surface.as_str()).collect()
    }

    #[test]
    fn greedy_longest_match() {
        let v = toy();
        assert_eq!(surfaces(&wordpiece_tokenize("un", &v, 100)), ["un"]);
        let t = wordpiece_tokenize("unaffable", &v, 100);
        assert_eq!(surfaces(&t), ["un", "##aff", "##able"]);
        assert_eq!(t.iter().map(|t| t.id.unwrap()).collect::<Vec<_>>(), [1, 2, 3]);
        assert_eq!(surfaces(&wordpiece_tokenize("xqz", &v, 100)), ["[UNK]"]);
        assert_eq!(surfaces(&wordpiece_tokenize("unaffablez", &v, 100)), ["[UNK]"]);
    }

    #[test]
    fn overlong_word_is_unknown() {
        let v = toy();
        assert_eq!(surfaces(&wordpiece_tokenize("unaffable", &v, 8)), ["[UNK]"]);
        assert_eq!(surfaces(&wordpiece_tokenize("unaffable", &v, 9)), ["un", "##aff", "##able"]);
    }

    #[test]
    fn vocabulary_invariants() {
        let dup = vec!["[UNK]".to_string(), "a".into(), "a".into()];
        assert!(Vocabulary::from_tokens(dup, "[UNK]", "##").is_err());
        let no_unk = vec!["a".to_string()];
        assert!(Vocabulary::from_tokens(no_unk, "[UNK]", "##").is_err());
        let v = toy();
        assert!(v.is_special(4));
        assert!(v.is_special(0));
        assert!(!v.is_special(1));
        assert!(v.is_continuation(2));
        assert!(!v.is_continuation(5), "bare prefix is not a continuation piece");
    }

    #[test]
    fn missing_file_is_config_error() {
        assert!(matches!(Vocabulary::load("/nonexistent/vocab.txt"), Err(Error::Config(_))));
    }
}
