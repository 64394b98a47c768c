//! Deterministic in-memory backends for tests and offline runs.

use std::collections::HashMap;

use super::{
    finalize_candidates, normalize_for_digest, validate_single_mask, BackendError,
    MaskedLmBackend, TranslationBackend,
};

/// Returns every input unchanged. Useful to prove that augmentation drops
/// records that do not differ from their parents.
pub struct IdentityTranslation;

impl TranslationBackend for IdentityTranslation {
    fn translate_batch(
        &self,
        texts: &[String],
        _source: &str,
        _target: &str,
    ) -> Result<Vec<String>, BackendError> {
        Ok(texts.to_vec())
    }
}

/// Word-level substitution from a finite per-language-pair table. Phrases
/// (multi-token keys) win over single words; unknown words pass through.
#[derive(Default)]
pub struct DictionaryTranslation {
    /// (source, target) → replacement rules as (phrase tokens, replacement).
    tables: HashMap<(String, String), Vec<(Vec<String>, String)>>,
}

impl DictionaryTranslation {
    pub fn new() -> DictionaryTranslation {
        DictionaryTranslation::default()
    }

    pub fn with_mapping(
        mut self,
        source: &str,
        target: &str,
        phrase: &str,
        replacement: &str,
    ) -> DictionaryTranslation {
        let rules = self
            .tables
            .entry((source.to_string(), target.to_string()))
            .or_default();
        rules.push((
            phrase.split_whitespace().map(str::to_string).collect(),
            replacement.to_string(),
        ));
        // Longest phrase first, then lexicographic, so matching is greedy
        // and deterministic regardless of insertion order.
        rules.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        self
    }

    fn apply(&self, text: &str, source: &str, target: &str) -> String {
        let rules = match self.tables.get(&(source.to_string(), target.to_string())) {
            Some(rules) => rules,
            None => return text.to_string(),
        };
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let mut out: Vec<&str> = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            let hit = rules
                .iter()
                .find(|(phrase, _)| tokens[i..].len() >= phrase.len()
                    && phrase.iter().zip(&tokens[i..]).all(|(p, t)| p == t));
            match hit {
                Some((phrase, replacement)) => {
                    out.push(replacement);
                    i += phrase.len();
                }
                None => {
                    out.push(tokens[i]);
                    i += 1;
                }
            }
        }
        out.join(" ")
    }
}

impl TranslationBackend for DictionaryTranslation {
    fn translate_batch(
        &self,
        texts: &[String],
        source: &str,
        target: &str,
    ) -> Result<Vec<String>, BackendError> {
        Ok(texts
            .iter()
            .map(|t| self.apply(t, source, target))
            .collect())
    }
}

/// Masked-LM mock: exact-match answers per masked text, with a default
/// candidate list for everything else. Scores decrease with rank.
#[derive(Default)]
pub struct MockMaskedLm {
    exact: HashMap<String, Vec<String>>,
    default: Vec<String>,
}

impl MockMaskedLm {
    pub fn new(default: Vec<String>) -> MockMaskedLm {
        MockMaskedLm {
            exact: HashMap::new(),
            default,
        }
    }

    /// Registers the candidate list returned for one exact masked text
    /// (whitespace-normalized).
    pub fn with_answer(mut self, masked_text: &str, candidates: Vec<String>) -> MockMaskedLm {
        self.exact
            .insert(normalize_for_digest(masked_text), candidates);
        self
    }
}

impl MaskedLmBackend for MockMaskedLm {
    fn fill_mask(
        &self,
        text_with_single_mask: &str,
        top_k: usize,
    ) -> Result<Vec<(String, f64)>, BackendError> {
        validate_single_mask(text_with_single_mask)?;
        let words = self
            .exact
            .get(&normalize_for_digest(text_with_single_mask))
            .unwrap_or(&self.default);
        let candidates: Vec<(String, f64)> = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), 1.0 / (i + 1) as f64))
            .collect();
        finalize_candidates(candidates, top_k)
    }
}
