//! Pluggable model backends for the two model-backed augmentations.
//!
//! [`TranslationBackend`] and [`MaskedLmBackend`] abstract over what
//! actually produces translations and mask fills: an HTTP inference
//! server ([`http`]), a recorded fixture store for offline replay
//! ([`fixtures`]), or deterministic mocks for tests ([`mock`]).

pub mod fixtures;
pub mod http;
pub mod mock;

use std::sync::{Condvar, Mutex};

use sha2::{Digest, Sha256};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub use fixtures::{
    FixtureMaskedLmBackend, FixtureStore, FixtureTranslationBackend, RecordingMaskedLmBackend,
    RecordingTranslationBackend,
};
pub use http::{HttpBackendConfig, HttpMaskedLmBackend, HttpTranslationBackend};
pub use mock::{DictionaryTranslation, IdentityTranslation, MockMaskedLm};

/// The placeholder the masked-LM protocol expects, exactly once per text.
pub const MASK_TOKEN: &str = "[MASK]";

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
    #[error("backend returned HTTP {status} after {attempts} attempt(s)")]
    Http { status: u16, attempts: usize },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("no recorded fixture for digest {digest} ({hint})")]
    FixtureMiss { digest: String, hint: String },
    #[error("fixture store: {0}")]
    Fixture(String),
}

/// Batch text translation. Implementations must preserve order and length.
pub trait TranslationBackend: Send + Sync {
    fn translate_batch(
        &self,
        texts: &[String],
        source: &str,
        target: &str,
    ) -> Result<Vec<String>, BackendError>;
}

/// Masked-LM fill: candidates for the single `[MASK]` slot, best first.
pub trait MaskedLmBackend: Send + Sync {
    fn fill_mask(
        &self,
        text_with_single_mask: &str,
        top_k: usize,
    ) -> Result<Vec<(String, f64)>, BackendError>;
}

/// Rejects texts that do not contain exactly one `[MASK]` token. Runs
/// before any network or store access.
pub fn validate_single_mask(text: &str) -> Result<(), BackendError> {
    match text.matches(MASK_TOKEN).count() {
        1 => Ok(()),
        n => Err(BackendError::Precondition(format!(
            "text must contain exactly one {MASK_TOKEN}, found {n}"
        ))),
    }
}

/// Normalization applied to texts before hashing fixture digests: Unicode
/// NFC plus whitespace collapsed to single spaces.
pub fn normalize_for_digest(text: &str) -> String {
    let composed: String = text.nfc().collect();
    composed.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn hex_sha256(payload: &str) -> String {
    let hash = Sha256::digest(payload.as_bytes());
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest of one translation request (per text, so batching never changes
/// the key).
pub fn translate_digest(source: &str, target: &str, text: &str) -> String {
    hex_sha256(&format!(
        "translate\u{1}{source}\u{1}{target}\u{1}{}",
        normalize_for_digest(text)
    ))
}

/// Digest of one fill-mask request.
pub fn fill_mask_digest(text: &str, top_k: usize) -> String {
    hex_sha256(&format!(
        "fill_mask\u{1}{top_k}\u{1}{}",
        normalize_for_digest(text)
    ))
}

/// Validates, sorts (best first) and truncates a candidate list so every
/// backend upholds the same output contract.
pub(crate) fn finalize_candidates(
    mut candidates: Vec<(String, f64)>,
    top_k: usize,
) -> Result<Vec<(String, f64)>, BackendError> {
    for (word, score) in &candidates {
        if !score.is_finite() || !(0.0..=1.0).contains(score) {
            return Err(BackendError::Protocol(format!(
                "candidate `{word}` has score {score} outside [0, 1]"
            )));
        }
    }
    candidates.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("scores checked finite"));
    candidates.truncate(top_k);
    Ok(candidates)
}

/// Counting semaphore bounding in-flight HTTP requests.
pub(crate) struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    pub(crate) fn new(permits: usize) -> Semaphore {
        Semaphore {
            permits: Mutex::new(permits.max(1)),
            available: Condvar::new(),
        }
    }

    pub(crate) fn acquire(&self) -> SemaphorePermit<'_> {
        let mut permits = self.permits.lock().expect("semaphore poisoned");
        while *permits == 0 {
            permits = self.available.wait(permits).expect("semaphore poisoned");
        }
        *permits -= 1;
        SemaphorePermit { semaphore: self }
    }
}

pub(crate) struct SemaphorePermit<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphorePermit<'_> {
    fn drop(&mut self) {
        let mut permits = self.semaphore.permits.lock().expect("semaphore poisoned");
        *permits += 1;
        self.semaphore.available.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_validation_counts_tokens() {
        assert!(validate_single_mask("fill the [MASK] here").is_ok());
        assert!(matches!(
            validate_single_mask("no mask at all"),
            Err(BackendError::Precondition(_))
        ));
        assert!(matches!(
            validate_single_mask("[MASK] and [MASK]"),
            Err(BackendError::Precondition(_))
        ));
    }

    #[test]
    fn digests_survive_formatting_drift() {
        // NFD "é" (e + combining acute) vs NFC "é".
        let nfd = "caf\u{0065}\u{0301}  au  lait";
        let nfc = "caf\u{00e9} au lait";
        assert_eq!(
            translate_digest("en", "de", nfd),
            translate_digest("en", "de", nfc)
        );
        assert_eq!(
            fill_mask_digest(" spaced\ttext ", 3),
            fill_mask_digest("spaced text", 3)
        );
        // Different language pairs or texts hash differently.
        assert_ne!(
            translate_digest("en", "de", "hello"),
            translate_digest("en", "fr", "hello")
        );
        assert_ne!(
            fill_mask_digest("hello [MASK]", 3),
            fill_mask_digest("hello [MASK]", 4)
        );
    }

    #[test]
    fn candidates_are_sorted_and_truncated() {
        let raw = vec![
            ("b".to_string(), 0.5),
            ("a".to_string(), 0.9),
            ("c".to_string(), 0.1),
            ("d".to_string(), 0.7),
        ];
        let out = finalize_candidates(raw, 3).unwrap();
        let words: Vec<&str> = out.iter().map(|(w, _)| w.as_str()).collect();
        assert_eq!(words, ["a", "d", "b"]);
        assert!(out.windows(2).all(|w| w[0].1 >= w[1].1));

        let bad = vec![("x".to_string(), 1.5)];
        assert!(matches!(
            finalize_candidates(bad, 3),
            Err(BackendError::Protocol(_))
        ));
    }

    #[test]
    fn semaphore_bounds_concurrency() {
        use std::sync::atomic::{AtomicUsize, Ordering};
        use std::sync::Arc;

        let sem = Arc::new(Semaphore::new(2));
        let live = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        let mut handles = Vec::new();
        for _ in 0..8 {
            let sem = Arc::clone(&sem);
            let live = Arc::clone(&live);
            let peak = Arc::clone(&peak);
            handles.push(std::thread::spawn(move || {
                let _permit = sem.acquire();
                let now = live.fetch_add(1, Ordering::SeqCst) + 1;
                peak.fetch_max(now, Ordering::SeqCst);
                std::thread::sleep(std::time::Duration::from_millis(5));
                live.fetch_sub(1, Ordering::SeqCst);
            }));
        }
        for h in handles {
            h.join().unwrap();
        }
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
