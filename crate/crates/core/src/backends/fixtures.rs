//! Recorded-fixture backends: exact-match replay of model responses.
//!
//! A fixture file is line-delimited JSON, one `{"digest", "request",
//! "response"}` record per line. Replay never touches the network; a
//! recording wrapper fills the store from a live backend on cache misses.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    fill_mask_digest, finalize_candidates, translate_digest, validate_single_mask, BackendError,
    MaskedLmBackend, TranslationBackend,
};

#[derive(Serialize, Deserialize)]
struct FixtureRecord {
    digest: String,
    request: Value,
    response: Value,
}

/// Append-only digest → response store backed by a JSONL file.
#[derive(Debug)]
pub struct FixtureStore {
    path: PathBuf,
    entries: Mutex<HashMap<String, Value>>,
    writer: Option<Mutex<File>>,
    hits: AtomicUsize,
    misses: AtomicUsize,
}

impl FixtureStore {
    /// Opens an existing fixture file for replay. The file must exist.
    pub fn load(path: impl AsRef<Path>) -> Result<FixtureStore, BackendError> {
        let path = path.as_ref().to_path_buf();
        let entries = read_entries(&path)?;
        Ok(FixtureStore {
            path,
            entries: Mutex::new(entries),
            writer: None,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    /// Opens a store for recording, creating the file if needed and
    /// keeping any existing records.
    pub fn recording(path: impl AsRef<Path>) -> Result<FixtureStore, BackendError> {
        let path = path.as_ref().to_path_buf();
        let entries = if path.exists() {
            read_entries(&path)?
        } else {
            HashMap::new()
        };
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| BackendError::Fixture(format!("cannot open {}: {e}", path.display())))?;
        Ok(FixtureStore {
            path,
            entries: Mutex::new(entries),
            writer: Some(Mutex::new(file)),
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("store poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, digest: &str) -> Option<Value> {
        let found = self
            .entries
            .lock()
            .expect("store poisoned")
            .get(digest)
            .cloned();
        match found {
            Some(v) => {
                self.hits.fetch_add(1, Ordering::Relaxed);
                Some(v)
            }
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                None
            }
        }
    }

    fn record(&self, digest: &str, request: Value, response: Value) -> Result<(), BackendError> {
        let writer = self.writer.as_ref().ok_or_else(|| {
            BackendError::Fixture("store opened for replay, not recording".to_string())
        })?;
        let mut entries = self.entries.lock().expect("store poisoned");
        if entries.contains_key(digest) {
            return Ok(());
        }
        let record = FixtureRecord {
            digest: digest.to_string(),
            request,
            response: response.clone(),
        };
        let line = serde_json::to_string(&record)
            .map_err(|e| BackendError::Fixture(format!("cannot serialize record: {e}")))?;
        let mut file = writer.lock().expect("store poisoned");
        writeln!(file, "{line}")
            .map_err(|e| BackendError::Fixture(format!("cannot append to store: {e}")))?;
        entries.insert(digest.to_string(), response);
        Ok(())
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }

    /// Fraction of lookups answered from the store; 1.0 when idle.
    pub fn hit_rate(&self) -> f64 {
        let hits = self.hits() as f64;
        let total = hits + self.misses() as f64;
        if total == 0.0 {
            1.0
        } else {
            hits / total
        }
    }
}

fn read_entries(path: &Path) -> Result<HashMap<String, Value>, BackendError> {
    let file = File::open(path)
        .map_err(|e| BackendError::Fixture(format!("cannot open {}: {e}", path.display())))?;
    let mut entries = HashMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line =
            line.map_err(|e| BackendError::Fixture(format!("cannot read {}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FixtureRecord = serde_json::from_str(&line).map_err(|e| {
            BackendError::Fixture(format!("{}:{}: bad record: {e}", path.display(), i + 1))
        })?;
        entries.insert(record.digest, record.response);
    }
    Ok(entries)
}

fn miss(digest: String, hint: &str) -> BackendError {
    let mut hint = hint.to_string();
    if hint.len() > 60 {
        hint.truncate(60);
        hint.push('…');
    }
    BackendError::FixtureMiss { digest, hint }
}

/// Replay-only translation backend.
pub struct FixtureTranslationBackend<'a> {
    store: &'a FixtureStore,
}

impl<'a> FixtureTranslationBackend<'a> {
    pub fn new(store: &'a FixtureStore) -> Self {
        FixtureTranslationBackend { store }
    }
}

impl TranslationBackend for FixtureTranslationBackend<'_> {
    fn translate_batch(
        &self,
        texts: &[String],
        source: &str,
        target: &str,
    ) -> Result<Vec<String>, BackendError> {
        texts
            .iter()
            .map(|text| {
                let digest = translate_digest(source, target, text);
                match self.store.get(&digest) {
                    Some(Value::String(s)) => Ok(s),
                    Some(other) => Err(BackendError::Fixture(format!(
                        "translate fixture {digest} is not a string: {other}"
                    ))),
                    None => Err(miss(digest, text)),
                }
            })
            .collect()
    }
}

/// Replay-only masked-LM backend.
pub struct FixtureMaskedLmBackend<'a> {
    store: &'a FixtureStore,
}

impl<'a> FixtureMaskedLmBackend<'a> {
    pub fn new(store: &'a FixtureStore) -> Self {
        FixtureMaskedLmBackend { store }
    }
}

impl MaskedLmBackend for FixtureMaskedLmBackend<'_> {
    fn fill_mask(
        &self,
        text_with_single_mask: &str,
        top_k: usize,
    ) -> Result<Vec<(String, f64)>, BackendError> {
        validate_single_mask(text_with_single_mask)?;
        let digest = fill_mask_digest(text_with_single_mask, top_k);
        let value = self
            .store
            .get(&digest)
            .ok_or_else(|| miss(digest.clone(), text_with_single_mask))?;
        let candidates: Vec<(String, f64)> = serde_json::from_value(value).map_err(|e| {
            BackendError::Fixture(format!("fill_mask fixture {digest} is malformed: {e}"))
        })?;
        finalize_candidates(candidates, top_k)
    }
}

/// Pass-through translation backend that fills the store on misses.
pub struct RecordingTranslationBackend<'a, T: TranslationBackend> {
    store: &'a FixtureStore,
    inner: T,
}

impl<'a, T: TranslationBackend> RecordingTranslationBackend<'a, T> {
    pub fn new(store: &'a FixtureStore, inner: T) -> Self {
        RecordingTranslationBackend { store, inner }
    }
}

impl<T: TranslationBackend> TranslationBackend for RecordingTranslationBackend<'_, T> {
    fn translate_batch(
        &self,
        texts: &[String],
        source: &str,
        target: &str,
    ) -> Result<Vec<String>, BackendError> {
        let digests: Vec<String> = texts
            .iter()
            .map(|t| translate_digest(source, target, t))
            .collect();
        let mut out: Vec<Option<String>> = digests
            .iter()
            .map(|d| match self.store.get(d) {
                Some(Value::String(s)) => Some(s),
                _ => None,
            })
            .collect();

        let missing: Vec<usize> = (0..texts.len()).filter(|&i| out[i].is_none()).collect();
        if !missing.is_empty() {
            let queries: Vec<String> = missing.iter().map(|&i| texts[i].clone()).collect();
            let translated = self.inner.translate_batch(&queries, source, target)?;
            for (&i, translation) in missing.iter().zip(translated) {
                self.store.record(
                    &digests[i],
                    json!({
                        "method": "translate",
                        "source": source,
                        "target": target,
                        "text": texts[i],
                    }),
                    Value::String(translation.clone()),
                )?;
                out[i] = Some(translation);
            }
        }
        Ok(out.into_iter().map(|t| t.expect("filled above")).collect())
    }
}

/// Pass-through masked-LM backend that fills the store on misses.
pub struct RecordingMaskedLmBackend<'a, M: MaskedLmBackend> {
    store: &'a FixtureStore,
    inner: M,
}

impl<'a, M: MaskedLmBackend> RecordingMaskedLmBackend<'a, M> {
    pub fn new(store: &'a FixtureStore, inner: M) -> Self {
        RecordingMaskedLmBackend { store, inner }
    }
}

impl<M: MaskedLmBackend> MaskedLmBackend for RecordingMaskedLmBackend<'_, M> {
    fn fill_mask(
        &self,
        text_with_single_mask: &str,
        top_k: usize,
    ) -> Result<Vec<(String, f64)>, BackendError> {
        validate_single_mask(text_with_single_mask)?;
        let digest = fill_mask_digest(text_with_single_mask, top_k);
        if let Some(value) = self.store.get(&digest) {
            let candidates: Vec<(String, f64)> = serde_json::from_value(value).map_err(|e| {
                BackendError::Fixture(format!("fill_mask fixture {digest} is malformed: {e}"))
            })?;
            return finalize_candidates(candidates, top_k);
        }
        let candidates = self.inner.fill_mask(text_with_single_mask, top_k)?;
        self.store.record(
            &digest,
            json!({
                "method": "fill_mask",
                "text": text_with_single_mask,
                "top_k": top_k,
            }),
            serde_json::to_value(&candidates)
                .map_err(|e| BackendError::Fixture(format!("cannot serialize candidates: {e}")))?,
        )?;
        Ok(candidates)
    }
}

#[cfg(test)]
mod tests {
    use super::super::mock::{DictionaryTranslation, MockMaskedLm};
    use super::*;

    #[test]
    fn record_then_replay_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixtures.jsonl");

        let live = DictionaryTranslation::new()
            .with_mapping("en", "de", "hello", "hallo")
            .with_mapping("de", "en", "hallo", "hello there");
        {
            let store = FixtureStore::recording(&path).unwrap();
            let recorder = RecordingTranslationBackend::new(&store, live);
            let out = recorder
                .translate_batch(&["hello world".into()], "en", "de")
                .unwrap();
            assert_eq!(out, ["hallo world"]);
            assert_eq!(store.misses(), 1);
            // Second call is a hit and must not duplicate records.
            recorder
                .translate_batch(&["hello world".into()], "en", "de")
                .unwrap();
            assert_eq!(store.hits(), 1);
            assert_eq!(store.len(), 1);
        }

        let store = FixtureStore::load(&path).unwrap();
        assert_eq!(store.len(), 1);
        let replay = FixtureTranslationBackend::new(&store);
        let out = replay
            .translate_batch(&["hello   world".into()], "en", "de")
            .unwrap();
        assert_eq!(out, ["hallo world"]);
        assert_eq!(store.hit_rate(), 1.0);
    }

    #[test]
    fn replay_miss_is_an_error_with_digest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixtures.jsonl");
        std::fs::write(&path, "").unwrap();
        let store = FixtureStore::load(&path).unwrap();
        let replay = FixtureTranslationBackend::new(&store);
        match replay.translate_batch(&["unseen".into()], "en", "de") {
            Err(BackendError::FixtureMiss { digest, hint }) => {
                assert_eq!(digest.len(), 64);
                assert_eq!(hint, "unseen");
            }
            other => panic!("expected FixtureMiss, got {other:?}"),
        }
        assert_eq!(store.hit_rate(), 0.0);
    }

    #[test]
    fn loading_a_missing_file_fails() {
        assert!(matches!(
            FixtureStore::load("/nonexistent/fixtures.jsonl"),
            Err(BackendError::Fixture(_))
        ));
    }

    #[test]
    fn corrupt_lines_are_reported_with_their_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixtures.jsonl");
        std::fs::write(&path, "{\"digest\":\"x\",\"request\":{},\"response\":\"y\"}\nnot json\n")
            .unwrap();
        match FixtureStore::load(&path) {
            Err(BackendError::Fixture(message)) => assert!(message.contains(":2:")),
            other => panic!("expected Fixture, got {other:?}"),
        }
    }

    #[test]
    fn mask_fixtures_record_and_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mlm.jsonl");
        let live = MockMaskedLm::new(vec!["holding".into(), "using".into()]);
        {
            let store = FixtureStore::recording(&path).unwrap();
            let recorder = RecordingMaskedLmBackend::new(&store, live);
            let out = recorder.fill_mask("space [MASK] company", 3).unwrap();
            assert_eq!(out[0].0, "holding");
        }
        let store = FixtureStore::load(&path).unwrap();
        let replay = FixtureMaskedLmBackend::new(&store);
        let out = replay.fill_mask("space  [MASK]  company", 3).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].0, "holding");
        assert!(out[0].1 >= out[1].1);
        // Replay respects the mask precondition too.
        assert!(matches!(
            replay.fill_mask("no mask", 3),
            Err(BackendError::Precondition(_))
        ));
    }

    #[test]
    fn recording_into_a_replay_store_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixtures.jsonl");
        std::fs::write(&path, "").unwrap();
        let store = FixtureStore::load(&path).unwrap();
        assert!(matches!(
            store.record("d", json!({}), json!("r")),
            Err(BackendError::Fixture(_))
        ));
    }
}
