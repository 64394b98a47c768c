//! Scoring and error analysis: F1 over gold sense keys, a first-sense
//! baseline, and a near-miss/unrelated breakdown of the failures based on
//! gloss overlap.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::corpus::CorpusDataset;
use crate::wordnet::{LexicalDatabase, SenseKey};

/// Failures at or above this gloss overlap count as near misses.
pub const NEAR_MISS_THRESHOLD: f64 = 0.5;

/// Tokens ignored when comparing gloss definitions.
pub const DEFAULT_STOP_WORDS: &[&str] = &[
    "a", "an", "the", "of", "in", "on", "for", "to", "and", "or", "with", "by", "at", "from",
    "as", "is", "are", "was", "were", "be", "been", "being", "that", "this", "these", "those",
    "it", "its", "something", "someone",
];

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("integrity: {0}")]
    Integrity(String),
}

/// One predicted sense key per instance, keyed by instance id.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PredictionSet {
    predictions: BTreeMap<String, String>,
}

impl PredictionSet {
    pub fn new() -> PredictionSet {
        PredictionSet::default()
    }

    /// Adds or replaces the prediction for one instance. The key must be
    /// syntactically valid.
    pub fn insert(&mut self, instance_id: &str, sense_key: &str) -> Result<(), String> {
        SenseKey::split_raw(sense_key)?;
        self.predictions
            .insert(instance_id.to_string(), sense_key.to_string());
        Ok(())
    }

    pub fn get(&self, instance_id: &str) -> Option<&str> {
        self.predictions.get(instance_id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictions.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.predictions
            .iter()
            .map(|(id, key)| (id.as_str(), key.as_str()))
    }

    /// Reads a prediction file: one `instance_id sense_key` per line.
    /// Blank lines are skipped; anything else must be exactly two fields
    /// with a well-formed key.
    pub fn from_file(path: impl AsRef<Path>) -> Result<PredictionSet, EvalError> {
        let path = path.as_ref();
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|source| EvalError::Io {
                path: path.display().to_string(),
                source,
            })?;
        let mut set = PredictionSet::new();
        for (index, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| EvalError::Parse {
                path: path.display().to_string(),
                line: index + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(parse_err(format!(
                    "expected `instance_id sense_key`, found {} field(s)",
                    fields.len()
                )));
            }
            set.insert(fields[0], fields[1]).map_err(parse_err)?;
        }
        Ok(set)
    }
}

/// Precision, recall and F1 of a prediction set against gold keys. An
/// instance is correct when its prediction appears among its gold keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoreReport {
    pub total: usize,
    pub attempted: usize,
    pub correct: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(numerator: usize, denominator: usize) -> f64 {
    if denominator == 0 {
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

pub fn score(gold: &CorpusDataset, preds: &PredictionSet) -> Result<ScoreReport, EvalError> {
    let mut gold_keys: BTreeMap<&str, &[String]> = BTreeMap::new();
    for instance in &gold.instances {
        if instance.gold_keys.is_empty() {
            return Err(EvalError::Integrity(format!(
                "instance `{}` has no gold keys",
                instance.instance_id
            )));
        }
        gold_keys.insert(&instance.instance_id, &instance.gold_keys);
    }

    let mut attempted = 0usize;
    let mut correct = 0usize;
    for (instance_id, key) in preds.iter() {
        let Some(keys) = gold_keys.get(instance_id) else {
            return Err(EvalError::Integrity(format!(
                "prediction for unknown instance `{instance_id}`"
            )));
        };
        attempted += 1;
        if keys.iter().any(|k| k == key) {
            correct += 1;
        }
    }

    let total = gold.instances.len();
    let precision = ratio(correct, attempted);
    let recall = ratio(correct, total);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(ScoreReport {
        total,
        attempted,
        correct,
        precision,
        recall,
        f1,
    })
}

/// Predicts every instance's first-listed sense (sense number 1).
/// Instances whose lemma has no senses for their part of speech are left
/// unpredicted.
pub fn first_sense_baseline(ds: &CorpusDataset, db: &LexicalDatabase) -> PredictionSet {
    let mut preds = PredictionSet::new();
    for instance in &ds.instances {
        let Some(pos) = instance.pos.wordnet_pos() else {
            continue;
        };
        if let Some((sense, _)) = db.senses_of(&instance.lemma, pos).first() {
            preds
                .insert(&instance.instance_id, sense.raw())
                .expect("database keys are well-formed");
        }
    }
    preds
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    NearMiss,
    Unrelated,
}

/// One incorrect-but-attempted instance with its gloss overlap.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRecord {
    pub instance_id: String,
    pub predicted: String,
    pub gold: Vec<String>,
    pub gloss_overlap: f64,
    pub class: ErrorClass,
}

/// The failures partitioned into near misses and unrelated predictions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub failures: Vec<ErrorRecord>,
    pub near_miss_fraction: f64,
    pub unrelated_fraction: f64,
}

fn content_tokens(db: &LexicalDatabase, key: &str, stop_words: &[&str]) -> Vec<String> {
    let Some(sense) = db.sense_by_key(key) else {
        return Vec::new();
    };
    let Some(synset) = db.synset(sense.synset()) else {
        return Vec::new();
    };
    let mut tokens: Vec<String> = synset
        .gloss()
        .split_whitespace()
        .map(|t| {
            t.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|t| !t.is_empty() && !stop_words.contains(&t.as_str()))
        .collect();
    tokens.sort();
    tokens.dedup();
    tokens
}

/// Jaccard similarity over two sorted, deduplicated token lists. Two empty
/// sets count as identical.
fn jaccard(a: &[String], b: &[String]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let mut intersection = 0usize;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Equal => {
                intersection += 1;
                i += 1;
                j += 1;
            }
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
        }
    }
    let union = a.len() + b.len() - intersection;
    intersection as f64 / union as f64
}

pub fn error_report(
    gold: &CorpusDataset,
    preds: &PredictionSet,
    db: &LexicalDatabase,
) -> Result<ErrorReport, EvalError> {
    error_report_with(gold, preds, db, NEAR_MISS_THRESHOLD, DEFAULT_STOP_WORDS)
}

/// [`error_report`] with an explicit near-miss threshold and stop-word
/// list. Instances are failures when attempted and incorrect; the overlap
/// against multiple gold keys is the maximum over their glosses.
pub fn error_report_with(
    gold: &CorpusDataset,
    preds: &PredictionSet,
    db: &LexicalDatabase,
    threshold: f64,
    stop_words: &[&str],
) -> Result<ErrorReport, EvalError> {
    score(gold, preds)?;

    let mut failures = Vec::new();
    for instance in &gold.instances {
        let Some(predicted) = preds.get(&instance.instance_id) else {
            continue;
        };
        if instance.gold_keys.iter().any(|k| k == predicted) {
            continue;
        }
        let predicted_tokens = content_tokens(db, predicted, stop_words);
        let gloss_overlap = instance
            .gold_keys
            .iter()
            .map(|key| jaccard(&predicted_tokens, &content_tokens(db, key, stop_words)))
            .fold(0.0f64, f64::max);
        let class = if gloss_overlap >= threshold {
            ErrorClass::NearMiss
        } else {
            ErrorClass::Unrelated
        };
        failures.push(ErrorRecord {
            instance_id: instance.instance_id.clone(),
            predicted: predicted.to_string(),
            gold: instance.gold_keys.clone(),
            gloss_overlap,
            class,
        });
    }

    let near_misses = failures
        .iter()
        .filter(|f| f.class == ErrorClass::NearMiss)
        .count();
    let near_miss_fraction = ratio(near_misses, failures.len());
    let unrelated_fraction = if failures.is_empty() {
        0.0
    } else {
        1.0 - near_miss_fraction
    };
    Ok(ErrorReport {
        failures,
        near_miss_fraction,
        unrelated_fraction,
    })
}
