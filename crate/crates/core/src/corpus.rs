//! WSD corpus ingestion in the unified evaluation-framework format.
//!
//! A corpus is an XML file (`corpus > text > sentence > (wf | instance)`)
//! plus an optional gold key file with lines `instance_id key1 [key2 ...]`.
//! Training data (SemCor) and the five evaluation sets (SE2, SE3, SE07,
//! SE13, SE15) all use this layout. [`filter_pos`] restricts a dataset to
//! one part of speech and [`concat`] splices the evaluation sets into the
//! combined ALLn dataset.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use quick_xml::escape::resolve_predefined_entity;
use quick_xml::events::{BytesRef, BytesStart, Event};
use quick_xml::{Reader, XmlVersion};
use thiserror::Error;

use crate::wordnet::Pos;

/// Coarse part-of-speech tag as used by the unified format's `pos`
/// attribute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoarsePos {
    Noun,
    Verb,
    Adj,
    Adv,
    Other,
}

impl CoarsePos {
    pub fn from_attr(value: &str) -> CoarsePos {
        match value {
            "NOUN" => CoarsePos::Noun,
            "VERB" => CoarsePos::Verb,
            "ADJ" => CoarsePos::Adj,
            "ADV" => CoarsePos::Adv,
            _ => CoarsePos::Other,
        }
    }

    /// The matching WordNet POS, if any.
    pub fn wordnet_pos(self) -> Option<Pos> {
        match self {
            CoarsePos::Noun => Some(Pos::Noun),
            CoarsePos::Verb => Some(Pos::Verb),
            CoarsePos::Adj => Some(Pos::Adj),
            CoarsePos::Adv => Some(Pos::Adv),
            CoarsePos::Other => None,
        }
    }

    pub fn attr(self) -> &'static str {
        match self {
            CoarsePos::Noun => "NOUN",
            CoarsePos::Verb => "VERB",
            CoarsePos::Adj => "ADJ",
            CoarsePos::Adv => "ADV",
            CoarsePos::Other => "X",
        }
    }
}

impl fmt::Display for CoarsePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.attr())
    }
}

/// One token of a sentence. Multi-word expressions stay a single token
/// whose surface is the space-joined span, as grouped by the XML.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub pos: CoarsePos,
    /// Set iff this token is a tagged disambiguation instance.
    pub instance_id: Option<String>,
}

/// A tagged disambiguation instance together with its whole sentence.
/// Sentences are shared between instances of the same sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WsdInstance {
    pub instance_id: String,
    pub lemma: String,
    pub pos: CoarsePos,
    pub sentence: Arc<Vec<Token>>,
    pub target_index: usize,
    /// Raw sense-key strings from the gold file; empty for unlabeled input.
    pub gold_keys: Vec<String>,
}

impl WsdInstance {
    pub fn target(&self) -> &Token {
        &self.sentence[self.target_index]
    }

    /// The sentence as plain text: surfaces joined with single spaces.
    pub fn sentence_text(&self) -> String {
        let surfaces: Vec<&str> = self.sentence.iter().map(|t| t.surface.as_str()).collect();
        surfaces.join(" ")
    }
}

/// An ordered collection of instances from one corpus (or a concatenation).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorpusDataset {
    pub name: String,
    pub instances: Vec<WsdInstance>,
}

impl CorpusDataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file} at byte {position}: {message}")]
    Xml {
        file: String,
        position: u64,
        message: String,
    },
    #[error("integrity error in {file}: {message}")]
    Integrity { file: String, message: String },
}

/// Parses a unified-format corpus, attaching gold keys when a gold file is
/// given. Instances with no gold line keep empty `gold_keys` and are
/// reported with a warning; a gold line naming an unknown instance id is an
/// integrity error.
pub fn parse_corpus(
    xml_path: impl AsRef<Path>,
    gold_path: Option<&Path>,
) -> Result<CorpusDataset, CorpusError> {
    let xml_path = xml_path.as_ref();
    let file_label = xml_path.display().to_string();
    let name = xml_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".to_string());

    let mut reader = Reader::from_file(xml_path).map_err(|e| match e {
        quick_xml::Error::Io(source) => CorpusError::Io {
            file: file_label.clone(),
            source: std::io::Error::new(source.kind(), source.to_string()),
        },
        other => CorpusError::Xml {
            file: file_label.clone(),
            position: 0,
            message: other.to_string(),
        },
    })?;

    let xml_err = |position: u64, message: String| CorpusError::Xml {
        file: file_label.clone(),
        position,
        message,
    };

    let mut instances: Vec<WsdInstance> = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();
    let mut sentence: Vec<Token> = Vec::new();
    // (surface buffer, lemma, pos, instance id) of the open wf/instance.
    let mut open_token: Option<(String, String, CoarsePos, Option<String>)> = None;
    let mut buf = Vec::new();

    loop {
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| xml_err(reader.error_position(), e.to_string()))?;
        let position = reader.buffer_position();
        match event {
            Event::Start(ref e) => match e.name().as_ref() {
                b"sentence" => sentence.clear(),
                b"wf" => {
                    let lemma = get_attr(e, "lemma")
                        .map_err(|m| xml_err(position, m))?
                        .unwrap_or_default();
                    let pos = get_attr(e, "pos")
                        .map_err(|m| xml_err(position, m))?
                        .unwrap_or_default();
                    open_token = Some((String::new(), lemma, CoarsePos::from_attr(&pos), None));
                }
                b"instance" => {
                    let required = |name: &str| {
                        get_attr(e, name)
                            .map_err(|m| xml_err(position, m))?
                            .filter(|v| !v.is_empty())
                            .ok_or_else(|| {
                                xml_err(
                                    position,
                                    format!("<instance> missing required attribute `{name}`"),
                                )
                            })
                    };
                    let id = required("id")?;
                    let lemma = required("lemma")?;
                    let pos = required("pos")?;
                    if !seen_ids.insert(id.clone()) {
                        return Err(CorpusError::Integrity {
                            file: file_label.clone(),
                            message: format!("duplicate instance id `{id}`"),
                        });
                    }
                    open_token =
                        Some((String::new(), lemma, CoarsePos::from_attr(&pos), Some(id)));
                }
                _ => {}
            },
            Event::Text(t) => {
                if let Some((surface, ..)) = open_token.as_mut() {
                    let text = t.decode().map_err(|e| xml_err(position, e.to_string()))?;
                    surface.push_str(&text);
                }
            }
            Event::GeneralRef(r) => {
                if let Some((surface, ..)) = open_token.as_mut() {
                    surface.push(resolve_reference(&r).map_err(|m| xml_err(position, m))?);
                }
            }
            Event::End(ref e) => match e.name().as_ref() {
                b"wf" | b"instance" => {
                    let (surface, lemma, pos, instance_id) =
                        open_token.take().ok_or_else(|| {
                            xml_err(position, "unmatched closing token tag".into())
                        })?;
                    let surface = surface.split_whitespace().collect::<Vec<_>>().join(" ");
                    if surface.is_empty() {
                        return Err(xml_err(position, "token with empty surface form".into()));
                    }
                    sentence.push(Token {
                        surface,
                        lemma,
                        pos,
                        instance_id,
                    });
                }
                b"sentence" => {
                    let shared = Arc::new(std::mem::take(&mut sentence));
                    for (i, token) in shared.iter().enumerate() {
                        if let Some(id) = &token.instance_id {
                            instances.push(WsdInstance {
                                instance_id: id.clone(),
                                lemma: token.lemma.clone(),
                                pos: token.pos,
                                sentence: Arc::clone(&shared),
                                target_index: i,
                                gold_keys: Vec::new(),
                            });
                        }
                    }
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    if let Some(gold_path) = gold_path {
        attach_gold(&mut instances, gold_path)?;
    }

    Ok(CorpusDataset { name, instances })
}

fn get_attr(e: &BytesStart<'_>, name: &str) -> Result<Option<String>, String> {
    match e.try_get_attribute(name) {
        Ok(Some(attr)) => attr
            .normalized_value(XmlVersion::Implicit1_0)
            .map(|v| Some(v.into_owned()))
            .map_err(|err| err.to_string()),
        Ok(None) => Ok(None),
        Err(err) => Err(err.to_string()),
    }
}

fn resolve_reference(r: &BytesRef<'_>) -> Result<char, String> {
    if let Some(ch) = r.resolve_char_ref().map_err(|e| e.to_string())? {
        return Ok(ch);
    }
    let name = r.decode().map_err(|e| e.to_string())?;
    match resolve_predefined_entity(&name) {
        Some(s) if s.chars().count() == 1 => Ok(s.chars().next().expect("checked")),
        _ => Err(format!("unsupported entity reference `&{name};`")),
    }
}

fn attach_gold(instances: &mut [WsdInstance], gold_path: &Path) -> Result<(), CorpusError> {
    let file_label = gold_path.display().to_string();
    let text = fs::read_to_string(gold_path).map_err(|source| CorpusError::Io {
        file: file_label.clone(),
        source,
    })?;

    let mut gold: HashMap<&str, Vec<String>> = HashMap::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let id = fields.next().expect("non-empty line has a first field");
        let keys: Vec<String> = fields.map(str::to_string).collect();
        if keys.is_empty() {
            return Err(CorpusError::Integrity {
                file: file_label.clone(),
                message: format!("line {}: gold line `{id}` lists no keys", line_no + 1),
            });
        }
        if gold.insert(id, keys).is_some() {
            return Err(CorpusError::Integrity {
                file: file_label.clone(),
                message: format!("duplicate gold line for instance `{id}`"),
            });
        }
    }

    let known: HashSet<&str> = instances.iter().map(|i| i.instance_id.as_str()).collect();
    for id in gold.keys() {
        if !known.contains(id) {
            return Err(CorpusError::Integrity {
                file: file_label.clone(),
                message: format!("gold line references unknown instance id `{id}`"),
            });
        }
    }

    for instance in instances.iter_mut() {
        match gold.get(instance.instance_id.as_str()) {
            Some(keys) => {
                for key in keys {
                    let lemma_part = key.split('%').next().unwrap_or("");
                    if !lemma_part.eq_ignore_ascii_case(&instance.lemma.replace(' ', "_")) {
                        log::warn!(
                            "gold key `{key}` does not share the lemma of instance `{}` ({})",
                            instance.instance_id,
                            instance.lemma
                        );
                    }
                }
                instance.gold_keys = keys.clone();
            }
            None => {
                log::warn!(
                    "instance `{}` has no gold line; keeping it unlabeled",
                    instance.instance_id
                );
            }
        }
    }
    Ok(())
}

/// Keeps only instances of one coarse POS; order and sentences untouched.
pub fn filter_pos(dataset: &CorpusDataset, pos: CoarsePos) -> CorpusDataset {
    CorpusDataset {
        name: dataset.name.clone(),
        instances: dataset
            .instances
            .iter()
            .filter(|i| i.pos == pos)
            .cloned()
            .collect(),
    }
}

/// Concatenates datasets into one, prefixing every instance id with its
/// source dataset name (`<source>.<id>`) so ids stay unique.
pub fn concat(datasets: &[CorpusDataset], name: &str) -> Result<CorpusDataset, CorpusError> {
    let mut instances = Vec::new();
    let mut seen: HashSet<String> = HashSet::new();
    for ds in datasets {
        // Sentences are shared; rewrite each one once.
        let mut rewritten: HashMap<*const Vec<Token>, Arc<Vec<Token>>> = HashMap::new();
        for inst in &ds.instances {
            let id = format!("{}.{}", ds.name, inst.instance_id);
            if !seen.insert(id.clone()) {
                return Err(CorpusError::Integrity {
                    file: name.to_string(),
                    message: format!("duplicate instance id `{id}` after prefixing"),
                });
            }
            let sentence = rewritten
                .entry(Arc::as_ptr(&inst.sentence))
                .or_insert_with(|| {
                    Arc::new(
                        inst.sentence
                            .iter()
                            .map(|t| Token {
                                instance_id: t
                                    .instance_id
                                    .as_ref()
                                    .map(|old| format!("{}.{}", ds.name, old)),
                                ..t.clone()
                            })
                            .collect(),
                    )
                })
                .clone();
            instances.push(WsdInstance {
                instance_id: id,
                sentence,
                ..inst.clone()
            });
        }
    }
    Ok(CorpusDataset {
        name: name.to_string(),
        instances,
    })
}
