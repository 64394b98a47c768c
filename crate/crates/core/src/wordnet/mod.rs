//! In-memory WordNet 3.0 lexical database.
//!
//! [`LexicalDatabase::load`] parses the Princeton database files
//! (`data.{noun,verb,adj,adv}`, `index.{noun,verb,adj,adv}`, `index.sense`)
//! into an immutable, fully cross-linked graph. Lookups go through the
//! sense index; traversal follows the hypernym/hyponym pointers of the
//! data files. The database never changes after load, so it is safe to
//! share across threads.

mod parse;

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

use parse::{parse_data_line, parse_index_line, parse_sense_line};

/// The four parts of speech stored in the database files. Satellite
/// adjectives (`s`) are folded into [`Pos::Adj`]; nothing downstream
/// distinguishes them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pos {
    Noun,
    Verb,
    Adj,
    Adv,
}

impl Pos {
    pub const ALL: [Pos; 4] = [Pos::Noun, Pos::Verb, Pos::Adj, Pos::Adv];

    /// Single-letter tag used in the database files (`s` folds into `a`).
    pub fn from_tag(tag: char) -> Option<Pos> {
        match tag {
            'n' => Some(Pos::Noun),
            'v' => Some(Pos::Verb),
            'a' | 's' => Some(Pos::Adj),
            'r' => Some(Pos::Adv),
            _ => None,
        }
    }

    /// ss_type digit of a sense key (`5` = satellite, folded into adj).
    pub fn from_ss_type_digit(digit: char) -> Option<Pos> {
        match digit {
            '1' => Some(Pos::Noun),
            '2' => Some(Pos::Verb),
            '3' | '5' => Some(Pos::Adj),
            '4' => Some(Pos::Adv),
            _ => None,
        }
    }

    pub fn tag(self) -> char {
        match self {
            Pos::Noun => 'n',
            Pos::Verb => 'v',
            Pos::Adj => 'a',
            Pos::Adv => 'r',
        }
    }

    /// File suffix of the `data.*` / `index.*` pair holding this POS.
    pub fn file_suffix(self) -> &'static str {
        match self {
            Pos::Noun => "noun",
            Pos::Verb => "verb",
            Pos::Adj => "adj",
            Pos::Adv => "adv",
        }
    }

    pub fn from_name(name: &str) -> Option<Pos> {
        match name.to_ascii_lowercase().as_str() {
            "noun" | "n" => Some(Pos::Noun),
            "verb" | "v" => Some(Pos::Verb),
            "adj" | "adjective" | "a" => Some(Pos::Adj),
            "adv" | "adverb" | "r" => Some(Pos::Adv),
            _ => None,
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.file_suffix())
    }
}

/// Identifier of one synset: the 8-digit byte offset within its POS file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SynsetId {
    pub offset: u32,
    pub pos: Pos,
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:08}-{}", self.offset, self.pos.tag())
    }
}

/// One member word of a synset, exactly as stored in the data file
/// (underscores for spaces, true case, adjective marker suffix retained).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordForm {
    form: String,
    lex_id: u8,
}

impl WordForm {
    /// Stored form, including any `(p)`/`(a)`/`(ip)` adjective marker.
    pub fn form(&self) -> &str {
        &self.form
    }

    pub fn lex_id(&self) -> u8 {
        self.lex_id
    }

    /// Form with any adjective syntactic marker stripped.
    pub fn lemma(&self) -> &str {
        match self.form.find('(') {
            Some(i) if self.form.ends_with(')') => &self.form[..i],
            _ => &self.form,
        }
    }
}

/// A relational pointer to another synset. `@`/`@i` are hypernym links,
/// `~`/`~i` hyponym links; every other symbol is kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pointer {
    pub symbol: String,
    pub target: SynsetId,
    /// 4-hex-digit source/target word numbers; 0000 means semantic.
    pub source_target: u16,
}

impl Pointer {
    pub fn is_hypernym(&self) -> bool {
        self.symbol == "@" || self.symbol == "@i"
    }

    pub fn is_hyponym(&self) -> bool {
        self.symbol == "~" || self.symbol == "~i"
    }
}

/// One WordNet concept: member lemmas, gloss and relational pointers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Synset {
    id: SynsetId,
    lex_filenum: u8,
    words: Vec<WordForm>,
    pointers: Vec<Pointer>,
    /// Definition text: everything before the first `; "` of the gloss field.
    gloss: String,
    /// Raw example segments after the definition, split on `; `. The first
    /// segment keeps its opening quote so rejoining is byte-exact.
    example_segments: Vec<String>,
}

impl Synset {
    pub fn id(&self) -> SynsetId {
        self.id
    }

    pub fn lex_filenum(&self) -> u8 {
        self.lex_filenum
    }

    pub fn word_forms(&self) -> &[WordForm] {
        &self.words
    }

    /// Member lemmas in file order, adjective markers stripped.
    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(|w| w.lemma())
    }

    pub fn pointers(&self) -> &[Pointer] {
        &self.pointers
    }

    /// The definition part of the gloss (what pair generation uses).
    pub fn gloss(&self) -> &str {
        &self.gloss
    }

    /// Usage examples as stored, surrounding quotes stripped when present.
    pub fn examples(&self) -> impl Iterator<Item = &str> {
        self.example_segments.iter().map(|s| {
            let s = s.as_str();
            if s.len() >= 2 && s.starts_with('"') && s.ends_with('"') {
                &s[1..s.len() - 1]
            } else {
                s
            }
        })
    }

    /// Reassembles the full gloss field exactly as it appears in the file.
    pub fn full_gloss(&self) -> String {
        let mut out = self.gloss.clone();
        for seg in &self.example_segments {
            out.push_str("; ");
            out.push_str(seg);
        }
        out
    }

    pub fn hypernym_ids(&self) -> impl Iterator<Item = SynsetId> + '_ {
        self.pointers.iter().filter(|p| p.is_hypernym()).map(|p| p.target)
    }

    pub fn hyponym_ids(&self) -> impl Iterator<Item = SynsetId> + '_ {
        self.pointers.iter().filter(|p| p.is_hyponym()).map(|p| p.target)
    }

    fn contains_lemma(&self, normalized: &str) -> bool {
        self.words
            .iter()
            .any(|w| w.lemma().to_lowercase() == normalized)
    }
}

/// A WordNet sense key (`lemma%ss_type:lex_filenum:lex_id:head:head_id`)
/// resolved to its synset and per-lemma sense number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenseKey {
    raw: String,
    lemma: String,
    synset: SynsetId,
    sense_number: u32,
}

impl SenseKey {
    pub fn raw(&self) -> &str {
        &self.raw
    }

    /// Lemma head of the key: lowercase, underscores for spaces.
    pub fn lemma(&self) -> &str {
        &self.lemma
    }

    pub fn synset(&self) -> SynsetId {
        self.synset
    }

    /// 1-based frequency rank of this sense for its (lemma, pos).
    pub fn sense_number(&self) -> u32 {
        self.sense_number
    }

    /// Splits a raw key into (lemma, pos), validating the shape: exactly
    /// one `%` and exactly four `:` separators.
    pub fn split_raw(raw: &str) -> Result<(&str, Pos), String> {
        if raw.chars().filter(|&c| c == '%').count() != 1 {
            return Err(format!("sense key `{raw}` must contain exactly one '%'"));
        }
        let (lemma, rest) = raw.split_once('%').expect("checked above");
        if lemma.is_empty() {
            return Err(format!("sense key `{raw}` has an empty lemma"));
        }
        if rest.chars().filter(|&c| c == ':').count() != 4 {
            return Err(format!("sense key `{raw}` must contain exactly four ':'"));
        }
        let bytes = rest.as_bytes();
        if bytes.len() < 2 || !bytes[0].is_ascii_digit() || bytes[1] != b':' {
            return Err(format!("sense key `{raw}` has a malformed ss_type"));
        }
        let ss_type = bytes[0] as char;
        let pos = Pos::from_ss_type_digit(ss_type)
            .ok_or_else(|| format!("sense key `{raw}` has unknown ss_type `{ss_type}`"))?;
        Ok((lemma, pos))
    }
}

#[derive(Debug, Error)]
pub enum WordNetError {
    #[error("missing WordNet file {file}: {source}")]
    MissingFile {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed reading {file}: {source}")]
    Io {
        file: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("integrity error in {file}: {message}")]
    Integrity { file: String, message: String },
}

/// Immutable lexical database built from one WordNet `dict` directory.
#[derive(Debug)]
pub struct LexicalDatabase {
    synsets: HashMap<SynsetId, Synset>,
    senses: Vec<SenseKey>,
    /// (lowercase lemma, pos) → sense arena indices, sense_number ascending.
    index: HashMap<(String, Pos), Vec<u32>>,
    by_raw_key: HashMap<String, u32>,
    version: String,
}

impl LexicalDatabase {
    /// Parses all database files under `dict_dir` and cross-links them.
    ///
    /// Header lines (two leading spaces) are skipped. Every pointer target
    /// and every index entry must resolve or loading fails with an
    /// integrity error.
    pub fn load(dict_dir: impl AsRef<Path>) -> Result<Self, WordNetError> {
        let dir = dict_dir.as_ref();
        let mut synsets = HashMap::new();

        for pos in Pos::ALL {
            let name = format!("data.{}", pos.file_suffix());
            for_each_line(dir, &name, |line_no, line| {
                let raw = parse_data_line(line).map_err(|message| WordNetError::Parse {
                    file: name.clone(),
                    line: line_no,
                    message,
                })?;
                let id = SynsetId {
                    offset: raw.offset,
                    pos: Pos::from_tag(raw.ss_type).ok_or_else(|| WordNetError::Parse {
                        file: name.clone(),
                        line: line_no,
                        message: format!("unknown ss_type `{}`", raw.ss_type),
                    })?,
                };
                if id.pos != pos {
                    return Err(WordNetError::Parse {
                        file: name.clone(),
                        line: line_no,
                        message: format!("ss_type `{}` does not belong in {}", raw.ss_type, name),
                    });
                }
                let synset = Synset {
                    id,
                    lex_filenum: raw.lex_filenum,
                    words: raw
                        .words
                        .into_iter()
                        .map(|(form, lex_id)| WordForm { form, lex_id })
                        .collect(),
                    pointers: raw
                        .pointers
                        .into_iter()
                        .map(|(symbol, offset, pos_tag, source_target)| {
                            let pos = Pos::from_tag(pos_tag).ok_or_else(|| {
                                WordNetError::Parse {
                                    file: name.clone(),
                                    line: line_no,
                                    message: format!("unknown pointer pos `{pos_tag}`"),
                                }
                            })?;
                            Ok(Pointer {
                                symbol,
                                target: SynsetId { offset, pos },
                                source_target,
                            })
                        })
                        .collect::<Result<_, WordNetError>>()?,
                    gloss: raw.gloss,
                    example_segments: raw.example_segments,
                };
                synsets.insert(id, synset);
                Ok(())
            })?;
        }

        // Cross-link check: every pointer must land on a loaded synset.
        for synset in synsets.values() {
            for ptr in &synset.pointers {
                if !synsets.contains_key(&ptr.target) {
                    return Err(WordNetError::Integrity {
                        file: format!("data.{}", synset.id.pos.file_suffix()),
                        message: format!(
                            "dangling pointer `{}` from {} to {}",
                            ptr.symbol, synset.id, ptr.target
                        ),
                    });
                }
            }
        }

        // Sense index from index.sense.
        let mut senses: Vec<SenseKey> = Vec::new();
        let mut index: HashMap<(String, Pos), Vec<u32>> = HashMap::new();
        let mut by_raw_key = HashMap::new();
        for_each_line(dir, "index.sense", |line_no, line| {
            let raw = parse_sense_line(line).map_err(|message| WordNetError::Parse {
                file: "index.sense".into(),
                line: line_no,
                message,
            })?;
            let (lemma, pos) = SenseKey::split_raw(&raw.key).map_err(|message| {
                WordNetError::Parse {
                    file: "index.sense".into(),
                    line: line_no,
                    message,
                }
            })?;
            let id = SynsetId {
                offset: raw.offset,
                pos,
            };
            if !synsets.contains_key(&id) {
                return Err(WordNetError::Integrity {
                    file: "index.sense".into(),
                    message: format!("sense key `{}` references missing synset {id}", raw.key),
                });
            }
            let lemma = lemma.to_string();
            let arena_idx = senses.len() as u32;
            by_raw_key.insert(raw.key.clone(), arena_idx);
            senses.push(SenseKey {
                raw: raw.key,
                lemma: lemma.clone(),
                synset: id,
                sense_number: raw.sense_number,
            });
            index.entry((lemma, pos)).or_default().push(arena_idx);
            Ok(())
        })?;

        for ((lemma, pos), entries) in index.iter_mut() {
            entries.sort_by_key(|&i| senses[i as usize].sense_number);
            let numbers: Vec<u32> = entries
                .iter()
                .map(|&i| senses[i as usize].sense_number)
                .collect();
            if numbers.iter().enumerate().any(|(k, &n)| n != k as u32 + 1) {
                return Err(WordNetError::Integrity {
                    file: "index.sense".into(),
                    message: format!(
                        "sense numbers for ({lemma}, {pos}) are not contiguous from 1: {numbers:?}"
                    ),
                });
            }
        }

        let db = LexicalDatabase {
            synsets,
            senses,
            index,
            by_raw_key,
            version: "3.0".into(),
        };

        // The per-POS index files must agree with the index.sense ordering.
        for pos in Pos::ALL {
            let name = format!("index.{}", pos.file_suffix());
            for_each_line(dir, &name, |line_no, line| {
                let entry = parse_index_line(line).map_err(|message| WordNetError::Parse {
                    file: name.clone(),
                    line: line_no,
                    message,
                })?;
                if entry.pos != pos.tag() {
                    return Err(WordNetError::Parse {
                        file: name.clone(),
                        line: line_no,
                        message: format!("pos tag `{}` does not belong in {}", entry.pos, name),
                    });
                }
                let from_senses: Vec<u32> = db
                    .index
                    .get(&(entry.lemma.clone(), pos))
                    .map(|v| v.iter().map(|&i| db.senses[i as usize].synset.offset).collect())
                    .unwrap_or_default();
                if from_senses != entry.offsets {
                    return Err(WordNetError::Integrity {
                        file: name.clone(),
                        message: format!(
                            "entry `{}` lists offsets {:?} but index.sense yields {:?}",
                            entry.lemma, entry.offsets, from_senses
                        ),
                    });
                }
                Ok(())
            })?;
        }

        Ok(db)
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn synset(&self, id: SynsetId) -> Option<&Synset> {
        self.synsets.get(&id)
    }

    pub fn synset_count(&self, pos: Pos) -> usize {
        self.synsets.keys().filter(|id| id.pos == pos).count()
    }

    pub fn total_synsets(&self) -> usize {
        self.synsets.len()
    }

    pub fn sense_count(&self) -> usize {
        self.senses.len()
    }

    /// Resolves a raw sense key string.
    pub fn sense_by_key(&self, raw: &str) -> Option<&SenseKey> {
        self.by_raw_key.get(raw).map(|&i| &self.senses[i as usize])
    }

    /// All senses of a lemma for one POS, sense_number ascending. The lemma
    /// is case-folded and spaces become underscores before lookup; an
    /// unknown lemma yields an empty list.
    pub fn senses_of(&self, lemma: &str, pos: Pos) -> Vec<(&SenseKey, &Synset)> {
        let normalized = normalize_lemma(lemma);
        match self.index.get(&(normalized, pos)) {
            Some(entries) => entries
                .iter()
                .map(|&i| {
                    let sense = &self.senses[i as usize];
                    let synset = self
                        .synsets
                        .get(&sense.synset)
                        .expect("sense targets validated at load");
                    (sense, synset)
                })
                .collect(),
            None => Vec::new(),
        }
    }

    /// Direct hypernyms, in data-file pointer order.
    pub fn hypernyms_of(&self, synset: &Synset) -> Vec<&Synset> {
        synset
            .hypernym_ids()
            .map(|id| self.synsets.get(&id).expect("pointers validated at load"))
            .collect()
    }

    /// Direct hyponyms, in data-file pointer order.
    pub fn hyponyms_of(&self, synset: &Synset) -> Vec<&Synset> {
        synset
            .hyponym_ids()
            .map(|id| self.synsets.get(&id).expect("pointers validated at load"))
            .collect()
    }

    /// Union of co-lemmas over all synsets of (word, pos), excluding the
    /// word itself. Underscores become spaces, duplicates are dropped, and
    /// order follows sense_number then within-synset lemma order.
    pub fn synonyms_of(&self, word: &str, pos: Pos) -> Vec<String> {
        let normalized = normalize_lemma(word);
        let mut out: Vec<String> = Vec::new();
        for (_, synset) in self.senses_of(word, pos) {
            for form in synset.words.iter() {
                let lemma = form.lemma();
                if lemma.to_lowercase() == normalized {
                    continue;
                }
                let display = lemma.replace('_', " ");
                if !out.contains(&display) {
                    out.push(display);
                }
            }
        }
        out
    }

    /// Noun synsets whose lemma list contains the normalized word. This is
    /// the raw scan behind `synonyms_of`; exposed for diagnostics.
    pub fn synsets_containing(&self, word: &str, pos: Pos) -> Vec<&Synset> {
        let normalized = normalize_lemma(word);
        let mut hits: Vec<&Synset> = self
            .synsets
            .values()
            .filter(|s| s.id.pos == pos && s.contains_lemma(&normalized))
            .collect();
        hits.sort_by_key(|s| s.id);
        hits
    }

    pub fn synsets(&self) -> impl Iterator<Item = &Synset> {
        self.synsets.values()
    }
}

/// Lookup normalization: case-fold and spaces to underscores. Stored forms
/// are never touched, which keeps re-serialization exact.
pub fn normalize_lemma(lemma: &str) -> String {
    lemma.to_lowercase().replace(' ', "_")
}

fn for_each_line(
    dir: &Path,
    name: &str,
    mut f: impl FnMut(usize, &str) -> Result<(), WordNetError>,
) -> Result<(), WordNetError> {
    let path = dir.join(name);
    let file = File::open(&path).map_err(|source| WordNetError::MissingFile {
        file: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| WordNetError::Io {
            file: name.to_string(),
            source,
        })?;
        // License header lines start with two spaces.
        if line.starts_with("  ") || line.is_empty() {
            continue;
        }
        f(i + 1, &line)?;
    }
    Ok(())
}
