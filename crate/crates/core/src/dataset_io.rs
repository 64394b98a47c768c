//! Pair file serialization and dataset statistics.
//!
//! Pair files are plain UTF-8 TSV with LF line endings: one fixed header
//! line, then one record per line in input order. Tabs and newlines
//! inside text fields become single spaces at write time, which is the
//! only lossy step; everything else round-trips byte-exactly.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::pairgen::{ContextGlossPair, PairSet, Provenance};

pub const PAIR_FILE_HEADER: &str =
    "pair_id\tinstance_id\tsense_key\tlabel\tprovenance\tparent_pair_id\tcontext\tgloss";

/// Token-length histogram bucket width.
pub const LENGTH_BUCKET_WIDTH: usize = 16;

/// The sequence-length budget records are checked against.
pub const LENGTH_LIMIT: usize = 128;

#[derive(Debug, thiserror::Error)]
pub enum DatasetIoError {
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
}

fn sanitize(field: &str) -> String {
    if field.contains(['\t', '\n', '\r']) {
        field.replace(['\t', '\n', '\r'], " ")
    } else {
        field.to_string()
    }
}

/// Writes one header line plus one line per pair, in order.
pub fn write_pairs(ps: &PairSet, path: impl AsRef<Path>) -> Result<(), DatasetIoError> {
    let path = path.as_ref();
    let io_err = |source| DatasetIoError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    let mut write = |line: &str| out.write_all(line.as_bytes()).map_err(io_err);
    write(PAIR_FILE_HEADER)?;
    write("\n")?;
    for pair in &ps.pairs {
        let row = [
            sanitize(&pair.pair_id),
            sanitize(&pair.instance_id),
            sanitize(&pair.sense_key),
            if pair.label { "1" } else { "0" }.to_string(),
            sanitize(&pair.provenance.to_string()),
            sanitize(pair.parent_pair_id.as_deref().unwrap_or("")),
            sanitize(&pair.context_marked),
            sanitize(&pair.gloss_marked),
        ];
        write(&row.join("\t"))?;
        write("\n")?;
    }
    out.flush().map_err(io_err)
}

/// Reads a pair file back. The set's `source` is the file stem, since the
/// format has no metadata slot for it.
pub fn read_pairs(path: impl AsRef<Path>) -> Result<PairSet, DatasetIoError> {
    let path = path.as_ref();
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| DatasetIoError::Io {
            path: path.display().to_string(),
            source,
        })?;
    let parse_err = |line: usize, message: String| DatasetIoError::Parse {
        path: path.display().to_string(),
        line,
        message,
    };

    let mut lines = text.split('\n').enumerate();
    match lines.next() {
        Some((_, header)) if header == PAIR_FILE_HEADER => {}
        Some((_, header)) => {
            return Err(parse_err(1, format!("unexpected header `{header}`")));
        }
        None => return Err(parse_err(1, "empty file".to_string())),
    }

    let mut pairs = Vec::new();
    for (index, line) in lines {
        if line.is_empty() {
            continue;
        }
        let number = index + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 8 {
            return Err(parse_err(
                number,
                format!("expected 8 tab-separated columns, found {}", fields.len()),
            ));
        }
        let label = match fields[3] {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(number, format!("label must be 0 or 1, got `{other}`")))
            }
        };
        let provenance: Provenance = fields[4]
            .parse()
            .map_err(|message| parse_err(number, message))?;
        pairs.push(ContextGlossPair {
            pair_id: fields[0].to_string(),
            instance_id: fields[1].to_string(),
            sense_key: fields[2].to_string(),
            label,
            provenance,
            parent_pair_id: if fields[5].is_empty() {
                None
            } else {
                Some(fields[5].to_string())
            },
            context_marked: fields[6].to_string(),
            gloss_marked: fields[7].to_string(),
        });
    }

    let source = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(PairSet { source, pairs })
}

/// Whitespace-token length distribution over `context + gloss + 3`, the
/// three extra slots being the classifier and two separator tokens of the
/// encoded sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthStats {
    pub total: usize,
    /// Bucket lower bound (multiples of [`LENGTH_BUCKET_WIDTH`]) to count.
    pub histogram: BTreeMap<usize, usize>,
    pub fraction_leq_128: f64,
}

pub fn length_stats(ps: &PairSet) -> LengthStats {
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    let mut within = 0usize;
    for pair in &ps.pairs {
        let tokens = pair.context_marked.split_whitespace().count()
            + pair.gloss_marked.split_whitespace().count()
            + 3;
        *histogram
            .entry(tokens / LENGTH_BUCKET_WIDTH * LENGTH_BUCKET_WIDTH)
            .or_insert(0) += 1;
        if tokens <= LENGTH_LIMIT {
            within += 1;
        }
    }
    let total = ps.pairs.len();
    LengthStats {
        total,
        histogram,
        fraction_leq_128: if total == 0 {
            1.0
        } else {
            within as f64 / total as f64
        },
    }
}
