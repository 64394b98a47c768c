//! Line parsers for the WordNet 3.0 database file formats.
//!
//! Errors are plain messages; the caller attaches file name and line
//! number.

pub(crate) struct RawSynset {
    pub offset: u32,
    pub lex_filenum: u8,
    pub ss_type: char,
    /// (form, lex_id) pairs in file order.
    pub words: Vec<(String, u8)>,
    /// (symbol, target offset, target pos tag, source/target field).
    pub pointers: Vec<(String, u32, char, u16)>,
    pub gloss: String,
    pub example_segments: Vec<String>,
}

pub(crate) struct RawSense {
    pub key: String,
    pub offset: u32,
    pub sense_number: u32,
}

pub(crate) struct RawIndexEntry {
    pub lemma: String,
    pub pos: char,
    pub offsets: Vec<u32>,
}

fn parse_offset(tok: &str) -> Result<u32, String> {
    if tok.len() != 8 || !tok.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("synset offset `{tok}` is not exactly 8 decimal digits"));
    }
    tok.parse().map_err(|_| format!("synset offset `{tok}` out of range"))
}

fn next<'a>(it: &mut impl Iterator<Item = &'a str>, what: &str) -> Result<&'a str, String> {
    it.next().ok_or_else(|| format!("truncated line: missing {what}"))
}

/// Parses one `data.pos` line:
/// `offset lex_filenum ss_type w_cnt (word lex_id)+ p_cnt ptr* [frames] | gloss`.
pub(crate) fn parse_data_line(line: &str) -> Result<RawSynset, String> {
    let (head, gloss_field) = line
        .split_once(" | ")
        .ok_or_else(|| "missing ` | ` gloss separator".to_string())?;
    let mut it = head.split_whitespace();

    let offset = parse_offset(next(&mut it, "offset")?)?;
    let lex_filenum: u8 = next(&mut it, "lex_filenum")?
        .parse()
        .map_err(|_| "bad lex_filenum".to_string())?;
    let ss_tok = next(&mut it, "ss_type")?;
    if ss_tok.len() != 1 {
        return Err(format!("ss_type `{ss_tok}` is not a single character"));
    }
    let ss_type = ss_tok.chars().next().expect("length checked");

    let w_cnt = usize::from_str_radix(next(&mut it, "w_cnt")?, 16)
        .map_err(|_| "bad hexadecimal word count".to_string())?;
    if w_cnt == 0 {
        return Err("synset has no words".to_string());
    }
    let mut words = Vec::with_capacity(w_cnt);
    for _ in 0..w_cnt {
        let form = next(&mut it, "word")?.to_string();
        let lex_id = u8::from_str_radix(next(&mut it, "lex_id")?, 16)
            .map_err(|_| "bad hexadecimal lex_id".to_string())?;
        words.push((form, lex_id));
    }

    let p_cnt: usize = next(&mut it, "p_cnt")?
        .parse()
        .map_err(|_| "bad pointer count".to_string())?;
    let mut pointers = Vec::with_capacity(p_cnt);
    for _ in 0..p_cnt {
        let symbol = next(&mut it, "pointer symbol")?.to_string();
        let target = parse_offset(next(&mut it, "pointer offset")?)?;
        let pos_tok = next(&mut it, "pointer pos")?;
        if pos_tok.len() != 1 {
            return Err(format!("pointer pos `{pos_tok}` is not a single character"));
        }
        let pos = pos_tok.chars().next().expect("length checked");
        let st_tok = next(&mut it, "pointer source/target")?;
        if st_tok.len() != 4 {
            return Err(format!("source/target `{st_tok}` is not 4 hex digits"));
        }
        let source_target =
            u16::from_str_radix(st_tok, 16).map_err(|_| "bad source/target field".to_string())?;
        pointers.push((symbol, target, pos, source_target));
    }

    // Verb lines append `f_cnt (+ f_num w_num)*` frame records.
    if let Some(tok) = it.next() {
        let f_cnt: usize = tok.parse().map_err(|_| "bad frame count".to_string())?;
        for _ in 0..f_cnt {
            let plus = next(&mut it, "frame `+` marker")?;
            if plus != "+" {
                return Err(format!("expected frame `+` marker, found `{plus}`"));
            }
            next(&mut it, "frame number")?;
            next(&mut it, "frame word number")?;
        }
    }
    if let Some(extra) = it.next() {
        return Err(format!("unexpected trailing field `{extra}`"));
    }

    let gloss_field = gloss_field.trim_end();
    let (gloss, example_segments) = split_gloss(gloss_field);
    if gloss.trim().is_empty() {
        return Err("empty gloss definition".to_string());
    }

    Ok(RawSynset {
        offset,
        lex_filenum,
        ss_type,
        words,
        pointers,
        gloss,
        example_segments,
    })
}

/// Splits a gloss field into the definition (text before the first
/// `"`-delimited example) and raw example segments. Rejoining the parts
/// with `; ` reproduces the field byte for byte.
fn split_gloss(field: &str) -> (String, Vec<String>) {
    match field.find("; \"") {
        Some(at) => {
            let definition = field[..at].to_string();
            let rest = &field[at + 2..]; // keep the opening quote
            let segments = rest.split("; ").map(str::to_string).collect();
            (definition, segments)
        }
        None => (field.to_string(), Vec::new()),
    }
}

/// Parses one `index.sense` line: `sense_key offset sense_number tag_cnt`.
pub(crate) fn parse_sense_line(line: &str) -> Result<RawSense, String> {
    let mut it = line.split_whitespace();
    let key = next(&mut it, "sense key")?.to_string();
    let offset = parse_offset(next(&mut it, "synset offset")?)?;
    let sense_number: u32 = next(&mut it, "sense number")?
        .parse()
        .map_err(|_| "bad sense number".to_string())?;
    if sense_number == 0 {
        return Err("sense number must be >= 1".to_string());
    }
    next(&mut it, "tag count")?;
    if let Some(extra) = it.next() {
        return Err(format!("unexpected trailing field `{extra}`"));
    }
    Ok(RawSense {
        key,
        offset,
        sense_number,
    })
}

/// Parses one `index.pos` line:
/// `lemma pos synset_cnt p_cnt sym* sense_cnt tagsense_cnt offset+`.
pub(crate) fn parse_index_line(line: &str) -> Result<RawIndexEntry, String> {
    let mut it = line.split_whitespace();
    let lemma = next(&mut it, "lemma")?.to_string();
    let pos_tok = next(&mut it, "pos")?;
    if pos_tok.len() != 1 {
        return Err(format!("pos `{pos_tok}` is not a single character"));
    }
    let pos = pos_tok.chars().next().expect("length checked");
    let synset_cnt: usize = next(&mut it, "synset count")?
        .parse()
        .map_err(|_| "bad synset count".to_string())?;
    let p_cnt: usize = next(&mut it, "pointer count")?
        .parse()
        .map_err(|_| "bad pointer count".to_string())?;
    for _ in 0..p_cnt {
        next(&mut it, "pointer symbol")?;
    }
    next(&mut it, "sense count")?;
    next(&mut it, "tagsense count")?;
    let mut offsets = Vec::with_capacity(synset_cnt);
    for _ in 0..synset_cnt {
        offsets.push(parse_offset(next(&mut it, "synset offset")?)?);
    }
    if let Some(extra) = it.next() {
        return Err(format!("unexpected trailing field `{extra}`"));
    }
    Ok(RawIndexEntry {
        lemma,
        pos,
        offsets,
    })
}
