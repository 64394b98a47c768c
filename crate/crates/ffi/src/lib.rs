//! C interface over the core toolkit: opaque handles, integer status
//! codes and a thread-local error message. Every entry point catches
//! panics, so no unwind ever crosses the language boundary.
//!
//! Ownership rules: handles returned through `out` parameters belong to
//! the caller and must be released with the matching `gf_*_close`
//! function. Strings returned by `gf_last_error_message` stay owned by
//! the library and are valid on the calling thread until its next
//! failing `gf_` call.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use glossforge::augment::{augment_hypernym, augment_synonym, AugmentMethod, AugmentationSpec};
use glossforge::corpus::{filter_pos, parse_corpus, CoarsePos, CorpusError};
use glossforge::dataset_io::{length_stats, read_pairs, write_pairs};
use glossforge::eval::{score, PredictionSet};
use glossforge::pairgen::{build_pairset, PairSet};
use glossforge::wordnet::{LexicalDatabase, Pos};

/// Result of every fallible `gf_` entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GfStatus {
    Ok = 0,
    /// A pointer was null, a string was not UTF-8, or a value was out of
    /// range. Details via `gf_last_error_message`.
    InvalidArgument = 1,
    Io = 2,
    Parse = 3,
    Backend = 4,
    /// An internal panic was caught at the boundary.
    Panic = 5,
}

/// Hypernym-based augmentation flavors.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GfHypernymMode {
    Replace = 0,
    Concat = 1,
    HyperHypo = 2,
}

/// Opaque sense inventory handle.
pub struct GfDatabase(LexicalDatabase);

/// Opaque context-gloss pair collection handle.
pub struct GfPairSet(PairSet);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).expect("nul bytes replaced");
    });
}

fn chain(err: &dyn std::error::Error) -> String {
    let mut message = err.to_string();
    let mut cursor = err.source();
    while let Some(cause) = cursor {
        let text = cause.to_string();
        // Most error types here already embed their cause in Display.
        if !message.contains(&text) {
            message.push_str(": ");
            message.push_str(&text);
        }
        cursor = cause.source();
    }
    message
}

fn corpus_status(error: &CorpusError) -> GfStatus {
    match error {
        CorpusError::Io { .. } => GfStatus::Io,
        _ => GfStatus::Parse,
    }
}

/// Message for the most recent failure on this thread; never null.
#[no_mangle]
pub extern "C" fn gf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

fn guarded(f: impl FnOnce() -> GfStatus) -> GfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let detail = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "opaque panic payload".to_string());
            set_error(format!("internal panic: {detail}"));
            GfStatus::Panic
        }
    }
}

unsafe fn required_str<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, GfStatus> {
    if ptr.is_null() {
        set_error(format!("{name} must not be null"));
        return Err(GfStatus::InvalidArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{name} is not valid UTF-8"));
        GfStatus::InvalidArgument
    })
}

unsafe fn optional_str<'a>(
    ptr: *const c_char,
    name: &str,
) -> Result<Option<&'a str>, GfStatus> {
    if ptr.is_null() {
        return Ok(None);
    }
    required_str(ptr, name).map(Some)
}

unsafe fn required_ref<'a, T>(ptr: *const T, name: &str) -> Result<&'a T, GfStatus> {
    if ptr.is_null() {
        set_error(format!("{name} must not be null"));
        return Err(GfStatus::InvalidArgument);
    }
    Ok(&*ptr)
}

unsafe fn write_handle<T>(out: *mut *mut T, value: T, name: &str) -> Result<(), GfStatus> {
    if out.is_null() {
        set_error(format!("{name} must not be null"));
        return Err(GfStatus::InvalidArgument);
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn parse_pos_filter(value: &str) -> Result<CoarsePos, GfStatus> {
    match value.to_ascii_lowercase().as_str() {
        "noun" => Ok(CoarsePos::Noun),
        "verb" => Ok(CoarsePos::Verb),
        "adj" => Ok(CoarsePos::Adj),
        "adv" => Ok(CoarsePos::Adv),
        other => {
            set_error(format!(
                "pos filter must be noun, verb, adj or adv, got `{other}`"
            ));
            Err(GfStatus::InvalidArgument)
        }
    }
}

macro_rules! check {
    ($expr:expr) => {
        match $expr {
            Ok(value) => value,
            Err(status) => return status,
        }
    };
}

/// Loads a WordNet `dict` directory. On success `*out` owns the handle.
#[no_mangle]
pub unsafe extern "C" fn gf_database_open(
    dict_dir: *const c_char,
    out: *mut *mut GfDatabase,
) -> GfStatus {
    guarded(|| {
        let dir = check!(required_str(dict_dir, "dict_dir"));
        match LexicalDatabase::load(Path::new(dir)) {
            Ok(db) => {
                check!(write_handle(out, GfDatabase(db), "out"));
                GfStatus::Ok
            }
            Err(error) => {
                set_error(chain(&error));
                GfStatus::Io
            }
        }
    })
}

/// Releases a database handle. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn gf_database_close(db: *mut GfDatabase) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

/// Total synsets across all parts of speech; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn gf_database_synset_count(db: *const GfDatabase) -> u64 {
    if db.is_null() {
        return 0;
    }
    Pos::ALL
        .iter()
        .map(|&pos| (*db).0.synset_count(pos) as u64)
        .sum()
}

/// Total sense keys; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn gf_database_sense_count(db: *const GfDatabase) -> u64 {
    if db.is_null() {
        return 0;
    }
    (*db).0.sense_count() as u64
}

/// Builds context-gloss pairs from a unified corpus. `gold_path` may be
/// null for unlabeled input and `pos_filter` may be null for all parts
/// of speech.
#[no_mangle]
pub unsafe extern "C" fn gf_pairs_build(
    db: *const GfDatabase,
    xml_path: *const c_char,
    gold_path: *const c_char,
    pos_filter: *const c_char,
    out: *mut *mut GfPairSet,
) -> GfStatus {
    guarded(|| {
        let db = check!(required_ref(db, "db"));
        let xml = check!(required_str(xml_path, "xml_path"));
        let gold = check!(optional_str(gold_path, "gold_path")).map(PathBuf::from);
        let pos = check!(optional_str(pos_filter, "pos_filter"));
        let mut dataset = match parse_corpus(Path::new(xml), gold.as_deref()) {
            Ok(dataset) => dataset,
            Err(error) => {
                set_error(chain(&error));
                return corpus_status(&error);
            }
        };
        if let Some(pos) = pos {
            dataset = filter_pos(&dataset, check!(parse_pos_filter(pos)));
        }
        let (pairs, _) = build_pairset(&dataset, &db.0);
        check!(write_handle(out, GfPairSet(pairs), "out"));
        GfStatus::Ok
    })
}

/// Reads a pair file written by this library.
#[no_mangle]
pub unsafe extern "C" fn gf_pairs_read(
    path: *const c_char,
    out: *mut *mut GfPairSet,
) -> GfStatus {
    guarded(|| {
        let path = check!(required_str(path, "path"));
        match read_pairs(Path::new(path)) {
            Ok(ps) => {
                check!(write_handle(out, GfPairSet(ps), "out"));
                GfStatus::Ok
            }
            Err(error @ glossforge::dataset_io::DatasetIoError::Io { .. }) => {
                set_error(chain(&error));
                GfStatus::Io
            }
            Err(error) => {
                set_error(chain(&error));
                GfStatus::Parse
            }
        }
    })
}

/// Writes a pair set as a TSV pair file.
#[no_mangle]
pub unsafe extern "C" fn gf_pairs_write(
    ps: *const GfPairSet,
    path: *const c_char,
) -> GfStatus {
    guarded(|| {
        let ps = check!(required_ref(ps, "ps"));
        let path = check!(required_str(path, "path"));
        match write_pairs(&ps.0, Path::new(path)) {
            Ok(()) => GfStatus::Ok,
            Err(error) => {
                set_error(chain(&error));
                GfStatus::Io
            }
        }
    })
}

/// Number of records; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn gf_pairs_len(ps: *const GfPairSet) -> u64 {
    if ps.is_null() {
        return 0;
    }
    (*ps).0.len() as u64
}

/// Fraction of records whose combined token length fits in 128; -1.0 for
/// a null handle.
#[no_mangle]
pub unsafe extern "C" fn gf_pairs_short_fraction(ps: *const GfPairSet) -> f64 {
    if ps.is_null() {
        return -1.0;
    }
    length_stats(&(*ps).0).fraction_leq_128
}

/// Releases a pair-set handle. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn gf_pairs_close(ps: *mut GfPairSet) {
    if !ps.is_null() {
        drop(Box::from_raw(ps));
    }
}

/// Appends hypernym-derived records; `*out` is a new handle containing
/// the input records plus the appended ones.
#[no_mangle]
pub unsafe extern "C" fn gf_pairs_augment_hypernym(
    ps: *const GfPairSet,
    db: *const GfDatabase,
    mode: GfHypernymMode,
    out: *mut *mut GfPairSet,
) -> GfStatus {
    guarded(|| {
        let ps = check!(required_ref(ps, "ps"));
        let db = check!(required_ref(db, "db"));
        let mode = match mode {
            GfHypernymMode::Replace => glossforge::augment::HypernymMode::Replace,
            GfHypernymMode::Concat => glossforge::augment::HypernymMode::Concat,
            GfHypernymMode::HyperHypo => glossforge::augment::HypernymMode::HyperHypo,
        };
        let outcome = augment_hypernym(&ps.0, &db.0, mode);
        check!(write_handle(out, GfPairSet(outcome.pairs), "out"));
        GfStatus::Ok
    })
}

/// Appends synonym-replacement records with the given per-word
/// probability and seed.
#[no_mangle]
pub unsafe extern "C" fn gf_pairs_augment_synonym(
    ps: *const GfPairSet,
    db: *const GfDatabase,
    p_replace: f64,
    seed: u64,
    out: *mut *mut GfPairSet,
) -> GfStatus {
    guarded(|| {
        let ps = check!(required_ref(ps, "ps"));
        let db = check!(required_ref(db, "db"));
        let mut spec = AugmentationSpec::new(AugmentMethod::Synonym);
        spec.p_replace = p_replace;
        spec.seed = seed;
        if let Err(message) = spec.validate() {
            set_error(message);
            return GfStatus::InvalidArgument;
        }
        let outcome = augment_synonym(&ps.0, &db.0, &spec);
        check!(write_handle(out, GfPairSet(outcome.pairs), "out"));
        GfStatus::Ok
    })
}

/// Scores a prediction file against a gold-labeled corpus and writes the
/// F1 value through `out_f1`.
#[no_mangle]
pub unsafe extern "C" fn gf_score_files(
    xml_path: *const c_char,
    gold_path: *const c_char,
    preds_path: *const c_char,
    out_f1: *mut f64,
) -> GfStatus {
    guarded(|| {
        let xml = check!(required_str(xml_path, "xml_path"));
        let gold = check!(required_str(gold_path, "gold_path"));
        let preds = check!(required_str(preds_path, "preds_path"));
        if out_f1.is_null() {
            set_error("out_f1 must not be null");
            return GfStatus::InvalidArgument;
        }
        let dataset = match parse_corpus(Path::new(xml), Some(Path::new(gold))) {
            Ok(dataset) => dataset,
            Err(error) => {
                set_error(chain(&error));
                return corpus_status(&error);
            }
        };
        let predictions = match PredictionSet::from_file(Path::new(preds)) {
            Ok(predictions) => predictions,
            Err(error @ glossforge::eval::EvalError::Io { .. }) => {
                set_error(chain(&error));
                return GfStatus::Io;
            }
            Err(error) => {
                set_error(chain(&error));
                return GfStatus::Parse;
            }
        };
        match score(&dataset, &predictions) {
            Ok(report) => {
                *out_f1 = report.f1;
                GfStatus::Ok
            }
            Err(error) => {
                set_error(chain(&error));
                GfStatus::InvalidArgument
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    fn mini_dict() -> CString {
        let path = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("../core/tests/fixtures/mini_wordnet/dict");
        CString::new(path.to_str().unwrap()).unwrap()
    }

    fn last_error() -> String {
        unsafe {
            CStr::from_ptr(gf_last_error_message())
                .to_string_lossy()
                .into_owned()
        }
    }

    fn open_mini() -> *mut GfDatabase {
        let mut db = ptr::null_mut();
        let status = unsafe { gf_database_open(mini_dict().as_ptr(), &mut db) };
        assert_eq!(status, GfStatus::Ok, "{}", last_error());
        assert!(!db.is_null());
        db
    }

    const TINY_XML: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<corpus lang="en" source="tiny">
<text id="d000">
<sentence id="d000.s000">
<wf lemma="the" pos="DET">The</wf>
<instance id="d000.s000.t000" lemma="meeting" pos="NOUN">meeting</instance>
<wf lemma="at" pos="ADP">at</wf>
<wf lemma="the" pos="DET">the</wf>
<instance id="d000.s000.t001" lemma="cafeteria" pos="NOUN">cafeteria</instance>
<wf lemma="end" pos="VERB">ended</wf>
<wf lemma="." pos=".">.</wf>
</sentence>
</text>
</corpus>
"#;

    const TINY_GOLD: &str =
        "d000.s000.t000 meeting%1:14:00::\nd000.s000.t001 cafeteria%1:06:00::\n";

    struct Corpus {
        _dir: tempfile::TempDir,
        xml: CString,
        gold: CString,
        root: std::path::PathBuf,
    }

    fn corpus() -> Corpus {
        let dir = tempfile::tempdir().unwrap();
        let xml_path = dir.path().join("tiny.xml");
        let gold_path = dir.path().join("tiny.gold");
        std::fs::write(&xml_path, TINY_XML).unwrap();
        std::fs::write(&gold_path, TINY_GOLD).unwrap();
        Corpus {
            xml: CString::new(xml_path.to_str().unwrap()).unwrap(),
            gold: CString::new(gold_path.to_str().unwrap()).unwrap(),
            root: dir.path().to_path_buf(),
            _dir: dir,
        }
    }

    #[test]
    fn database_opens_and_reports_counts() {
        let db = open_mini();
        unsafe {
            assert!(gf_database_synset_count(db) > 0);
            assert!(gf_database_sense_count(db) > gf_database_synset_count(db));
            gf_database_close(db);
        }
    }

    #[test]
    fn missing_database_sets_an_error_message() {
        let mut db = ptr::null_mut();
        let path = CString::new("/no/such/dict").unwrap();
        let status = unsafe { gf_database_open(path.as_ptr(), &mut db) };
        assert_eq!(status, GfStatus::Io);
        assert!(db.is_null());
        assert!(last_error().contains("/no/such/dict"), "{}", last_error());
    }

    #[test]
    fn missing_corpus_is_an_io_error() {
        let db = open_mini();
        let mut ps = ptr::null_mut();
        let xml = CString::new("/no/such/corpus.xml").unwrap();
        let status =
            unsafe { gf_pairs_build(db, xml.as_ptr(), ptr::null(), ptr::null(), &mut ps) };
        assert_eq!(status, GfStatus::Io);
        assert!(ps.is_null());
        assert!(last_error().contains("/no/such/corpus.xml"), "{}", last_error());
        unsafe { gf_database_close(db) };
    }

    #[test]
    fn null_arguments_are_rejected_not_crashes() {
        let mut db = ptr::null_mut();
        assert_eq!(
            unsafe { gf_database_open(ptr::null(), &mut db) },
            GfStatus::InvalidArgument
        );
        assert_eq!(
            unsafe { gf_database_open(mini_dict().as_ptr(), ptr::null_mut()) },
            GfStatus::InvalidArgument
        );
        assert_eq!(unsafe { gf_database_synset_count(ptr::null()) }, 0);
        assert_eq!(unsafe { gf_pairs_len(ptr::null()) }, 0);
        assert_eq!(unsafe { gf_pairs_short_fraction(ptr::null()) }, -1.0);
        unsafe {
            gf_database_close(ptr::null_mut());
            gf_pairs_close(ptr::null_mut());
        }
    }

    #[test]
    fn pairs_build_write_read_round_trip() {
        let db = open_mini();
        let corpus = corpus();
        let mut ps = ptr::null_mut();
        let status = unsafe {
            gf_pairs_build(
                db,
                corpus.xml.as_ptr(),
                corpus.gold.as_ptr(),
                ptr::null(),
                &mut ps,
            )
        };
        assert_eq!(status, GfStatus::Ok, "{}", last_error());
        // meeting has two noun senses, cafeteria one.
        assert_eq!(unsafe { gf_pairs_len(ps) }, 3);
        assert_eq!(unsafe { gf_pairs_short_fraction(ps) }, 1.0);

        let out_path = corpus.root.join("pairs.tsv");
        let out_c = CString::new(out_path.to_str().unwrap()).unwrap();
        assert_eq!(
            unsafe { gf_pairs_write(ps, out_c.as_ptr()) },
            GfStatus::Ok
        );
        let mut back = ptr::null_mut();
        assert_eq!(
            unsafe { gf_pairs_read(out_c.as_ptr(), &mut back) },
            GfStatus::Ok
        );
        assert_eq!(unsafe { gf_pairs_len(back) }, 3);
        unsafe {
            gf_pairs_close(ps);
            gf_pairs_close(back);
            gf_database_close(db);
        }
    }

    #[test]
    fn pos_filter_narrows_and_validates() {
        let db = open_mini();
        let corpus = corpus();
        let verb = CString::new("verb").unwrap();
        let mut ps = ptr::null_mut();
        let status = unsafe {
            gf_pairs_build(db, corpus.xml.as_ptr(), corpus.gold.as_ptr(), verb.as_ptr(), &mut ps)
        };
        assert_eq!(status, GfStatus::Ok);
        assert_eq!(unsafe { gf_pairs_len(ps) }, 0);
        unsafe { gf_pairs_close(ps) };

        let bogus = CString::new("bogus").unwrap();
        let mut ps = ptr::null_mut();
        let status = unsafe {
            gf_pairs_build(db, corpus.xml.as_ptr(), corpus.gold.as_ptr(), bogus.as_ptr(), &mut ps)
        };
        assert_eq!(status, GfStatus::InvalidArgument);
        unsafe { gf_database_close(db) };
    }

    #[test]
    fn hypernym_concat_appends_records() {
        let db = open_mini();
        let corpus = corpus();
        let mut ps = ptr::null_mut();
        unsafe {
            gf_pairs_build(db, corpus.xml.as_ptr(), corpus.gold.as_ptr(), ptr::null(), &mut ps)
        };
        let before = unsafe { gf_pairs_len(ps) };
        let mut grown = ptr::null_mut();
        let status = unsafe {
            gf_pairs_augment_hypernym(ps, db, GfHypernymMode::Concat, &mut grown)
        };
        assert_eq!(status, GfStatus::Ok, "{}", last_error());
        assert!(unsafe { gf_pairs_len(grown) } > before);
        unsafe {
            gf_pairs_close(ps);
            gf_pairs_close(grown);
            gf_database_close(db);
        }
    }

    #[test]
    fn synonym_probability_is_validated() {
        let db = open_mini();
        let corpus = corpus();
        let mut ps = ptr::null_mut();
        unsafe {
            gf_pairs_build(db, corpus.xml.as_ptr(), corpus.gold.as_ptr(), ptr::null(), &mut ps)
        };
        let mut grown = ptr::null_mut();
        let status = unsafe { gf_pairs_augment_synonym(ps, db, 2.0, 42, &mut grown) };
        assert_eq!(status, GfStatus::InvalidArgument);
        assert!(grown.is_null());
        let status = unsafe { gf_pairs_augment_synonym(ps, db, 0.0, 42, &mut grown) };
        assert_eq!(status, GfStatus::Ok);
        assert_eq!(unsafe { gf_pairs_len(grown) }, unsafe { gf_pairs_len(ps) });
        unsafe {
            gf_pairs_close(ps);
            gf_pairs_close(grown);
            gf_database_close(db);
        }
    }

    #[test]
    fn score_files_reports_f1() {
        let corpus = corpus();
        let preds_path = corpus.root.join("preds.txt");
        std::fs::write(
            &preds_path,
            "d000.s000.t000 meeting%1:14:00::\nd000.s000.t001 entity%1:03:00::\n",
        )
        .unwrap();
        let preds = CString::new(preds_path.to_str().unwrap()).unwrap();
        let mut f1 = f64::NAN;
        let status = unsafe {
            gf_score_files(corpus.xml.as_ptr(), corpus.gold.as_ptr(), preds.as_ptr(), &mut f1)
        };
        assert_eq!(status, GfStatus::Ok, "{}", last_error());
        assert!((f1 - 0.5).abs() < 1e-12, "{f1}");
    }

    #[test]
    fn generated_header_declares_the_api() {
        let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/glossforge.h");
        let text = std::fs::read_to_string(&header).expect("header generated at build time");
        for needle in [
            "GLOSSFORGE_H",
            "GfStatus",
            "GfDatabase",
            "GfPairSet",
            "gf_database_open",
            "gf_pairs_build",
            "gf_pairs_augment_hypernym",
            "gf_score_files",
            "gf_last_error_message",
        ] {
            assert!(text.contains(needle), "header missing `{needle}`");
        }
    }
}
