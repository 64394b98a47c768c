//! glossforge builds, augments and evaluates context-gloss pair datasets
//! for word sense disambiguation.
//!
//! The pipeline: load a WordNet 3.0 database ([`wordnet`]), ingest WSD
//! corpora in the unified XML + gold-key format ([`corpus`]), expand each
//! tagged instance into weakly supervised context-gloss pairs ([`pairgen`]),
//! grow the pair set with one of six augmentation methods ([`augment`]),
//! serialize pair files and compute dataset statistics ([`dataset_io`]) and
//! score sense predictions ([`eval`]). Model-backed augmentations talk to
//! pluggable translation / masked-LM backends ([`backends`]).

pub mod augment;
pub mod backends;
pub mod cli;
pub mod corpus;
pub mod dataset_io;
pub mod eval;
pub mod pairgen;
pub mod wordnet;

pub use augment::{
    AugmentComponent, AugmentMethod, AugmentOutcome, AugmentStats, AugmentationSpec, HypernymMode,
};
pub use corpus::{CoarsePos, CorpusDataset, Token, WsdInstance};
pub use dataset_io::{length_stats, read_pairs, write_pairs, LengthStats};
pub use eval::{
    error_report, first_sense_baseline, score, ErrorReport, PredictionSet, ScoreReport,
};
pub use pairgen::{ContextGlossPair, PairSet, Provenance};
pub use wordnet::{LexicalDatabase, Pos, SenseKey, Synset, SynsetId};
