//! Context-gloss pair construction.
//!
//! Every tagged instance expands into one record per candidate sense of
//! its (lemma, POS): the sentence with the target wrapped in standalone
//! `"` marker tokens, paired with `<lemma> : <definition>`, labeled 1 for
//! the gold sense and 0 otherwise. Candidates come in sense-number order,
//! so record `<instance>#1` is always the most frequent sense.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{CorpusDataset, WsdInstance};
use crate::wordnet::LexicalDatabase;

/// Where a pair came from: the base construction or one of the
/// augmentation methods (back translation carries its pivot language).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Original,
    BtGloss(String),
    BtContext(String),
    BtBoth(String),
    HypernymReplace,
    HypernymConcat,
    HyperHypo,
    Synonym,
    Mlm,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Original => f.write_str("original"),
            Provenance::BtGloss(lang) => write!(f, "bt_gloss({lang})"),
            Provenance::BtContext(lang) => write!(f, "bt_context({lang})"),
            Provenance::BtBoth(lang) => write!(f, "bt_both({lang})"),
            Provenance::HypernymReplace => f.write_str("hypernym_replace"),
            Provenance::HypernymConcat => f.write_str("hypernym_concat"),
            Provenance::HyperHypo => f.write_str("hyper_hypo"),
            Provenance::Synonym => f.write_str("synonym"),
            Provenance::Mlm => f.write_str("mlm"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "original" => return Ok(Provenance::Original),
            "hypernym_replace" => return Ok(Provenance::HypernymReplace),
            "hypernym_concat" => return Ok(Provenance::HypernymConcat),
            "hyper_hypo" => return Ok(Provenance::HyperHypo),
            "synonym" => return Ok(Provenance::Synonym),
            "mlm" => return Ok(Provenance::Mlm),
            _ => {}
        }
        for (prefix, build) in [
            ("bt_gloss(", Provenance::BtGloss as fn(String) -> Provenance),
            ("bt_context(", Provenance::BtContext),
            ("bt_both(", Provenance::BtBoth),
        ] {
            if let Some(lang) = s.strip_prefix(prefix).and_then(|r| r.strip_suffix(')')) {
                if lang.is_empty() || lang.chars().any(char::is_whitespace) {
                    return Err(format!("bad language chain in provenance `{s}`"));
                }
                return Ok(build(lang.to_string()));
            }
        }
        Err(format!("unknown provenance `{s}`"))
    }
}

/// One weakly supervised training record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextGlossPair {
    /// `<instance_id>#<sense_number>` for originals; augmented records get
    /// a suffixed id derived from their parent.
    pub pair_id: String,
    pub instance_id: String,
    pub sense_key: String,
    pub label: bool,
    pub provenance: Provenance,
    pub parent_pair_id: Option<String>,
    pub context_marked: String,
    pub gloss_marked: String,
}

impl ContextGlossPair {
    /// Token indices of the two `"` markers, when unambiguous.
    pub fn marker_indices(&self) -> Option<(usize, usize)> {
        let mut marks = self
            .context_marked
            .split(' ')
            .enumerate()
            .filter(|(_, t)| *t == "\"")
            .map(|(i, _)| i);
        let first = marks.next()?;
        let second = marks.next()?;
        if marks.next().is_some() || second == first + 1 {
            return None;
        }
        Some((first, second))
    }

    /// The surface span between the markers, if exactly one span is marked.
    pub fn marked_target(&self) -> Option<String> {
        let (first, second) = self.marker_indices()?;
        let tokens: Vec<&str> = self.context_marked.split(' ').collect();
        Some(tokens[first + 1..second].join(" "))
    }

    /// The context with the two marker tokens removed.
    pub fn unmarked_context(&self) -> Option<String> {
        let (first, second) = self.marker_indices()?;
        let tokens: Vec<&str> = self
            .context_marked
            .split(' ')
            .enumerate()
            .filter(|&(i, _)| i != first && i != second)
            .map(|(_, t)| t)
            .collect();
        Some(tokens.join(" "))
    }

    /// Splits `gloss_marked` into the target prefix and the definition.
    pub fn gloss_parts(&self) -> Option<(&str, &str)> {
        self.gloss_marked.split_once(" : ")
    }
}

/// An ordered pair collection plus the dataset it came from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairSet {
    pub source: String,
    pub pairs: Vec<ContextGlossPair>,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Counts reported by [`build_pairset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PairGenStats {
    pub instances: usize,
    pub skipped_unknown_lemma: usize,
    pub gold_without_candidate: usize,
    pub pairs: usize,
    pub positives: usize,
}

#[derive(Debug, Error)]
pub enum PairGenError {
    #[error("instance `{instance_id}`: lemma `{lemma}` ({pos}) has no senses in the database")]
    UnknownLemma {
        instance_id: String,
        lemma: String,
        pos: String,
    },
}

/// Builds the marked context: sentence surfaces joined with single spaces,
/// with standalone `"` tokens around the target surface.
fn mark_context(instance: &WsdInstance) -> String {
    let mut parts: Vec<&str> = Vec::with_capacity(instance.sentence.len() + 2);
    for (i, token) in instance.sentence.iter().enumerate() {
        if i == instance.target_index {
            parts.push("\"");
            parts.push(&token.surface);
            parts.push("\"");
        } else {
            parts.push(&token.surface);
        }
    }
    parts.join(" ")
}

/// Expands one instance into its candidate-sense pairs.
///
/// A gold key that is not among the lemma's candidate senses leaves all
/// labels 0 and logs a warning; the pair list is still returned.
pub fn build_pairs(
    instance: &WsdInstance,
    db: &LexicalDatabase,
) -> Result<Vec<ContextGlossPair>, PairGenError> {
    let unknown = || PairGenError::UnknownLemma {
        instance_id: instance.instance_id.clone(),
        lemma: instance.lemma.clone(),
        pos: instance.pos.to_string(),
    };
    let pos = instance.pos.wordnet_pos().ok_or_else(unknown)?;
    let senses = db.senses_of(&instance.lemma, pos);
    if senses.is_empty() {
        return Err(unknown());
    }

    for key in &instance.gold_keys {
        if !senses.iter().any(|(sense, _)| sense.raw() == key) {
            log::warn!(
                "instance `{}`: gold key `{key}` is not among the {} candidate senses",
                instance.instance_id,
                senses.len()
            );
        }
    }
    if instance.sentence.iter().any(|t| t.surface == "\"") {
        log::warn!(
            "instance `{}`: sentence contains a bare quote token; the marker span is ambiguous",
            instance.instance_id
        );
    }

    let context_marked = mark_context(instance);
    let gloss_target = instance.lemma.to_lowercase().replace('_', " ");
    Ok(senses
        .iter()
        .map(|(sense, synset)| ContextGlossPair {
            pair_id: format!("{}#{}", instance.instance_id, sense.sense_number()),
            instance_id: instance.instance_id.clone(),
            sense_key: sense.raw().to_string(),
            label: instance.gold_keys.iter().any(|k| k == sense.raw()),
            provenance: Provenance::Original,
            parent_pair_id: None,
            context_marked: context_marked.clone(),
            gloss_marked: format!("{gloss_target} : {}", synset.gloss()),
        })
        .collect())
}

/// Runs [`build_pairs`] over a whole dataset, skipping (and counting)
/// instances whose lemma is unknown to the database.
pub fn build_pairset(ds: &CorpusDataset, db: &LexicalDatabase) -> (PairSet, PairGenStats) {
    let mut stats = PairGenStats {
        instances: ds.len(),
        ..PairGenStats::default()
    };
    let mut pairs = Vec::new();
    for instance in &ds.instances {
        match build_pairs(instance, db) {
            Ok(expanded) => {
                if !instance.gold_keys.is_empty()
                    && !expanded.iter().any(|p| p.label)
                {
                    stats.gold_without_candidate += 1;
                }
                stats.positives += expanded.iter().filter(|p| p.label).count();
                pairs.extend(expanded);
            }
            Err(err) => {
                log::warn!("skipping instance: {err}");
                stats.skipped_unknown_lemma += 1;
            }
        }
    }
    stats.pairs = pairs.len();
    (
        PairSet {
            source: ds.name.clone(),
            pairs,
        },
        stats,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CoarsePos, Token};
    use proptest::prelude::*;
    use std::path::Path;
    use std::sync::{Arc, OnceLock};

    fn db() -> &'static LexicalDatabase {
        static DB: OnceLock<LexicalDatabase> = OnceLock::new();
        DB.get_or_init(|| {
            let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
                .join("tests/fixtures/mini_wordnet/dict");
            LexicalDatabase::load(dir).expect("mini fixture loads")
        })
    }

    fn token(surface: &str) -> Token {
        Token {
            surface: surface.to_string(),
            lemma: surface.to_string(),
            pos: CoarsePos::Other,
            instance_id: None,
        }
    }

    fn instance(
        id: &str,
        words: &[&str],
        target_index: usize,
        lemma: &str,
        pos: CoarsePos,
        gold: &[&str],
    ) -> WsdInstance {
        let mut sentence: Vec<Token> = words.iter().map(|w| token(w)).collect();
        sentence[target_index].lemma = lemma.to_string();
        sentence[target_index].pos = pos;
        sentence[target_index].instance_id = Some(id.to_string());
        WsdInstance {
            instance_id: id.to_string(),
            lemma: lemma.to_string(),
            pos,
            sentence: Arc::new(sentence),
            target_index,
            gold_keys: gold.iter().map(|k| k.to_string()).collect(),
        }
    }

    fn cafeteria_instance() -> WsdInstance {
        instance(
            "d000.s000.t001",
            &[
                "are",
                "you",
                "utilizing",
                "cafeteria",
                "space",
                "for",
                "company",
                "meetings",
                "or",
                "discussions",
                "?",
            ],
            7,
            "meeting",
            CoarsePos::Noun,
            &["meeting%1:14:00::"],
        )
    }

    #[test]
    fn cafeteria_pairs_match_the_printed_form() {
        let pairs = build_pairs(&cafeteria_instance(), db()).unwrap();
        assert_eq!(pairs.len(), 2);

        let first = &pairs[0];
        assert_eq!(
            first.context_marked,
            "are you utilizing cafeteria space for company \" meetings \" or discussions ?"
        );
        assert_eq!(first.gloss_marked, "meeting : a formally arranged gathering");
        assert!(first.label);
        assert_eq!(first.pair_id, "d000.s000.t001#1");
        assert_eq!(first.sense_key, "meeting%1:14:00::");
        assert_eq!(first.provenance, Provenance::Original);
        assert_eq!(first.parent_pair_id, None);

        let second = &pairs[1];
        assert!(!second.label);
        assert_eq!(second.pair_id, "d000.s000.t001#2");
        assert_eq!(
            second.gloss_marked,
            "meeting : the social act of assembling for some common purpose"
        );
    }

    #[test]
    fn marker_helpers_recover_target_and_sentence() {
        let pairs = build_pairs(&cafeteria_instance(), db()).unwrap();
        let pair = &pairs[0];
        assert_eq!(pair.marked_target().as_deref(), Some("meetings"));
        assert_eq!(
            pair.unmarked_context().as_deref(),
            Some("are you utilizing cafeteria space for company meetings or discussions ?")
        );
        assert_eq!(
            pair.gloss_parts(),
            Some(("meeting", "a formally arranged gathering"))
        );
    }

    #[test]
    fn single_sense_lemma_yields_one_positive_pair() {
        let inst = instance(
            "i1",
            &["the", "cafeteria", "closed"],
            1,
            "cafeteria",
            CoarsePos::Noun,
            &["cafeteria%1:06:00::"],
        );
        let pairs = build_pairs(&inst, db()).unwrap();
        assert_eq!(pairs.len(), 1);
        assert!(pairs[0].label);
    }

    #[test]
    fn multiword_lemma_is_spelled_with_spaces_in_the_gloss() {
        let inst = instance(
            "i2",
            &["the", "coming together", "of", "nations"],
            1,
            "coming_together",
            CoarsePos::Noun,
            &["coming_together%1:04:00::"],
        );
        let pairs = build_pairs(&inst, db()).unwrap();
        assert_eq!(pairs.len(), 1);
        assert!(pairs[0]
            .gloss_marked
            .starts_with("coming together : "));
        assert_eq!(pairs[0].marked_target().as_deref(), Some("coming together"));
    }

    #[test]
    fn only_the_target_occurrence_is_marked() {
        let inst = instance(
            "i3",
            &["meeting", "after", "meeting", "after", "meeting"],
            2,
            "meeting",
            CoarsePos::Noun,
            &[],
        );
        let pairs = build_pairs(&inst, db()).unwrap();
        assert_eq!(
            pairs[0].context_marked,
            "meeting after \" meeting \" after meeting"
        );
        assert!(pairs.iter().all(|p| !p.label));
    }

    #[test]
    fn unknown_lemma_is_an_error_carrying_the_instance_id() {
        let inst = instance("i4", &["x"], 0, "qwxzz", CoarsePos::Noun, &[]);
        let err = build_pairs(&inst, db()).unwrap_err();
        assert!(err.to_string().contains("i4"));

        let other = instance("i5", &["x"], 0, "meeting", CoarsePos::Other, &[]);
        assert!(build_pairs(&other, db()).is_err());
    }

    #[test]
    fn gold_key_outside_candidates_leaves_all_labels_zero() {
        let inst = instance(
            "i6",
            &["a", "meeting"],
            1,
            "meeting",
            CoarsePos::Noun,
            &["meeting%1:99:00::"],
        );
        let pairs = build_pairs(&inst, db()).unwrap();
        assert_eq!(pairs.len(), 2);
        assert!(pairs.iter().all(|p| !p.label));
    }

    #[test]
    fn pairset_counts_and_skips() {
        let ds = CorpusDataset {
            name: "tiny".into(),
            instances: vec![
                cafeteria_instance(),
                instance("u1", &["x"], 0, "qwxzz", CoarsePos::Noun, &[]),
                instance(
                    "i7",
                    &["use", "it"],
                    0,
                    "use",
                    CoarsePos::Verb,
                    &["use%2:34:00::"],
                ),
            ],
        };
        let (set, stats) = build_pairset(&ds, db());
        assert_eq!(set.source, "tiny");
        assert_eq!(set.len(), 4); // 2 meeting + 2 use
        assert_eq!(stats.instances, 3);
        assert_eq!(stats.skipped_unknown_lemma, 1);
        assert_eq!(stats.pairs, 4);
        assert_eq!(stats.positives, 2);
        assert_eq!(stats.gold_without_candidate, 0);

        let (empty, empty_stats) = build_pairset(&CorpusDataset::default(), db());
        assert!(empty.is_empty());
        assert_eq!(empty_stats.pairs, 0);
    }

    #[test]
    fn provenance_round_trips_through_strings() {
        let cases = [
            Provenance::Original,
            Provenance::BtGloss("de".into()),
            Provenance::BtContext("ru".into()),
            Provenance::BtBoth("fr".into()),
            Provenance::HypernymReplace,
            Provenance::HypernymConcat,
            Provenance::HyperHypo,
            Provenance::Synonym,
            Provenance::Mlm,
        ];
        for p in cases {
            assert_eq!(p.to_string().parse::<Provenance>().unwrap(), p);
        }
        assert_eq!(Provenance::BtGloss("de".into()).to_string(), "bt_gloss(de)");
        assert!("bt_gloss()".parse::<Provenance>().is_err());
        assert!("bt_gloss(d e)".parse::<Provenance>().is_err());
        assert!("nonsense".parse::<Provenance>().is_err());
    }

    // Lemmas of the mini database usable as generated targets.
    const LEMMA_POOL: [(&str, CoarsePos, &str); 5] = [
        ("meeting", CoarsePos::Noun, "meeting%1:14:00::"),
        ("gathering", CoarsePos::Noun, "gathering%1:14:00::"),
        ("cafeteria", CoarsePos::Noun, "cafeteria%1:06:00::"),
        ("use", CoarsePos::Verb, "use%2:41:01::"),
        ("entity", CoarsePos::Noun, "entity%1:03:00::"),
    ];

    proptest! {
        #[test]
        fn generated_instances_hold_the_pair_invariants(
            lemma_idx in 0usize..LEMMA_POOL.len(),
            before in proptest::collection::vec("[a-z]{1,8}", 0..6),
            after in proptest::collection::vec("[a-z]{1,8}", 0..6),
            plural in proptest::bool::ANY,
        ) {
            let (lemma, pos, gold) = LEMMA_POOL[lemma_idx];
            let surface = if plural { format!("{lemma}s") } else { lemma.to_string() };
            let mut words: Vec<String> = before.clone();
            words.push(surface.clone());
            words.extend(after.clone());
            let refs: Vec<&str> = words.iter().map(|s| s.as_str()).collect();
            let inst = instance("p0", &refs, before.len(), lemma, pos, &[gold]);

            let pairs = build_pairs(&inst, db()).unwrap();
            let senses = db().senses_of(lemma, pos.wordnet_pos().unwrap());

            // One pair per candidate sense, in sense-number order.
            prop_assert_eq!(pairs.len(), senses.len());
            for (i, pair) in pairs.iter().enumerate() {
                prop_assert_eq!(&pair.pair_id, &format!("p0#{}", i + 1));
            }
            // Exactly one positive for a single in-candidate gold key.
            prop_assert_eq!(pairs.iter().filter(|p| p.label).count(), 1);
            // Marker strip round-trips to the plain joined sentence.
            let joined = refs.join(" ");
            for pair in &pairs {
                prop_assert_eq!(pair.unmarked_context().unwrap(), joined.clone());
                prop_assert_eq!(pair.marked_target().unwrap(), surface.clone());
            }
        }
    }
}
