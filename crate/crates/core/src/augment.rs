//! The six augmentation methods: back translation of the gloss, the
//! context, or both; hypernym replace, hypernym concat and hyper+hypo
//! gloss rewrites; synonym replacement; and masked-LM substitution.
//!
//! Every method reads the pairs with `original` provenance, appends new
//! records behind the full input, and reports what it dropped. Appended
//! records keep their parent's label and point back at it through
//! `parent_pair_id`. Randomized methods derive one RNG stream per record
//! from `(seed, pair_id)`, so results do not depend on thread count or
//! processing order.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::backends::{BackendError, MaskedLmBackend, TranslationBackend, MASK_TOKEN};
use crate::pairgen::{ContextGlossPair, PairSet, Provenance};
use crate::wordnet::{LexicalDatabase, Pos};

/// Which augmentation to run. Back-translation variants pick the component
/// they rewrite; the rest are parameter-free apart from the RNG seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentMethod {
    BtGloss,
    BtContext,
    BtBoth,
    HypernymReplace,
    HypernymConcat,
    HyperHypo,
    Synonym,
    Mlm,
}

impl AugmentMethod {
    pub fn is_back_translation(self) -> bool {
        matches!(
            self,
            AugmentMethod::BtGloss | AugmentMethod::BtContext | AugmentMethod::BtBoth
        )
    }

    /// The component a back-translation method rewrites.
    pub fn component(self) -> AugmentComponent {
        match self {
            AugmentMethod::BtGloss | AugmentMethod::HypernymReplace
            | AugmentMethod::HypernymConcat | AugmentMethod::HyperHypo => AugmentComponent::Gloss,
            AugmentMethod::BtContext | AugmentMethod::Synonym | AugmentMethod::Mlm => {
                AugmentComponent::Context
            }
            AugmentMethod::BtBoth => AugmentComponent::Both,
        }
    }
}

impl fmt::Display for AugmentMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AugmentMethod::BtGloss => "bt-gloss",
            AugmentMethod::BtContext => "bt-context",
            AugmentMethod::BtBoth => "bt-both",
            AugmentMethod::HypernymReplace => "hypernym-replace",
            AugmentMethod::HypernymConcat => "hypernym-concat",
            AugmentMethod::HyperHypo => "hyper-hypo",
            AugmentMethod::Synonym => "synonym",
            AugmentMethod::Mlm => "mlm",
        })
    }
}

impl FromStr for AugmentMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bt-gloss" => Ok(AugmentMethod::BtGloss),
            "bt-context" => Ok(AugmentMethod::BtContext),
            "bt-both" => Ok(AugmentMethod::BtBoth),
            "hypernym-replace" => Ok(AugmentMethod::HypernymReplace),
            "hypernym-concat" => Ok(AugmentMethod::HypernymConcat),
            "hyper-hypo" => Ok(AugmentMethod::HyperHypo),
            "synonym" => Ok(AugmentMethod::Synonym),
            "mlm" => Ok(AugmentMethod::Mlm),
            other => Err(format!("unknown augmentation method `{other}`")),
        }
    }
}

/// Which side of the record a rewrite touches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentComponent {
    Gloss,
    Context,
    Both,
}

/// Parameters shared by all methods. `p_replace` drives both synonym
/// replacement and MLM mask selection, `k_candidates` bounds the MLM
/// candidate list, and `languages` lists back-translation pivots in the
/// order their records are appended.
#[derive(Debug, Clone)]
pub struct AugmentationSpec {
    pub method: AugmentMethod,
    pub p_replace: f64,
    pub k_candidates: usize,
    pub seed: u64,
    pub languages: Vec<String>,
    pub component: AugmentComponent,
    /// When true, `bt-both` appends two records per (pair, language), one
    /// per translated component, instead of one record with both replaced.
    pub bt_both_split: bool,
}

impl AugmentationSpec {
    pub fn new(method: AugmentMethod) -> AugmentationSpec {
        AugmentationSpec {
            method,
            p_replace: 0.15,
            k_candidates: 3,
            seed: 42,
            languages: Vec::new(),
            component: method.component(),
            bt_both_split: false,
        }
    }

    pub fn with_languages(mut self, languages: &[&str]) -> AugmentationSpec {
        self.languages = languages.iter().map(|l| l.to_string()).collect();
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.p_replace) {
            return Err(format!("p_replace must be in [0, 1], got {}", self.p_replace));
        }
        if self.k_candidates == 0 {
            return Err("k_candidates must be at least 1".to_string());
        }
        if self.method.is_back_translation() {
            if self.languages.is_empty() {
                return Err(format!("method `{}` needs at least one language", self.method));
            }
            if self.languages.iter().any(|l| l.is_empty() || l.chars().any(char::is_whitespace)) {
                return Err("language codes must be non-empty and free of whitespace".to_string());
            }
            if self.component != self.method.component() {
                return Err(format!(
                    "component {:?} conflicts with method `{}`",
                    self.component, self.method
                ));
            }
        }
        Ok(())
    }
}

/// What one augmentation run did. `input` counts every record read,
/// including previously augmented ones, which are carried through but not
/// re-augmented.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AugmentStats {
    pub input: usize,
    pub appended: usize,
    pub dropped_duplicates: usize,
    pub dropped_unmarkable: usize,
}

impl AugmentStats {
    fn new(input: usize) -> AugmentStats {
        AugmentStats {
            input,
            ..AugmentStats::default()
        }
    }
}

/// The augmented pairs plus the counts behind them.
#[derive(Debug, Clone)]
pub struct AugmentOutcome {
    pub pairs: PairSet,
    pub stats: AugmentStats,
}

/// A backend gave up mid-run. `partial` reports how far the run got; no
/// partially built records are returned.
#[derive(Debug, thiserror::Error)]
#[error("augmentation aborted after {} appended record(s): {source}", partial.appended)]
pub struct AugmentError {
    pub source: BackendError,
    pub partial: AugmentStats,
}

/// One deterministic stream per record: same `(seed, pair_id)` means the
/// same draws no matter which thread handles the record.
fn derive_rng(seed: u64, pair_id: &str) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update([1u8]);
    hasher.update(pair_id.as_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

fn normalized_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn duplicates_parent(parent: &ContextGlossPair, context: &str, gloss: &str) -> bool {
    normalized_ws(context) == normalized_ws(&parent.context_marked)
        && normalized_ws(gloss) == normalized_ws(&parent.gloss_marked)
}

fn child_of(
    parent: &ContextGlossPair,
    provenance: Provenance,
    pair_id: String,
    context_marked: String,
    gloss_marked: String,
) -> ContextGlossPair {
    ContextGlossPair {
        pair_id,
        instance_id: parent.instance_id.clone(),
        sense_key: parent.sense_key.clone(),
        label: parent.label,
        provenance,
        parent_pair_id: Some(parent.pair_id.clone()),
        context_marked,
        gloss_marked,
    }
}

/// The records a run may augment: provenance `original`, in input order.
fn original_sources(ps: &PairSet) -> Vec<&ContextGlossPair> {
    ps.pairs
        .iter()
        .filter(|p| p.provenance == Provenance::Original)
        .collect()
}

fn assemble(ps: &PairSet, children: Vec<ContextGlossPair>, mut stats: AugmentStats) -> AugmentOutcome {
    stats.appended = children.len();
    let mut pairs = ps.pairs.clone();
    pairs.extend(children);
    AugmentOutcome {
        pairs: PairSet {
            source: ps.source.clone(),
            pairs,
        },
        stats,
    }
}

/// Context token indices a randomized rewrite may touch: everything
/// outside the marked region that contains at least one alphanumeric
/// character (markers, the target span and punctuation stay fixed).
fn eligible_indices(tokens: &[String], first_marker: usize, second_marker: usize) -> Vec<usize> {
    (0..tokens.len())
        .filter(|&i| i < first_marker || i > second_marker)
        .filter(|&i| tokens[i].chars().any(char::is_alphanumeric))
        .collect()
}

enum ChildOutcome {
    Child(ContextGlossPair),
    Duplicate,
    Unmarkable,
}

fn tally(children: &mut Vec<ContextGlossPair>, stats: &mut AugmentStats, outcome: ChildOutcome) {
    match outcome {
        ChildOutcome::Child(pair) => children.push(pair),
        ChildOutcome::Duplicate => stats.dropped_duplicates += 1,
        ChildOutcome::Unmarkable => stats.dropped_unmarkable += 1,
    }
}

/// Hypernym traversal flavor for [`augment_hypernym`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypernymMode {
    Replace,
    Concat,
    HyperHypo,
}

/// Rewrites glosses from neighboring synsets. `Replace` emits one record
/// per direct hypernym with the definition swapped out, `Concat` appends
/// the first hypernym's definition behind the original after a `[SEP]`
/// token, and `HyperHypo` extends `Replace` to direct hyponyms as well.
/// Records whose sense has no neighbors contribute nothing.
pub fn augment_hypernym(ps: &PairSet, db: &LexicalDatabase, mode: HypernymMode) -> AugmentOutcome {
    let mut stats = AugmentStats::new(ps.len());
    let sources = original_sources(ps);
    let provenance = match mode {
        HypernymMode::Replace => Provenance::HypernymReplace,
        HypernymMode::Concat => Provenance::HypernymConcat,
        HypernymMode::HyperHypo => Provenance::HyperHypo,
    };

    let per_source: Vec<Vec<ChildOutcome>> = sources
        .par_iter()
        .map(|pair| {
            let Some((prefix, definition)) = pair.gloss_parts() else {
                return Vec::new();
            };
            let Some(sense) = db.sense_by_key(&pair.sense_key) else {
                return Vec::new();
            };
            let Some(synset) = db.synset(sense.synset()) else {
                return Vec::new();
            };
            let mut outcomes = Vec::new();
            match mode {
                HypernymMode::Replace | HypernymMode::HyperHypo => {
                    let mut related = db.hypernyms_of(synset);
                    if mode == HypernymMode::HyperHypo {
                        related.extend(db.hyponyms_of(synset));
                    }
                    for (ordinal, neighbor) in related.iter().enumerate() {
                        let gloss = format!("{prefix} : {}", neighbor.gloss());
                        let pair_id =
                            format!("{}~{}~{}", pair.pair_id, provenance, ordinal + 1);
                        outcomes.push(if duplicates_parent(pair, &pair.context_marked, &gloss) {
                            ChildOutcome::Duplicate
                        } else {
                            ChildOutcome::Child(child_of(
                                pair,
                                provenance.clone(),
                                pair_id,
                                pair.context_marked.clone(),
                                gloss,
                            ))
                        });
                    }
                }
                HypernymMode::Concat => {
                    if let Some(hypernym) = db.hypernyms_of(synset).first() {
                        let gloss =
                            format!("{prefix} : {definition} [SEP] {}", hypernym.gloss());
                        let pair_id = format!("{}~{}", pair.pair_id, provenance);
                        outcomes.push(ChildOutcome::Child(child_of(
                            pair,
                            provenance.clone(),
                            pair_id,
                            pair.context_marked.clone(),
                            gloss,
                        )));
                    }
                }
            }
            outcomes
        })
        .collect();

    let mut children = Vec::new();
    for outcomes in per_source {
        for outcome in outcomes {
            tally(&mut children, &mut stats, outcome);
        }
    }
    assemble(ps, children, stats)
}

/// Replaces each eligible context word with probability `spec.p_replace`
/// by a synonym drawn uniformly from the database. The word's part of
/// speech is guessed by probing noun, verb, adjective and adverb in that
/// order and keeping the first that has synonyms. Unchanged outputs are
/// dropped as duplicates.
///
/// Panics when `spec` fails validation.
pub fn augment_synonym(
    ps: &PairSet,
    db: &LexicalDatabase,
    spec: &AugmentationSpec,
) -> AugmentOutcome {
    if let Err(message) = spec.validate() {
        panic!("invalid augmentation spec: {message}");
    }
    let mut stats = AugmentStats::new(ps.len());
    let sources = original_sources(ps);

    let outcomes: Vec<ChildOutcome> = sources
        .par_iter()
        .map(|pair| {
            let Some((first, second)) = pair.marker_indices() else {
                return ChildOutcome::Unmarkable;
            };
            let mut tokens: Vec<String> =
                pair.context_marked.split(' ').map(str::to_string).collect();
            let mut rng = derive_rng(spec.seed, &pair.pair_id);
            for index in eligible_indices(&tokens, first, second) {
                if !rng.gen_bool(spec.p_replace) {
                    continue;
                }
                let replacement = [Pos::Noun, Pos::Verb, Pos::Adj, Pos::Adv]
                    .iter()
                    .map(|&pos| db.synonyms_of(&tokens[index], pos))
                    .find(|synonyms| !synonyms.is_empty())
                    .map(|synonyms| synonyms[rng.gen_range(0..synonyms.len())].clone());
                if let Some(word) = replacement {
                    tokens[index] = word;
                }
            }
            let context = tokens.join(" ");
            if duplicates_parent(pair, &context, &pair.gloss_marked) {
                return ChildOutcome::Duplicate;
            }
            let pair_id = format!("{}~{}", pair.pair_id, Provenance::Synonym);
            ChildOutcome::Child(child_of(
                pair,
                Provenance::Synonym,
                pair_id,
                context,
                pair.gloss_marked.clone(),
            ))
        })
        .collect();

    let mut children = Vec::new();
    for outcome in outcomes {
        tally(&mut children, &mut stats, outcome);
    }
    assemble(ps, children, stats)
}

/// Masks eligible context words selected with probability `spec.p_replace`
/// and substitutes each with a draw from the backend's top candidates,
/// skipping the original word whenever an alternative exists. Words are
/// processed left to right, one backend call per mask, against the
/// sentence as rewritten so far.
pub fn augment_mlm(
    ps: &PairSet,
    spec: &AugmentationSpec,
    backend: &dyn MaskedLmBackend,
) -> Result<AugmentOutcome, AugmentError> {
    let mut stats = AugmentStats::new(ps.len());
    if let Err(message) = spec.validate() {
        return Err(AugmentError {
            source: BackendError::Precondition(message),
            partial: stats,
        });
    }
    let sources = original_sources(ps);

    let results: Vec<Result<ChildOutcome, BackendError>> = sources
        .par_iter()
        .map(|pair| {
            let Some((first, second)) = pair.marker_indices() else {
                return Ok(ChildOutcome::Unmarkable);
            };
            let mut tokens: Vec<String> =
                pair.context_marked.split(' ').map(str::to_string).collect();
            let mut rng = derive_rng(spec.seed, &pair.pair_id);
            for index in eligible_indices(&tokens, first, second) {
                if !rng.gen_bool(spec.p_replace) {
                    continue;
                }
                let original = tokens[index].clone();
                let masked = {
                    let mut masked_tokens: Vec<&str> =
                        tokens.iter().map(String::as_str).collect();
                    masked_tokens[index] = MASK_TOKEN;
                    masked_tokens.join(" ")
                };
                let candidates = backend.fill_mask(&masked, spec.k_candidates)?;
                let alternatives: Vec<&str> = candidates
                    .iter()
                    .map(|(word, _)| word.as_str())
                    .filter(|word| *word != original)
                    .collect();
                if alternatives.is_empty() {
                    continue;
                }
                tokens[index] = alternatives[rng.gen_range(0..alternatives.len())].to_string();
            }
            let context = tokens.join(" ");
            if duplicates_parent(pair, &context, &pair.gloss_marked) {
                return Ok(ChildOutcome::Duplicate);
            }
            let pair_id = format!("{}~{}", pair.pair_id, Provenance::Mlm);
            Ok(ChildOutcome::Child(child_of(
                pair,
                Provenance::Mlm,
                pair_id,
                context,
                pair.gloss_marked.clone(),
            )))
        })
        .collect();

    let mut children = Vec::new();
    let mut first_error = None;
    for result in results {
        match result {
            Ok(outcome) => tally(&mut children, &mut stats, outcome),
            Err(source) => {
                if first_error.is_none() {
                    first_error = Some(source);
                }
            }
        }
    }
    if let Some(source) = first_error {
        stats.appended = children.len();
        return Err(AugmentError {
            source,
            partial: stats,
        });
    }
    Ok(assemble(ps, children, stats))
}

/// Case-folds a token and strips punctuation from its edges so translated
/// tokens still match the original target surface.
fn fold_token(token: &str) -> String {
    token
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

fn find_span(folded: &[String], needle: &str) -> Option<(usize, usize)> {
    let want: Vec<String> = needle.split_whitespace().map(fold_token).collect();
    if want.is_empty() || want.iter().any(String::is_empty) {
        return None;
    }
    if folded.len() < want.len() {
        return None;
    }
    (0..=folded.len() - want.len())
        .find(|&start| folded[start..start + want.len()] == want[..])
        .map(|start| (start, start + want.len()))
}

/// Puts the quote markers back around the target in a translated sentence.
/// Matching is case-insensitive and ignores edge punctuation; the original
/// surface is tried first, then the lemma. Fails when neither appears or
/// when the translation itself contains a bare quote token.
fn remark_translation(translated: &str, surface: &str, lemma: &str) -> Option<String> {
    let tokens: Vec<&str> = translated.split_whitespace().collect();
    if tokens.iter().any(|t| *t == "\"") {
        return None;
    }
    let folded: Vec<String> = tokens.iter().map(|t| fold_token(t)).collect();
    let (start, end) = find_span(&folded, surface).or_else(|| find_span(&folded, lemma))?;
    let mut out: Vec<&str> = Vec::with_capacity(tokens.len() + 2);
    out.extend(&tokens[..start]);
    out.push("\"");
    out.extend(&tokens[start..end]);
    out.push("\"");
    out.extend(&tokens[end..]);
    Some(out.join(" "))
}

struct BtSource<'p> {
    pair: &'p ContextGlossPair,
    prefix: &'p str,
    definition: &'p str,
    unmarked: Option<String>,
    surface: Option<String>,
}

/// Appended records are sorted parent-major, then by language rank, then
/// by the within-record ordinal split mode uses.
type BtKey = (usize, usize, usize);

fn emit_child(
    children: &mut Vec<(BtKey, ContextGlossPair)>,
    stats: &mut AugmentStats,
    key: BtKey,
    parent: &ContextGlossPair,
    provenance: Provenance,
    context: String,
    gloss: String,
) {
    if duplicates_parent(parent, &context, &gloss) {
        stats.dropped_duplicates += 1;
        return;
    }
    let pair_id = format!("{}~{}", parent.pair_id, provenance);
    children.push((key, child_of(parent, provenance, pair_id, context, gloss)));
}

/// Round-trips the selected component through each pivot language: one
/// `en -> L` batch, one `L -> en` batch. Gloss runs translate only the
/// definition and re-attach the `<target> : ` prefix; context runs
/// translate the unmarked sentence and re-mark the target afterwards,
/// dropping records whose target does not survive. Children identical to
/// their parent after whitespace normalization are dropped as duplicates.
pub fn augment_back_translation(
    ps: &PairSet,
    spec: &AugmentationSpec,
    backend: &dyn TranslationBackend,
) -> Result<AugmentOutcome, AugmentError> {
    let mut stats = AugmentStats::new(ps.len());
    if !spec.method.is_back_translation() {
        return Err(AugmentError {
            source: BackendError::Precondition(format!(
                "method `{}` is not a back-translation method",
                spec.method
            )),
            partial: stats,
        });
    }
    if let Err(message) = spec.validate() {
        return Err(AugmentError {
            source: BackendError::Precondition(message),
            partial: stats,
        });
    }
    let component = spec.method.component();

    let sources: Vec<BtSource<'_>> = original_sources(ps)
        .into_iter()
        .filter_map(|pair| {
            let Some((prefix, definition)) = pair.gloss_parts() else {
                log::warn!(
                    "pair {} has no `<target> : <definition>` gloss, skipping",
                    pair.pair_id
                );
                return None;
            };
            Some(BtSource {
                pair,
                prefix,
                definition,
                unmarked: pair.unmarked_context(),
                surface: pair.marked_target(),
            })
        })
        .collect();

    let abort = |stats: AugmentStats, source: BackendError| AugmentError {
        source,
        partial: stats,
    };

    let mut children: Vec<(BtKey, ContextGlossPair)> = Vec::new();
    for (language_rank, language) in spec.languages.iter().enumerate() {
        let mut texts: Vec<String> = Vec::new();
        let mut gloss_slot: Vec<Option<usize>> = vec![None; sources.len()];
        let mut context_slot: Vec<Option<usize>> = vec![None; sources.len()];
        for (rank, source) in sources.iter().enumerate() {
            if component != AugmentComponent::Context {
                gloss_slot[rank] = Some(texts.len());
                texts.push(source.definition.to_string());
            }
            if component != AugmentComponent::Gloss {
                if let Some(unmarked) = &source.unmarked {
                    context_slot[rank] = Some(texts.len());
                    texts.push(unmarked.clone());
                }
            }
        }

        stats.appended = children.len();
        let forward = backend
            .translate_batch(&texts, "en", language)
            .map_err(|e| abort(stats, e))?;
        let back = backend
            .translate_batch(&forward, language, "en")
            .map_err(|e| abort(stats, e))?;

        for (rank, source) in sources.iter().enumerate() {
            let pair = source.pair;
            let bt_gloss = gloss_slot[rank]
                .map(|slot| format!("{} : {}", source.prefix, back[slot]));
            // None when the parent has no usable markers or the target did
            // not survive translation.
            let bt_context = context_slot[rank].and_then(|slot| {
                let surface = source.surface.as_deref().unwrap_or_default();
                remark_translation(&back[slot], surface, source.prefix)
            });

            match component {
                AugmentComponent::Gloss => emit_child(
                    &mut children,
                    &mut stats,
                    (rank, language_rank, 0),
                    pair,
                    Provenance::BtGloss(language.clone()),
                    pair.context_marked.clone(),
                    bt_gloss.expect("gloss slot filled for gloss component"),
                ),
                AugmentComponent::Context => match bt_context {
                    Some(context) => emit_child(
                        &mut children,
                        &mut stats,
                        (rank, language_rank, 0),
                        pair,
                        Provenance::BtContext(language.clone()),
                        context,
                        pair.gloss_marked.clone(),
                    ),
                    None => stats.dropped_unmarkable += 1,
                },
                AugmentComponent::Both => {
                    let gloss = bt_gloss.expect("gloss slot filled for both component");
                    if spec.bt_both_split {
                        emit_child(
                            &mut children,
                            &mut stats,
                            (rank, language_rank, 0),
                            pair,
                            Provenance::BtGloss(language.clone()),
                            pair.context_marked.clone(),
                            gloss,
                        );
                        match bt_context {
                            Some(context) => emit_child(
                                &mut children,
                                &mut stats,
                                (rank, language_rank, 1),
                                pair,
                                Provenance::BtContext(language.clone()),
                                context,
                                pair.gloss_marked.clone(),
                            ),
                            None => stats.dropped_unmarkable += 1,
                        }
                    } else {
                        match bt_context {
                            Some(context) => emit_child(
                                &mut children,
                                &mut stats,
                                (rank, language_rank, 0),
                                pair,
                                Provenance::BtBoth(language.clone()),
                                context,
                                gloss,
                            ),
                            None => stats.dropped_unmarkable += 1,
                        }
                    }
                }
            }
        }
    }

    children.sort_by(|a, b| a.0.cmp(&b.0));
    let ordered: Vec<ContextGlossPair> = children.into_iter().map(|(_, pair)| pair).collect();
    Ok(assemble(ps, ordered, stats))
}
