//! Gap-fill items drawn from query matches.
//!
//! Sampling is uniform without replacement over keyword occurrences, driven
//! by a ChaCha20 stream seeded with the caller's seed, so a given corpus,
//! query, seed and parameter set always yields the same exercise set.

use std::collections::HashMap;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::concordance::{find_occurrences, EvalMode, Occurrence};
use crate::corpus::{fold, Corpus, Sentence};
use crate::error::ArgumentError;
use crate::index::{CorpusIndex, Posting};
use crate::pattern::{ConstraintKey, PatternQuery};

pub const BLANK: &str = "____";

/// Name of the pinned generator, recorded in every exercise set.
pub const GENERATOR: &str = "chacha20";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnswerMode {
    /// The learner's own form is the expected answer.
    #[default]
    AsWritten,
    /// The annotated correction is the expected answer when one exists.
    Corrected,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistractorPolicy {
    #[default]
    None,
    /// Other forms of the answer's lemma found in the corpus.
    SameLemma,
    /// Erroneous forms annotated with the answer as their correction.
    AttestedErrors,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ItemSource {
    pub text_id: String,
    pub sentence_index: u32,
    pub token_index: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GapFillItem {
    /// The sentence with the keyword replaced by [`BLANK`].
    pub stem: String,
    pub answer: String,
    pub distractors: Vec<String>,
    pub source: ItemSource,
    pub answer_mode: AnswerMode,
}

impl GapFillItem {
    /// The stem with the blank filled in.
    pub fn filled(&self, with: &str) -> String {
        self.stem.replacen(BLANK, with, 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExerciseParams {
    pub count: usize,
    pub seed: u64,
    #[serde(default)]
    pub answer_mode: AnswerMode,
    #[serde(default)]
    pub distractor_policy: DistractorPolicy,
    #[serde(default = "default_k")]
    pub k: usize,
}

fn default_k() -> usize {
    3
}

impl ExerciseParams {
    pub fn new(count: usize, seed: u64) -> Self {
        ExerciseParams {
            count,
            seed,
            answer_mode: AnswerMode::default(),
            distractor_policy: DistractorPolicy::default(),
            k: default_k(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExerciseSet {
    pub items: Vec<GapFillItem>,
    pub seed: u64,
    pub generator: String,
    pub query: PatternQuery,
    pub answer_mode: AnswerMode,
    pub distractor_policy: DistractorPolicy,
    pub k: usize,
    /// Size of the full match set the items were drawn from.
    pub total_matches: usize,
    /// Set when the query matched nothing.
    pub no_examples: bool,
}

/// Uniform integer in `0..n` by rejection sampling on 64-bit outputs.
fn uniform_below(rng: &mut ChaCha20Rng, n: u64) -> u64 {
    debug_assert!(n > 0);
    let reject_below = n.wrapping_neg() % n;
    loop {
        let x = rng.next_u64();
        if x >= reject_below {
            return x % n;
        }
    }
}

/// Draws `m` distinct indices from `0..n` with a partial Fisher-Yates shuffle.
pub fn sample_indices(seed: u64, n: usize, m: usize) -> Vec<usize> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let m = m.min(n);
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = i + uniform_below(&mut rng, (n - i) as u64) as usize;
        pool.swap(i, j);
    }
    pool.truncate(m);
    pool
}

fn stem_for(sentence: &Sentence, keyword: usize) -> String {
    sentence
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| if i == keyword { BLANK } else { t.surface.as_str() })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Correction of the innermost span covering exactly this one token.
fn single_token_correction(sentence: &Sentence, keyword: u32) -> Option<&str> {
    sentence
        .errors
        .iter()
        .rev()
        .find(|e| e.first_token == keyword && e.last_token == keyword && !e.corrected_form.is_empty())
        .map(|e| e.corrected_form.as_str())
}

fn make_item(corpus: &Corpus, at: Posting, answer_mode: AnswerMode) -> GapFillItem {
    let text = &corpus.texts[at.text_ordinal as usize];
    let sentence = &text.sentences[at.sentence_index as usize];
    let surface = &sentence.tokens[at.token_index as usize].surface;
    let answer = match answer_mode {
        AnswerMode::AsWritten => surface.clone(),
        AnswerMode::Corrected => single_token_correction(sentence, at.token_index)
            .unwrap_or(surface)
            .to_string(),
    };
    GapFillItem {
        stem: stem_for(sentence, at.token_index as usize),
        answer,
        distractors: Vec::new(),
        source: ItemSource {
            text_id: text.id.clone(),
            sentence_index: at.sentence_index,
            token_index: at.token_index,
        },
        answer_mode,
    }
}

/// Ranks candidate forms by corpus frequency, then alphabetically, dropping
/// the answer, and keeps the first `k`.
fn rank_forms(counts: HashMap<String, usize>, answer: &str, k: usize) -> Vec<String> {
    let mut forms: Vec<(String, usize)> = counts.into_iter().filter(|(f, _)| f != answer).collect();
    forms.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    forms.into_iter().take(k).map(|(f, _)| f).collect()
}

fn source_posting(corpus: &Corpus, item: &GapFillItem) -> Option<Posting> {
    let (t, text) = corpus.text_by_id(&item.source.text_id)?;
    text.sentences
        .get(item.source.sentence_index as usize)?
        .tokens
        .get(item.source.token_index as usize)?;
    Some(Posting::new(t as u32, item.source.sentence_index, item.source.token_index))
}

/// Up to `k` wrong options for an item, never including its answer.
pub fn build_distractors(index: &CorpusIndex, item: &GapFillItem, policy: DistractorPolicy, k: usize) -> Vec<String> {
    if k == 0 {
        return Vec::new();
    }
    let corpus = index.corpus();
    let mut counts: HashMap<String, usize> = HashMap::new();
    match policy {
        DistractorPolicy::None => return Vec::new(),
        DistractorPolicy::SameLemma => {
            let Some(at) = source_posting(corpus, item) else {
                return Vec::new();
            };
            let lemma = &corpus.texts[at.text_ordinal as usize].sentences[at.sentence_index as usize].tokens
                [at.token_index as usize]
                .lemma;
            for p in index.lookup(ConstraintKey::Lemma, lemma) {
                let tok = &corpus.texts[p.text_ordinal as usize].sentences[p.sentence_index as usize].tokens
                    [p.token_index as usize];
                *counts.entry(tok.surface.clone()).or_default() += 1;
            }
        }
        DistractorPolicy::AttestedErrors => {
            let mut seen_spans = std::collections::HashSet::new();
            for p in index.lookup(ConstraintKey::Corr, &item.answer) {
                let sentence = &corpus.texts[p.text_ordinal as usize].sentences[p.sentence_index as usize];
                for (si, span) in sentence.errors.iter().enumerate() {
                    if span.corrected_form == item.answer
                        && span.covers(p.token_index)
                        && seen_spans.insert((p.text_ordinal, p.sentence_index, si))
                    {
                        let form = sentence.tokens[span.first_token as usize..=span.last_token as usize]
                            .iter()
                            .map(|t| t.surface.as_str())
                            .collect::<Vec<_>>()
                            .join(" ");
                        *counts.entry(form).or_default() += 1;
                    }
                }
            }
        }
    }
    rank_forms(counts, &item.answer, k)
}

/// Samples `min(count, matches)` keyword occurrences of `query` and turns
/// each into a gap-fill item.
pub fn generate_items(
    index: &CorpusIndex,
    query: &PatternQuery,
    params: &ExerciseParams,
) -> Result<ExerciseSet, ArgumentError> {
    if params.count == 0 {
        return Err(ArgumentError("count must be at least 1".into()));
    }
    let occurrences = find_occurrences(index, query, EvalMode::Indexed);
    let picks = sample_indices(params.seed, occurrences.len(), params.count);
    let items = picks
        .into_iter()
        .map(|i| {
            let occ: &Occurrence = &occurrences[i];
            let mut item = make_item(index.corpus(), occ.position(), params.answer_mode);
            item.distractors = build_distractors(index, &item, params.distractor_policy, params.k);
            item
        })
        .collect();
    Ok(ExerciseSet {
        items,
        seed: params.seed,
        generator: GENERATOR.to_string(),
        query: query.clone(),
        answer_mode: params.answer_mode,
        distractor_policy: params.distractor_policy,
        k: params.k,
        total_matches: occurrences.len(),
        no_examples: occurrences.is_empty(),
    })
}

/// One remedial item per input item: another, error-free occurrence of the
/// same lemma from a different sentence, chosen with the seeded generator.
/// `None` where the corpus offers no such occurrence.
pub fn remedial_items(index: &CorpusIndex, items: &[GapFillItem], seed: u64) -> Vec<Option<GapFillItem>> {
    let corpus = index.corpus();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    items
        .iter()
        .map(|item| {
            let at = source_posting(corpus, item)?;
            let lemma = fold(
                &corpus.texts[at.text_ordinal as usize].sentences[at.sentence_index as usize].tokens
                    [at.token_index as usize]
                    .lemma,
            );
            let clean = index.lookup(ConstraintKey::Error, "no");
            let candidates: Vec<Posting> = index
                .lookup(ConstraintKey::Lemma, &lemma)
                .iter()
                .filter(|p| p.sentence() != at.sentence())
                .filter(|p| clean.binary_search(p).is_ok())
                .copied()
                .collect();
            if candidates.is_empty() {
                return None;
            }
            let pick = candidates[uniform_below(&mut rng, candidates.len() as u64) as usize];
            Some(make_item(corpus, pick, AnswerMode::AsWritten))
        })
        .collect()
}
