//! Shared test support: seeded random corpora and queries, and a brute-force
//! matcher that shares no code with the automaton.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use learncorp_core::corpus::{parse_corpus, Corpus, ErrorSpan, LearnerText, MorphoToken, Sentence};
use learncorp_core::pattern::{Constraint, ConstraintKey, ConstraintOp, DocFilters, PatternQuery, Quantifier, Slot};
use rand::prelude::*;
use rand::rngs::StdRng;

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sample.xml")
}

pub fn fixture() -> Corpus {
    parse_corpus(&std::fs::read(fixture_path()).unwrap()).unwrap()
}

pub const FIGURE_QUERY: &str = r#"[lemma="avoir"] ![pos="verbe" & trait="participe passé" & error="yes"]"#;

const LEMMAS: &[(&str, &[&str])] = &[
    ("avoir", &["a", "ont", "avons", "A"]),
    ("choisir", &["choisi", "choisis", "choisie"]),
    ("chat", &["chat", "chats", "Chat"]),
    ("le", &["le", "la", "les", "Le"]),
    ("grand", &["grand", "grande"]),
    ("être", &["est", "été"]),
    (".", &["."]),
];
const POS: &[&str] = &["verbe", "nom", "det", "adj", "Verbe"];
const TRAITS: &[&str] = &["participe passé", "pluriel", "féminin", "Pluriel"];
const CATEGORIES: &[&str] = &["GRA", "GRA-PP", "GRA-PP-AGR", "LEX", "LEX-FAU", "ORT-ACC"];
const CORRECTIONS: &[&str] = &["choisi", "chats", "la", "été", "Chat"];
const L1: &[&str] = &["dutch", "english", "german"];
const LEVELS: &[&str] = &["B1", "B2", "C1"];

pub struct CorpusShape {
    pub max_texts: usize,
    pub max_sentences: usize,
    pub max_tokens: usize,
}

impl Default for CorpusShape {
    fn default() -> Self {
        CorpusShape {
            max_texts: 50,
            max_sentences: 4,
            max_tokens: 40,
        }
    }
}

fn pick<'a, R: Rng>(rng: &mut R, xs: &[&'a str]) -> &'a str {
    xs[rng.random_range(0..xs.len())]
}

fn random_token<R: Rng>(rng: &mut R, s: u32, t: u32) -> MorphoToken {
    let (lemma, forms) = LEMMAS[rng.random_range(0..LEMMAS.len())];
    let mut traits = BTreeSet::new();
    for _ in 0..rng.random_range(0..3) {
        traits.insert(pick(rng, TRAITS).to_string());
    }
    MorphoToken {
        surface: pick(rng, forms).to_string(),
        lemma: lemma.to_string(),
        pos: pick(rng, POS).to_string(),
        traits,
        sentence_index: s,
        token_index: t,
    }
}

fn random_span<R: Rng>(rng: &mut R, first: u32, last: u32) -> ErrorSpan {
    ErrorSpan {
        category: pick(rng, CATEGORIES).to_string(),
        first_token: first,
        last_token: last,
        corrected_form: if rng.random_bool(0.7) {
            pick(rng, CORRECTIONS).to_string()
        } else {
            String::new()
        },
    }
}

/// Disjoint top-level spans, each possibly holding one nested or identical span.
fn random_spans<R: Rng>(rng: &mut R, len: u32) -> Vec<ErrorSpan> {
    let mut spans = Vec::new();
    let mut at = 0;
    while at < len {
        at += rng.random_range(0..4);
        if at >= len {
            break;
        }
        let last = (at + rng.random_range(0..3)).min(len - 1);
        spans.push(random_span(rng, at, last));
        if rng.random_bool(0.3) {
            let a = rng.random_range(at..=last);
            let b = rng.random_range(a..=last);
            spans.push(random_span(rng, a, b));
        }
        at = last + 1;
    }
    spans
}

pub fn random_corpus_with<R: Rng>(rng: &mut R, shape: &CorpusShape) -> Corpus {
    let n_texts = rng.random_range(0..=shape.max_texts);
    let mut ids = BTreeSet::new();
    let mut texts = Vec::new();
    for _ in 0..n_texts {
        let id = loop {
            let id = if rng.random_bool(0.8) {
                rng.random_range(1..5000u32).to_string()
            } else {
                format!("t{}", rng.random_range(0..100u32))
            };
            if ids.insert(id.clone()) {
                break id;
            }
        };
        let sentences = (0..rng.random_range(1..=shape.max_sentences))
            .map(|s| {
                let len = rng.random_range(1..=shape.max_tokens) as u32;
                let tokens = (0..len).map(|t| random_token(rng, s as u32, t)).collect();
                let errors = random_spans(rng, len);
                Sentence { tokens, errors }
            })
            .collect();
        texts.push(LearnerText {
            id,
            mothertongue: pick(rng, L1).to_string(),
            level: pick(rng, LEVELS).to_string(),
            sentences,
        });
    }
    Corpus::new("random", texts)
}

pub fn random_corpus(seed: u64) -> Corpus {
    random_corpus_with(&mut StdRng::seed_from_u64(seed), &CorpusShape::default())
}

fn random_constraint<R: Rng>(rng: &mut R) -> Constraint {
    let key = ConstraintKey::ALL[rng.random_range(0..ConstraintKey::ALL.len())];
    let value = match key {
        ConstraintKey::Surface => {
            let (_, forms) = LEMMAS[rng.random_range(0..LEMMAS.len())];
            pick(rng, forms).to_string()
        }
        ConstraintKey::Lemma => {
            let lemma = LEMMAS[rng.random_range(0..LEMMAS.len())].0;
            if rng.random_bool(0.2) {
                lemma.to_uppercase()
            } else {
                lemma.to_string()
            }
        }
        ConstraintKey::Pos => pick(rng, POS).to_string(),
        ConstraintKey::Trait => pick(rng, TRAITS).to_string(),
        ConstraintKey::Error => pick(rng, &["yes", "no"]).to_string(),
        ConstraintKey::Cat => pick(rng, &["GRA", "gra-pp", "GRA-PP-AGR", "LEX", "ORT", "GR"]).to_string(),
        ConstraintKey::Corr => pick(rng, CORRECTIONS).to_string(),
    };
    Constraint {
        key,
        op: if rng.random_bool(0.25) { ConstraintOp::Neq } else { ConstraintOp::Eq },
        value,
    }
}

fn random_quantifier<R: Rng>(rng: &mut R) -> Quantifier {
    match rng.random_range(0..5) {
        0 | 1 => Quantifier::ExactlyOne,
        2 => Quantifier::Optional,
        3 => Quantifier::Star,
        _ => {
            let min = rng.random_range(0..3);
            Quantifier::Range {
                min,
                max: min + rng.random_range(0..3),
            }
        }
    }
}

pub fn random_query_with<R: Rng>(rng: &mut R) -> PatternQuery {
    let n = rng.random_range(1..=4);
    let keyword = rng.random_range(0..n);
    let slots = (0..n)
        .map(|i| {
            let constraints = (0..rng.random_range(1..=2)).map(|_| random_constraint(rng)).collect();
            let slot = Slot::new(constraints);
            if i == keyword {
                slot.keyword()
            } else {
                slot.quantified(random_quantifier(rng))
            }
        })
        .collect();
    let mut query = PatternQuery::new(slots);
    if rng.random_bool(0.2) {
        query.doc_filters.l1.insert(pick(rng, L1).to_string());
    }
    if rng.random_bool(0.2) {
        query.doc_filters.level.insert(pick(rng, LEVELS).to_string());
    }
    query
}

pub fn random_query(seed: u64) -> PatternQuery {
    random_query_with(&mut StdRng::seed_from_u64(seed))
}

// ---- brute-force oracle ----

fn lower(s: &str) -> String {
    s.to_lowercase()
}

fn category_has_prefix(category: &str, prefix: &str) -> bool {
    let cat: Vec<String> = category.split('-').map(lower).collect();
    let pre: Vec<String> = prefix.split('-').map(lower).collect();
    pre.len() <= cat.len() && cat[..pre.len()] == pre[..]
}

/// Direct reading of the constraint semantics.
pub fn oracle_holds(c: &Constraint, tokens: &[MorphoToken], spans: &[ErrorSpan], at: usize) -> bool {
    let tok = &tokens[at];
    let covering: Vec<&ErrorSpan> = spans
        .iter()
        .filter(|s| s.first_token as usize <= at && at <= s.last_token as usize)
        .collect();
    let positive = match c.key {
        ConstraintKey::Surface => tok.surface == c.value,
        ConstraintKey::Lemma => lower(&tok.lemma) == lower(&c.value),
        ConstraintKey::Pos => lower(&tok.pos) == lower(&c.value),
        ConstraintKey::Trait => tok.traits.iter().any(|t| lower(t) == lower(&c.value)),
        ConstraintKey::Error => (c.value == "yes") == !covering.is_empty(),
        ConstraintKey::Cat => covering.iter().any(|s| category_has_prefix(&s.category, &c.value)),
        ConstraintKey::Corr => covering.iter().any(|s| s.corrected_form == c.value),
    };
    match c.op {
        ConstraintOp::Eq => positive,
        ConstraintOp::Neq => !positive,
    }
}

fn slot_holds(slot: &Slot, tokens: &[MorphoToken], spans: &[ErrorSpan], at: usize) -> bool {
    slot.constraints.iter().all(|c| oracle_holds(c, tokens, spans, at))
}

/// Every way of laying the slots over `tokens[start..end]`: returns the set
/// of keyword positions reachable by some exact cover of the window.
#[allow(clippy::too_many_arguments)]
fn covers(
    query: &PatternQuery,
    tokens: &[MorphoToken],
    spans: &[ErrorSpan],
    slot: usize,
    pos: usize,
    end: usize,
    keyword: Option<usize>,
    out: &mut BTreeSet<usize>,
) {
    if slot == query.slots.len() {
        if pos == end {
            out.insert(keyword.expect("queries have a keyword"));
        }
        return;
    }
    let s = &query.slots[slot];
    let min = s.quantifier.min() as usize;
    let max = s.quantifier.max().map_or(end - pos, |m| m as usize).min(end - pos);
    if min > max {
        return;
    }
    for reps in 0..=max {
        if reps > 0 && !slot_holds(s, tokens, spans, pos + reps - 1) {
            break;
        }
        if reps < min {
            continue;
        }
        let kw = if s.keyword { Some(pos) } else { keyword };
        covers(query, tokens, spans, slot + 1, pos + reps, end, kw, out);
    }
}

/// All `(start, end, keyword)` triples, `end` exclusive, by window enumeration.
pub fn oracle_matches(query: &PatternQuery, tokens: &[MorphoToken], spans: &[ErrorSpan]) -> BTreeSet<(usize, usize, usize)> {
    let mut all = BTreeSet::new();
    for start in 0..tokens.len() {
        for end in start + 1..=tokens.len() {
            let mut kws = BTreeSet::new();
            covers(query, tokens, spans, 0, start, end, None, &mut kws);
            all.extend(kws.into_iter().map(|k| (start, end, k)));
        }
    }
    all
}

fn oracle_id_order(a: &str, b: &str) -> Ordering {
    let num = |s: &str| s.parse::<u128>().ok().filter(|_| s.bytes().all(|c| c.is_ascii_digit()));
    match (num(a), num(b)) {
        (Some(x), Some(y)) => x.cmp(&y),
        _ => a.cmp(b),
    }
}

/// Expected concordance order: `(text ordinal, sentence, keyword, start, end)`
/// with one entry per keyword occurrence, bound to its first match.
pub fn oracle_occurrences(corpus: &Corpus, query: &PatternQuery) -> Vec<(u32, u32, u32, u32, u32)> {
    let mut order: Vec<usize> = (0..corpus.texts.len()).collect();
    order.sort_by(|&a, &b| oracle_id_order(&corpus.texts[a].id, &corpus.texts[b].id).then(a.cmp(&b)));
    let mut out = Vec::new();
    for t in order {
        let text = &corpus.texts[t];
        let f = &query.doc_filters;
        if (!f.l1.is_empty() && !f.l1.contains(&text.mothertongue))
            || (!f.level.is_empty() && !f.level.contains(&text.level))
        {
            continue;
        }
        for (s, sentence) in text.sentences.iter().enumerate() {
            let mut first: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
            for (start, end, kw) in oracle_matches(query, &sentence.tokens, &sentence.errors) {
                first.entry(kw).or_insert((start, end));
            }
            for (kw, (start, end)) in first {
                // The automaton reports inclusive ends.
                out.push((t as u32, s as u32, kw as u32, start as u32, end as u32 - 1));
            }
        }
    }
    out
}

pub fn empty_filters() -> DocFilters {
    DocFilters::default()
}
