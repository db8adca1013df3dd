//! Annotated learner corpora: tokens, error spans, texts and the catalog of
//! queryable values.
//!
//! A [`Corpus`] is normally obtained from the XML ingestion format through
//! [`parse_corpus`]. Values are plain data and can be built by hand as well;
//! [`validate_corpus`] reports every broken invariant on such values.

mod validate;
mod xml;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use validate::{validate_corpus, Severity, ValidationFinding};
pub use xml::{parse_corpus, parse_corpus_unchecked, serialize_corpus};

/// Separator between the segments of a hierarchical error category code.
pub const CATEGORY_SEPARATOR: char = '-';

/// Separator between traits in the `traits` XML attribute.
pub const TRAIT_SEPARATOR: char = ';';

/// One annotated token.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MorphoToken {
    pub surface: String,
    pub lemma: String,
    pub pos: String,
    pub traits: BTreeSet<String>,
    pub sentence_index: u32,
    pub token_index: u32,
}

impl MorphoToken {
    pub fn has_trait_folded(&self, folded: &str) -> bool {
        self.traits.iter().any(|t| eq_folded(t, folded))
    }
}

/// An annotated error covering an inclusive token range of one sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ErrorSpan {
    pub category: String,
    pub first_token: u32,
    pub last_token: u32,
    /// Target form; empty when the annotation carries none.
    pub corrected_form: String,
}

impl ErrorSpan {
    pub fn covers(&self, token: u32) -> bool {
        self.first_token <= token && token <= self.last_token
    }

    pub fn segments(&self) -> impl Iterator<Item = &str> {
        self.category.split(CATEGORY_SEPARATOR)
    }

    /// All segment prefixes of the category, shortest first
    /// (`GRA`, `GRA-PP`, `GRA-PP-AGR`).
    pub fn category_prefixes(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for (i, c) in self.category.char_indices() {
            if c == CATEGORY_SEPARATOR {
                out.push(&self.category[..i]);
            }
        }
        out.push(self.category.as_str());
        out
    }

    /// Segment-prefix test, case-insensitive. `prefix` must already be
    /// lowercased.
    pub fn category_has_prefix_folded(&self, prefix: &str) -> bool {
        let mut have = self.segments();
        for want in prefix.split(CATEGORY_SEPARATOR) {
            match have.next() {
                Some(seg) if eq_folded(seg, want) => {}
                _ => return false,
            }
        }
        true
    }

    fn strictly_overlaps(&self, other: &ErrorSpan) -> bool {
        let disjoint = self.last_token < other.first_token || other.last_token < self.first_token;
        let self_in_other = other.first_token <= self.first_token && self.last_token <= other.last_token;
        let other_in_self = self.first_token <= other.first_token && other.last_token <= self.last_token;
        !(disjoint || self_in_other || other_in_self)
    }
}

/// A sentence: its tokens and the error spans annotated on them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<MorphoToken>,
    /// Spans in document order of their opening tags.
    pub errors: Vec<ErrorSpan>,
}

impl Sentence {
    /// Surface forms joined by single spaces.
    pub fn text(&self) -> String {
        join_surfaces(&self.tokens)
    }

    /// Indices into `errors` of the spans covering each token.
    pub fn coverage(&self) -> Vec<Vec<usize>> {
        let mut cover = vec![Vec::new(); self.tokens.len()];
        for (i, span) in self.errors.iter().enumerate() {
            let last = (span.last_token as usize).min(self.tokens.len().saturating_sub(1));
            for slot in cover.iter_mut().take(last + 1).skip(span.first_token as usize) {
                slot.push(i);
            }
        }
        cover
    }
}

/// A learner production and its metadata.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnerText {
    pub id: String,
    pub mothertongue: String,
    pub level: String,
    pub sentences: Vec<Sentence>,
}

impl LearnerText {
    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }
}

/// Distinct values present in a corpus.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Catalog {
    pub pos: BTreeSet<String>,
    pub traits: BTreeSet<String>,
    pub categories: BTreeSet<String>,
    pub mothertongues: BTreeSet<String>,
    pub levels: BTreeSet<String>,
}

impl Catalog {
    pub fn from_texts(texts: &[LearnerText]) -> Self {
        let mut catalog = Catalog::default();
        for text in texts {
            catalog.mothertongues.insert(text.mothertongue.clone());
            catalog.levels.insert(text.level.clone());
            for sentence in &text.sentences {
                for tok in &sentence.tokens {
                    catalog.pos.insert(tok.pos.clone());
                    catalog.traits.extend(tok.traits.iter().cloned());
                }
                for span in &sentence.errors {
                    catalog.categories.insert(span.category.clone());
                }
            }
        }
        catalog
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub name: String,
    pub texts: Vec<LearnerText>,
    pub catalog: Catalog,
}

impl Corpus {
    /// Builds a corpus and derives its catalog.
    pub fn new(name: impl Into<String>, texts: Vec<LearnerText>) -> Self {
        let catalog = Catalog::from_texts(&texts);
        Corpus {
            name: name.into(),
            texts,
            catalog,
        }
    }

    pub fn token_count(&self) -> usize {
        self.texts.iter().map(LearnerText::token_count).sum()
    }

    pub fn span_count(&self) -> usize {
        self.texts
            .iter()
            .flat_map(|t| &t.sentences)
            .map(|s| s.errors.len())
            .sum()
    }

    pub fn text_by_id(&self, id: &str) -> Option<(usize, &LearnerText)> {
        self.texts.iter().enumerate().find(|(_, t)| t.id == id)
    }

    pub fn sentence(&self, text: usize, sentence: usize) -> Option<&Sentence> {
        self.texts.get(text)?.sentences.get(sentence)
    }

    pub fn token(&self, text: usize, sentence: usize, token: usize) -> Option<&MorphoToken> {
        self.sentence(text, sentence)?.tokens.get(token)
    }
}

pub(crate) fn join_surfaces(tokens: &[MorphoToken]) -> String {
    let mut out = String::new();
    for (i, tok) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&tok.surface);
    }
    out
}

/// Case-insensitive equality where `folded` is already lowercase.
pub fn eq_folded(value: &str, folded: &str) -> bool {
    if value.is_ascii() {
        // ASCII lowercasing keeps the length, and a non-ASCII `folded` byte
        // can never equal an ASCII one.
        return value.len() == folded.len() && value.eq_ignore_ascii_case(folded);
    }
    value.chars().flat_map(char::to_lowercase).eq(folded.chars())
}

pub fn fold(value: &str) -> String {
    value.to_lowercase()
}
