use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Catalog, Corpus, CATEGORY_SEPARATOR, TRAIT_SEPARATOR};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

/// One broken invariant. Corpus-level findings carry an empty `text_id`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationFinding {
    pub severity: Severity,
    pub text_id: String,
    pub sentence_index: Option<u32>,
    pub token_index: Option<u32>,
    pub message: String,
}

impl fmt::Display for ValidationFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}: text {:?}", self.text_id)?;
        if let Some(s) = self.sentence_index {
            write!(f, ", sentence {s}")?;
        }
        if let Some(t) = self.token_index {
            write!(f, ", token {t}")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Checks every corpus invariant. An empty result means the corpus is valid.
pub fn validate_corpus(corpus: &Corpus) -> Vec<ValidationFinding> {
    let mut findings = Vec::new();
    let mut push = |severity, text_id: &str, sentence: Option<u32>, token: Option<u32>, message: String| {
        findings.push(ValidationFinding {
            severity,
            text_id: text_id.to_string(),
            sentence_index: sentence,
            token_index: token,
            message,
        })
    };

    let mut seen = HashSet::new();
    for text in &corpus.texts {
        let id = text.id.as_str();
        if id.trim().is_empty() {
            push(Severity::Error, id, None, None, "text id is empty".into());
        }
        if !seen.insert(id) {
            push(Severity::Error, id, None, None, format!("duplicate text id {id:?}"));
        }
        if text.sentences.is_empty() {
            push(Severity::Warning, id, None, None, "text has no sentences".into());
        }
        for (si, sentence) in text.sentences.iter().enumerate() {
            let s = si as u32;
            if sentence.tokens.is_empty() {
                push(Severity::Warning, id, Some(s), None, "sentence has no tokens".into());
            }
            for (ti, tok) in sentence.tokens.iter().enumerate() {
                let t = ti as u32;
                if tok.surface.trim().is_empty() {
                    push(Severity::Error, id, Some(s), Some(t), "empty surface form".into());
                }
                if tok.lemma.trim().is_empty() {
                    push(Severity::Error, id, Some(s), Some(t), "empty lemma".into());
                }
                if tok.pos.trim().is_empty() {
                    push(Severity::Warning, id, Some(s), Some(t), "empty part-of-speech".into());
                }
                if tok.sentence_index != s || tok.token_index != t {
                    push(
                        Severity::Error,
                        id,
                        Some(s),
                        Some(t),
                        format!(
                            "token position ({}, {}) does not match its place in the text",
                            tok.sentence_index, tok.token_index
                        ),
                    );
                }
                for tr in &tok.traits {
                    if tr.trim().is_empty() || tr.contains(TRAIT_SEPARATOR) || tr.trim() != tr {
                        push(Severity::Error, id, Some(s), Some(t), format!("malformed trait {tr:?}"));
                    }
                }
            }
            let len = sentence.tokens.len() as u32;
            for (ei, span) in sentence.errors.iter().enumerate() {
                if span.first_token > span.last_token {
                    push(
                        Severity::Error,
                        id,
                        Some(s),
                        Some(span.first_token),
                        format!("error span {ei} ends before it starts"),
                    );
                } else if span.last_token >= len {
                    push(
                        Severity::Error,
                        id,
                        Some(s),
                        Some(span.last_token),
                        format!("error span {ei} extends past the end of the sentence"),
                    );
                }
                if span.category.split(CATEGORY_SEPARATOR).any(|seg| seg.trim().is_empty()) {
                    push(
                        Severity::Error,
                        id,
                        Some(s),
                        Some(span.first_token),
                        format!("error category {:?} has an empty segment", span.category),
                    );
                }
                for (oi, other) in sentence.errors.iter().enumerate().skip(ei + 1) {
                    if span.strictly_overlaps(other) {
                        push(
                            Severity::Error,
                            id,
                            Some(s),
                            Some(other.first_token),
                            format!("error spans {ei} and {oi} overlap without nesting"),
                        );
                    }
                }
            }
        }
    }

    if Catalog::from_texts(&corpus.texts) != corpus.catalog {
        push(
            Severity::Error,
            "",
            None,
            None,
            "catalog does not match the values present in the texts".into(),
        );
    }
    findings
}
