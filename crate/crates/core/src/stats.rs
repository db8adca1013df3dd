//! Error-frequency profiles by mother tongue and level, plus detection scoring.

use std::collections::{BTreeMap, BTreeSet};
use std::io;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CATEGORY_SEPARATOR};
use crate::error::ArgumentError;
use crate::index::Posting;

/// Span counts keyed by `(category prefix, l1, level)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ErrorProfile {
    pub counts: BTreeMap<(String, String, String), u64>,
    pub total_spans: u64,
    pub total_tokens: u64,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub category: String,
    pub l1: String,
    pub level: String,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RankedError {
    pub category: String,
    pub count: u64,
    pub relative_frequency: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DetectionScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Keeps the first `depth` segments of a category code.
pub fn truncate_category(category: &str, depth: usize) -> String {
    let mut out = String::new();
    for (i, seg) in category.split(CATEGORY_SEPARATOR).take(depth).enumerate() {
        if i > 0 {
            out.push(CATEGORY_SEPARATOR);
        }
        out.push_str(seg);
    }
    out
}

/// Counts every span once, under its category cut to `depth` segments.
pub fn build_profile(corpus: &Corpus, depth: usize) -> Result<ErrorProfile, ArgumentError> {
    if depth == 0 {
        return Err(ArgumentError("depth must be at least 1".into()));
    }
    let mut profile = ErrorProfile {
        depth,
        total_tokens: corpus.token_count() as u64,
        ..Default::default()
    };
    for text in &corpus.texts {
        for span in text.sentences.iter().flat_map(|s| &s.errors) {
            let key = (
                truncate_category(&span.category, depth),
                text.mothertongue.clone(),
                text.level.clone(),
            );
            *profile.counts.entry(key).or_default() += 1;
            profile.total_spans += 1;
        }
    }
    Ok(profile)
}

impl ErrorProfile {
    pub fn rows(&self) -> Vec<ProfileRow> {
        self.counts
            .iter()
            .map(|((category, l1, level), &count)| ProfileRow {
                category: category.clone(),
                l1: l1.clone(),
                level: level.clone(),
                count,
            })
            .collect()
    }

    /// Writes `category,l1,level,count` rows with a header line.
    pub fn write_csv<W: io::Write>(&self, out: W) -> csv::Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        for row in self.rows() {
            writer.serialize(row)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }
}

/// Ranks categories under an optional L1 and level filter. Categories below
/// `min_count` are dropped; a `min_count` of 0 behaves like 1.
pub fn frequent_errors(
    profile: &ErrorProfile,
    l1: Option<&str>,
    level: Option<&str>,
    min_count: u64,
) -> Vec<RankedError> {
    let min_count = min_count.max(1);
    let mut by_category: BTreeMap<&str, u64> = BTreeMap::new();
    let mut total = 0u64;
    for ((category, l, v), &count) in &profile.counts {
        if l1.is_some_and(|f| f != l) || level.is_some_and(|f| f != v) {
            continue;
        }
        *by_category.entry(category.as_str()).or_default() += count;
        total += count;
    }
    let mut ranked: Vec<RankedError> = by_category
        .into_iter()
        .filter(|&(_, n)| n >= min_count)
        .map(|(category, count)| RankedError {
            category: category.to_string(),
            count,
            relative_frequency: count as f64 / total as f64,
        })
        .collect();
    // The map is already in category order, so a stable sort keeps ties sorted.
    ranked.sort_by_key(|r| std::cmp::Reverse(r.count));
    ranked
}

/// Scores predicted error tokens against the span-covered tokens.
pub fn benchmark_detection(
    corpus: &Corpus,
    predicted: &BTreeSet<Posting>,
) -> Result<DetectionScore, ArgumentError> {
    for p in predicted {
        if corpus
            .token(p.text_ordinal as usize, p.sentence_index as usize, p.token_index as usize)
            .is_none()
        {
            return Err(ArgumentError(format!(
                "predicted position ({}, {}, {}) does not reference a token",
                p.text_ordinal, p.sentence_index, p.token_index
            )));
        }
    }
    let mut gold = BTreeSet::new();
    for (ti, text) in corpus.texts.iter().enumerate() {
        for (si, sentence) in text.sentences.iter().enumerate() {
            for span in &sentence.errors {
                for tok in span.first_token..=span.last_token {
                    gold.insert(Posting::new(ti as u32, si as u32, tok));
                }
            }
        }
    }
    let hits = predicted.intersection(&gold).count() as f64;
    let ratio = |num: f64, den: usize| if den == 0 { 1.0 } else { num / den as f64 };
    let precision = ratio(hits, predicted.len());
    let recall = ratio(hits, gold.len());
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(DetectionScore { precision, recall, f1 })
}
