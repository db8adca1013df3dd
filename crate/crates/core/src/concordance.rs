//! Keyword-in-context concordances.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, MorphoToken};
use crate::error::ArgumentError;
use crate::index::{CorpusIndex, Posting};
use crate::pattern::{compile, match_sentence, ConstraintOp, Match, PatternQuery};

/// One concordance row.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConcordanceLine {
    pub row_number: usize,
    pub text_id: String,
    pub text_ordinal: u32,
    pub left_context: String,
    pub keyword: String,
    pub right_context: String,
    pub sentence_index: u32,
    pub token_index: u32,
    pub match_start: u32,
    pub match_end: u32,
}

impl ConcordanceLine {
    /// Left context, keyword and right context joined by single spaces,
    /// skipping empty parts.
    pub fn rejoined(&self) -> String {
        [self.left_context.as_str(), self.keyword.as_str(), self.right_context.as_str()]
            .iter()
            .filter(|p| !p.is_empty())
            .copied()
            .collect::<Vec<_>>()
            .join(" ")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResultPage {
    pub lines: Vec<ConcordanceLine>,
    pub total_matches: usize,
    pub offset: usize,
    pub limit: usize,
}

/// How candidate sentences are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EvalMode {
    /// Posting lists narrow the sentences handed to the automaton.
    #[default]
    Indexed,
    /// Every sentence of every admitted text goes through the automaton.
    Scan,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QueryOptions {
    pub mode: EvalMode,
    /// Maximum number of tokens shown on each side of the keyword.
    pub context_cap: Option<usize>,
}

/// A keyword occurrence together with the first match that binds it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Occurrence {
    pub text_ordinal: u32,
    pub sentence_index: u32,
    pub keyword: u32,
    pub start: u32,
    pub end: u32,
}

impl Occurrence {
    pub fn position(&self) -> Posting {
        Posting::new(self.text_ordinal, self.sentence_index, self.keyword)
    }

    fn as_match(&self) -> Match {
        Match {
            start: self.start,
            end: self.end,
            keyword: self.keyword,
        }
    }
}

/// Orders text ids numerically when both are all digits, otherwise
/// lexicographically.
pub fn compare_text_ids(a: &str, b: &str) -> Ordering {
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|c| c.is_ascii_digit());
    if digits(a) && digits(b) {
        let a = a.trim_start_matches('0');
        let b = b.trim_start_matches('0');
        a.len().cmp(&b.len()).then_with(|| a.cmp(b))
    } else {
        a.cmp(b)
    }
}

fn intersect(a: &[Posting], b: &[Posting]) -> Vec<Posting> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Sentences that can possibly match: for each mandatory slot, the sentences
/// holding a token that satisfies all of its positive constraints. `None`
/// when no slot narrows the search.
fn candidate_sentences(index: &CorpusIndex, query: &PatternQuery) -> Option<BTreeSet<(u32, u32)>> {
    let mut result: Option<BTreeSet<(u32, u32)>> = None;
    for slot in query.slots.iter().filter(|s| s.quantifier.min() >= 1) {
        let mut lists: Vec<&[Posting]> = slot
            .constraints
            .iter()
            .filter(|c| c.op == ConstraintOp::Eq)
            .map(|c| index.lookup(c.key, &c.value))
            .collect();
        if lists.is_empty() {
            continue;
        }
        lists.sort_by_key(|l| l.len());
        let mut tokens = lists[0].to_vec();
        for l in &lists[1..] {
            if tokens.is_empty() {
                break;
            }
            tokens = intersect(&tokens, l);
        }
        let sentences: BTreeSet<(u32, u32)> = tokens.into_iter().map(Posting::sentence).collect();
        result = Some(match result {
            None => sentences,
            Some(prev) => prev.intersection(&sentences).copied().collect(),
        });
    }
    result
}

/// Every keyword occurrence of the query, ordered by text id, sentence and
/// token. Each keyword appears once, bound to its leftmost-shortest match.
pub fn find_occurrences(index: &CorpusIndex, query: &PatternQuery, mode: EvalMode) -> Vec<Occurrence> {
    let corpus = index.corpus();
    let automaton = compile(query);
    let docs = index.documents(&query.doc_filters);

    let sentences: Vec<(u32, u32)> = match (mode, candidate_sentences(index, query)) {
        (EvalMode::Indexed, Some(cands)) => cands
            .into_iter()
            .filter(|&(t, _)| docs.contains(t as usize))
            .collect(),
        _ => docs
            .ones()
            .flat_map(|t| (0..corpus.texts[t].sentences.len()).map(move |s| (t as u32, s as u32)))
            .collect(),
    };

    let mut out = Vec::new();
    for (t, s) in sentences {
        let sentence = &corpus.texts[t as usize].sentences[s as usize];
        let mut matches = match_sentence(&automaton, &sentence.tokens, &sentence.errors);
        // First match per keyword in (start, end) order.
        matches.sort_by_key(|m| (m.keyword, m.start, m.end));
        matches.dedup_by_key(|m| m.keyword);
        out.extend(matches.into_iter().map(|m| Occurrence {
            text_ordinal: t,
            sentence_index: s,
            keyword: m.keyword,
            start: m.start,
            end: m.end,
        }));
    }

    let mut rank = vec![0usize; corpus.texts.len()];
    let mut order: Vec<usize> = (0..corpus.texts.len()).collect();
    order.sort_by(|&a, &b| compare_text_ids(&corpus.texts[a].id, &corpus.texts[b].id).then(a.cmp(&b)));
    for (r, t) in order.into_iter().enumerate() {
        rank[t] = r;
    }
    out.sort_by_key(|o| (rank[o.text_ordinal as usize], o.sentence_index, o.keyword));
    out
}

fn join(tokens: &[MorphoToken]) -> String {
    tokens.iter().map(|t| t.surface.as_str()).collect::<Vec<_>>().join(" ")
}

/// Builds the KWIC row for a match. Contexts run to the sentence boundaries
/// unless `context_cap` limits them.
pub fn render_line(
    corpus: &Corpus,
    text_ordinal: u32,
    sentence_index: u32,
    m: Match,
    row_number: usize,
    context_cap: Option<usize>,
) -> ConcordanceLine {
    let text = &corpus.texts[text_ordinal as usize];
    let tokens = &text.sentences[sentence_index as usize].tokens;
    let kw = m.keyword as usize;
    let mut left = &tokens[..kw];
    let mut right = &tokens[kw + 1..];
    if let Some(cap) = context_cap {
        left = &left[left.len().saturating_sub(cap)..];
        right = &right[..right.len().min(cap)];
    }
    ConcordanceLine {
        row_number,
        text_id: text.id.clone(),
        text_ordinal,
        left_context: join(left),
        keyword: tokens[kw].surface.clone(),
        right_context: join(right),
        sentence_index,
        token_index: m.keyword,
        match_start: m.start,
        match_end: m.end,
    }
}

/// Runs a query and returns one page of concordance lines.
pub fn run_query(
    index: &CorpusIndex,
    query: &PatternQuery,
    offset: usize,
    limit: usize,
) -> Result<ResultPage, ArgumentError> {
    run_query_with(index, query, offset, limit, QueryOptions::default())
}

pub fn run_query_with(
    index: &CorpusIndex,
    query: &PatternQuery,
    offset: usize,
    limit: usize,
    options: QueryOptions,
) -> Result<ResultPage, ArgumentError> {
    if limit == 0 {
        return Err(ArgumentError("limit must be at least 1".into()));
    }
    let occurrences = find_occurrences(index, query, options.mode);
    if offset > occurrences.len() {
        return Err(ArgumentError(format!(
            "offset {offset} is past the end of the {} results",
            occurrences.len()
        )));
    }
    let lines = occurrences
        .iter()
        .enumerate()
        .skip(offset)
        .take(limit)
        .map(|(i, o)| {
            render_line(
                index.corpus(),
                o.text_ordinal,
                o.sentence_index,
                o.as_match(),
                i + 1,
                options.context_cap,
            )
        })
        .collect();
    Ok(ResultPage {
        lines,
        total_matches: occurrences.len(),
        offset,
        limit,
    })
}

/// Plain-text export with aligned columns: number, text id, right-aligned
/// left context, keyword, right context.
pub fn render_text_table(lines: &[ConcordanceLine]) -> String {
    let width = |s: &str| s.chars().count();
    let header = ["No", "Texte", "Left context", "Keyword", "Right context"];
    let w_no = lines.iter().map(|l| width(&l.row_number.to_string())).chain([2]).max().unwrap();
    let w_id = lines.iter().map(|l| width(&l.text_id)).chain([width(header[1])]).max().unwrap();
    let w_left = lines.iter().map(|l| width(&l.left_context)).chain([width(header[2])]).max().unwrap();
    let w_kw = lines.iter().map(|l| width(&l.keyword)).chain([width(header[3])]).max().unwrap();
    let row = |no: &str, id: &str, left: &str, kw: &str, right: &str| {
        format!("{no:>w_no$} | {id:<w_id$} | {left:>w_left$} | {kw:<w_kw$} | {right}")
            .trim_end()
            .to_string()
    };
    let mut out = row(header[0], header[1], header[2], header[3], header[4]);
    out.push('\n');
    for l in lines {
        out.push_str(&row(&l.row_number.to_string(), &l.text_id, &l.left_context, &l.keyword, &l.right_context));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::corpus::parse_corpus;
    use crate::index::build_index;
    use crate::pattern::parse_query;

    fn index() -> CorpusIndex {
        build_index(Arc::new(
            parse_corpus(
                r#"<corpus name="c">
                <text id="10" l1="dutch" level="B2"><s>
                  <tok surface="Le" lemma="le" pos="det"/><tok surface="chat" lemma="chat" pos="nom"/>
                </s><s><tok surface="Chat" lemma="chat" pos="nom"/><tok surface="noir" lemma="noir" pos="adj"/></s></text>
                <text id="9" l1="english" level="B1"><s>
                  <tok surface="un" lemma="un" pos="det"/><tok surface="chat" lemma="chat" pos="nom"/>
                </s></text>
                </corpus>"#
                    .as_bytes(),
            )
            .unwrap(),
        ))
    }

    #[test]
    fn numeric_aware_id_order() {
        assert_eq!(compare_text_ids("9", "10"), Ordering::Less);
        assert_eq!(compare_text_ids("2230", "2230"), Ordering::Equal);
        assert_eq!(compare_text_ids("010", "9"), Ordering::Greater);
        assert_eq!(compare_text_ids("a9", "a10"), Ordering::Greater);
        assert_eq!(compare_text_ids("9", "a"), Ordering::Less);
    }

    #[test]
    fn lines_ordered_by_text_id_then_position() {
        let q = parse_query(r#"![lemma="chat"]"#).unwrap();
        let page = run_query(&index(), &q, 0, 50).unwrap();
        let got: Vec<_> = page
            .lines
            .iter()
            .map(|l| (l.row_number, l.text_id.as_str(), l.sentence_index, l.left_context.as_str(), l.keyword.as_str()))
            .collect();
        assert_eq!(
            got,
            vec![(1, "9", 0, "un", "chat"), (2, "10", 0, "Le", "chat"), (3, "10", 1, "", "Chat")]
        );
        assert_eq!(page.lines[2].right_context, "noir");
        assert_eq!(page.total_matches, 3);
    }

    #[test]
    fn doc_filters_restrict_texts() {
        let q = parse_query(r#"@l1="dutch" ![lemma="chat"]"#).unwrap();
        let page = run_query(&index(), &q, 0, 50).unwrap();
        assert!(page.lines.iter().all(|l| l.text_id == "10"));
        assert_eq!(page.total_matches, 2);
    }

    #[test]
    fn argument_checks() {
        let q = parse_query(r#"![lemma="chat"]"#).unwrap();
        assert!(run_query(&index(), &q, 0, 0).is_err());
        assert!(run_query(&index(), &q, 4, 10).is_err());
        let page = run_query(&index(), &q, 3, 10).unwrap();
        assert!(page.lines.is_empty());
        assert_eq!(page.total_matches, 3);
    }

    #[test]
    fn context_cap() {
        let q = parse_query(r#"![pos="nom"] [pos="adj"]"#).unwrap();
        let opts = QueryOptions {
            context_cap: Some(0),
            ..Default::default()
        };
        let page = run_query_with(&index(), &q, 0, 10, opts).unwrap();
        assert_eq!(page.lines.len(), 1);
        assert_eq!((page.lines[0].left_context.as_str(), page.lines[0].right_context.as_str()), ("", ""));
        assert_eq!((page.lines[0].match_start, page.lines[0].match_end), (0, 1));
    }

    #[test]
    fn text_table_alignment() {
        let q = parse_query(r#"![lemma="chat"]"#).unwrap();
        let page = run_query(&index(), &q, 0, 50).unwrap();
        let table = render_text_table(&page.lines);
        let rows: Vec<&str> = table.lines().collect();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0], "No | Texte | Left context | Keyword | Right context");
        assert_eq!(rows[1], " 1 | 9     |           un | chat    |");
        assert_eq!(rows[3], " 3 | 10    |              | Chat    | noir");
    }
}
