//! Request and response bodies, and the in-process calls behind them. The
//! CLI uses the same functions so its JSON output matches the API.

use learncorp_core::concordance::run_query;
use learncorp_core::corpus::Catalog;
use learncorp_core::exercise::{generate_items, AnswerMode, DistractorPolicy, ExerciseParams, ExerciseSet};
use learncorp_core::index::CorpusIndex;
use learncorp_core::pattern::{parse_query, DocFilters, PatternQuery, Slot};
use learncorp_core::session::{PresentedItem, SessionConfig, SessionReport};
use learncorp_core::stats::{build_profile, frequent_errors, RankedError};
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

pub const DEFAULT_LIMIT: usize = 50;
pub const MAX_LIMIT: usize = 1000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CorpusSummary {
    pub id: String,
    pub name: String,
    pub text_count: usize,
    pub token_count: usize,
    pub span_count: usize,
    pub catalog: Catalog,
}

impl CorpusSummary {
    pub fn new(id: &str, index: &CorpusIndex) -> Self {
        let corpus = index.corpus();
        CorpusSummary {
            id: id.to_string(),
            name: corpus.name.clone(),
            text_count: corpus.texts.len(),
            token_count: corpus.token_count(),
            span_count: corpus.span_count(),
            catalog: corpus.catalog.clone(),
        }
    }
}

/// A query as either DSL text or the structured form.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuerySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dsl: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_filters: Option<DocFilters>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<Vec<Slot>>,
}

impl QuerySpec {
    pub fn from_dsl(dsl: impl Into<String>) -> Self {
        QuerySpec {
            dsl: Some(dsl.into()),
            ..Default::default()
        }
    }

    /// Parses or validates the query and returns its normalized form.
    pub fn resolve(&self) -> Result<PatternQuery, ApiError> {
        let query = match (&self.dsl, &self.slots) {
            (Some(_), Some(_)) => return Err(ApiError::bad_request("give either dsl or slots, not both")),
            (Some(dsl), None) => {
                if self.doc_filters.is_some() {
                    return Err(ApiError::bad_request("docFilters go inside the dsl text"));
                }
                parse_query(dsl)?
            }
            (None, Some(slots)) => {
                let query = PatternQuery {
                    doc_filters: self.doc_filters.clone().unwrap_or_default(),
                    slots: slots.clone(),
                };
                query.validate()?;
                query
            }
            (None, None) => return Err(ApiError::bad_request("a query needs dsl or slots")),
        };
        Ok(query.normalized())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QueryRequest {
    #[serde(flatten)]
    pub query: QuerySpec,
    #[serde(default)]
    pub offset: Option<usize>,
    #[serde(default)]
    pub limit: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LineBody {
    pub no: usize,
    pub text_id: String,
    pub left: String,
    pub keyword: String,
    pub right: String,
    pub sentence_index: u32,
    pub token_index: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QueryResponse {
    pub total: usize,
    pub offset: usize,
    pub limit: usize,
    pub lines: Vec<LineBody>,
    /// The normalized structured query that was run.
    pub query: PatternQuery,
}

pub fn run_query_request(index: &CorpusIndex, request: &QueryRequest) -> Result<QueryResponse, ApiError> {
    let query = request.query.resolve()?;
    let offset = request.offset.unwrap_or(0);
    let limit = request.limit.unwrap_or(DEFAULT_LIMIT).min(MAX_LIMIT);
    let page = run_query(index, &query, offset, limit)?;
    Ok(QueryResponse {
        total: page.total_matches,
        offset: page.offset,
        limit: page.limit,
        lines: page
            .lines
            .into_iter()
            .map(|l| LineBody {
                no: l.row_number,
                text_id: l.text_id,
                left: l.left_context,
                keyword: l.keyword,
                right: l.right_context,
                sentence_index: l.sentence_index,
                token_index: l.token_index,
            })
            .collect(),
        query,
    })
}

fn default_count() -> usize {
    10
}

fn default_k() -> usize {
    3
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExerciseRequest {
    #[serde(flatten)]
    pub query: QuerySpec,
    #[serde(default = "default_count")]
    pub count: usize,
    pub seed: u64,
    #[serde(default)]
    pub answer_mode: AnswerMode,
    #[serde(default)]
    pub distractor_policy: DistractorPolicy,
    #[serde(default = "default_k")]
    pub k: usize,
}

pub fn run_exercise_request(index: &CorpusIndex, request: &ExerciseRequest) -> Result<ExerciseSet, ApiError> {
    let query = request.query.resolve()?;
    let params = ExerciseParams {
        count: request.count,
        seed: request.seed,
        answer_mode: request.answer_mode,
        distractor_policy: request.distractor_policy,
        k: request.k,
    };
    Ok(generate_items(index, &query, &params)?)
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StatsParams {
    pub depth: Option<usize>,
    pub l1: Option<String>,
    pub level: Option<String>,
    pub min: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StatsResponse {
    pub depth: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l1: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<String>,
    pub min: u64,
    pub rows: Vec<RankedError>,
}

pub fn run_stats_request(index: &CorpusIndex, params: &StatsParams) -> Result<StatsResponse, ApiError> {
    let depth = params.depth.unwrap_or(1);
    let min = params.min.unwrap_or(1);
    if min == 0 {
        return Err(ApiError::bad_request("min must be at least 1"));
    }
    let profile = build_profile(index.corpus(), depth)?;
    Ok(StatsResponse {
        depth,
        rows: frequent_errors(&profile, params.l1.as_deref(), params.level.as_deref(), min),
        l1: params.l1.clone(),
        level: params.level.clone(),
        min,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionRequest {
    pub corpus_id: String,
    pub exercise_request: ExerciseRequest,
    #[serde(default)]
    pub config: SessionConfig,
}

/// An item as shown to a learner: the answer stays on the server.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ItemView {
    /// "main" or "remedial".
    pub kind: String,
    /// Main item index, or the failed item a remedial item belongs to.
    pub index: usize,
    pub stem: String,
    /// Answer and distractors in sorted order; empty when the item has no
    /// distractors and expects free text.
    pub options: Vec<String>,
}

impl From<&PresentedItem> for ItemView {
    fn from(p: &PresentedItem) -> Self {
        use learncorp_core::session::Presented;
        let (kind, index) = match p.presented {
            Presented::Main { index } => ("main", index),
            Presented::Remedial { index } => ("remedial", index),
        };
        let mut options = Vec::new();
        if !p.item.distractors.is_empty() {
            options.push(p.item.answer.clone());
            options.extend(p.item.distractors.iter().cloned());
            options.sort();
        }
        ItemView {
            kind: kind.to_string(),
            index,
            stem: p.item.stem.clone(),
            options,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionCreated {
    pub session_id: String,
    pub item_count: usize,
    pub first_item: ItemView,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRequest {
    pub answer: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnswerResponse {
    pub correct: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next_item: Option<ItemView>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<SessionReport>,
}
