//! Programmed-instruction drills over gap-fill items.
//!
//! Linear sessions present items in order and advance only on a correct
//! answer. Branched sessions send a failed item to its remedial item and then
//! back to the failed item, and let a streak of correct answers skip ahead.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::SessionError;
use crate::exercise::GapFillItem;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionMode {
    #[default]
    Linear,
    Branched,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct SessionConfig {
    pub mode: SessionMode,
    /// Consecutive correct answers that earn a short cut (branched only).
    pub shortcut_streak: u32,
    /// Items skipped by a short cut.
    pub skip_count: u32,
    /// Highest acceptable share of wrong responses.
    pub error_rate_threshold: f64,
    pub case_sensitive: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            mode: SessionMode::Linear,
            shortcut_streak: 3,
            skip_count: 1,
            error_rate_threshold: 0.10,
            case_sensitive: true,
        }
    }
}

impl SessionConfig {
    pub fn branched() -> Self {
        SessionConfig {
            mode: SessionMode::Branched,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        if self.shortcut_streak < 2 {
            return Err(SessionError::Config("shortcutStreak must be at least 2".into()));
        }
        if self.skip_count < 1 {
            return Err(SessionError::Config("skipCount must be at least 1".into()));
        }
        if !(self.error_rate_threshold > 0.0 && self.error_rate_threshold <= 1.0) {
            return Err(SessionError::Config("errorRateThreshold must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// What the learner is looking at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum Presented {
    Main { index: usize },
    /// The remedial detour for the main item `index`.
    Remedial { index: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogEntry {
    pub item: Presented,
    pub given_answer: String,
    pub correct: bool,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionState {
    pub config: SessionConfig,
    pub items: Vec<GapFillItem>,
    /// Remedial item per main item, aligned with `items`.
    pub remedials: Vec<Option<GapFillItem>>,
    pub cursor: usize,
    /// Set while a remedial item is shown; holds the failed main item.
    pub pending_remedial: Option<usize>,
    pub answered_log: Vec<LogEntry>,
    pub streak: u32,
    pub finished: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ItemHistory {
    pub index: usize,
    pub attempts: usize,
    pub errors: usize,
    pub remedial_attempts: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionReport {
    pub total_responses: usize,
    pub error_count: usize,
    pub error_rate: f64,
    pub threshold_exceeded: bool,
    pub per_item_history: Vec<ItemHistory>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PresentedItem {
    pub presented: Presented,
    pub item: GapFillItem,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Feedback {
    pub correct: bool,
    pub expected: String,
    /// The next item, unless the session just finished.
    pub next: Option<PresentedItem>,
    /// Final report, once the session finishes.
    pub report: Option<SessionReport>,
}

/// Opens a session on the first item. `remedials` may be empty (no remedial
/// detours) or aligned with `items`.
pub fn start_session(
    items: Vec<GapFillItem>,
    remedials: Vec<Option<GapFillItem>>,
    config: SessionConfig,
) -> Result<SessionState, SessionError> {
    if items.is_empty() {
        return Err(SessionError::NoItems);
    }
    config.validate()?;
    if !remedials.is_empty() && remedials.len() != items.len() {
        return Err(SessionError::Config(format!(
            "{} remedial entries for {} items",
            remedials.len(),
            items.len()
        )));
    }
    let remedials = if remedials.is_empty() {
        vec![None; items.len()]
    } else {
        remedials
    };
    Ok(SessionState {
        config,
        items,
        remedials,
        cursor: 0,
        pending_remedial: None,
        answered_log: Vec::new(),
        streak: 0,
        finished: false,
    })
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis() as u64)
}

impl SessionState {
    pub fn current(&self) -> Option<PresentedItem> {
        if self.finished {
            return None;
        }
        Some(match self.pending_remedial {
            Some(index) => PresentedItem {
                presented: Presented::Remedial { index },
                item: self.remedials[index].clone()?,
            },
            None => PresentedItem {
                presented: Presented::Main { index: self.cursor },
                item: self.items[self.cursor].clone(),
            },
        })
    }

    fn is_correct(&self, given: &str, expected: &str) -> bool {
        let given = given.trim();
        let expected = expected.trim();
        if self.config.case_sensitive {
            given == expected
        } else {
            given.to_lowercase() == expected.to_lowercase()
        }
    }

    pub fn submit_answer(&mut self, answer: &str) -> Result<Feedback, SessionError> {
        self.submit_answer_at(answer, now_millis())
    }

    /// Same as [`submit_answer`](Self::submit_answer) with an explicit
    /// timestamp for the log entry.
    pub fn submit_answer_at(&mut self, answer: &str, timestamp: u64) -> Result<Feedback, SessionError> {
        let shown = self.current().ok_or(SessionError::Finished)?;
        let correct = self.is_correct(answer, &shown.item.answer);
        self.answered_log.push(LogEntry {
            item: shown.presented,
            given_answer: answer.to_string(),
            correct,
            timestamp,
        });
        self.streak = if correct { self.streak + 1 } else { 0 };

        match (self.config.mode, shown.presented) {
            (_, Presented::Remedial { .. }) => {
                // Back to the failed item whatever the outcome.
                self.pending_remedial = None;
            }
            (SessionMode::Linear, Presented::Main { .. }) => {
                if correct {
                    self.cursor += 1;
                }
            }
            (SessionMode::Branched, Presented::Main { index }) => {
                if correct {
                    if self.streak >= self.config.shortcut_streak {
                        self.cursor += 1 + self.config.skip_count as usize;
                        self.streak = 0;
                    } else {
                        self.cursor += 1;
                    }
                } else if self.remedials[index].is_some() {
                    self.pending_remedial = Some(index);
                }
            }
        }
        if self.cursor >= self.items.len() {
            self.finished = true;
            self.pending_remedial = None;
        }

        Ok(Feedback {
            correct,
            expected: shown.item.answer,
            next: self.current(),
            report: self.finished.then(|| self.report()),
        })
    }

    pub fn report(&self) -> SessionReport {
        let total = self.answered_log.len();
        let errors = self.answered_log.iter().filter(|e| !e.correct).count();
        let error_rate = if total == 0 { 0.0 } else { errors as f64 / total as f64 };
        let mut history: Vec<ItemHistory> = (0..self.items.len())
            .map(|index| ItemHistory {
                index,
                attempts: 0,
                errors: 0,
                remedial_attempts: 0,
            })
            .collect();
        for entry in &self.answered_log {
            match entry.item {
                Presented::Main { index } => {
                    history[index].attempts += 1;
                    if !entry.correct {
                        history[index].errors += 1;
                    }
                }
                Presented::Remedial { index } => history[index].remedial_attempts += 1,
            }
        }
        SessionReport {
            total_responses: total,
            error_count: errors,
            error_rate,
            threshold_exceeded: error_rate > self.config.error_rate_threshold,
            per_item_history: history,
        }
    }
}
