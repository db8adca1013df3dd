//! Token-pattern queries.
//!
//! A [`PatternQuery`] is a sequence of [`Slot`]s, each a conjunction of
//! [`Constraint`]s on one token, optionally quantified, with exactly one slot
//! marked as the keyword. Queries are written in a small DSL:
//!
//! ```text
//! @l1="dutch" [lemma="avoir"] ![pos="verbe" & trait="participe passé" & error="yes"]
//! ```
//!
//! and compiled by [`compile`] into a [`TokenAutomaton`] that enumerates
//! every match inside a sentence.

mod automaton;
mod parser;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::QueryError;

pub use automaton::{compile, match_sentence, Edge, Match, TokenAutomaton};
pub use parser::parse_query;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKey {
    Surface,
    Lemma,
    Pos,
    Trait,
    /// Whether any error span covers the token (`yes` / `no`).
    Error,
    /// Segment prefix of the category of a covering span.
    Cat,
    /// Corrected form of a covering span.
    Corr,
}

impl ConstraintKey {
    pub const ALL: [ConstraintKey; 7] = [
        ConstraintKey::Surface,
        ConstraintKey::Lemma,
        ConstraintKey::Pos,
        ConstraintKey::Trait,
        ConstraintKey::Error,
        ConstraintKey::Cat,
        ConstraintKey::Corr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintKey::Surface => "surface",
            ConstraintKey::Lemma => "lemma",
            ConstraintKey::Pos => "pos",
            ConstraintKey::Trait => "trait",
            ConstraintKey::Error => "error",
            ConstraintKey::Cat => "cat",
            ConstraintKey::Corr => "corr",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == name)
    }

    /// Surface forms and corrections carry learner orthography and compare
    /// exactly; the remaining keys hold normalized vocabulary.
    pub fn case_sensitive(self) -> bool {
        matches!(self, ConstraintKey::Surface | ConstraintKey::Corr)
    }
}

impl fmt::Display for ConstraintKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintOp {
    Eq,
    Neq,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Constraint {
    pub key: ConstraintKey,
    pub op: ConstraintOp,
    pub value: String,
}

impl Constraint {
    pub fn eq(key: ConstraintKey, value: impl Into<String>) -> Self {
        Constraint {
            key,
            op: ConstraintOp::Eq,
            value: value.into(),
        }
    }

    pub fn neq(key: ConstraintKey, value: impl Into<String>) -> Self {
        Constraint {
            key,
            op: ConstraintOp::Neq,
            value: value.into(),
        }
    }

    fn check(&self) -> Result<(), String> {
        if self.value.is_empty() {
            return Err(format!("empty value for key {}", self.key));
        }
        if self.key == ConstraintKey::Error && self.value != "yes" && self.value != "no" {
            return Err(format!("error takes \"yes\" or \"no\", not {:?}", self.value));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Quantifier {
    #[default]
    ExactlyOne,
    Optional,
    Star,
    Range { min: u32, max: u32 },
}

impl Quantifier {
    pub fn min(self) -> u32 {
        match self {
            Quantifier::ExactlyOne => 1,
            Quantifier::Optional | Quantifier::Star => 0,
            Quantifier::Range { min, .. } => min,
        }
    }

    /// `None` for unbounded repetition.
    pub fn max(self) -> Option<u32> {
        match self {
            Quantifier::ExactlyOne | Quantifier::Optional => Some(1),
            Quantifier::Star => None,
            Quantifier::Range { max, .. } => Some(max),
        }
    }

    fn normalized(self) -> Self {
        match self {
            Quantifier::Range { min: 1, max: 1 } => Quantifier::ExactlyOne,
            q => q,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub quantifier: Quantifier,
    #[serde(default)]
    pub keyword: bool,
}

impl Slot {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        Slot {
            constraints,
            quantifier: Quantifier::ExactlyOne,
            keyword: false,
        }
    }

    pub fn keyword(mut self) -> Self {
        self.keyword = true;
        self
    }

    pub fn quantified(mut self, quantifier: Quantifier) -> Self {
        self.quantifier = quantifier;
        self
    }
}

/// Restriction of the searched texts by learner metadata. An empty set means
/// no restriction; several values for one key are alternatives.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DocFilters {
    #[serde(default)]
    pub l1: BTreeSet<String>,
    #[serde(default)]
    pub level: BTreeSet<String>,
}

impl DocFilters {
    pub fn is_empty(&self) -> bool {
        self.l1.is_empty() && self.level.is_empty()
    }

    pub fn accepts(&self, mothertongue: &str, level: &str) -> bool {
        (self.l1.is_empty() || self.l1.contains(mothertongue))
            && (self.level.is_empty() || self.level.contains(level))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PatternQuery {
    #[serde(default)]
    pub doc_filters: DocFilters,
    pub slots: Vec<Slot>,
}

impl PatternQuery {
    pub fn new(slots: Vec<Slot>) -> Self {
        PatternQuery {
            doc_filters: DocFilters::default(),
            slots,
        }
    }

    /// Checks the query rules. Structured queries have no source text, so
    /// errors carry column 0.
    pub fn validate(&self) -> Result<(), QueryError> {
        if self.slots.is_empty() {
            return Err(QueryError::invalid(0, "a query needs at least one slot"));
        }
        let keywords = self.slots.iter().filter(|s| s.keyword).count();
        if keywords != 1 {
            return Err(QueryError::invalid(
                0,
                format!("exactly one keyword slot is required, found {keywords}"),
            ));
        }
        for (i, slot) in self.slots.iter().enumerate() {
            if slot.constraints.is_empty() {
                return Err(QueryError::invalid(0, format!("slot {} has no constraints", i + 1)));
            }
            if let Quantifier::Range { min, max } = slot.quantifier {
                if min > max {
                    return Err(QueryError::invalid(0, format!("slot {}: range {{{min},{max}}} is empty", i + 1)));
                }
            }
            if slot.keyword && slot.quantifier.normalized() != Quantifier::ExactlyOne {
                return Err(QueryError::invalid(0, "the keyword slot cannot be quantified"));
            }
            for c in &slot.constraints {
                c.check().map_err(|m| QueryError::invalid(0, format!("slot {}: {m}", i + 1)))?;
            }
        }
        Ok(())
    }

    /// Canonical form: `{1,1}` written as a plain slot.
    pub fn normalized(mut self) -> Self {
        for slot in &mut self.slots {
            slot.quantifier = slot.quantifier.normalized();
        }
        self
    }

    pub fn keyword_index(&self) -> usize {
        self.slots.iter().position(|s| s.keyword).unwrap_or(0)
    }

    /// The query written in the DSL; parsing it back yields the same query.
    pub fn to_dsl(&self) -> String {
        self.to_string()
    }
}

fn write_string(f: &mut fmt::Formatter<'_>, value: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in value.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

impl fmt::Display for PatternQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut sep = |f: &mut fmt::Formatter<'_>| {
            if first {
                first = false;
                Ok(())
            } else {
                f.write_str(" ")
            }
        };
        for v in &self.doc_filters.l1 {
            sep(f)?;
            f.write_str("@l1=")?;
            write_string(f, v)?;
        }
        for v in &self.doc_filters.level {
            sep(f)?;
            f.write_str("@level=")?;
            write_string(f, v)?;
        }
        for slot in &self.slots {
            sep(f)?;
            if slot.keyword {
                f.write_str("!")?;
            }
            f.write_str("[")?;
            for (i, c) in slot.constraints.iter().enumerate() {
                if i > 0 {
                    f.write_str(" & ")?;
                }
                f.write_str(c.key.as_str())?;
                f.write_str(match c.op {
                    ConstraintOp::Eq => "=",
                    ConstraintOp::Neq => "!=",
                })?;
                write_string(f, &c.value)?;
            }
            f.write_str("]")?;
            match slot.quantifier {
                Quantifier::ExactlyOne => {}
                Quantifier::Optional => f.write_str("?")?,
                Quantifier::Star => f.write_str("*")?,
                Quantifier::Range { min, max } => write!(f, "{{{min},{max}}}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structured_json_shape() {
        let q = parse_query(r#"@l1="dutch" [lemma="avoir"]{0,2} ![error="yes"]"#).unwrap();
        let json = serde_json::to_value(&q).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "docFilters": {"l1": ["dutch"], "level": []},
                "slots": [
                    {"constraints": [{"key": "lemma", "op": "eq", "value": "avoir"}],
                     "quantifier": {"range": {"min": 0, "max": 2}}, "keyword": false},
                    {"constraints": [{"key": "error", "op": "eq", "value": "yes"}],
                     "quantifier": "exactlyOne", "keyword": true}
                ]
            })
        );
        let back: PatternQuery = serde_json::from_value(json).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn structured_defaults() {
        let q: PatternQuery = serde_json::from_str(
            r#"{"slots":[{"constraints":[{"key":"pos","op":"eq","value":"nom"}],"keyword":true}]}"#,
        )
        .unwrap();
        assert!(q.validate().is_ok());
        assert_eq!(q.to_dsl(), r#"![pos="nom"]"#);
    }

    #[test]
    fn validate_rejects_bad_structured_queries() {
        let kw = Slot::new(vec![Constraint::eq(ConstraintKey::Pos, "nom")]).keyword();
        assert!(PatternQuery::new(vec![]).validate().is_err());
        assert!(PatternQuery::new(vec![kw.clone(), kw.clone()]).validate().is_err());
        assert!(PatternQuery::new(vec![kw.clone().quantified(Quantifier::Star)]).validate().is_err());
        let bad = Slot::new(vec![Constraint::eq(ConstraintKey::Error, "maybe")]).keyword();
        assert!(PatternQuery::new(vec![bad]).validate().is_err());
        let range = Slot::new(vec![Constraint::eq(ConstraintKey::Pos, "det")])
            .quantified(Quantifier::Range { min: 3, max: 1 });
        assert!(PatternQuery::new(vec![range, kw.clone()]).validate().is_err());
        let one = kw.quantified(Quantifier::Range { min: 1, max: 1 });
        assert!(PatternQuery::new(vec![one]).validate().is_ok());
    }

    #[test]
    fn dsl_rendering_escapes_quotes() {
        let q = PatternQuery::new(vec![Slot::new(vec![Constraint::eq(ConstraintKey::Surface, "a\"b\\")]).keyword()]);
        assert_eq!(q.to_dsl(), r#"![surface="a\"b\\"]"#);
        assert_eq!(parse_query(&q.to_dsl()).unwrap(), q);
    }
}
