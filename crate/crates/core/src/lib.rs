//! Query engine for error-annotated learner corpora.
//!
//! The crate ingests morphosyntactically tagged learner texts with error
//! annotations ([`corpus`]), indexes them ([`index`]), answers token-pattern
//! queries compiled to finite automata ([`pattern`]) as keyword-in-context
//! concordances ([`concordance`]), draws gap-fill exercises from the matches
//! ([`exercise`]), sequences them in linear or branched drills ([`session`])
//! and profiles error frequencies by mother tongue and level ([`stats`]).

pub mod corpus;
pub mod error;
pub mod pattern;
pub mod index;
pub mod concordance;
pub mod exercise;
pub mod session;
pub mod stats;
