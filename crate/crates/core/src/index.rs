//! Positional inverted indexes over a corpus.
//!
//! Every indexed key kind maps a normalized value to the sorted list of token
//! positions carrying it. Texts are additionally grouped by mother tongue and
//! level as bitsets. The index is a candidate pre-filter for pattern queries;
//! match semantics always come from the automaton.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::corpus::{fold, Corpus};
use crate::error::SnapshotError;
use crate::pattern::{ConstraintKey, DocFilters};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"LXIX";
pub const SNAPSHOT_VERSION: u32 = 1;

/// A token position. Ordering is (text ordinal, sentence, token).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Posting {
    pub text_ordinal: u32,
    pub sentence_index: u32,
    pub token_index: u32,
}

impl Posting {
    pub fn new(text_ordinal: u32, sentence_index: u32, token_index: u32) -> Self {
        Posting {
            text_ordinal,
            sentence_index,
            token_index,
        }
    }

    pub fn sentence(self) -> (u32, u32) {
        (self.text_ordinal, self.sentence_index)
    }
}

type PostingMap = BTreeMap<String, Vec<Posting>>;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Tables {
    /// One map per [`ConstraintKey`], in `ConstraintKey::ALL` order.
    postings: Vec<PostingMap>,
    by_l1: BTreeMap<String, FixedBitSet>,
    by_level: BTreeMap<String, FixedBitSet>,
}

#[derive(Clone, Debug)]
pub struct CorpusIndex {
    corpus: Arc<Corpus>,
    tables: Tables,
}

fn key_slot(key: ConstraintKey) -> usize {
    ConstraintKey::ALL.iter().position(|&k| k == key).unwrap()
}

/// Normalizes a lookup value the way the index stores it.
pub fn normalize_value(key: ConstraintKey, value: &str) -> String {
    if key.case_sensitive() {
        value.to_string()
    } else {
        fold(value)
    }
}

/// Builds every posting list in one pass over the corpus.
pub fn build_index(corpus: Arc<Corpus>) -> CorpusIndex {
    let mut maps: Vec<HashMap<String, Vec<Posting>>> = vec![HashMap::new(); ConstraintKey::ALL.len()];
    let n_texts = corpus.texts.len();
    let mut by_l1: BTreeMap<String, FixedBitSet> = BTreeMap::new();
    let mut by_level: BTreeMap<String, FixedBitSet> = BTreeMap::new();

    let mut add = |key: ConstraintKey, value: String, p: Posting| {
        let list = maps[key_slot(key)].entry(value).or_default();
        // Positions arrive in order; a token may produce the same key twice
        // (two spans sharing a category prefix).
        if list.last() != Some(&p) {
            list.push(p);
        }
    };

    for (ti, text) in corpus.texts.iter().enumerate() {
        by_l1
            .entry(text.mothertongue.clone())
            .or_insert_with(|| FixedBitSet::with_capacity(n_texts))
            .insert(ti);
        by_level
            .entry(text.level.clone())
            .or_insert_with(|| FixedBitSet::with_capacity(n_texts))
            .insert(ti);
        for (si, sentence) in text.sentences.iter().enumerate() {
            let cover = sentence.coverage();
            for (ki, tok) in sentence.tokens.iter().enumerate() {
                let p = Posting::new(ti as u32, si as u32, ki as u32);
                add(ConstraintKey::Surface, tok.surface.clone(), p);
                add(ConstraintKey::Lemma, fold(&tok.lemma), p);
                add(ConstraintKey::Pos, fold(&tok.pos), p);
                for t in &tok.traits {
                    add(ConstraintKey::Trait, fold(t), p);
                }
                let spans = &cover[ki];
                let status = if spans.is_empty() { "no" } else { "yes" };
                add(ConstraintKey::Error, status.to_string(), p);
                let mut prefixes: Vec<String> = Vec::new();
                let mut corrections: Vec<&str> = Vec::new();
                for &span_i in spans {
                    let span = &sentence.errors[span_i];
                    prefixes.extend(span.category_prefixes().into_iter().map(fold));
                    if !span.corrected_form.is_empty() {
                        corrections.push(&span.corrected_form);
                    }
                }
                prefixes.sort();
                prefixes.dedup();
                corrections.sort();
                corrections.dedup();
                for prefix in prefixes {
                    add(ConstraintKey::Cat, prefix, p);
                }
                for corr in corrections {
                    add(ConstraintKey::Corr, corr.to_string(), p);
                }
            }
        }
    }

    let postings = maps.into_iter().map(|m| m.into_iter().collect()).collect();
    CorpusIndex {
        corpus,
        tables: Tables {
            postings,
            by_l1,
            by_level,
        },
    }
}

impl CorpusIndex {
    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn corpus_arc(&self) -> &Arc<Corpus> {
        &self.corpus
    }

    /// Sorted positions carrying `value` under `key`. Unknown values give an
    /// empty slice.
    pub fn lookup(&self, key: ConstraintKey, value: &str) -> &[Posting] {
        let map = &self.tables.postings[key_slot(key)];
        if key.case_sensitive() {
            map.get(value)
        } else {
            map.get(&fold(value))
        }
        .map_or(&[], Vec::as_slice)
    }

    /// Distinct indexed values for a key kind, normalized.
    pub fn values(&self, key: ConstraintKey) -> impl Iterator<Item = &str> {
        self.tables.postings[key_slot(key)].keys().map(String::as_str)
    }

    /// Texts admitted by the document filters, as a bitset over text ordinals.
    pub fn documents(&self, filters: &DocFilters) -> FixedBitSet {
        let n = self.corpus.texts.len();
        let union = |values: &std::collections::BTreeSet<String>, table: &BTreeMap<String, FixedBitSet>| {
            let mut set = FixedBitSet::with_capacity(n);
            if values.is_empty() {
                set.insert_range(..);
            } else {
                for v in values {
                    if let Some(bits) = table.get(v) {
                        set.union_with(bits);
                    }
                }
            }
            set
        };
        let mut docs = union(&filters.l1, &self.tables.by_l1);
        docs.intersect_with(&union(&filters.level, &self.tables.by_level));
        docs
    }

    /// Writes a versioned snapshot holding the corpus and all tables.
    pub fn write_snapshot<W: Write>(&self, mut out: W) -> Result<(), SnapshotError> {
        let payload = bincode::serde::encode_to_vec((&*self.corpus, &self.tables), bincode::config::standard())
            .map_err(|e| SnapshotError::Encode(e.to_string()))?;
        out.write_all(SNAPSHOT_MAGIC)?;
        out.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        out.write_all(&payload)?;
        out.flush()?;
        Ok(())
    }

    pub fn snapshot_bytes(&self) -> Result<Vec<u8>, SnapshotError> {
        let mut buf = Vec::new();
        self.write_snapshot(&mut buf)?;
        Ok(buf)
    }

    pub fn read_snapshot<R: Read>(mut input: R) -> Result<CorpusIndex, SnapshotError> {
        let mut header = [0u8; 8];
        input.read_exact(&mut header).map_err(|_| SnapshotError::BadMagic)?;
        if &header[..4] != SNAPSHOT_MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        let version = u32::from_le_bytes(header[4..].try_into().unwrap());
        if version != SNAPSHOT_VERSION {
            return Err(SnapshotError::Version {
                found: version,
                expected: SNAPSHOT_VERSION,
            });
        }
        let mut payload = Vec::new();
        input.read_to_end(&mut payload)?;
        let ((corpus, tables), used): ((Corpus, Tables), usize) =
            bincode::serde::decode_from_slice(&payload, bincode::config::standard())
                .map_err(|e| SnapshotError::Decode(e.to_string()))?;
        if used != payload.len() || tables.postings.len() != ConstraintKey::ALL.len() {
            return Err(SnapshotError::Decode("trailing or missing data".into()));
        }
        Ok(CorpusIndex {
            corpus: Arc::new(corpus),
            tables,
        })
    }
}

/// True when `bytes` starts with the snapshot magic.
pub fn is_snapshot(bytes: &[u8]) -> bool {
    bytes.starts_with(SNAPSHOT_MAGIC)
}
