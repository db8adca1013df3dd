use serde::Serialize;

use super::{Constraint, ConstraintKey, ConstraintOp, PatternQuery, Quantifier};
use crate::corpus::{eq_folded, fold, ErrorSpan, MorphoToken};

/// One match inside a sentence: an inclusive token window and the keyword
/// token it binds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Match {
    pub start: u32,
    pub end: u32,
    pub keyword: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    Epsilon { target: usize },
    /// Consumes one token satisfying every constraint of `slot`.
    Consume { slot: usize, keyword: bool, target: usize },
}

#[derive(Clone, Debug)]
struct CompiledConstraint {
    key: ConstraintKey,
    negated: bool,
    /// Folded to lowercase for case-insensitive keys.
    value: String,
}

impl CompiledConstraint {
    fn new(c: &Constraint) -> Self {
        CompiledConstraint {
            key: c.key,
            negated: c.op == ConstraintOp::Neq,
            value: if c.key.case_sensitive() { c.value.clone() } else { fold(&c.value) },
        }
    }

    fn holds(&self, tok: &MorphoToken, at: u32, spans: &[ErrorSpan]) -> bool {
        let v = self.value.as_str();
        let mut covering = spans.iter().filter(|s| s.covers(at));
        let positive = match self.key {
            ConstraintKey::Surface => tok.surface == v,
            ConstraintKey::Lemma => eq_folded(&tok.lemma, v),
            ConstraintKey::Pos => eq_folded(&tok.pos, v),
            ConstraintKey::Trait => tok.has_trait_folded(v),
            ConstraintKey::Error => covering.next().is_some() == (v == "yes"),
            ConstraintKey::Cat => covering.any(|s| s.category_has_prefix_folded(v)),
            ConstraintKey::Corr => covering.any(|s| s.corrected_form == v),
        };
        positive != self.negated
    }
}

/// Slot satisfaction per token, evaluated on first use. Most positions are
/// never reached by a live thread, so most cells are never computed.
struct SatCache<'a> {
    slots: &'a [Vec<CompiledConstraint>],
    tokens: &'a [MorphoToken],
    spans: &'a [ErrorSpan],
    /// 0 = unknown, 1 = false, 2 = true.
    cells: Vec<u8>,
}

impl<'a> SatCache<'a> {
    fn new(slots: &'a [Vec<CompiledConstraint>], tokens: &'a [MorphoToken], spans: &'a [ErrorSpan]) -> Self {
        SatCache {
            slots,
            tokens,
            spans,
            cells: vec![0; slots.len() * tokens.len()],
        }
    }

    fn get(&mut self, pos: usize, slot: usize) -> bool {
        let cell = &mut self.cells[pos * self.slots.len() + slot];
        if *cell == 0 {
            let tok = &self.tokens[pos];
            let ok = self.slots[slot].iter().all(|c| c.holds(tok, pos as u32, self.spans));
            *cell = if ok { 2 } else { 1 };
        }
        *cell == 2
    }
}

/// Nondeterministic automaton over token predicates. Every path from the
/// start state to the accepting state consumes exactly one keyword-marked
/// transition.
#[derive(Clone, Debug)]
pub struct TokenAutomaton {
    edges: Vec<Vec<Edge>>,
    start: usize,
    accept: usize,
    slots: Vec<Vec<CompiledConstraint>>,
    min_length: usize,
}

impl TokenAutomaton {
    pub fn state_count(&self) -> usize {
        self.edges.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn accepting(&self) -> usize {
        self.accept
    }

    pub fn edges(&self, state: usize) -> &[Edge] {
        &self.edges[state]
    }

    /// Fewest tokens consumed by any accepting path.
    pub fn min_length(&self) -> usize {
        self.min_length
    }

    fn new_state(&mut self) -> usize {
        self.edges.push(Vec::new());
        self.edges.len() - 1
    }

    fn epsilon(&mut self, from: usize, to: usize) {
        self.edges[from].push(Edge::Epsilon { target: to });
    }

    fn consume(&mut self, from: usize, slot: usize, keyword: bool, to: usize) {
        self.edges[from].push(Edge::Consume { slot, keyword, target: to });
    }

    fn closure(&self, seeds: &mut Vec<(usize, u32)>, seen: &mut [Vec<u32>]) {
        let mut i = 0;
        while i < seeds.len() {
            let (state, kw) = seeds[i];
            for edge in &self.edges[state] {
                if let Edge::Epsilon { target } = *edge {
                    if !seen[target].contains(&kw) {
                        seen[target].push(kw);
                        seeds.push((target, kw));
                    }
                }
            }
            i += 1;
        }
    }
}

const NO_KEYWORD: u32 = u32::MAX;

/// Thompson-style construction: a consuming edge per slot, an epsilon bypass
/// for optional slots, a self loop for starred slots, and `m` mandatory plus
/// `n - m` optional copies for a `{m,n}` range.
pub fn compile(query: &PatternQuery) -> TokenAutomaton {
    let mut a = TokenAutomaton {
        edges: Vec::new(),
        start: 0,
        accept: 0,
        slots: query
            .slots
            .iter()
            .map(|s| s.constraints.iter().map(CompiledConstraint::new).collect())
            .collect(),
        min_length: 0,
    };
    let mut current = a.new_state();
    for (si, slot) in query.slots.iter().enumerate() {
        match slot.quantifier {
            Quantifier::ExactlyOne => {
                let next = a.new_state();
                a.consume(current, si, slot.keyword, next);
                current = next;
            }
            Quantifier::Optional => {
                let next = a.new_state();
                a.consume(current, si, false, next);
                a.epsilon(current, next);
                current = next;
            }
            Quantifier::Star => {
                let lp = a.new_state();
                let next = a.new_state();
                a.epsilon(current, lp);
                a.consume(lp, si, false, lp);
                a.epsilon(lp, next);
                current = next;
            }
            Quantifier::Range { min, max } => {
                for _ in 0..min {
                    let next = a.new_state();
                    a.consume(current, si, slot.keyword, next);
                    current = next;
                }
                for _ in min..max {
                    let next = a.new_state();
                    a.consume(current, si, false, next);
                    a.epsilon(current, next);
                    current = next;
                }
            }
        }
        a.min_length += slot.quantifier.min() as usize;
    }
    a.accept = current;
    a
}

/// Enumerates every match in one sentence, ordered by start, then end
/// (shortest first), then keyword position.
pub fn match_sentence(automaton: &TokenAutomaton, tokens: &[MorphoToken], spans: &[ErrorSpan]) -> Vec<Match> {
    let n = tokens.len();
    if n < automaton.min_length.max(1) {
        return Vec::new();
    }
    let mut sat = SatCache::new(&automaton.slots, tokens, spans);

    let states = automaton.state_count();
    let mut out = Vec::new();
    let mut seen: Vec<Vec<u32>> = vec![Vec::new(); states];
    let mut threads: Vec<(usize, u32)> = Vec::new();
    let mut next: Vec<(usize, u32)> = Vec::new();
    for start in 0..n {
        for s in seen.iter_mut() {
            s.clear();
        }
        threads.clear();
        threads.push((automaton.start, NO_KEYWORD));
        seen[automaton.start].push(NO_KEYWORD);
        automaton.closure(&mut threads, &mut seen);

        let mut pos = start;
        while pos < n && !threads.is_empty() {
            next.clear();
            for s in seen.iter_mut() {
                s.clear();
            }
            for &(state, kw) in &threads {
                for edge in &automaton.edges[state] {
                    if let Edge::Consume { slot, keyword, target } = *edge {
                        if sat.get(pos, slot) {
                            let kw = if keyword { pos as u32 } else { kw };
                            if !seen[target].contains(&kw) {
                                seen[target].push(kw);
                                next.push((target, kw));
                            }
                        }
                    }
                }
            }
            automaton.closure(&mut next, &mut seen);
            std::mem::swap(&mut threads, &mut next);
            pos += 1;
            if threads.iter().any(|&(s, kw)| s == automaton.accept && kw != NO_KEYWORD) {
                let mut hits: Vec<u32> = threads
                    .iter()
                    .filter(|&&(s, kw)| s == automaton.accept && kw != NO_KEYWORD)
                    .map(|&(_, kw)| kw)
                    .collect();
                hits.sort_unstable();
                hits.dedup();
                out.extend(hits.into_iter().map(|keyword| Match {
                    start: start as u32,
                    end: (pos - 1) as u32,
                    keyword,
                }));
            }
        }
    }
    out
}
