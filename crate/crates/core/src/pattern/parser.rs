use super::{Constraint, ConstraintKey, ConstraintOp, DocFilters, PatternQuery, Quantifier, Slot};
use crate::error::QueryError;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    At,
    Bang,
    LBracket,
    RBracket,
    Amp,
    Eq,
    Neq,
    Question,
    Star,
    LBrace,
    RBrace,
    Comma,
    Ident(String),
    Str(String),
    Int(u32),
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::At => "'@'".into(),
            Tok::Bang => "'!'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Amp => "'&'".into(),
            Tok::Eq => "'='".into(),
            Tok::Neq => "'!='".into(),
            Tok::Question => "'?'".into(),
            Tok::Star => "'*'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::Comma => "','".into(),
            Tok::Ident(s) => format!("name {s:?}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Int(n) => format!("number {n}"),
        }
    }
}

/// (token, 1-based column)
fn lex(text: &str) -> Result<(Vec<(Tok, usize)>, usize), QueryError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let col = i + 1;
        let c = chars[i];
        let simple = match c {
            '@' => Some(Tok::At),
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '&' => Some(Tok::Amp),
            '=' => Some(Tok::Eq),
            '?' => Some(Tok::Question),
            '*' => Some(Tok::Star),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            out.push((tok, col));
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
        } else if c == '!' {
            if chars.get(i + 1) == Some(&'=') {
                out.push((Tok::Neq, col));
                i += 2;
            } else {
                out.push((Tok::Bang, col));
                i += 1;
            }
        } else if c == '"' {
            let mut value = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(QueryError::syntax(col, "unterminated string")),
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => match chars.get(i + 1) {
                        Some(&e @ ('"' | '\\')) => {
                            value.push(e);
                            i += 2;
                        }
                        _ => return Err(QueryError::syntax(i + 1, "invalid escape in string")),
                    },
                    Some(&ch) => {
                        value.push(ch);
                        i += 1;
                    }
                }
            }
            out.push((Tok::Str(value), col));
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let digits: String = chars[start..i].iter().collect();
            let n = digits
                .parse::<u32>()
                .map_err(|_| QueryError::syntax(col, format!("number {digits} is too large")))?;
            out.push((Tok::Int(n), col));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else {
            return Err(QueryError::syntax(col, format!("unexpected character {c:?}")));
        }
    }
    Ok((out, chars.len() + 1))
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end_col: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |(_, c)| *c)
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn unexpected(&self, expected: &str) -> QueryError {
        match self.peek() {
            Some(t) => QueryError::syntax(self.col(), format!("expected {expected}, found {}", t.describe())),
            None => QueryError::syntax(self.col(), format!("expected {expected}, found end of query")),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<usize, QueryError> {
        if self.peek() == Some(&tok) {
            Ok(self.next().unwrap().1)
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn string(&mut self) -> Result<(String, usize), QueryError> {
        match self.peek() {
            Some(Tok::Str(_)) => match self.next() {
                Some((Tok::Str(s), col)) => Ok((s, col)),
                _ => unreachable!(),
            },
            _ => Err(self.unexpected("a quoted string")),
        }
    }

    fn int(&mut self) -> Result<u32, QueryError> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.unexpected("a number")),
        }
    }

    fn query(&mut self) -> Result<PatternQuery, QueryError> {
        let mut filters = DocFilters::default();
        while self.peek() == Some(&Tok::At) {
            self.pos += 1;
            let col = self.col();
            let name = match self.next() {
                Some((Tok::Ident(name), _)) => name,
                _ => {
                    self.pos -= 1;
                    return Err(self.unexpected("'l1' or 'level'"));
                }
            };
            self.expect(Tok::Eq, "'='")?;
            let (value, vcol) = self.string()?;
            if value.is_empty() {
                return Err(QueryError::invalid(vcol, "empty filter value"));
            }
            match name.as_str() {
                "l1" => filters.l1.insert(value),
                "level" => filters.level.insert(value),
                other => return Err(QueryError::invalid(col, format!("unknown document filter {other:?}"))),
            };
        }

        let mut slots = Vec::new();
        let mut keyword_col = None;
        while self.peek().is_some() {
            let (slot, kw_col) = self.slot()?;
            if let Some(col) = kw_col {
                if keyword_col.is_some() {
                    return Err(QueryError::invalid(col, "a second keyword marker '!'"));
                }
                keyword_col = Some(col);
            }
            slots.push(slot);
        }
        if slots.is_empty() {
            return Err(self.unexpected("a slot '['"));
        }
        if keyword_col.is_none() {
            return Err(QueryError::invalid(self.end_col, "no slot is marked as keyword with '!'"));
        }
        Ok(PatternQuery {
            doc_filters: filters,
            slots,
        })
    }

    fn slot(&mut self) -> Result<(Slot, Option<usize>), QueryError> {
        let keyword_col = if self.peek() == Some(&Tok::Bang) {
            Some(self.next().unwrap().1)
        } else {
            None
        };
        if self.peek() == Some(&Tok::At) {
            return Err(QueryError::syntax(self.col(), "document filters must precede all slots"));
        }
        self.expect(Tok::LBracket, "'['")?;
        let mut constraints = vec![self.constraint()?];
        while self.peek() == Some(&Tok::Amp) {
            self.pos += 1;
            constraints.push(self.constraint()?);
        }
        self.expect(Tok::RBracket, "']' or '&'")?;

        let qcol = self.col();
        let quantifier = match self.peek() {
            Some(Tok::Question) => {
                self.pos += 1;
                Quantifier::Optional
            }
            Some(Tok::Star) => {
                self.pos += 1;
                Quantifier::Star
            }
            Some(Tok::LBrace) => {
                self.pos += 1;
                let min = self.int()?;
                self.expect(Tok::Comma, "','")?;
                let max = self.int()?;
                self.expect(Tok::RBrace, "'}'")?;
                if min > max {
                    return Err(QueryError::invalid(qcol, format!("range {{{min},{max}}} has min > max")));
                }
                Quantifier::Range { min, max }.normalized()
            }
            _ => Quantifier::ExactlyOne,
        };
        if keyword_col.is_some() && quantifier != Quantifier::ExactlyOne {
            return Err(QueryError::invalid(qcol, "the keyword slot cannot be quantified"));
        }
        Ok((
            Slot {
                constraints,
                quantifier,
                keyword: keyword_col.is_some(),
            },
            keyword_col,
        ))
    }

    fn constraint(&mut self) -> Result<Constraint, QueryError> {
        let kcol = self.col();
        let key = match self.next() {
            Some((Tok::Ident(name), _)) => ConstraintKey::from_name(&name)
                .ok_or_else(|| QueryError::invalid(kcol, format!("unknown key {name:?}")))?,
            _ => {
                self.pos -= 1;
                return Err(self.unexpected("a constraint key"));
            }
        };
        let op = match self.peek() {
            Some(Tok::Eq) => ConstraintOp::Eq,
            Some(Tok::Neq) => ConstraintOp::Neq,
            _ => return Err(self.unexpected("'=' or '!='")),
        };
        self.pos += 1;
        let (value, vcol) = self.string()?;
        let c = Constraint { key, op, value };
        c.check().map_err(|m| QueryError::invalid(vcol, m))?;
        Ok(c)
    }
}

/// Parses a DSL query. Errors carry the 1-based character column.
pub fn parse_query(text: &str) -> Result<PatternQuery, QueryError> {
    let (toks, end_col) = lex(text)?;
    let mut parser = Parser { toks, pos: 0, end_col };
    parser.query()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::QueryErrorKind;

    #[test]
    fn two_slot_agreement_query() {
        let q = parse_query(r#"[lemma="avoir"] ![pos="verbe" & trait="participe passé" & error="yes"]"#).unwrap();
        assert_eq!(q.slots.len(), 2);
        assert!(!q.slots[0].keyword);
        assert!(q.slots[1].keyword);
        assert_eq!(q.slots[1].constraints.len(), 3);
        assert_eq!(q.slots[1].constraints[1], Constraint::eq(ConstraintKey::Trait, "participe passé"));
        assert!(q.doc_filters.is_empty());
    }

    #[test]
    fn minimal_query() {
        let q = parse_query(r#"![error="yes"]"#).unwrap();
        assert_eq!(
            q,
            PatternQuery::new(vec![Slot::new(vec![Constraint::eq(ConstraintKey::Error, "yes")]).keyword()])
        );
    }

    #[test]
    fn range_then_keyword_equals_hand_built() {
        let q = parse_query(r#"[pos="det"]{0,2} ![pos="nom"]"#).unwrap();
        let expected = PatternQuery::new(vec![
            Slot::new(vec![Constraint::eq(ConstraintKey::Pos, "det")])
                .quantified(Quantifier::Range { min: 0, max: 2 }),
            Slot::new(vec![Constraint::eq(ConstraintKey::Pos, "nom")]).keyword(),
        ]);
        assert_eq!(q, expected);
    }

    #[test]
    fn filters_quantifiers_and_negation() {
        let q = parse_query(r#"@l1="dutch" @level="B2" @l1="english" [cat!="LEX"]? [surface="\"x"]* ![corr="connu"]"#)
            .unwrap();
        assert_eq!(q.doc_filters.l1.len(), 2);
        assert!(q.doc_filters.level.contains("B2"));
        assert_eq!(q.slots[0].quantifier, Quantifier::Optional);
        assert_eq!(q.slots[0].constraints[0].op, ConstraintOp::Neq);
        assert_eq!(q.slots[1].quantifier, Quantifier::Star);
        assert_eq!(q.slots[1].constraints[0].value, "\"x");
        assert_eq!(parse_query(&q.to_dsl()).unwrap(), q);
    }

    fn err(text: &str) -> QueryError {
        parse_query(text).unwrap_err()
    }

    #[test]
    fn unbalanced_brackets() {
        let e = err(r#"[lemma="avoir" ![pos="x"]"#);
        assert_eq!(e.kind, QueryErrorKind::Syntax);
        assert_eq!(e.column, 16);
        let e = err(r#"![pos="x""#);
        assert_eq!(e.kind, QueryErrorKind::Syntax);
        assert_eq!(e.column, 10);
        assert_eq!(err(r#"![pos="x"]]"#).kind, QueryErrorKind::Syntax);
    }

    #[test]
    fn unknown_key() {
        let e = err(r#"![colour="red"]"#);
        assert_eq!(e.kind, QueryErrorKind::Invalid);
        assert_eq!(e.column, 3);
    }

    #[test]
    fn two_keywords() {
        let e = err(r#"![pos="a"] ![pos="b"]"#);
        assert_eq!(e.kind, QueryErrorKind::Invalid);
        assert_eq!(e.column, 12);
    }

    #[test]
    fn quantified_keyword() {
        for q in [r#"![pos="a"]*"#, r#"![pos="a"]?"#, r#"![pos="a"]{0,3}"#] {
            let e = err(q);
            assert_eq!(e.kind, QueryErrorKind::Invalid, "{q}");
            assert_eq!(e.column, 11, "{q}");
        }
        assert!(parse_query(r#"![pos="a"]{1,1}"#).is_ok());
    }

    #[test]
    fn assorted_errors() {
        assert_eq!(err("").kind, QueryErrorKind::Syntax);
        assert_eq!(err(r#"[pos="a"]"#).kind, QueryErrorKind::Invalid);
        assert_eq!(err(r#"![error="maybe"]"#).kind, QueryErrorKind::Invalid);
        assert_eq!(err(r#"![lemma=""]"#).kind, QueryErrorKind::Invalid);
        assert_eq!(err(r#"![]"#).kind, QueryErrorKind::Syntax);
        assert_eq!(err(r#"[pos="a"]{2,1} ![pos="b"]"#).kind, QueryErrorKind::Invalid);
        assert_eq!(err(r#"![pos="a"] @l1="x""#).kind, QueryErrorKind::Syntax);
        assert_eq!(err(r#"@region="x" ![pos="a"]"#).kind, QueryErrorKind::Invalid);
        assert_eq!(err(r#"![pos=a]"#).kind, QueryErrorKind::Syntax);
        assert_eq!(err(r#"![pos="a"] #"#).column, 12);
    }

    #[test]
    fn columns_count_characters_not_bytes() {
        let e = err(r#"![trait="passé"] $"#);
        assert_eq!(e.column, 18);
    }
}
