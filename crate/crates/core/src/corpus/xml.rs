use std::collections::BTreeSet;
use std::fmt::Write as _;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{
    validate_corpus, Corpus, ErrorSpan, LearnerText, MorphoToken, Sentence, Severity,
    TRAIT_SEPARATOR,
};
use crate::error::CorpusError;

/// Parses and validates a corpus document.
///
/// Fails on malformed XML (with the line number), on schema violations and
/// on the first error-severity finding of [`validate_corpus`].
pub fn parse_corpus(xml: &[u8]) -> Result<Corpus, CorpusError> {
    let corpus = parse_corpus_unchecked(xml)?;
    if let Some(finding) = validate_corpus(&corpus)
        .into_iter()
        .find(|f| f.severity == Severity::Error)
    {
        return Err(CorpusError::Validation {
            text_id: finding.text_id,
            sentence: finding.sentence_index,
            message: finding.message,
        });
    }
    Ok(corpus)
}

/// Parses the document structure without checking value-level invariants
/// (empty lemmas, duplicate ids, overlapping spans). Structural problems such
/// as missing attributes or unknown elements are still errors.
pub fn parse_corpus_unchecked(xml: &[u8]) -> Result<Corpus, CorpusError> {
    Parser::new(xml).run()
}

struct OpenSpan {
    index: usize,
    tokens: u32,
}

struct Parser<'a> {
    input: &'a [u8],
    reader: Reader<&'a [u8]>,
    name: Option<String>,
    texts: Vec<LearnerText>,
    text: Option<LearnerText>,
    sentence: Option<Sentence>,
    open_spans: Vec<OpenSpan>,
    open_tok: bool,
    done: bool,
}

impl<'a> Parser<'a> {
    fn new(input: &'a [u8]) -> Self {
        let mut reader = Reader::from_reader(input);
        reader.config_mut().trim_text(true);
        Parser {
            input,
            reader,
            name: None,
            texts: Vec::new(),
            text: None,
            sentence: None,
            open_spans: Vec::new(),
            open_tok: false,
            done: false,
        }
    }

    fn line_at(&self, pos: u64) -> usize {
        let end = (pos as usize).min(self.input.len());
        1 + self.input[..end].iter().filter(|&&b| b == b'\n').count()
    }

    fn line(&self) -> usize {
        self.line_at(self.reader.buffer_position())
    }

    fn syntax(&self, message: impl Into<String>) -> CorpusError {
        CorpusError::Syntax {
            line: self.line(),
            message: message.into(),
        }
    }

    fn schema(&self, message: impl Into<String>) -> CorpusError {
        CorpusError::Schema {
            line: self.line(),
            text_id: self.text.as_ref().map(|t| t.id.clone()),
            sentence: self
                .sentence
                .as_ref()
                .and(self.text.as_ref())
                .map(|t| t.sentences.len() as u32),
            message: message.into(),
        }
    }

    fn run(mut self) -> Result<Corpus, CorpusError> {
        let mut buf = Vec::new();
        loop {
            let event = match self.reader.read_event_into(&mut buf) {
                Ok(ev) => ev.into_owned(),
                Err(e) => {
                    return Err(CorpusError::Syntax {
                        line: self.line_at(self.reader.error_position()),
                        message: e.to_string(),
                    })
                }
            };
            match event {
                Event::Start(e) => self.open(&e, false)?,
                Event::Empty(e) => {
                    self.open(&e, true)?;
                }
                Event::End(e) => {
                    let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                    self.close(&name)?;
                }
                Event::Text(t) => {
                    let raw = String::from_utf8_lossy(&t).into_owned();
                    if !raw.trim().is_empty() {
                        return Err(self.schema(format!("unexpected character data {:?}", raw.trim())));
                    }
                }
                Event::CData(_) => return Err(self.schema("unexpected CDATA section")),
                Event::Decl(_) | Event::Comment(_) | Event::PI(_) | Event::DocType(_) => {}
                Event::Eof => break,
            }
            buf.clear();
        }
        if !self.done {
            return Err(self.syntax("unexpected end of document: <corpus> is not closed"));
        }
        let name = self.name.unwrap_or_default();
        Ok(Corpus::new(name, self.texts))
    }

    fn attributes(&self, e: &BytesStart<'_>) -> Result<Vec<(String, String)>, CorpusError> {
        let mut out = Vec::new();
        for attr in e.attributes() {
            let attr = attr.map_err(|err| self.syntax(err.to_string()))?;
            let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
            let value = attr
                .unescape_value()
                .map_err(|err| self.syntax(err.to_string()))?
                .into_owned();
            out.push((key, value));
        }
        Ok(out)
    }

    fn open(&mut self, e: &BytesStart<'_>, empty: bool) -> Result<(), CorpusError> {
        let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
        let attrs = self.attributes(e)?;
        let get = |key: &str| attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());

        match name.as_str() {
            "corpus" => {
                if self.name.is_some() {
                    return Err(self.schema("nested or repeated <corpus> element"));
                }
                self.name = Some(get("name").ok_or_else(|| self.schema("<corpus> lacks attribute name"))?);
                if empty {
                    self.done = true;
                }
            }
            "text" => {
                if self.name.is_none() || self.done || self.text.is_some() {
                    return Err(self.schema("<text> must be a direct child of <corpus>"));
                }
                let id = get("id").ok_or_else(|| self.schema("<text> lacks attribute id"))?;
                let mut text = LearnerText {
                    id,
                    mothertongue: String::new(),
                    level: String::new(),
                    sentences: Vec::new(),
                };
                self.text = Some(text.clone());
                text.mothertongue = get("l1").ok_or_else(|| self.schema("<text> lacks attribute l1"))?;
                text.level = get("level").ok_or_else(|| self.schema("<text> lacks attribute level"))?;
                if empty {
                    self.texts.push(text);
                    self.text = None;
                } else {
                    self.text = Some(text);
                }
            }
            "s" => {
                if self.text.is_none() || self.sentence.is_some() {
                    return Err(self.schema("<s> must be a direct child of <text>"));
                }
                if empty {
                    let sentence = Sentence::default();
                    self.text.as_mut().unwrap().sentences.push(sentence);
                } else {
                    self.sentence = Some(Sentence::default());
                }
            }
            "err" => {
                if self.sentence.is_none() || self.open_tok {
                    return Err(self.schema("<err> must appear inside <s>"));
                }
                if empty {
                    return Err(self.schema("<err> must wrap at least one <tok>"));
                }
                let category = get("cat").ok_or_else(|| self.schema("<err> lacks attribute cat"))?;
                let corrected_form = get("corr").unwrap_or_default();
                let sentence = self.sentence.as_mut().unwrap();
                let first = sentence.tokens.len() as u32;
                sentence.errors.push(ErrorSpan {
                    category,
                    first_token: first,
                    last_token: first,
                    corrected_form,
                });
                let index = sentence.errors.len() - 1;
                self.open_spans.push(OpenSpan { index, tokens: 0 });
            }
            "tok" => {
                if self.sentence.is_none() || self.open_tok {
                    return Err(self.schema("<tok> must appear inside <s>"));
                }
                let surface = get("surface").ok_or_else(|| self.schema("<tok> lacks attribute surface"))?;
                let lemma = get("lemma").ok_or_else(|| self.schema("<tok> lacks attribute lemma"))?;
                let pos = get("pos").ok_or_else(|| self.schema("<tok> lacks attribute pos"))?;
                let traits: BTreeSet<String> = get("traits")
                    .unwrap_or_default()
                    .split(TRAIT_SEPARATOR)
                    .map(str::trim)
                    .filter(|t| !t.is_empty())
                    .map(String::from)
                    .collect();
                let sentence_index = self.text.as_ref().unwrap().sentences.len() as u32;
                let sentence = self.sentence.as_mut().unwrap();
                let token_index = sentence.tokens.len() as u32;
                sentence.tokens.push(MorphoToken {
                    surface,
                    lemma,
                    pos,
                    traits,
                    sentence_index,
                    token_index,
                });
                for open in &mut self.open_spans {
                    open.tokens += 1;
                    sentence.errors[open.index].last_token = token_index;
                }
                self.open_tok = !empty;
            }
            other => return Err(self.schema(format!("unknown element <{other}>"))),
        }
        Ok(())
    }

    fn close(&mut self, name: &str) -> Result<(), CorpusError> {
        match name {
            "tok" => self.open_tok = false,
            "err" => {
                let open = self
                    .open_spans
                    .pop()
                    .ok_or_else(|| self.syntax("unbalanced </err>"))?;
                if open.tokens == 0 {
                    return Err(self.schema("<err> must wrap at least one <tok>"));
                }
            }
            "s" => {
                let sentence = self.sentence.take().ok_or_else(|| self.syntax("unbalanced </s>"))?;
                self.text.as_mut().unwrap().sentences.push(sentence);
            }
            "text" => {
                let text = self.text.take().ok_or_else(|| self.syntax("unbalanced </text>"))?;
                self.texts.push(text);
            }
            "corpus" => self.done = true,
            other => return Err(self.syntax(format!("unexpected </{other}>"))),
        }
        Ok(())
    }
}

/// Writes a corpus in the ingestion format. Re-parsing the output of a parsed
/// corpus yields an equal value.
pub fn serialize_corpus(corpus: &Corpus) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(out, "<corpus name=\"{}\">", escape(corpus.name.as_str()));
    for text in &corpus.texts {
        let _ = writeln!(
            out,
            "  <text id=\"{}\" l1=\"{}\" level=\"{}\">",
            escape(text.id.as_str()),
            escape(text.mothertongue.as_str()),
            escape(text.level.as_str())
        );
        for sentence in &text.sentences {
            write_sentence(&mut out, sentence);
        }
        out.push_str("  </text>\n");
    }
    out.push_str("</corpus>\n");
    out
}

fn write_sentence(out: &mut String, sentence: &Sentence) {
    out.push_str("    <s>\n");
    let mut order: Vec<usize> = (0..sentence.errors.len()).collect();
    order.sort_by_key(|&i| {
        let s = &sentence.errors[i];
        (s.first_token, std::cmp::Reverse(s.last_token))
    });
    let mut pending = order.into_iter().peekable();
    let mut stack: Vec<usize> = Vec::new();
    for (i, tok) in sentence.tokens.iter().enumerate() {
        let i = i as u32;
        while let Some(&top) = stack.last() {
            if sentence.errors[top].last_token < i {
                stack.pop();
                indent(out, 6 + 2 * stack.len());
                out.push_str("</err>\n");
            } else {
                break;
            }
        }
        while let Some(&next) = pending.peek() {
            let span = &sentence.errors[next];
            if span.first_token != i {
                break;
            }
            indent(out, 6 + 2 * stack.len());
            let _ = write!(out, "<err cat=\"{}\"", escape(span.category.as_str()));
            if !span.corrected_form.is_empty() {
                let _ = write!(out, " corr=\"{}\"", escape(span.corrected_form.as_str()));
            }
            out.push_str(">\n");
            stack.push(next);
            pending.next();
        }
        indent(out, 6 + 2 * stack.len());
        let _ = write!(
            out,
            "<tok surface=\"{}\" lemma=\"{}\" pos=\"{}\"",
            escape(tok.surface.as_str()),
            escape(tok.lemma.as_str()),
            escape(tok.pos.as_str())
        );
        if !tok.traits.is_empty() {
            let joined = tok.traits.iter().map(String::as_str).collect::<Vec<_>>().join(";");
            let _ = write!(out, " traits=\"{}\"", escape(joined.as_str()));
        }
        out.push_str("/>\n");
    }
    while stack.pop().is_some() {
        indent(out, 6 + 2 * stack.len());
        out.push_str("</err>\n");
    }
    out.push_str("    </s>\n");
}

fn indent(out: &mut String, n: usize) {
    out.extend(std::iter::repeat_n(' ', n));
}
