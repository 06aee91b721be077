use std::path::Path;

use rayon::prelude::*;

use super::{Document, MetadataRecord, SentenceEntity};
use crate::error::{Error, Result};

const DEFAULT_ABBREVIATIONS: &str = include_str!("../../data/abbreviations.txt");

/// Lowercase abbreviations (with their trailing period) that never close a
/// sentence, e.g. `mr.` or `e.g.`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abbreviations {
    // longest first so prefix scans pick `e.g.` before `e.`
    entries: Vec<String>,
}

impl Default for Abbreviations {
    fn default() -> Self {
        Self::parse(DEFAULT_ABBREVIATIONS)
    }
}

impl Abbreviations {
    /// One abbreviation per line; `#` starts a comment line.
    pub fn parse(text: &str) -> Self {
        let mut entries: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let mut l = l.to_lowercase();
                if !l.ends_with('.') {
                    l.push('.');
                }
                l
            })
            .collect();
        entries.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        entries.dedup();
        Abbreviations { entries }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&raw))
    }

    pub fn contains(&self, word: &str) -> bool {
        let lower = word.to_lowercase();
        self.entries.contains(&lower)
    }

    /// Length in bytes of the abbreviation that `text` starts with, if any.
    /// The abbreviation must not be followed by a letter or digit.
    pub fn match_prefix(&self, text: &str) -> Option<usize> {
        self.entries.iter().find_map(|abbr| {
            let head = text.get(..abbr.len())?;
            if !head.eq_ignore_ascii_case(abbr) && head.to_lowercase() != *abbr {
                return None;
            }
            match text[abbr.len()..].chars().next() {
                Some(c) if c.is_alphanumeric() => None,
                _ => Some(abbr.len()),
            }
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closing(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201d}' | '\u{2019}' | ')' | ']')
}

fn is_opening_quote(c: char) -> bool {
    matches!(c, '"' | '\'' | '\u{201c}' | '\u{2018}')
}

/// Rule-based sentence splitter.
///
/// A boundary is placed after a run of `.`, `!` or `?` (plus any closing
/// quotes or brackets) when it is followed by whitespace and then an
/// uppercase letter or an opening quote, unless the word carrying a lone
/// period is a known abbreviation. Whitespace between sentences is not part
/// of either sentence.
#[derive(Debug, Clone, Default)]
pub struct Segmenter {
    abbreviations: Abbreviations,
}

impl Segmenter {
    pub fn new(abbreviations: Abbreviations) -> Self {
        Segmenter { abbreviations }
    }

    pub fn abbreviations(&self) -> &Abbreviations {
        &self.abbreviations
    }

    /// Byte ranges of the sentences of `text`.
    pub fn spans(&self, text: &str) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        let mut start: Option<usize> = None;
        let mut pos = 0;
        while let Some(c) = text[pos..].chars().next() {
            if start.is_none() {
                if c.is_whitespace() {
                    pos += c.len_utf8();
                    continue;
                }
                start = Some(pos);
            }
            if !is_terminal(c) {
                pos += c.len_utf8();
                continue;
            }
            let mut end = pos;
            let mut run = 0;
            for t in text[pos..].chars() {
                if is_terminal(t) {
                    run += 1;
                } else if !is_closing(t) {
                    break;
                }
                end += t.len_utf8();
            }
            let rest = &text[end..];
            let trimmed = rest.trim_start();
            let gap = rest.len() - trimmed.len();
            let next = trimmed.chars().next();
            let boundary = gap > 0
                && next.is_some_and(|n| n.is_uppercase() || is_opening_quote(n))
                && !(c == '.' && run == 1 && self.ends_with_abbreviation(text, start.unwrap(), pos));
            if boundary {
                spans.push((start.take().unwrap(), end));
            }
            pos = end;
        }
        if let Some(s) = start {
            let end = text.trim_end().len();
            if end > s {
                spans.push((s, end));
            }
        }
        spans
    }

    /// Whether the word ending at the period at byte `dot` is an abbreviation.
    fn ends_with_abbreviation(&self, text: &str, sentence_start: usize, dot: usize) -> bool {
        let word_start = text[sentence_start..dot]
            .rfind(char::is_whitespace)
            .map(|i| {
                let ws = text[sentence_start + i..].chars().next().unwrap();
                sentence_start + i + ws.len_utf8()
            })
            .unwrap_or(sentence_start);
        let word = text[word_start..=dot].trim_start_matches(|c: char| !c.is_alphanumeric());
        !word.is_empty() && self.abbreviations.contains(word)
    }

    pub fn segment(&self, doc: &Document) -> Vec<SentenceEntity> {
        self.spans(&doc.text)
            .into_iter()
            .enumerate()
            .map(|(sent_id, (start, end))| SentenceEntity {
                doc_id: doc.doc_id.clone(),
                sent_id,
                char_start: start,
                char_end: end,
                text: doc.text[start..end].to_string(),
                metadata: MetadataRecord::default(),
            })
            .collect()
    }
}

/// Segments with the default abbreviation list.
pub fn segment(doc: &Document) -> Vec<SentenceEntity> {
    Segmenter::default().segment(doc)
}

/// Segments every document in parallel; output keeps corpus order.
pub fn segment_corpus(docs: &[Document], segmenter: &Segmenter) -> Vec<SentenceEntity> {
    docs.par_iter()
        .map(|d| segmenter.segment(d))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}
