use std::path::Path;

use regex::Regex;

use crate::corpus::{SentenceEntity, SkipReason};
use crate::error::{Error, Result};
use crate::repbias::Tokenizer;

use super::CdaMode;

/// Years 1000 to 2029.
pub const YEAR_PATTERN: &str = "1[0-9]{3}|20[0-2][0-9]";

#[derive(Debug, Clone)]
pub struct PrecheckLists {
    pub political_keywords: Vec<String>,
    pub historical_keywords: Vec<String>,
    pub year_pattern: Regex,
}

fn parse_keywords(raw: &str) -> Vec<String> {
    raw.lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

impl Default for PrecheckLists {
    fn default() -> Self {
        PrecheckLists {
            political_keywords: parse_keywords(include_str!("../../data/political_keywords.txt")),
            historical_keywords: parse_keywords(include_str!("../../data/historical_keywords.txt")),
            year_pattern: Regex::new(YEAR_PATTERN).expect("year pattern compiles"),
        }
    }
}

/// Reads a keyword file: one keyword per line, `#` starts a comment line.
pub fn load_keywords(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_keywords(&raw))
}

impl PrecheckLists {
    pub fn load(political: impl AsRef<Path>, historical: impl AsRef<Path>) -> Result<Self> {
        Ok(PrecheckLists {
            political_keywords: load_keywords(political)?,
            historical_keywords: load_keywords(historical)?,
            ..Default::default()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precheck {
    Pass,
    Skip(SkipReason),
}

fn contains_keyword(tokens: &[&str], keywords: &[String], tokenizer: &Tokenizer) -> bool {
    keywords.iter().any(|k| {
        let seq = tokenizer.tokenize(k);
        !seq.is_empty()
            && tokens
                .windows(seq.len())
                .any(|w| w.iter().zip(&seq).all(|(a, b)| a == b))
    })
}

/// Base mode passes relevant, kept sentences. Gc mode also skips sentences
/// with a political keyword, a historical keyword or a year, checked in
/// that order.
pub fn precheck(entity: &SentenceEntity, mode: CdaMode, lists: &PrecheckLists, tokenizer: &Tokenizer) -> Precheck {
    let md = &entity.metadata;
    if !md.relevant_sentence {
        return Precheck::Skip(SkipReason::NotRelevant);
    }
    if md.remove_sentence {
        return Precheck::Skip(SkipReason::FlaggedRemoved);
    }
    if mode == CdaMode::Base {
        return Precheck::Pass;
    }
    let owned = tokenizer.tokens(&entity.text);
    let tokens: Vec<&str> = owned.iter().map(|t| t.match_form()).collect();
    if contains_keyword(&tokens, &lists.political_keywords, tokenizer) {
        return Precheck::Skip(SkipReason::Political);
    }
    if contains_keyword(&tokens, &lists.historical_keywords, tokenizer) {
        return Precheck::Skip(SkipReason::Historical);
    }
    if lists.year_pattern.is_match(&entity.text) {
        return Precheck::Skip(SkipReason::Year);
    }
    Precheck::Pass
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entity(text: &str) -> SentenceEntity {
        let mut e = SentenceEntity {
            doc_id: "d".into(),
            sent_id: 0,
            char_start: 0,
            char_end: text.len(),
            text: text.into(),
            metadata: Default::default(),
        };
        e.metadata.relevant_sentence = true;
        e
    }

    fn check(text: &str, mode: CdaMode) -> Precheck {
        precheck(&entity(text), mode, &PrecheckLists::default(), &Tokenizer::default())
    }

    #[test]
    fn gc_content_checks() {
        assert_eq!(check("the president announced reforms", CdaMode::Gc), Precheck::Skip(SkipReason::Political));
        assert_eq!(check("she was born in 1984", CdaMode::Gc), Precheck::Skip(SkipReason::Year));
        assert_eq!(check("she was born in 2098", CdaMode::Gc), Precheck::Pass);
        assert_eq!(check("he fought in the Civil War", CdaMode::Gc), Precheck::Skip(SkipReason::Historical));
        assert_eq!(check("his civil manner", CdaMode::Gc), Precheck::Pass);
        assert_eq!(check("the president announced reforms", CdaMode::Base), Precheck::Pass);
        // keywords match whole tokens only
        assert_eq!(check("she warned him", CdaMode::Gc), Precheck::Pass);
    }

    #[test]
    fn flag_gates() {
        let mut e = entity("he left");
        e.metadata.relevant_sentence = false;
        let lists = PrecheckLists::default();
        let t = Tokenizer::default();
        assert_eq!(precheck(&e, CdaMode::Base, &lists, &t), Precheck::Skip(SkipReason::NotRelevant));
        e.metadata.relevant_sentence = true;
        e.metadata.remove_sentence = true;
        assert_eq!(precheck(&e, CdaMode::Gc, &lists, &t), Precheck::Skip(SkipReason::FlaggedRemoved));
    }

    #[test]
    fn year_pattern_bounds() {
        let re = Regex::new(YEAR_PATTERN).unwrap();
        for y in ["1000", "1999", "2000", "2029"] {
            assert!(re.is_match(y), "{y}");
        }
        for y in ["999", "2030", "2098", "0999"] {
            assert!(!re.is_match(y), "{y}");
        }
    }
}
