use std::collections::{BTreeMap, HashMap};

use crate::corpus::SentenceEntity;
use crate::wordlist::Lexicon;

use super::tokenize::{normalize, Tokenizer};

/// One lexicon hit inside a text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    /// Index into the lexicon's groups.
    pub group: usize,
    /// The lexicon entry that matched.
    pub entry: String,
    /// Byte span of the matched source text.
    pub start: usize,
    pub end: usize,
    /// Lowercased source text of the span.
    pub surface: String,
}

struct Candidate {
    group: usize,
    entry: String,
    tokens: Vec<String>,
}

/// Finds word-list entries in text. Multi-token entries are matched
/// greedily, longest first, and matched tokens are not reused.
pub struct Matcher {
    groups: Vec<String>,
    tokenizer: Tokenizer,
    by_first: HashMap<String, Vec<Candidate>>,
}

impl std::fmt::Debug for Matcher {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Matcher")
            .field("groups", &self.groups)
            .field("entries", &self.by_first.values().map(Vec::len).sum::<usize>())
            .finish()
    }
}

impl Matcher {
    pub fn new(lexicon: &Lexicon) -> Self {
        Self::with_tokenizer(lexicon, Tokenizer::default())
    }

    pub fn with_tokenizer(lexicon: &Lexicon, tokenizer: Tokenizer) -> Self {
        let mut by_first: HashMap<String, Vec<Candidate>> = HashMap::new();
        let mut seen = std::collections::HashSet::new();
        for (group, entry, tokens) in lexicon.tokenized_entries(&tokenizer) {
            // an entry listed under two groups counts for the first only
            if !seen.insert(tokens.clone()) {
                continue;
            }
            by_first.entry(tokens[0].clone()).or_default().push(Candidate {
                group,
                entry,
                tokens,
            });
        }
        for list in by_first.values_mut() {
            list.sort_by_key(|e| std::cmp::Reverse(e.tokens.len()));
        }
        Matcher {
            groups: lexicon.spec.groups.clone(),
            tokenizer,
            by_first,
        }
    }

    pub fn groups(&self) -> &[String] {
        &self.groups
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    /// All non-overlapping occurrences in `text`, left to right.
    pub fn find(&self, text: &str) -> Vec<Occurrence> {
        let tokens = self.tokenizer.tokens(text);
        let forms: Vec<&str> = tokens.iter().map(|t| t.match_form()).collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < forms.len() {
            let hit = self.by_first.get(forms[i]).and_then(|cands| {
                cands.iter().find(|c| {
                    let n = c.tokens.len();
                    i + n <= forms.len() && c.tokens.iter().zip(&forms[i..i + n]).all(|(a, b)| a == b)
                })
            });
            match hit {
                Some(c) => {
                    let n = c.tokens.len();
                    let (start, end) = (tokens[i].start, tokens[i + n - 1].end);
                    out.push(Occurrence {
                        group: c.group,
                        entry: c.entry.clone(),
                        start,
                        end,
                        surface: normalize(&text[start..end]),
                    });
                    i += n;
                }
                None => i += 1,
            }
        }
        out
    }

    /// Surface forms per group (every group present, possibly empty).
    pub fn words_per_group(&self, text: &str) -> BTreeMap<String, Vec<String>> {
        let mut words: BTreeMap<String, Vec<String>> =
            self.groups.iter().map(|g| (g.clone(), Vec::new())).collect();
        for occ in self.find(text) {
            words.get_mut(&self.groups[occ.group]).unwrap().push(occ.surface);
        }
        words
    }

    /// Occurrence count per group (every group present, possibly zero).
    pub fn counts(&self, text: &str) -> BTreeMap<String, u64> {
        let mut counts: BTreeMap<String, u64> = self.groups.iter().map(|g| (g.clone(), 0)).collect();
        for occ in self.find(text) {
            *counts.get_mut(&self.groups[occ.group]).unwrap() += 1;
        }
        counts
    }

    /// Fills the matching fields of the entity's metadata, replacing any
    /// earlier values. Groups without matches keep a zero count and no
    /// word entry.
    pub fn match_sentence(&self, entity: &mut SentenceEntity) {
        let md = &mut entity.metadata;
        md.words_per_group.clear();
        md.counts_per_group = self.groups.iter().map(|g| (g.clone(), 0)).collect();
        for occ in self.find(&entity.text) {
            let group = &self.groups[occ.group];
            md.words_per_group.entry(group.clone()).or_default().push(occ.surface);
            *md.counts_per_group.get_mut(group).unwrap() += 1;
        }
        md.relevant_sentence = md.counts_per_group.values().any(|&c| c > 0);
    }
}

/// Convenience wrapper building a fresh [`Matcher`].
pub fn match_sentence(entity: &mut SentenceEntity, lexicon: &Lexicon) {
    Matcher::new(lexicon).match_sentence(entity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wordlist::{AttributeSpec, WordList};

    fn lexicon(female: &[&str], male: &[&str]) -> Lexicon {
        let mk = |g: &str, e: &[&str]| {
            WordList::new("gender", g, e.iter().map(|s| s.to_string()).collect())
        };
        Lexicon::new(
            AttributeSpec::new("gender", vec!["female".into(), "male".into()]).unwrap(),
            vec![mk("female", female), mk("male", male)],
        )
        .unwrap()
    }

    fn entity(text: &str) -> SentenceEntity {
        SentenceEntity {
            doc_id: "d".into(),
            sent_id: 0,
            char_start: 0,
            char_end: text.len(),
            text: text.into(),
            metadata: Default::default(),
        }
    }

    #[test]
    fn she_told_her_brother() {
        let m = Matcher::new(&lexicon(&["she", "her"], &["brother", "he"]));
        let mut e = entity("She told her brother.");
        m.match_sentence(&mut e);
        assert_eq!(e.metadata.words_per_group["female"], ["she", "her"]);
        assert_eq!(e.metadata.words_per_group["male"], ["brother"]);
        assert_eq!(e.metadata.counts_per_group["female"], 2);
        assert!(e.metadata.relevant_sentence);
        assert!(e.metadata.check().is_ok());
    }

    #[test]
    fn irrelevant_sentence() {
        let m = Matcher::new(&lexicon(&["she"], &["he"]));
        let mut e = entity("The sky is blue.");
        m.match_sentence(&mut e);
        assert!(!e.metadata.relevant_sentence);
        assert!(e.metadata.words_per_group.is_empty());
        assert_eq!(e.metadata.counts_per_group["male"], 0);
        assert!(e.metadata.check().is_ok());
    }

    #[test]
    fn bride_and_bridegroom_count_once_each() {
        let m = Matcher::new(&lexicon(&["bride"], &["bridegroom"]));
        let c = m.counts("the bride and the bridegroom");
        assert_eq!(c["female"], 1);
        assert_eq!(c["male"], 1);
    }

    #[test]
    fn longest_multi_token_entry_wins() {
        let m = Matcher::new(&lexicon(&["queen", "queen mother"], &["king"]));
        let occ = m.find("The Queen Mother met the queen.");
        assert_eq!(occ.len(), 2);
        assert_eq!(occ[0].entry, "queen mother");
        assert_eq!(occ[0].surface, "queen mother");
        assert_eq!(occ[1].entry, "queen");
    }

    #[test]
    fn abbreviation_matches_entry_without_period() {
        let m = Matcher::new(&lexicon(&["mrs"], &["mr"]));
        let occ = m.find("Mr. and Mrs. Smith");
        assert_eq!(occ.iter().map(|o| o.group).collect::<Vec<_>>(), [1, 0]);
        assert_eq!(occ[0].surface, "mr.");
        assert_eq!(&"Mr. and Mrs. Smith"[occ[0].start..occ[0].end], "Mr.");
    }

    #[test]
    fn matching_is_idempotent() {
        let m = Matcher::new(&lexicon(&["she", "her"], &["he"]));
        let mut e = entity("He and she saw her.");
        m.match_sentence(&mut e);
        let once = e.clone();
        m.match_sentence(&mut e);
        assert_eq!(e, once);
    }
}
