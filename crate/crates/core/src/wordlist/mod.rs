//! Word lists (category-label lexicons) per demographic group, plus their
//! generation, frequency filtering and human review.

mod generate;
mod review;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::repbias::Tokenizer;

pub use generate::{
    compute_frequencies, expand_completeness, filter_and_select, generate_raw, Expanded, FewShots,
    GenerationParams, Generated, GroupExamples, SelectionMode,
};
pub use review::{
    load_decisions, review_interactive, review_replay, Criterion, ReviewDecision, ReviewOutcome,
};

/// A sensitive attribute and its ordered groups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSpec {
    pub attribute: String,
    pub groups: Vec<String>,
}

impl AttributeSpec {
    pub fn new(attribute: impl Into<String>, groups: Vec<String>) -> Result<Self> {
        let spec = AttributeSpec {
            attribute: attribute.into(),
            groups,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.attribute.is_empty() {
            return Err(Error::InvalidAttribute("empty attribute name".into()));
        }
        if self.groups.len() < 2 {
            return Err(Error::InvalidAttribute(format!(
                "{} needs at least two groups, got {}",
                self.attribute,
                self.groups.len()
            )));
        }
        let mut seen = HashSet::new();
        for g in &self.groups {
            if g.is_empty() {
                return Err(Error::InvalidAttribute("empty group name".into()));
            }
            if !seen.insert(g) {
                return Err(Error::InvalidAttribute(format!("duplicate group {g:?}")));
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.groups.len()
    }

    pub fn index_of(&self, group: &str) -> Option<usize> {
        self.groups.iter().position(|g| g == group)
    }
}

/// Category labels for one group. `counterpart` maps an entry to the
/// corresponding entry of another group (e.g. `bride` to `groom`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordList {
    pub attribute: String,
    pub group: String,
    pub entries: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub counterpart: BTreeMap<String, String>,
}

impl WordList {
    pub fn new(attribute: impl Into<String>, group: impl Into<String>, entries: Vec<String>) -> Self {
        WordList {
            attribute: attribute.into(),
            group: group.into(),
            entries,
            counterpart: BTreeMap::new(),
        }
    }

    /// Lowercases entries and drops duplicates and empties, keeping first
    /// occurrences in order.
    pub fn normalized(mut self) -> Self {
        let mut seen = HashSet::new();
        self.entries = self
            .entries
            .into_iter()
            .map(|e| e.trim().to_lowercase())
            .filter(|e| !e.is_empty() && seen.insert(e.clone()))
            .collect();
        self
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.iter().any(|e| e == word)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if e.is_empty() {
                return Err(Error::InvalidWordList(format!("{}: empty entry", self.group)));
            }
            if !seen.insert(e) {
                return Err(Error::InvalidWordList(format!(
                    "{}: duplicate entry {e:?}",
                    self.group
                )));
            }
        }
        for key in self.counterpart.keys() {
            if !seen.contains(key) {
                return Err(Error::InvalidWordList(format!(
                    "{}: counterpart key {key:?} is not an entry",
                    self.group
                )));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let list: WordList = serde_json::from_str(&raw)
            .map_err(|e| Error::InvalidWordList(format!("{}: {e}", path.display())))?;
        list.validate()?;
        Ok(list)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut raw = serde_json::to_string_pretty(self)?;
        raw.push('\n');
        fs::write(path, raw).map_err(|e| Error::io(path, e))
    }
}

/// Drops counterpart pairs whose target no longer appears in any other
/// list, e.g. after filtering.
pub fn prune_counterparts(lists: &mut [WordList]) {
    let all: Vec<(String, HashSet<String>)> = lists
        .iter()
        .map(|l| (l.group.clone(), l.entries.iter().cloned().collect()))
        .collect();
    for list in lists.iter_mut() {
        let group = list.group.clone();
        list.counterpart
            .retain(|_, v| all.iter().any(|(g, set)| *g != group && set.contains(v)));
    }
}

/// One word list per group of an attribute, aligned with `spec.groups`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    pub spec: AttributeSpec,
    pub lists: Vec<WordList>,
}

impl Lexicon {
    pub fn new(spec: AttributeSpec, mut lists: Vec<WordList>) -> Result<Self> {
        spec.validate()?;
        let mut aligned = Vec::with_capacity(spec.m());
        for group in &spec.groups {
            let pos = lists
                .iter()
                .position(|l| &l.group == group)
                .ok_or_else(|| Error::InvalidWordList(format!("no word list for group {group:?}")))?;
            aligned.push(lists.swap_remove(pos));
        }
        if let Some(extra) = lists.first() {
            return Err(Error::InvalidWordList(format!(
                "word list for unknown group {:?}",
                extra.group
            )));
        }
        let lex = Lexicon {
            spec,
            lists: aligned,
        };
        lex.validate()?;
        Ok(lex)
    }

    fn validate(&self) -> Result<()> {
        for list in &self.lists {
            list.validate()?;
            if list.attribute != self.spec.attribute {
                return Err(Error::InvalidWordList(format!(
                    "{} list belongs to attribute {:?}, expected {:?}",
                    list.group, list.attribute, self.spec.attribute
                )));
            }
            for (key, value) in &list.counterpart {
                let found = self
                    .lists
                    .iter()
                    .any(|other| other.group != list.group && other.contains(value));
                if !found {
                    return Err(Error::InvalidWordList(format!(
                        "{}: counterpart {key:?} -> {value:?} not in any other group",
                        list.group
                    )));
                }
            }
        }
        Ok(())
    }

    /// Loads every `*.json` word list in `dir` whose attribute matches.
    /// Without explicit `groups`, groups are ordered by name.
    pub fn load_dir(dir: impl AsRef<Path>, attribute: &str, groups: Option<&[String]>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut lists = Vec::new();
        for p in paths {
            let list = WordList::load(&p)?;
            if list.attribute == attribute {
                lists.push(list);
            }
        }
        let groups = match groups {
            Some(g) => g.to_vec(),
            None => {
                let mut g: Vec<String> = lists.iter().map(|l| l.group.clone()).collect();
                g.sort();
                g
            }
        };
        Lexicon::new(AttributeSpec::new(attribute, groups)?, lists)
    }

    /// Every lexicon entry and the group index it belongs to. Entries listed
    /// under several groups resolve to the first group.
    pub fn entry_groups(&self) -> HashMap<&str, usize> {
        let mut map = HashMap::new();
        for (gi, list) in self.lists.iter().enumerate() {
            for e in &list.entries {
                map.entry(e.as_str()).or_insert(gi);
            }
        }
        map
    }

    pub fn list(&self, group: &str) -> Option<&WordList> {
        self.spec.index_of(group).map(|i| &self.lists[i])
    }

    /// Token sequences of every entry, in group order.
    pub fn tokenized_entries(&self, tokenizer: &Tokenizer) -> Vec<(usize, String, Vec<String>)> {
        let mut out = Vec::new();
        for (gi, list) in self.lists.iter().enumerate() {
            for e in &list.entries {
                let toks: Vec<String> = tokenizer
                    .tokens(e)
                    .iter()
                    .map(|t| t.match_form().to_string())
                    .collect();
                if !toks.is_empty() {
                    out.push((gi, e.clone(), toks));
                }
            }
        }
        out
    }
}
