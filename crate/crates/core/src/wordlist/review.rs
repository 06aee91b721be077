use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::WordList;

/// Quality criteria a category label must meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    Q1,
    Q2,
    Q3,
    Q4,
    Q5,
    Q6,
}

impl Criterion {
    pub const ALL: [Criterion; 6] = [
        Criterion::Q1,
        Criterion::Q2,
        Criterion::Q3,
        Criterion::Q4,
        Criterion::Q5,
        Criterion::Q6,
    ];

    pub fn summary(self) -> &'static str {
        match self {
            Criterion::Q1 => "category label: refers to the group or a member of it",
            Criterion::Q2 => "linguistically correct, e.g. spelled correctly",
            Criterion::Q3 => "unambiguous: exclusive to this group within the attribute",
            Criterion::Q4 => "free of association: no professions, traits or attributes",
            Criterion::Q5 => "simple: not a compound of a label and a neutral word",
            Criterion::Q6 => "not a proper name",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "Q1" | "1" => Some(Criterion::Q1),
            "Q2" | "2" => Some(Criterion::Q2),
            "Q3" | "3" => Some(Criterion::Q3),
            "Q4" | "4" => Some(Criterion::Q4),
            "Q5" | "5" => Some(Criterion::Q5),
            "Q6" | "6" => Some(Criterion::Q6),
            _ => None,
        }
    }
}

/// One reviewer verdict, as stored in the audit file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub word: String,
    pub group: String,
    pub keep: bool,
    #[serde(default)]
    pub reasons: Vec<Criterion>,
    /// Corrected spelling that replaces the word.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replacement: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReviewOutcome {
    pub list: WordList,
    pub decisions: Vec<ReviewDecision>,
    pub aborted: bool,
}

pub fn load_decisions(path: impl AsRef<Path>) -> Result<Vec<ReviewDecision>> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(line).map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Applies recorded decisions for this list's group. Words without a
/// decision are kept; when a word has several decisions the last one wins.
pub fn review_replay(list: &WordList, decisions: &[ReviewDecision]) -> WordList {
    let latest: HashMap<&str, &ReviewDecision> = decisions
        .iter()
        .filter(|d| d.group == list.group)
        .map(|d| (d.word.as_str(), d))
        .collect();
    let mut out = list.clone();
    out.entries.clear();
    out.counterpart.clear();
    for word in &list.entries {
        let (keep, new) = match latest.get(word.as_str()) {
            Some(d) if !d.keep => (false, word.clone()),
            Some(d) => (true, d.replacement.clone().unwrap_or_else(|| word.clone())),
            None => (true, word.clone()),
        };
        if keep && !out.entries.contains(&new) {
            if let Some(cp) = list.counterpart.get(word) {
                out.counterpart.insert(new.clone(), cp.clone());
            }
            out.entries.push(new);
        }
    }
    out
}

fn append_audit(audit: Option<&Path>, d: &ReviewDecision) -> Result<()> {
    let Some(path) = audit else { return Ok(()) };
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let line = serde_json::to_string(d)?;
    writeln!(f, "{line}").map_err(|e| Error::io(path, e))
}

fn read_line(input: &mut impl BufRead) -> std::io::Result<Option<String>> {
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    Ok(Some(line.trim().to_string()))
}

/// Walks the reviewer through every entry. Each decision is appended to
/// `audit` as soon as it is made. Quitting (or end of input) aborts the
/// session: the audit keeps what was decided, but the list is returned
/// unchanged.
pub fn review_interactive(
    list: &WordList,
    mut input: impl BufRead,
    mut output: impl Write,
    audit: Option<&Path>,
) -> Result<ReviewOutcome> {
    let io_err = |e: std::io::Error| Error::io("<terminal>", e);
    writeln!(output, "Reviewing {} entries for {}/{}", list.entries.len(), list.attribute, list.group)
        .map_err(io_err)?;
    for c in Criterion::ALL {
        writeln!(output, "  {c:?}: {}", c.summary()).map_err(io_err)?;
    }
    let mut decisions = Vec::new();
    let aborted = |decisions| ReviewOutcome {
        list: list.clone(),
        decisions,
        aborted: true,
    };
    for (i, word) in list.entries.iter().enumerate() {
        let decision = loop {
            write!(output, "[{}/{}] {word:?} keep/reject/edit/quit [k/r/e/q]: ", i + 1, list.entries.len())
                .map_err(io_err)?;
            output.flush().map_err(io_err)?;
            let Some(answer) = read_line(&mut input).map_err(io_err)? else {
                return Ok(aborted(decisions));
            };
            match answer.to_ascii_lowercase().as_str() {
                "k" | "keep" | "" => {
                    break ReviewDecision {
                        word: word.clone(),
                        group: list.group.clone(),
                        keep: true,
                        reasons: vec![],
                        replacement: None,
                    }
                }
                "r" | "reject" => {
                    write!(output, "  violated criteria (e.g. Q3 Q4): ").map_err(io_err)?;
                    output.flush().map_err(io_err)?;
                    let Some(reasons) = read_line(&mut input).map_err(io_err)? else {
                        return Ok(aborted(decisions));
                    };
                    let mut parsed: Vec<Criterion> = reasons
                        .split([' ', ','])
                        .filter_map(Criterion::parse)
                        .collect();
                    parsed.sort();
                    parsed.dedup();
                    break ReviewDecision {
                        word: word.clone(),
                        group: list.group.clone(),
                        keep: false,
                        reasons: parsed,
                        replacement: None,
                    };
                }
                "e" | "edit" => {
                    write!(output, "  replacement: ").map_err(io_err)?;
                    output.flush().map_err(io_err)?;
                    let Some(new) = read_line(&mut input).map_err(io_err)? else {
                        return Ok(aborted(decisions));
                    };
                    let new = new.to_lowercase();
                    if new.is_empty() {
                        continue;
                    }
                    break ReviewDecision {
                        word: word.clone(),
                        group: list.group.clone(),
                        keep: true,
                        reasons: vec![Criterion::Q2],
                        replacement: Some(new),
                    };
                }
                "q" | "quit" => return Ok(aborted(decisions)),
                _ => writeln!(output, "  please answer k, r, e or q").map_err(io_err)?,
            }
        };
        append_audit(audit, &decision)?;
        decisions.push(decision);
    }
    Ok(ReviewOutcome {
        list: review_replay(list, &decisions),
        decisions,
        aborted: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list() -> WordList {
        WordList::new("gender", "female", vec!["she".into(), "nurse".into(), "womn".into()])
    }

    fn reject(word: &str, group: &str, q: Criterion) -> ReviewDecision {
        ReviewDecision {
            word: word.into(),
            group: group.into(),
            keep: false,
            reasons: vec![q],
            replacement: None,
        }
    }

    #[test]
    fn replay_applies_group_decisions() {
        let d = vec![reject("nurse", "female", Criterion::Q4), reject("she", "male", Criterion::Q3)];
        assert_eq!(review_replay(&list(), &d).entries, ["she", "womn"]);
        assert_eq!(review_replay(&list(), &[]), list());
    }

    #[test]
    fn interactive_session_with_audit() {
        let dir = tempfile::tempdir().unwrap();
        let audit = dir.path().join("audit.jsonl");
        let input = b"k\nr\nQ4\ne\nwoman\n" as &[u8];
        let mut out = Vec::new();
        let res = review_interactive(&list(), input, &mut out, Some(&audit)).unwrap();
        assert!(!res.aborted);
        assert_eq!(res.list.entries, ["she", "woman"]);
        let replayed = load_decisions(&audit).unwrap();
        assert_eq!(replayed, res.decisions);
        assert_eq!(replayed[1].reasons, [Criterion::Q4]);
        assert_eq!(review_replay(&list(), &replayed), res.list);
    }

    #[test]
    fn abort_keeps_partial_audit() {
        let dir = tempfile::tempdir().unwrap();
        let audit = dir.path().join("audit.jsonl");
        let res = review_interactive(&list(), b"r\n3\nq\n" as &[u8], Vec::new(), Some(&audit)).unwrap();
        assert!(res.aborted);
        assert_eq!(res.list, list());
        assert_eq!(load_decisions(&audit).unwrap().len(), 1);
    }
}
