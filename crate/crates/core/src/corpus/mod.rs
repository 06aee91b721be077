//! Documents, sentence entities and the per-sentence metadata ledger.
//!
//! A corpus is read from JSONL (`{"doc_id", "text"}` per line), split into
//! [`SentenceEntity`] values by the [`Segmenter`], enriched stage by stage,
//! and finally reassembled into documents by [`build_debiased`].

mod rebuild;
mod segment;
mod store;

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stereotype::{DetectionResult, IndicatorRecord};

pub use rebuild::build_debiased;
pub use segment::{segment, segment_corpus, Abbreviations, Segmenter};
pub use store::{read_store, write_store};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            text: text.into(),
        }
    }
}

/// One sentence of a source document together with its metadata.
///
/// `char_start..char_end` are byte offsets into the owning document's text;
/// `text` is exactly that slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceEntity {
    pub doc_id: String,
    pub sent_id: usize,
    pub char_start: usize,
    pub char_end: usize,
    pub text: String,
    #[serde(default)]
    pub metadata: MetadataRecord,
}

impl SentenceEntity {
    /// Text that ends up in the debiased corpus, or `None` if removed.
    pub fn final_text(&self) -> Option<&str> {
        if self.metadata.remove_sentence {
            None
        } else {
            Some(self.metadata.text_cda.as_deref().unwrap_or(&self.text))
        }
    }

    pub fn key(&self) -> (&str, usize) {
        (&self.doc_id, self.sent_id)
    }
}

/// Why the augmentation stage left a sentence untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    Political,
    Historical,
    Year,
    NotRelevant,
    FlaggedRemoved,
    /// The verifier judged the counterfactual invalid.
    Rejected,
}

impl SkipReason {
    pub fn as_str(self) -> &'static str {
        match self {
            SkipReason::Political => "political",
            SkipReason::Historical => "historical",
            SkipReason::Year => "year",
            SkipReason::NotRelevant => "not_relevant",
            SkipReason::FlaggedRemoved => "flagged_removed",
            SkipReason::Rejected => "rejected",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionStatus {
    /// Longer than the configured token limit; detection was not attempted.
    TooLong,
    /// The model never produced a parseable answer.
    Failed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssessmentStatus {
    Failed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetadataRecord {
    #[serde(default)]
    pub words_per_group: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub counts_per_group: BTreeMap<String, u64>,
    #[serde(default)]
    pub relevant_sentence: bool,
    #[serde(default)]
    pub potential_stereotype: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_status: Option<DetectionStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linguistic_indicators: Option<IndicatorRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assessment_status: Option<AssessmentStatus>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_scsc: Option<f64>,
    #[serde(default)]
    pub remove_sentence: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text_cda: Option<String>,
    /// Group counts of `text_cda`, kept so summaries need no re-matching.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts_per_group_cda: Option<BTreeMap<String, u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skip_reason: Option<SkipReason>,
}

impl MetadataRecord {
    /// Checks the record-level invariants, returning a description of the
    /// first violation.
    pub fn check(&self) -> std::result::Result<(), String> {
        for (group, words) in &self.words_per_group {
            let count = self.counts_per_group.get(group).copied().unwrap_or(0);
            if count as usize != words.len() {
                return Err(format!(
                    "group {group}: count {count} but {} words",
                    words.len()
                ));
            }
        }
        for (group, count) in &self.counts_per_group {
            if *count > 0 && !self.words_per_group.contains_key(group) {
                return Err(format!("group {group}: count {count} without words"));
            }
        }
        let any = self.counts_per_group.values().any(|&c| c > 0);
        if any != self.relevant_sentence {
            return Err("relevant_sentence disagrees with counts".into());
        }
        if self.score_scsc.is_some() && !self.potential_stereotype {
            return Err("score_scsc without potential_stereotype".into());
        }
        if let Some(score) = self.score_scsc {
            if !(0.0..=1.0).contains(&score) {
                return Err(format!("score_scsc {score} outside [0, 1]"));
            }
        }
        if self.text_cda.is_some() && self.remove_sentence {
            return Err("text_cda set on a removed sentence".into());
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct CorpusLine {
    doc_id: String,
    text: String,
}

/// Reads a JSONL corpus. Blank lines are ignored; line numbers in errors are
/// 1-based physical lines.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&raw, path)
}

pub(crate) fn parse_corpus(raw: &str, path: &Path) -> Result<Vec<Document>> {
    let mut seen = HashSet::new();
    let mut docs = Vec::new();
    for (idx, line) in raw.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CorpusLine = serde_json::from_str(line).map_err(|e| Error::MalformedLine {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        if rec.doc_id.is_empty() {
            return Err(Error::MalformedLine {
                path: path.to_path_buf(),
                line: line_no,
                message: "empty doc_id".into(),
            });
        }
        if !seen.insert(rec.doc_id.clone()) {
            return Err(Error::DuplicateDocId(rec.doc_id, line_no));
        }
        docs.push(Document {
            doc_id: rec.doc_id,
            text: rec.text,
        });
    }
    Ok(docs)
}

pub fn write_corpus(path: impl AsRef<Path>, docs: &[Document]) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for doc in docs {
        serde_json::to_writer(&mut out, doc)?;
        out.push(b'\n');
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))
}
