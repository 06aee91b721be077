//! Prompt texts used by the LLM-backed stages.
//!
//! Defaults are compiled in from `prompts/*.txt`. A directory holding files
//! with the same names can override any of them. Placeholders look like
//! `{name}` and are filled by [`PromptCatalog::render`].

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const WORDLIST_GENERATION: &str = "wordlist_generation";
pub const WORDLIST_GENERATION_TASK: &str = "wordlist_generation_task";
pub const WORDLIST_COMPLETENESS: &str = "wordlist_completeness";
pub const STEREOTYPE_DETECTION: &str = "stereotype_detection";
pub const STEREOTYPE_DETECTION_EXAMPLES: &str = "stereotype_detection_examples";
pub const STEREOTYPE_ASSESSMENT: &str = "stereotype_assessment";
pub const STEREOTYPE_ASSESSMENT_EXAMPLES: &str = "stereotype_assessment_examples";
pub const CDA_WORD_SWAP: &str = "cda_word_swap";
pub const CDA_VERIFICATION: &str = "cda_verification";
pub const CDA_VERIFICATION_TASK: &str = "cda_verification_task";

const DEFAULTS: &[(&str, &str)] = &[
    (WORDLIST_GENERATION, include_str!("../prompts/wordlist_generation.txt")),
    (WORDLIST_GENERATION_TASK, include_str!("../prompts/wordlist_generation_task.txt")),
    (WORDLIST_COMPLETENESS, include_str!("../prompts/wordlist_completeness.txt")),
    (STEREOTYPE_DETECTION, include_str!("../prompts/stereotype_detection.txt")),
    (STEREOTYPE_DETECTION_EXAMPLES, include_str!("../prompts/stereotype_detection_examples.txt")),
    (STEREOTYPE_ASSESSMENT, include_str!("../prompts/stereotype_assessment.txt")),
    (STEREOTYPE_ASSESSMENT_EXAMPLES, include_str!("../prompts/stereotype_assessment_examples.txt")),
    (CDA_WORD_SWAP, include_str!("../prompts/cda_word_swap.txt")),
    (CDA_VERIFICATION, include_str!("../prompts/cda_verification.txt")),
    (CDA_VERIFICATION_TASK, include_str!("../prompts/cda_verification_task.txt")),
];

/// Prompts written for this project rather than taken from published
/// prompt texts.
pub const ORIGINAL_PROMPTS: &[&str] = &[WORDLIST_COMPLETENESS];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptCatalog {
    texts: BTreeMap<String, String>,
}

impl Default for PromptCatalog {
    fn default() -> Self {
        PromptCatalog {
            texts: DEFAULTS
                .iter()
                .map(|(k, v)| (k.to_string(), v.trim_end().to_string()))
                .collect(),
        }
    }
}

impl PromptCatalog {
    /// Defaults overridden by any `<name>.txt` present in `dir`.
    pub fn with_overrides(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut cat = Self::default();
        for (name, _) in DEFAULTS {
            let path = dir.join(format!("{name}.txt"));
            if path.exists() {
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                cat.texts.insert(name.to_string(), text.trim_end().to_string());
            }
        }
        Ok(cat)
    }

    pub fn get(&self, name: &str) -> &str {
        self.texts
            .get(name)
            .unwrap_or_else(|| panic!("unknown prompt {name:?}"))
    }

    /// Substitutes `{key}` placeholders. Unknown placeholders and literal
    /// braces (as in JSON examples) are left alone.
    pub fn render(&self, name: &str, vars: &[(&str, &str)]) -> String {
        let mut out = self.get(name).to_string();
        for (k, v) in vars {
            out = out.replace(&format!("{{{k}}}"), v);
        }
        out
    }

    /// Short content hash identifying this set of prompt texts.
    pub fn version(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.texts {
            h.update(k.as_bytes());
            h.update([0]);
            h.update(v.as_bytes());
            h.update([0]);
        }
        hex::encode(&h.finalize()[..6])
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.texts.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_fills_known_placeholders_only() {
        let cat = PromptCatalog::default();
        let s = cat.render(CDA_VERIFICATION_TASK, &[("original", "a"), ("modified", "b")]);
        assert_eq!(s, "Sentence 1 (Original): \"a\"\nSentence 2 (Modified): \"b\"");
        let c = cat.render(WORDLIST_COMPLETENESS, &[]);
        assert!(c.contains("{\"plural\""));
    }

    #[test]
    fn overrides_change_version() {
        let dir = tempfile::tempdir().unwrap();
        let base = PromptCatalog::default();
        assert_eq!(PromptCatalog::with_overrides(dir.path()).unwrap(), base);
        std::fs::write(dir.path().join("cda_verification.txt"), "Say VALID.\n").unwrap();
        let cat = PromptCatalog::with_overrides(dir.path()).unwrap();
        assert_eq!(cat.get(CDA_VERIFICATION), "Say VALID.");
        assert_ne!(cat.version(), base.version());
    }

    #[test]
    fn verbatim_anchors() {
        let cat = PromptCatalog::default();
        assert!(cat.get(WORDLIST_GENERATION).starts_with("You are a neutral and inclusive assistant"));
        assert!(cat.get(CDA_WORD_SWAP).contains("Respond with ONLY the chosen word"));
        assert!(cat.get(CDA_VERIFICATION).contains("Respond with exactly one word only"));
        assert!(cat.get(STEREOTYPE_DETECTION_EXAMPLES).contains("It always rains in London."));
    }
}
