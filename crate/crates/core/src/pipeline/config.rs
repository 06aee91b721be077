use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cda::{CdaConfig, CdaMode};
use crate::error::{Error, Result};
use crate::llm::{EndpointConfig, TranscriptMode};
use crate::stereotype::StereotypeConfig;

fn yes() -> bool {
    true
}

fn default_transcript() -> PathBuf {
    PathBuf::from("transcript.jsonl")
}

fn default_parallelism() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TranscriptSettings {
    #[serde(default)]
    pub mode: TranscriptMode,
    #[serde(default = "default_transcript")]
    pub path: PathBuf,
}

impl Default for TranscriptSettings {
    fn default() -> Self {
        TranscriptSettings {
            mode: TranscriptMode::default(),
            path: default_transcript(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StereotypeSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: usize,
    /// Score model JSON; the shipped model when absent.
    #[serde(default)]
    pub score_model: Option<PathBuf>,
}

impl Default for StereotypeSection {
    fn default() -> Self {
        let d = StereotypeConfig::default();
        StereotypeSection {
            enabled: true,
            threshold: d.threshold,
            max_tokens: d.max_tokens,
            score_model: None,
        }
    }
}

impl StereotypeSection {
    pub fn to_config(&self) -> StereotypeConfig {
        StereotypeConfig {
            threshold: self.threshold,
            max_tokens: self.max_tokens,
        }
    }
}

fn default_threshold() -> f64 {
    StereotypeConfig::default().threshold
}

fn default_max_tokens() -> usize {
    StereotypeConfig::default().max_tokens
}

fn half() -> f64 {
    0.5
}

fn ratio() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CdaSection {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub mode: CdaMode,
    #[serde(default = "half")]
    pub substitution_probability: f64,
    #[serde(default = "ratio")]
    pub llm_selection_ratio: f64,
    #[serde(default)]
    pub target_epsilon: f64,
    #[serde(default)]
    pub political_keywords: Option<PathBuf>,
    #[serde(default)]
    pub historical_keywords: Option<PathBuf>,
}

impl Default for CdaSection {
    fn default() -> Self {
        CdaSection {
            enabled: true,
            mode: CdaMode::default(),
            substitution_probability: half(),
            llm_selection_ratio: ratio(),
            target_epsilon: 0.0,
            political_keywords: None,
            historical_keywords: None,
        }
    }
}

impl CdaSection {
    pub fn to_config(&self, seed: u64) -> CdaConfig {
        CdaConfig {
            mode: self.mode,
            substitution_probability: self.substitution_probability,
            llm_selection_ratio: self.llm_selection_ratio,
            rng_seed: seed,
            target_epsilon: self.target_epsilon,
        }
    }
}

/// Which stage a request comes from, for picking its endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlmRole {
    Generation,
    Detection,
    Assessment,
    Selection,
    Verification,
}

/// Endpoint settings. Each role falls back to `default`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSection {
    #[serde(default)]
    pub default: Option<EndpointConfig>,
    #[serde(default)]
    pub generation: Option<EndpointConfig>,
    #[serde(default)]
    pub detection: Option<EndpointConfig>,
    #[serde(default)]
    pub assessment: Option<EndpointConfig>,
    #[serde(default)]
    pub selection: Option<EndpointConfig>,
    #[serde(default)]
    pub verification: Option<EndpointConfig>,
    /// Requests in flight when replaying.
    #[serde(default = "default_parallelism")]
    pub replay_parallelism: usize,
}

impl LlmSection {
    pub fn endpoint(&self, role: LlmRole) -> Option<&EndpointConfig> {
        let specific = match role {
            LlmRole::Generation => &self.generation,
            LlmRole::Detection => &self.detection,
            LlmRole::Assessment => &self.assessment,
            LlmRole::Selection => &self.selection,
            LlmRole::Verification => &self.verification,
        };
        specific.as_ref().or(self.default.as_ref())
    }
}

/// Everything a full run needs. Relative paths are resolved against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub corpus: PathBuf,
    pub output_dir: PathBuf,
    pub attribute: String,
    /// Group names; every `<group>.json` in `wordlist_dir` when absent.
    #[serde(default)]
    pub groups: Option<Vec<String>>,
    pub wordlist_dir: PathBuf,
    #[serde(default)]
    pub abbreviations: Option<PathBuf>,
    #[serde(default)]
    pub prompts_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Write the metadata store after every stage. When off, the store is
    /// only written at the end of `run`.
    #[serde(default = "yes")]
    pub checkpoint: bool,
    #[serde(default)]
    pub transcript: TranscriptSettings,
    #[serde(default)]
    pub stereotype: StereotypeSection,
    #[serde(default)]
    pub cda: CdaSection,
    #[serde(default)]
    pub llm: LlmSection,
}

impl PipelineConfig {
    /// Config with defaults for everything but the required paths.
    pub fn new(
        corpus: impl Into<PathBuf>,
        wordlist_dir: impl Into<PathBuf>,
        attribute: impl Into<String>,
        output_dir: impl Into<PathBuf>,
    ) -> Self {
        PipelineConfig {
            corpus: corpus.into(),
            output_dir: output_dir.into(),
            attribute: attribute.into(),
            groups: None,
            wordlist_dir: wordlist_dir.into(),
            abbreviations: None,
            prompts_dir: None,
            seed: 0,
            checkpoint: true,
            transcript: TranscriptSettings::default(),
            stereotype: StereotypeSection::default(),
            cda: CdaSection::default(),
            llm: LlmSection::default(),
        }
    }

    pub fn parse(raw: &str, base: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig =
            toml::from_str(raw).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.resolve(base);
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&raw, base).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.corpus);
        fix(&mut self.output_dir);
        fix(&mut self.wordlist_dir);
        fix(&mut self.transcript.path);
        for p in [
            &mut self.abbreviations,
            &mut self.prompts_dir,
            &mut self.stereotype.score_model,
            &mut self.cda.political_keywords,
            &mut self.cda.historical_keywords,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Checks values and that every referenced input exists.
    pub fn validate(&self) -> Result<()> {
        let must_exist = |what: &str, p: &Path| {
            if p.exists() {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("{what} {} does not exist", p.display())))
            }
        };
        must_exist("corpus", &self.corpus)?;
        must_exist("word list directory", &self.wordlist_dir)?;
        for (what, p) in [
            ("abbreviation file", &self.abbreviations),
            ("prompt directory", &self.prompts_dir),
            ("score model", &self.stereotype.score_model),
            ("political keyword file", &self.cda.political_keywords),
            ("historical keyword file", &self.cda.historical_keywords),
        ] {
            if let Some(p) = p {
                must_exist(what, p)?;
            }
        }
        self.stereotype.to_config().validate()?;
        self.cda.to_config(self.seed).validate()?;
        if self.transcript.mode != TranscriptMode::Replay {
            for (role, on) in [
                (LlmRole::Detection, self.stereotype.enabled),
                (LlmRole::Assessment, self.stereotype.enabled),
                (LlmRole::Selection, self.cda_uses_llm()),
                (LlmRole::Verification, self.cda_uses_llm()),
            ] {
                if on && self.llm.endpoint(role).is_none() {
                    return Err(Error::InvalidConfig(format!("no endpoint configured for {role:?}")));
                }
            }
        }
        Ok(())
    }

    fn cda_uses_llm(&self) -> bool {
        self.cda.enabled && self.cda.mode == CdaMode::Gc
    }

    pub fn needs_llm(&self) -> bool {
        self.stereotype.enabled || self.cda_uses_llm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections_and_resolves_paths() {
        let raw = r#"
            corpus = "c.jsonl"
            output_dir = "out"
            attribute = "gender"
            wordlist_dir = "/abs/lists"
            seed = 7

            [stereotype]
            threshold = 0.69

            [cda]
            mode = "gc"

            [llm.default]
            base_url = "http://localhost:8000/v1"
            model = "m"
        "#;
        let c = PipelineConfig::parse(raw, Path::new("/base")).unwrap();
        assert_eq!(c.corpus, PathBuf::from("/base/c.jsonl"));
        assert_eq!(c.wordlist_dir, PathBuf::from("/abs/lists"));
        assert_eq!(c.transcript.path, PathBuf::from("/base/transcript.jsonl"));
        assert_eq!(c.stereotype.threshold, 0.69);
        assert_eq!(c.stereotype.max_tokens, 47);
        assert_eq!(c.cda.mode, CdaMode::Gc);
        assert_eq!(c.cda.to_config(c.seed).rng_seed, 7);
        assert_eq!(c.llm.endpoint(LlmRole::Verification).unwrap().model, "m");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let raw = "corpus = \"c\"\noutput_dir = \"o\"\nattribute = \"a\"\nwordlist_dir = \"w\"\nthreshhold = 1\n";
        assert!(PipelineConfig::parse(raw, Path::new(".")).is_err());
    }
}
