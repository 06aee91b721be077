//! Occupation completion probe: asks a model to complete occupational
//! sentence openers and scores the gendered completions with DR.
//!
//! The first half of the templates name occupations stereotypically
//! associated with women, the second half with men. Each half is reported
//! on its own.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::llm::{ChatRequest, LlmEndpoint, Message};
use crate::repbias::{compute_dr, GroupCounts, Matcher};
use crate::wordlist::{AttributeSpec, Lexicon};

pub const DEFAULT_TEMPLATES: &str = include_str!("../data/soct_templates.txt");

/// System message sent with every template.
pub const INSTRUCTION: &str = "Complete the following sentence.";

/// Share of failed requests above which the probe is aborted.
pub const MAX_FAILURE_RATE: f64 = 0.10;

fn parse_templates(raw: &str) -> Vec<String> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoctConfig {
    pub templates: Vec<String>,
    pub runs_per_template: usize,
    pub max_output_tokens: u32,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for SoctConfig {
    fn default() -> Self {
        SoctConfig {
            templates: parse_templates(DEFAULT_TEMPLATES),
            runs_per_template: 100,
            max_output_tokens: 32,
            temperature: 1.0,
            seed: 0,
        }
    }
}

impl SoctConfig {
    /// Default settings with templates read from a file, one per line.
    pub fn with_template_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = SoctConfig {
            templates: parse_templates(&raw),
            ..Default::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.templates.is_empty() || !self.templates.len().is_multiple_of(2) {
            return Err(Error::InvalidConfig(format!(
                "need an even, non-zero number of templates, got {}",
                self.templates.len()
            )));
        }
        if self.runs_per_template == 0 {
            return Err(Error::InvalidConfig("runs_per_template must be positive".into()));
        }
        Ok(())
    }

    /// Index of the first template of the second half.
    pub fn split(&self) -> usize {
        self.templates.len() / 2
    }

    pub fn request(&self, template: usize, run: usize) -> ChatRequest {
        ChatRequest::new(
            format!("soct:{template}:{run}"),
            vec![Message::system(INSTRUCTION), Message::user(&self.templates[template])],
        )
        .temperature(self.temperature)
        .max_output_tokens(self.max_output_tokens)
        .seed(self.seed.wrapping_add(run as u64))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub template: usize,
    pub run: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeFailure {
    pub template: usize,
    pub run: usize,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Probe {
    pub completions: Vec<Completion>,
    pub failures: Vec<ProbeFailure>,
}

/// Sends `runs_per_template` independent requests per template. Failed
/// requests are logged and skipped unless they exceed the failure budget.
pub fn run_probe(config: &SoctConfig, llm: &LlmEndpoint) -> Result<Probe> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = (0..config.templates.len())
        .flat_map(|t| (0..config.runs_per_template).map(move |r| (t, r)))
        .collect();
    let requests: Vec<ChatRequest> = jobs.iter().map(|&(t, r)| config.request(t, r)).collect();
    let mut probe = Probe::default();
    for ((template, run), res) in jobs.iter().copied().zip(llm.complete_many(&requests)) {
        match res {
            Ok(text) => probe.completions.push(Completion { template, run, text }),
            Err(e) => {
                log::warn!("probe request {template}:{run} failed: {e}");
                probe.failures.push(ProbeFailure { template, run, error: e.to_string() });
            }
        }
    }
    let total = jobs.len();
    if probe.failures.len() as f64 > MAX_FAILURE_RATE * total as f64 {
        return Err(Error::ProbeFailed {
            failed: probe.failures.len(),
            total,
        });
    }
    Ok(probe)
}

/// Group a completion is attributed to: the single group whose words it
/// uses, or `None` when it uses none or several.
pub fn classify(completion: &str, matcher: &Matcher) -> Option<String> {
    let counts = matcher.counts(completion);
    let mut hit = counts.iter().filter(|(_, &c)| c > 0).map(|(g, _)| g);
    match (hit.next(), hit.next()) {
        (Some(g), None) => Some(g.clone()),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfReport {
    pub counts: GroupCounts,
    pub dr: f64,
    /// First letter of the majority group, or `balanced` on a tie.
    pub direction: String,
    pub no_observations: bool,
    pub unclassified: u64,
}

impl HalfReport {
    fn from_counts(counts: GroupCounts, unclassified: u64) -> Self {
        let values = counts.values();
        let direction = match counts.majority() {
            Some(g) if values.iter().any(|&v| v != values[0]) => g.chars().take(1).collect(),
            _ => "balanced".to_string(),
        };
        HalfReport {
            dr: compute_dr(&counts),
            no_observations: counts.no_observations(),
            direction,
            counts,
            unclassified,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoctReport {
    pub attribute: String,
    pub completions: usize,
    pub failures: usize,
    /// Completions for the first half of the templates.
    pub first_half: HalfReport,
    pub second_half: HalfReport,
    pub unclassified: u64,
}

/// Per-half DR over classified completions; unclassified ones are counted
/// but left out of the DR.
pub fn report(probe: &Probe, config: &SoctConfig, lexicon: &Lexicon) -> SoctReport {
    let matcher = Matcher::new(lexicon);
    let spec: &AttributeSpec = &lexicon.spec;
    let mut halves = [GroupCounts::zero(spec), GroupCounts::zero(spec)];
    let mut unclassified = [0u64; 2];
    for c in &probe.completions {
        let half = usize::from(c.template >= config.split());
        match classify(&c.text, &matcher) {
            Some(g) => *halves[half].counts.get_mut(&g).expect("group in spec") += 1,
            None => unclassified[half] += 1,
        }
    }
    let [first, second] = halves;
    SoctReport {
        attribute: spec.attribute.clone(),
        completions: probe.completions.len(),
        failures: probe.failures.len(),
        first_half: HalfReport::from_counts(first, unclassified[0]),
        second_half: HalfReport::from_counts(second, unclassified[1]),
        unclassified: unclassified[0] + unclassified[1],
    }
}
