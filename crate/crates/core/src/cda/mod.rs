//! Counterfactual data augmentation.
//!
//! Both modes are one-sided: occurrences of the majority group are swapped
//! in place for words of other groups, never duplicated.
//!
//! * `base` flips a coin per eligible sentence and swaps every majority
//!   occurrence for its counterpart (or a random minority word).
//! * `gc` skips political, historical and dated sentences, plans how many
//!   occurrences to move so the groups balance, lets an LLM pick the
//!   replacement word most of the time, and keeps a counterfactual only if
//!   an LLM verifier accepts it.

mod base;
mod gc;
mod plan;
mod precheck;
mod swap;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{SentenceEntity, SkipReason};
use crate::error::{Error, Result};
use crate::llm::LlmEndpoint;
use crate::prompts::PromptCatalog;
use crate::repbias::{compute_dr, GroupCounts, Matcher, Occurrence};
use crate::wordlist::Lexicon;

pub use base::substitute_base;
pub use gc::{select_word, substitute_gc, verify, GcOutcome, Selection, SelectionSource, Verdict};
pub use plan::{plan_targets, SubstitutionPlan};
pub use precheck::{load_keywords, precheck, Precheck, PrecheckLists, YEAR_PATTERN};
pub use swap::{her_is_possessive, render, Casing};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CdaMode {
    #[default]
    Base,
    Gc,
}

impl std::str::FromStr for CdaMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "base" => Ok(CdaMode::Base),
            "gc" => Ok(CdaMode::Gc),
            other => Err(format!("unknown CDA mode {other:?}")),
        }
    }
}

fn half() -> f64 {
    0.5
}

fn llm_ratio() -> f64 {
    0.8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdaConfig {
    #[serde(default)]
    pub mode: CdaMode,
    /// Chance that a sentence is augmented in base mode.
    #[serde(default = "half")]
    pub substitution_probability: f64,
    /// Share of gc word choices delegated to the LLM.
    #[serde(default = "llm_ratio")]
    pub llm_selection_ratio: f64,
    #[serde(default)]
    pub rng_seed: u64,
    /// gc stops early once the running DR is at or below this value.
    #[serde(default)]
    pub target_epsilon: f64,
}

impl Default for CdaConfig {
    fn default() -> Self {
        CdaConfig {
            mode: CdaMode::Base,
            substitution_probability: half(),
            llm_selection_ratio: llm_ratio(),
            rng_seed: 0,
            target_epsilon: 0.0,
        }
    }
}

impl CdaConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("substitution_probability", self.substitution_probability),
            ("llm_selection_ratio", self.llm_selection_ratio),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("{name} {p} outside [0, 1]")));
            }
        }
        if self.target_epsilon.is_nan() || self.target_epsilon < 0.0 {
            return Err(Error::InvalidConfig("target_epsilon must be non-negative".into()));
        }
        Ok(())
    }
}

/// Independent generator for one sentence, so results do not depend on
/// processing order.
pub fn entity_rng(seed: u64, doc_id: &str, sent_id: usize) -> ChaCha8Rng {
    let digest = Sha256::digest(format!("{seed}\u{0}{doc_id}\u{0}{sent_id}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    ChaCha8Rng::seed_from_u64(u64::from_le_bytes(bytes))
}

/// Lexicon plus matcher: everything needed to find and replace words.
#[derive(Debug)]
pub struct SwapContext<'a> {
    pub lexicon: &'a Lexicon,
    pub matcher: &'a Matcher,
}

impl SwapContext<'_> {
    /// The replacement a counterpart map (or the `her` rule) prescribes
    /// for `occ` in the `target` group, if any.
    pub fn preferred(&self, text: &str, occ: &Occurrence, target: usize) -> Option<String> {
        let target_list = &self.lexicon.lists[target];
        if occ.entry == "her" {
            let possessive = her_is_possessive(&text[occ.end..], self.matcher.tokenizer());
            let pick = if possessive { "his" } else { "him" };
            if target_list.contains(pick) {
                return Some(pick.to_string());
            }
        }
        self.lexicon.lists[occ.group]
            .counterpart
            .get(&occ.entry)
            .filter(|w| target_list.contains(w))
            .cloned()
    }

    /// Replacement candidates from the target group: the preferred word
    /// first, then the list in order.
    pub fn candidates(&self, text: &str, occ: &Occurrence, target: usize) -> Vec<String> {
        let preferred = self.preferred(text, occ, target);
        let mut out: Vec<String> = preferred.iter().cloned().collect();
        out.extend(
            self.lexicon.lists[target]
                .entries
                .iter()
                .filter(|w| Some(*w) != preferred.as_ref())
                .cloned(),
        );
        out
    }
}

/// Endpoints used by gc mode. They may be the same.
#[derive(Debug, Clone, Copy)]
pub struct CdaEndpoints<'a> {
    pub selection: &'a LlmEndpoint,
    pub verification: &'a LlmEndpoint,
}

impl<'a> CdaEndpoints<'a> {
    pub fn shared(llm: &'a LlmEndpoint) -> Self {
        CdaEndpoints {
            selection: llm,
            verification: llm,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionStats {
    pub llm: usize,
    pub random: usize,
    /// LLM answers that were not a candidate, or failed requests.
    pub fallback: usize,
}

/// Summary of one augmentation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdaReport {
    pub mode: CdaMode,
    pub seed: u64,
    pub counts_before: GroupCounts,
    pub counts_after: GroupCounts,
    pub dr_before: f64,
    pub dr_after: f64,
    /// Sentences that passed the precheck and contain words to swap.
    pub eligible: usize,
    pub substituted: usize,
    pub rejected: usize,
    pub skip_histogram: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<SubstitutionPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selections: Option<SelectionStats>,
}

/// Runs augmentation over `entities`, overwriting any earlier augmentation
/// fields. Entities are sorted by `(doc_id, sent_id)` first so the result
/// does not depend on input order.
pub fn run_cda(
    entities: &mut [SentenceEntity],
    lexicon: &Lexicon,
    matcher: &Matcher,
    config: &CdaConfig,
    lists: &PrecheckLists,
    llm: Option<CdaEndpoints<'_>>,
    catalog: &PromptCatalog,
) -> Result<CdaReport> {
    config.validate()?;
    entities.sort_by(|a, b| a.key().cmp(&b.key()));
    for e in entities.iter_mut() {
        e.metadata.text_cda = None;
        e.metadata.counts_per_group_cda = None;
        e.metadata.skip_reason = None;
    }
    let spec = &lexicon.spec;
    let counts_before = GroupCounts::from_final(spec, entities);

    let mut passing = vec![false; entities.len()];
    for (i, e) in entities.iter_mut().enumerate() {
        match precheck(e, config.mode, lists, matcher.tokenizer()) {
            Precheck::Pass => passing[i] = true,
            Precheck::Skip(reason) => e.metadata.skip_reason = Some(reason),
        }
    }
    let ctx = SwapContext { lexicon, matcher };

    let (eligible, substituted, rejected, plan, selections) = match config.mode {
        CdaMode::Base => {
            let (eligible, substituted) = base::run(entities, &passing, &ctx, &counts_before, config);
            (eligible, substituted, 0, None, None)
        }
        CdaMode::Gc => {
            let llm = llm.ok_or_else(|| Error::InvalidConfig("gc mode needs LLM endpoints".into()))?;
            let mut plan = plan_targets(&counts_before);
            let out = substitute_gc(entities, &passing, &mut plan, &ctx, llm, config, catalog, &counts_before)?;
            (out.eligible, out.substituted, out.rejected, Some(plan), Some(out.selections))
        }
    };

    let counts_after = GroupCounts::from_final(spec, entities);
    let mut skip_histogram = BTreeMap::new();
    for e in entities.iter() {
        if let Some(r) = e.metadata.skip_reason {
            *skip_histogram.entry(r.as_str().to_string()).or_insert(0) += 1;
        }
    }
    Ok(CdaReport {
        mode: config.mode,
        seed: config.rng_seed,
        dr_before: compute_dr(&counts_before),
        dr_after: compute_dr(&counts_after),
        counts_before,
        counts_after,
        eligible,
        substituted,
        rejected,
        skip_histogram,
        plan,
        selections,
    })
}

/// Whether `reason` is one of the content prechecks that must never be
/// augmented.
pub fn is_content_skip(reason: SkipReason) -> bool {
    matches!(reason, SkipReason::Political | SkipReason::Historical | SkipReason::Year)
}
