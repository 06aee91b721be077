use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{SentenceEntity, SkipReason};
use crate::error::{Error, Result};
use crate::llm::{ChatRequest, LlmEndpoint, LlmError, Message};
use crate::prompts::{PromptCatalog, CDA_VERIFICATION, CDA_VERIFICATION_TASK, CDA_WORD_SWAP};
use crate::repbias::{compute_dr, GroupCounts};

use super::plan::SubstitutionPlan;
use super::swap::{render, splice};
use super::{entity_rng, CdaConfig, CdaEndpoints, SelectionStats, SwapContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Valid,
    Invalid,
}

/// Asks the verifier whether `modified` is still factual and grammatical.
/// Anything but a bare `VALID` counts as invalid.
pub fn verify(original: &str, modified: &str, llm: &LlmEndpoint, catalog: &PromptCatalog) -> std::result::Result<Verdict, LlmError> {
    let task = catalog.render(CDA_VERIFICATION_TASK, &[("original", original), ("modified", modified)]);
    let req = ChatRequest::new(
        "cda-verify",
        vec![Message::system(catalog.get(CDA_VERIFICATION)), Message::user(task)],
    )
    .max_output_tokens(8);
    let answer = llm.complete(&req)?;
    let word = answer
        .trim()
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_uppercase();
    Ok(if word == "VALID" { Verdict::Valid } else { Verdict::Invalid })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionSource {
    Llm,
    Random,
    /// The LLM was asked but its answer was unusable.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub word: String,
    pub source: SelectionSource,
}

/// Picks a replacement for `original_word` among `candidates`: the LLM
/// chooses with probability `ratio`, otherwise a uniform random pick.
pub fn select_word<R: Rng>(
    sentence: &str,
    original_word: &str,
    candidates: &[String],
    llm: &LlmEndpoint,
    rng: &mut R,
    ratio: f64,
    catalog: &PromptCatalog,
) -> Selection {
    assert!(!candidates.is_empty(), "select_word needs candidates");
    let ask = rng.random::<f64>() < ratio;
    let random = |rng: &mut R| candidates.choose(rng).expect("non-empty").clone();
    if !ask {
        return Selection { word: random(rng), source: SelectionSource::Random };
    }
    let prompt = catalog.render(
        CDA_WORD_SWAP,
        &[
            ("sentence", sentence),
            ("original_word", original_word),
            ("candidates", &candidates.join(", ")),
        ],
    );
    let req = ChatRequest::new("cda-select", vec![Message::user(prompt)]).max_output_tokens(16);
    match llm.complete(&req) {
        Ok(answer) => {
            let answer = answer.trim().trim_matches(|c: char| c == '"' || c == '\'' || c == '.' || c == '*');
            if let Some(c) = candidates.iter().find(|c| c.eq_ignore_ascii_case(answer)) {
                return Selection { word: c.clone(), source: SelectionSource::Llm };
            }
            log::warn!("word choice {answer:?} for {original_word:?} is not a candidate, picking at random");
        }
        Err(e) => log::warn!("word choice for {original_word:?} failed ({e}), picking at random"),
    }
    Selection { word: random(rng), source: SelectionSource::Fallback }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GcOutcome {
    pub eligible: usize,
    pub substituted: usize,
    pub rejected: usize,
    pub selections: SelectionStats,
}

/// Walks `entities` in order and moves occurrences of the excess group to
/// deficit groups until the plan is used up. A sentence is only changed as
/// a whole, so one with more occurrences than the plan can still absorb is
/// left alone.
#[allow(clippy::too_many_arguments)]
pub fn substitute_gc(
    entities: &mut [SentenceEntity],
    passing: &[bool],
    plan: &mut SubstitutionPlan,
    ctx: &SwapContext<'_>,
    llm: CdaEndpoints<'_>,
    config: &CdaConfig,
    catalog: &PromptCatalog,
    counts_before: &GroupCounts,
) -> Result<GcOutcome> {
    let mut out = GcOutcome::default();
    let spec = &ctx.lexicon.spec;
    let Some((from, _)) = plan.excess.first() else {
        return Ok(out);
    };
    let from = from.clone();
    let from_idx = spec.index_of(&from).expect("plan follows the spec");
    let mut running = counts_before.clone();

    for (e, _) in entities.iter_mut().zip(passing).filter(|(_, &p)| p) {
        if plan.remaining() == 0 {
            break;
        }
        if config.target_epsilon > 0.0 && compute_dr(&running) <= config.target_epsilon {
            break;
        }
        let occurrences: Vec<_> = ctx
            .matcher
            .find(&e.text)
            .into_iter()
            .filter(|o| o.group == from_idx)
            .collect();
        if occurrences.is_empty() {
            continue;
        }
        out.eligible += 1;
        let Some(to) = plan.next_target().map(str::to_string) else {
            break;
        };
        let n = occurrences.len() as u64;
        if n > plan.capacity(&from, &to) {
            continue;
        }
        let to_idx = spec.index_of(&to).expect("plan follows the spec");
        let mut rng = entity_rng(config.rng_seed, &e.doc_id, e.sent_id);
        let mut replacements = Vec::with_capacity(occurrences.len());
        for occ in &occurrences {
            let candidates = ctx.candidates(&e.text, occ, to_idx);
            if candidates.is_empty() {
                break;
            }
            let sel = select_word(&e.text, &occ.surface, &candidates, llm.selection, &mut rng, config.llm_selection_ratio, catalog);
            match sel.source {
                SelectionSource::Llm => out.selections.llm += 1,
                SelectionSource::Random => out.selections.random += 1,
                SelectionSource::Fallback => out.selections.fallback += 1,
            }
            replacements.push((occ.start, occ.end, render(&e.text[occ.start..occ.end], &sel.word)));
        }
        if replacements.len() != occurrences.len() {
            log::warn!("no {to} candidates for {}:{}", e.doc_id, e.sent_id);
            continue;
        }
        let modified = splice(&e.text, &replacements);
        let before = ctx.matcher.counts(&e.text);
        let counts = ctx.matcher.counts(&modified);
        let moved_out = before[&from].saturating_sub(counts[&from]);
        let moved_in = counts[&to].saturating_sub(before[&to]);
        if moved_out != n || moved_in != n {
            log::warn!("replacement in {}:{} does not rematch as {to}, skipped", e.doc_id, e.sent_id);
            continue;
        }
        let verdict = verify(&e.text, &modified, llm.verification, catalog).map_err(|err| Error::Stage {
            stage: "cda",
            source: Box::new(err.into()),
        })?;
        match verdict {
            Verdict::Valid => {
                plan.commit(&from, &to, n);
                *running.counts.get_mut(&from).expect("group") -= n;
                *running.counts.get_mut(&to).expect("group") += n;
                e.metadata.text_cda = Some(modified);
                e.metadata.counts_per_group_cda = Some(counts);
                out.substituted += 1;
            }
            Verdict::Invalid => {
                e.metadata.skip_reason = Some(SkipReason::Rejected);
                out.rejected += 1;
            }
        }
    }
    Ok(out)
}
