//! Explicit stereotypes: LLM detection, LLM assessment of linguistic
//! indicators, scoring and threshold filtering.
//!
//! Detection runs only on relevant sentences, assessment only on sentences
//! flagged as potential stereotypes. A sentence whose detection or
//! assessment fails is never removed.

mod score;
mod types;

use serde::{Deserialize, Serialize};

use crate::corpus::{AssessmentStatus, DetectionStatus, SentenceEntity};
use crate::error::{Error, Result};
use crate::llm::{bounded_map, ChatRequest, LlmEndpoint, LlmError, Message};
use crate::prompts::{self, PromptCatalog};
use crate::repbias::Tokenizer;

pub use score::ScoreModel;
pub use types::{
    indicator_values, Answer, DetectionResult, Generalization, GramForm, IndicatorRecord, LingForm,
    ParseError, Polarity, Situation, TargetType, YesNo, NOT_APPLICABLE,
};

fn default_threshold() -> f64 {
    0.63
}

fn default_max_tokens() -> usize {
    47
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StereotypeConfig {
    /// Sentences scoring strictly above this are removed.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Longer sentences are not sent to detection.
    #[serde(default = "default_max_tokens")]
    pub max_tokens: usize,
}

impl Default for StereotypeConfig {
    fn default() -> Self {
        StereotypeConfig {
            threshold: default_threshold(),
            max_tokens: default_max_tokens(),
        }
    }
}

impl StereotypeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if self.max_tokens == 0 {
            return Err(Error::InvalidConfig("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

/// Result of one detection or assessment call.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<T> {
    Parsed(T),
    /// Both the answer and the repaired answer were unusable.
    Failed(String),
}

fn with_repair<T>(
    llm: &LlmEndpoint,
    req: ChatRequest,
    repair_purpose: &str,
    parse: fn(&str) -> std::result::Result<T, ParseError>,
) -> std::result::Result<Outcome<T>, LlmError> {
    let first = llm.complete(&req)?;
    let err = match parse(&first) {
        Ok(v) => return Ok(Outcome::Parsed(v)),
        Err(e) => e,
    };
    let mut messages = req.messages.clone();
    messages.push(Message::assistant(first));
    messages.push(Message::user(format!(
        "Your answer could not be used ({err}). Answer again using exactly the JSON format of the examples and only the allowed values."
    )));
    let retry = ChatRequest {
        purpose: repair_purpose.to_string(),
        messages,
        ..req
    };
    let second = llm.complete(&retry)?;
    Ok(match parse(&second) {
        Ok(v) => Outcome::Parsed(v),
        Err(e) => Outcome::Failed(e.to_string()),
    })
}

pub fn detection_request(text: &str, context: &str, catalog: &PromptCatalog) -> ChatRequest {
    let system = format!(
        "{}\n\nHere are some examples:\n{}",
        catalog.get(prompts::STEREOTYPE_DETECTION),
        catalog.get(prompts::STEREOTYPE_DETECTION_EXAMPLES)
    );
    ChatRequest::new(
        "detect",
        vec![
            Message::system(system),
            Message::user(format!("Context: {context}\nSentence: {text}")),
        ],
    )
    .temperature(0.0)
}

pub fn assessment_request(text: &str, catalog: &PromptCatalog) -> ChatRequest {
    let system = format!(
        "{}\n{}",
        catalog.get(prompts::STEREOTYPE_ASSESSMENT),
        catalog.get(prompts::STEREOTYPE_ASSESSMENT_EXAMPLES)
    );
    ChatRequest::new(
        "assess",
        vec![Message::system(system), Message::user(format!("Sentence: {text}"))],
    )
    .temperature(0.0)
}

/// Binary stereotype detection for one sentence given its predecessor.
pub fn detect(
    text: &str,
    context: &str,
    llm: &LlmEndpoint,
    catalog: &PromptCatalog,
) -> std::result::Result<Outcome<DetectionResult>, LlmError> {
    with_repair(
        llm,
        detection_request(text, context, catalog),
        "detect-repair",
        DetectionResult::from_response,
    )
}

/// Linguistic-indicator assessment for one sentence.
pub fn assess(
    text: &str,
    llm: &LlmEndpoint,
    catalog: &PromptCatalog,
) -> std::result::Result<Outcome<IndicatorRecord>, LlmError> {
    with_repair(
        llm,
        assessment_request(text, catalog),
        "assess-repair",
        IndicatorRecord::from_response,
    )
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectStats {
    pub examined: usize,
    pub too_long: usize,
    pub failed: usize,
    pub flagged: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssessStats {
    pub assessed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub scored: usize,
    pub removed: usize,
}

/// Text of the previous sentence of the same document, if any. Expects
/// entities in `(doc_id, sent_id)` order.
fn context_of(entities: &[SentenceEntity], i: usize) -> &str {
    let e = &entities[i];
    if i == 0 || e.sent_id == 0 {
        return "";
    }
    let prev = &entities[i - 1];
    if prev.doc_id == e.doc_id && prev.sent_id + 1 == e.sent_id {
        &prev.text
    } else {
        entities
            .iter()
            .find(|p| p.doc_id == e.doc_id && p.sent_id + 1 == e.sent_id)
            .map(|p| p.text.as_str())
            .unwrap_or("")
    }
}

/// Runs detection over every relevant sentence and records the outcome.
/// Transport errors abort the stage before any entity is modified.
pub fn detect_stage(
    entities: &mut [SentenceEntity],
    llm: &LlmEndpoint,
    catalog: &PromptCatalog,
    config: &StereotypeConfig,
    tokenizer: &Tokenizer,
) -> Result<DetectStats> {
    config.validate()?;
    let mut stats = DetectStats::default();
    let mut todo = Vec::new();
    let mut too_long = Vec::new();
    for (i, e) in entities.iter().enumerate() {
        if !e.metadata.relevant_sentence {
            continue;
        }
        stats.examined += 1;
        if tokenizer.tokens(&e.text).len() > config.max_tokens {
            too_long.push(i);
        } else {
            todo.push((i, context_of(entities, i).to_string()));
        }
    }
    let results = bounded_map(&todo, llm.parallelism(), |(i, ctx)| {
        detect(&entities[*i].text, ctx, llm, catalog)
    });
    let results: Vec<_> = results.into_iter().collect::<std::result::Result<_, _>>()?;

    for e in entities.iter_mut() {
        let md = &mut e.metadata;
        md.potential_stereotype = false;
        md.detection = None;
        md.detection_status = None;
    }
    for i in too_long {
        entities[i].metadata.detection_status = Some(DetectionStatus::TooLong);
        stats.too_long += 1;
    }
    for ((i, _), outcome) in todo.iter().zip(results) {
        let md = &mut entities[*i].metadata;
        match outcome {
            Outcome::Parsed(r) => {
                md.potential_stereotype = r.is_stereotype();
                stats.flagged += md.potential_stereotype as usize;
                md.detection = Some(r);
            }
            Outcome::Failed(reason) => {
                log::warn!("detection failed for {}#{}: {reason}", entities[*i].doc_id, entities[*i].sent_id);
                md.detection_status = Some(DetectionStatus::Failed);
                stats.failed += 1;
            }
        }
    }
    Ok(stats)
}

/// Runs assessment over every potential stereotype.
pub fn assess_stage(
    entities: &mut [SentenceEntity],
    llm: &LlmEndpoint,
    catalog: &PromptCatalog,
) -> Result<AssessStats> {
    let todo: Vec<usize> = entities
        .iter()
        .enumerate()
        .filter(|(_, e)| e.metadata.potential_stereotype)
        .map(|(i, _)| i)
        .collect();
    let results = bounded_map(&todo, llm.parallelism(), |&i| assess(&entities[i].text, llm, catalog));
    let results: Vec<_> = results.into_iter().collect::<std::result::Result<_, _>>()?;

    for e in entities.iter_mut() {
        e.metadata.linguistic_indicators = None;
        e.metadata.assessment_status = None;
    }
    let mut stats = AssessStats::default();
    for (&i, outcome) in todo.iter().zip(results) {
        let e = &mut entities[i];
        match outcome {
            Outcome::Parsed(r) => {
                e.metadata.linguistic_indicators = Some(r);
                stats.assessed += 1;
            }
            Outcome::Failed(reason) => {
                log::warn!("assessment failed for {}#{}: {reason}", e.doc_id, e.sent_id);
                e.metadata.assessment_status = Some(AssessmentStatus::Failed);
                stats.failed += 1;
            }
        }
    }
    Ok(stats)
}

/// Scores every assessed potential stereotype and sets `remove_sentence`
/// for scores strictly above the threshold.
pub fn filter(entities: &mut [SentenceEntity], model: &ScoreModel, config: &StereotypeConfig) -> Result<FilterStats> {
    model.validate()?;
    config.validate()?;
    let mut stats = FilterStats::default();
    for e in entities.iter_mut() {
        let md = &mut e.metadata;
        md.score_scsc = match (&md.linguistic_indicators, md.potential_stereotype) {
            (Some(rec), true) => Some(model.score(rec)),
            _ => None,
        };
        md.remove_sentence = md.score_scsc.is_some_and(|s| s > config.threshold);
        stats.scored += md.score_scsc.is_some() as usize;
        stats.removed += md.remove_sentence as usize;
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    const NO: &str = r#"{"has_category_label":"no","full_label":"not-applicable","beliefs_expectancies":"not-applicable","information":"not-applicable","behavior_features_traits":"not-applicable","stereotype":"no"}"#;
    const YES: &str = r#"{"has_category_label":"yes","full_label":"women","beliefs_expectancies":"yes","information":"x","behavior_features_traits":"yes","stereotype":"yes"}"#;
    const RECORD: &str = r#"{"has_category_label":"yes","full_label":"women","target_type":"generic target","connotation":"negative","gram_form":"noun","ling_form":"generic","information":"x","situation":"enduring characteristics","situation_evaluation":"negative","generalization":"abstract"}"#;

    fn entity(doc: &str, sent: usize, text: &str, relevant: bool) -> SentenceEntity {
        let mut e = SentenceEntity {
            doc_id: doc.into(),
            sent_id: sent,
            char_start: 0,
            char_end: text.len(),
            text: text.into(),
            metadata: Default::default(),
        };
        e.metadata.relevant_sentence = relevant;
        e
    }

    #[test]
    fn context_is_previous_sentence_of_same_doc() {
        let ents = vec![entity("a", 0, "A0.", true), entity("a", 1, "A1.", true), entity("b", 0, "B0.", true)];
        assert_eq!(context_of(&ents, 0), "");
        assert_eq!(context_of(&ents, 1), "A0.");
        assert_eq!(context_of(&ents, 2), "");
    }

    #[test]
    fn detection_gates_and_repair() {
        let seen = Arc::new(AtomicUsize::new(0));
        let s = seen.clone();
        let llm = LlmEndpoint::from_fn(move |r: &ChatRequest| {
            s.fetch_add(1, Ordering::SeqCst);
            let user = r.messages[1].content.as_str();
            Ok(match (r.purpose.as_str(), user) {
                (_, u) if u.ends_with("women are emotional.") => YES.to_string(),
                ("detect", u) if u.ends_with("garbled.") => "I think so".to_string(),
                ("detect-repair", _) => "still not json".to_string(),
                _ => NO.to_string(),
            })
        });
        let mut ents = vec![
            entity("a", 0, "He left.", true),
            entity("a", 1, "The sky is blue.", false),
            entity("a", 2, "women are emotional.", true),
            entity("a", 3, "garbled.", true),
            entity("a", 4, "one two three four", true),
        ];
        let cfg = StereotypeConfig {
            max_tokens: 3,
            ..Default::default()
        };
        let stats = detect_stage(&mut ents, &llm, &PromptCatalog::default(), &cfg, &Tokenizer::default()).unwrap();
        assert_eq!(stats, DetectStats { examined: 4, too_long: 1, failed: 1, flagged: 1 });
        assert_eq!(seen.load(Ordering::SeqCst), 4);
        assert!(ents[1].metadata.detection.is_none());
        assert!(ents[2].metadata.potential_stereotype);
        assert_eq!(ents[3].metadata.detection_status, Some(DetectionStatus::Failed));
        assert_eq!(ents[4].metadata.detection_status, Some(DetectionStatus::TooLong));
    }

    #[test]
    fn replay_miss_propagates_without_changes() {
        let llm = LlmEndpoint::replay(Arc::new(crate::llm::Transcript::in_memory()));
        let mut ents = vec![entity("a", 0, "He left.", true)];
        let before = ents.clone();
        let err = detect_stage(&mut ents, &llm, &PromptCatalog::default(), &Default::default(), &Tokenizer::default());
        assert!(matches!(err, Err(Error::Llm(LlmError::ReplayMiss(_)))));
        assert_eq!(ents, before);
    }

    #[test]
    fn assess_and_filter() {
        let llm = LlmEndpoint::from_fn(|r: &ChatRequest| {
            Ok(if r.last_user().contains("bogus") {
                r#"{"has_category_label":"yes","full_label":"x","target_type":"bogus","connotation":"neutral","gram_form":"noun","ling_form":"generic","information":"y","situation":"other","situation_evaluation":"neutral","generalization":"concrete"}"#.to_string()
            } else {
                RECORD.to_string()
            })
        });
        let mut ents = vec![entity("a", 0, "women are bad.", true), entity("a", 1, "bogus women.", true), entity("a", 2, "no.", true)];
        ents[0].metadata.potential_stereotype = true;
        ents[1].metadata.potential_stereotype = true;
        let stats = assess_stage(&mut ents, &llm, &PromptCatalog::default()).unwrap();
        assert_eq!(stats, AssessStats { assessed: 1, failed: 1 });
        assert_eq!(ents[1].metadata.assessment_status, Some(AssessmentStatus::Failed));

        let f = filter(&mut ents, &ScoreModel::default(), &StereotypeConfig::default()).unwrap();
        assert_eq!(f, FilterStats { scored: 1, removed: 1 });
        assert_eq!(ents[0].metadata.score_scsc, Some(1.0));
        assert!(ents[0].metadata.remove_sentence);
        assert!(!ents[1].metadata.remove_sentence);
        assert!(ents[2].metadata.score_scsc.is_none());
    }

    #[test]
    fn threshold_is_strict() {
        let mut model = ScoreModel::default();
        for table in model.weights.values_mut() {
            table.values_mut().for_each(|w| *w = 0.0);
        }
        model.intercept = 0.63;
        model.scale_min = 0.0;
        model.scale_max = 1.0;
        let mut e = entity("a", 0, "x", true);
        e.metadata.potential_stereotype = true;
        e.metadata.linguistic_indicators = Some(IndicatorRecord::from_response(RECORD).unwrap());
        let mut ents = vec![e];
        filter(&mut ents, &model, &StereotypeConfig::default()).unwrap();
        assert_eq!(ents[0].metadata.score_scsc, Some(0.63));
        assert!(!ents[0].metadata.remove_sentence);
        model.intercept = 0.64;
        filter(&mut ents, &model, &StereotypeConfig::default()).unwrap();
        assert!(ents[0].metadata.remove_sentence);
    }
}
