//! Full pipeline on the sample corpus: segment, match, detect, assess,
//! filter, augment and rebuild. The first pass records a scripted model
//! into a transcript, the second replays it and resumes from the
//! checkpoint, rerunning only what changed. A third pass replays the
//! transcript from scratch and checks the output is identical.
//!
//!     cargo run --example pipeline_replay

use std::sync::Arc;

use databias::cda::CdaMode;
use databias::llm::{ChatBackend, ChatRequest, LlmEndpoint, LlmError, Transcript};
use databias::pipeline::{artifact_digest, Pipeline, PipelineConfig, DEBIASED_FILE};

const PLAIN: &str = r#"{"has_category_label":"no","full_label":"not-applicable","beliefs_expectancies":"no","information":"not-applicable","behavior_features_traits":"no","stereotype":"no"}"#;
const FLAGGED: &str = r#"{"has_category_label":"yes","full_label":"women","beliefs_expectancies":"yes","information":"are usually too emotional","behavior_features_traits":"yes","stereotype":"yes"}"#;
const INDICATORS: &str = r#"{"has_category_label":"yes","full_label":"women","target_type":"generic target","connotation":"neutral","gram_form":"noun","ling_form":"generic","information":"are usually too emotional","situation":"enduring characteristics","situation_evaluation":"negative","generalization":"abstract"}"#;

/// First entry of the prompt's final candidate line: the preferred counterpart.
fn first_candidate(prompt: &str) -> String {
    prompt
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix("**Candidates**: "))
        .and_then(|c| c.split(", ").next())
        .unwrap_or_default()
        .to_string()
}

#[derive(Debug)]
struct Scripted;

impl ChatBackend for Scripted {
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        let text = req.last_user();
        Ok(match req.purpose.as_str() {
            "detect" if text.contains("emotional") => FLAGGED.into(),
            "detect" => PLAIN.into(),
            "assess" => INDICATORS.into(),
            "cda-verify" => "VALID".into(),
            "cda-select" => first_candidate(text),
            _ => String::new(),
        })
    }
}

fn main() -> databias::Result<()> {
    let root = env!("CARGO_MANIFEST_DIR");
    let out = std::env::temp_dir().join(format!("databias-run-{}", std::process::id()));
    std::fs::create_dir_all(&out).map_err(|e| databias::Error::io(&out, e))?;
    let transcript = out.join("transcript.jsonl");
    let mut config = PipelineConfig::new(
        format!("{root}/data/sample_corpus.jsonl"),
        format!("{root}/data/wordlists/gender"),
        "gender",
        out.join("run"),
    );
    config.cda.mode = CdaMode::Gc;
    let recorder = || -> databias::Result<LlmEndpoint> {
        Ok(LlmEndpoint::record(Arc::new(Scripted), Arc::new(Transcript::open(&transcript)?)))
    };

    let summary = Pipeline::open(config.clone())?.with_endpoint(recorder()?).run(false)?;
    print!("{}", summary.table());

    // A new seed only invalidates augmentation and rebuild.
    config.seed = 1;
    let mut pipeline = Pipeline::open(config.clone())?.with_endpoint(recorder()?);
    pipeline.run(true)?;
    for t in pipeline.timings() {
        println!("{:<8} {}", t.stage.to_string(), if t.resumed { "resumed" } else { "ran" });
    }
    let recorded = artifact_digest(pipeline.path(DEBIASED_FILE))?;

    // Replaying from scratch reproduces the run without the model.
    config.output_dir = out.join("replayed");
    let replay = LlmEndpoint::replay(Arc::new(Transcript::open(&transcript)?));
    let mut pipeline = Pipeline::open(config)?.with_endpoint(replay);
    let summary = pipeline.run(false)?;
    print!("{}", summary.table());
    let replayed = artifact_digest(pipeline.path(DEBIASED_FILE))?;
    println!("replay identical: {}", recorded == replayed);
    std::fs::remove_dir_all(&out).ok();
    Ok(())
}
