//! Guided counterfactual augmentation: a substitution plan moves exactly
//! the excess occurrences of the majority group, an LLM picks replacement
//! words for most sentences and checks every rewrite before it is kept.
//!
//!     cargo run --example gc_cda

use databias::cda::{plan_targets, run_cda, CdaConfig, CdaEndpoints, CdaMode, PrecheckLists};
use databias::corpus::{segment_corpus, Document, Segmenter};
use databias::llm::{ChatRequest, LlmEndpoint};
use databias::prompts::PromptCatalog;
use databias::repbias::{match_all, GroupCounts, Matcher};
use databias::wordlist::Lexicon;

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

fn scripted(req: &ChatRequest) -> Result<String, databias::llm::LlmError> {
    Ok(match req.purpose.as_str() {
        // A checker that catches the broken idiom.
        "cda-verify" if req.last_user().contains("woman of the house") => "INVALID".into(),
        "cda-verify" => "VALID".into(),
        "cda-select" => first_candidate(req.last_user()),
        _ => String::new(),
    })
}

fn main() -> databias::Result<()> {
    let root = env!("CARGO_MANIFEST_DIR");
    let lexicon = Lexicon::load_dir(format!("{root}/data/wordlists/gender"), "gender", None)?;
    let matcher = Matcher::new(&lexicon);
    let docs = vec![
        Document::new("a", "He is the man of the house. The man fixed the roof. The king waved."),
        Document::new("b", "His brother called. A man and a boy walked home. She smiled."),
        Document::new("c", "He won the 1998 election. The father cooked dinner."),
    ];
    let mut entities = segment_corpus(&docs, &Segmenter::default());
    match_all(&matcher, &mut entities);

    let counts = GroupCounts::from_entities(&lexicon.spec, &entities);
    let plan = plan_targets(&counts);
    println!("counts {:?}, excess {:?} deficit {:?}", counts.counts, plan.excess, plan.deficit);

    let llm = LlmEndpoint::from_fn(scripted);
    let config = CdaConfig {
        mode: CdaMode::Gc,
        rng_seed: 3,
        ..Default::default()
    };
    let report = run_cda(
        &mut entities,
        &lexicon,
        &matcher,
        &config,
        &PrecheckLists::default(),
        Some(CdaEndpoints::shared(&llm)),
        &PromptCatalog::default(),
    )?;

    for e in &entities {
        match (&e.metadata.text_cda, e.metadata.skip_reason) {
            (Some(new), _) => println!("- {}\n+ {new}", e.text),
            (None, Some(reason)) => println!("  [{}] {}", reason.as_str(), e.text),
            _ => {}
        }
    }
    println!(
        "substituted {}, rejected {}, DR {:.4} -> {:.4}, selections {:?}",
        report.substituted, report.rejected, report.dr_before, report.dr_after, report.selections
    );
    Ok(())
}
