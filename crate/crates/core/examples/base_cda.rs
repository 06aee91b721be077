//! Base counterfactual augmentation: each eligible sentence has its
//! majority-group words swapped to the minority group with probability
//! 0.5. Prechecks keep political, historical and dated sentences intact.
//!
//!     cargo run --example base_cda

use databias::cda::{run_cda, CdaConfig, CdaMode, PrecheckLists};
use databias::corpus::{load_corpus, segment_corpus, Segmenter};
use databias::prompts::PromptCatalog;
use databias::repbias::{match_all, Matcher};
use databias::wordlist::Lexicon;

fn main() -> databias::Result<()> {
    let root = env!("CARGO_MANIFEST_DIR");
    let corpus = load_corpus(format!("{root}/data/sample_corpus.jsonl"))?;
    let lexicon = Lexicon::load_dir(format!("{root}/data/wordlists/gender"), "gender", None)?;
    let matcher = Matcher::new(&lexicon);
    let mut entities = segment_corpus(&corpus, &Segmenter::default());
    match_all(&matcher, &mut entities);

    let config = CdaConfig {
        mode: CdaMode::Base,
        rng_seed: 7,
        ..Default::default()
    };
    let report = run_cda(
        &mut entities,
        &lexicon,
        &matcher,
        &config,
        &PrecheckLists::default(),
        None,
        &PromptCatalog::default(),
    )?;

    for e in &entities {
        if let Some(new) = &e.metadata.text_cda {
            println!("- {}\n+ {new}", e.text);
        } else if let Some(reason) = e.metadata.skip_reason {
            println!("  [{}] {}", reason.as_str(), e.text);
        }
    }
    println!(
        "substituted {} of {} eligible, DR {:.4} -> {:.4}",
        report.substituted, report.eligible, report.dr_before, report.dr_after
    );
    Ok(())
}
