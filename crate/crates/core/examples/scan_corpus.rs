//! Match the bundled gender word lists against a corpus and report DR,
//! overall and per document.
//!
//!     cargo run --example scan_corpus [corpus.jsonl]

use std::path::PathBuf;

use databias::corpus::{load_corpus, segment_corpus, Segmenter};
use databias::repbias::{emit_report, match_all, Matcher};
use databias::wordlist::Lexicon;

fn main() -> databias::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let corpus = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| root.join("data/sample_corpus.jsonl"));
    let docs = load_corpus(&corpus)?;
    let lexicon = Lexicon::load_dir(root.join("data/wordlists/gender"), "gender", None)?;
    let matcher = Matcher::new(&lexicon);

    let mut entities = segment_corpus(&docs, &Segmenter::default());
    match_all(&matcher, &mut entities);
    for e in entities.iter().filter(|e| e.metadata.relevant_sentence) {
        println!("{}#{} {:?}", e.doc_id, e.sent_id, e.metadata.words_per_group);
    }

    let report = emit_report(&lexicon.spec, &entities);
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
