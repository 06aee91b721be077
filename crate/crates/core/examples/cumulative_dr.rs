//! How DR settles as word lists grow: add words in order of corpus
//! frequency and recompute DR after each step. Writes the curve as CSV to
//! stdout.
//!
//!     cargo run --example cumulative_dr [corpus.jsonl] > curve.csv

use std::path::PathBuf;

use databias::corpus::load_corpus;
use databias::repbias::{cumulative_dr, write_cumulative_csv, Tokenizer};
use databias::wordlist::{compute_frequencies, Lexicon};

fn main() -> databias::Result<()> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let corpus = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| root.join("data/sample_corpus.jsonl"));
    let docs = load_corpus(&corpus)?;
    let lexicon = Lexicon::load_dir(root.join("data/wordlists/gender"), "gender", None)?;

    let words: Vec<String> = lexicon.lists.iter().flat_map(|l| l.entries.clone()).collect();
    let freqs = compute_frequencies(&words, &docs, &Tokenizer::default());
    let series = cumulative_dr(&lexicon.lists, &freqs);
    write_cumulative_csv(std::io::stdout().lock(), &series).expect("stdout");

    let last = series.last().map(|p| p.dr).unwrap_or(0.0);
    let settled = series.iter().position(|p| (p.dr - last).abs() < 1e-9).unwrap_or(0);
    eprintln!("final DR {last:.4}, reached at list length {}", settled + 1);
    Ok(())
}
