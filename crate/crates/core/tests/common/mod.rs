#![allow(dead_code)]

use std::path::PathBuf;

use databias::corpus::{segment_corpus, Document, SentenceEntity, Segmenter};
use databias::llm::{ChatRequest, LlmEndpoint, LlmError};
use databias::repbias::{match_all, Matcher};
use databias::wordlist::Lexicon;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(rel)
}

pub fn gender() -> Lexicon {
    Lexicon::load_dir(data("wordlists/gender"), "gender", None).unwrap()
}

/// Entries of a shipped word list, read straight from its JSON file.
pub fn raw_entries(attribute: &str, group: &str) -> Vec<String> {
    let path = data(&format!("wordlists/{attribute}/{group}.json"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e.as_str().unwrap().to_string())
        .collect()
}

pub fn segmented(docs: &[Document], lexicon: &Lexicon) -> (Matcher, Vec<SentenceEntity>) {
    let matcher = Matcher::new(lexicon);
    let mut entities = segment_corpus(docs, &Segmenter::default());
    match_all(&matcher, &mut entities);
    (matcher, entities)
}

/// First entry of the final candidate line of a word-choice prompt.
pub fn first_candidate(prompt: &str) -> String {
    prompt
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix("**Candidates**: "))
        .and_then(|c| c.split(", ").next())
        .unwrap_or_default()
        .to_string()
}

/// Approves every rewrite and always picks the first candidate.
pub fn approving_stub() -> LlmEndpoint {
    LlmEndpoint::from_fn(|req: &ChatRequest| -> Result<String, LlmError> {
        Ok(match req.purpose.as_str() {
            "cda-verify" => "VALID".into(),
            "cda-select" => first_candidate(req.last_user()),
            other => return Err(LlmError::Transport(format!("unexpected request {other}"))),
        })
    })
}

const OPENERS: &[&str] = &["The", "A", "Mr.", "Dr.", "\"Well", "It", "Yes", "On Monday", "e.g. this"];
const WORDS: &[&str] = &["went", "home", "he", "she", "said", "quiet", "U.S.", "fine", "3.5", "café", "naïve", "x"];
const ENDS: &[&str] = &[".", "!", "?", "...", ".\"", "?!", ""];
const GAPS: &[&str] = &[" ", "  ", "\n", "\n\n", "\t", " \u{a0}", "\r\n"];

/// Random document text: sentences of mixed words, abbreviations and
/// punctuation joined by varied whitespace, with optional leading and
/// trailing whitespace.
pub fn random_text(rng: &mut impl Rng) -> String {
    let mut text = String::new();
    if rng.random_bool(0.2) {
        text.push_str(GAPS[rng.random_range(0..GAPS.len())]);
    }
    for s in 0..rng.random_range(0..6) {
        if s > 0 {
            text.push_str(GAPS[rng.random_range(0..GAPS.len())]);
        }
        text.push_str(OPENERS[rng.random_range(0..OPENERS.len())]);
        for _ in 0..rng.random_range(0..8) {
            text.push(' ');
            text.push_str(WORDS[rng.random_range(0..WORDS.len())]);
        }
        text.push_str(ENDS[rng.random_range(0..ENDS.len())]);
    }
    if rng.random_bool(0.2) {
        text.push_str(GAPS[rng.random_range(0..GAPS.len())]);
    }
    text
}

pub fn random_corpus(seed: u64, n: usize) -> Vec<Document> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| Document::new(format!("d{i:05}"), random_text(&mut rng))).collect()
}

pub const MALE: &[&str] = &["he", "man", "king", "father", "brother", "husband", "boy", "son", "uncle"];
pub const FEMALE: &[&str] = &["she", "woman", "queen", "mother", "sister", "wife", "girl", "daughter", "aunt"];

fn title(w: &str) -> String {
    let mut c = w.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

/// `n` one-sentence documents with a single gendered word each, three male
/// for every female one. Every tenth male sentence carries a political
/// keyword, a historical keyword or a year.
pub fn imbalanced_corpus(n: usize) -> Vec<Document> {
    (0..n)
        .map(|i| {
            let text = if i % 4 == 3 {
                format!("{} walked to the market.", title(FEMALE[i % FEMALE.len()]))
            } else {
                let w = title(MALE[i % MALE.len()]);
                match i % 30 {
                    0 => format!("{w} spoke about the election."),
                    10 => format!("{w} fought in the war."),
                    20 => format!("{w} was born in 1984."),
                    _ => format!("{w} walked to the market."),
                }
            };
            Document::new(format!("s{i:05}"), text)
        })
        .collect()
}
