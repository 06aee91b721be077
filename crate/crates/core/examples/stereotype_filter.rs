//! Two-step stereotype handling on a few sentences: detection with the
//! previous sentence as context, indicator assessment for the flagged
//! ones, then scoring and threshold filtering.
//!
//!     cargo run --example stereotype_filter

use databias::corpus::{segment_corpus, Document, Segmenter};
use databias::llm::{ChatRequest, LlmEndpoint};
use databias::prompts::PromptCatalog;
use databias::repbias::{match_all, Matcher, Tokenizer};
use databias::stereotype::{assess_stage, detect_stage, filter, ScoreModel, StereotypeConfig};
use databias::wordlist::Lexicon;

const NOT_STEREOTYPE: &str = r#"{"has_category_label":"yes","full_label":"he","beliefs_expectancies":"no","information":"not-applicable","behavior_features_traits":"no","stereotype":"no"}"#;
const STEREOTYPE: &str = r#"{"has_category_label":"yes","full_label":"young women","beliefs_expectancies":"yes","information":"are usually too emotional to make a decision","behavior_features_traits":"yes","stereotype":"yes"}"#;
const STRONG: &str = r#"{"has_category_label":"yes","full_label":"young women","target_type":"generic target","connotation":"neutral","gram_form":"noun","ling_form":"generic","information":"are usually too emotional","situation":"enduring characteristics","situation_evaluation":"negative","generalization":"abstract"}"#;
const WEAK: &str = r#"{"has_category_label":"yes","full_label":"my sister","target_type":"specific target","connotation":"neutral","gram_form":"noun","ling_form":"individual","information":"likes to cook","situation":"situational behaviour","situation_evaluation":"positive","generalization":"concrete"}"#;

fn scripted(req: &ChatRequest) -> Result<String, databias::llm::LlmError> {
    let text = req.last_user();
    Ok(match req.purpose.as_str() {
        "detect" if text.contains("emotional") || text.contains("cook") => STEREOTYPE,
        "detect" => NOT_STEREOTYPE,
        "assess" if text.contains("emotional") => STRONG,
        "assess" => WEAK,
        _ => "",
    }
    .to_string())
}

fn main() -> databias::Result<()> {
    let docs = vec![
        Document::new("a", "She cried a lot. Young women are usually too emotional to make a decision!"),
        Document::new("b", "My sister likes to cook on Sundays. He works at the station."),
    ];
    let lexicon = Lexicon::load_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/data/wordlists/gender"), "gender", None)?;
    let mut entities = segment_corpus(&docs, &Segmenter::default());
    match_all(&Matcher::new(&lexicon), &mut entities);

    let llm = LlmEndpoint::from_fn(scripted);
    let catalog = PromptCatalog::default();
    let config = StereotypeConfig::default();
    let detected = detect_stage(&mut entities, &llm, &catalog, &config, &Tokenizer::default())?;
    let assessed = assess_stage(&mut entities, &llm, &catalog)?;
    let filtered = filter(&mut entities, &ScoreModel::default(), &config)?;
    println!("{detected:?}\n{assessed:?}\n{filtered:?}");

    for e in &entities {
        let md = &e.metadata;
        let score = md.score_scsc.map(|s| format!("{s:.3}")).unwrap_or_else(|| "-".into());
        let verdict = if md.remove_sentence { "removed" } else { "kept" };
        println!("{verdict:>7}  score {score:>5}  {}", e.text);
    }
    Ok(())
}
