//! Word list construction: LLM generation over several runs, expansion
//! with plurals and counterparts, then frequency filtering against a
//! corpus. A scripted endpoint stands in for the model.
//!
//!     cargo run --example wordlist_generation

use std::path::PathBuf;

use databias::corpus::load_corpus;
use databias::llm::{ChatRequest, LlmEndpoint};
use databias::prompts::PromptCatalog;
use databias::repbias::Tokenizer;
use databias::wordlist::{
    compute_frequencies, expand_completeness, filter_and_select, generate_raw, AttributeSpec, GenerationParams,
    WordList,
};

fn scripted(req: &ChatRequest) -> Result<String, databias::llm::LlmError> {
    let parts: Vec<&str> = req.purpose.split(':').collect();
    let answer = match parts.as_slice() {
        ["wordlist-gen", _, "female", run] => {
            if *run == "0" {
                r#"["woman", "women", "she", "her", "queen", "wife"]"#
            } else {
                r#"["girl", "mother", "she", "sister"]"#
            }
        }
        ["wordlist-gen", _, "male", _] => r#"Sure! ["man", "men", "he", "his", "king", "husband", "boy"]"#,
        ["wordlist-complete", _, _, "wife"] => {
            r#"{"plural": "wives", "counterparts": {"male": {"singular": "husband", "plural": "husbands"}}}"#
        }
        ["wordlist-complete", _, _, "king"] => {
            r#"{"plural": "kings", "counterparts": {"female": {"singular": "queen", "plural": "queens"}}}"#
        }
        ["wordlist-complete", ..] => r#"{"plural": null, "counterparts": {}}"#,
        _ => "[]",
    };
    Ok(answer.to_string())
}

fn main() -> databias::Result<()> {
    let spec = AttributeSpec::new("gender", vec!["female".into(), "male".into()])?;
    let params = GenerationParams::new(2, 10, 6)?;
    let llm = LlmEndpoint::from_fn(scripted);
    let catalog = PromptCatalog::default();

    let raw = generate_raw(&spec, &params, &llm, &catalog)?;
    println!("generated: {:?}", raw.lists);

    let expanded = expand_completeness(&spec, &raw.lists, &llm, &catalog);
    println!("expanded: {:?}", expanded.lists);
    println!("counterparts: {:?}", expanded.counterparts);

    let corpus = load_corpus(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/sample_corpus.jsonl"))?;
    let tokenizer = Tokenizer::default();
    for (group, words) in &expanded.lists {
        let mut list = WordList::new("gender", group.clone(), words.clone()).normalized();
        list.counterpart = expanded.counterparts.get(group).cloned().unwrap_or_default();
        let freqs = compute_frequencies(&list.entries, &corpus, &tokenizer);
        let kept = filter_and_select(&list, &freqs, &params);
        let shown: Vec<String> = kept.entries.iter().map(|w| format!("{w}({})", freqs[w])).collect();
        println!("{group}: {}", shown.join(" "));
    }
    Ok(())
}
