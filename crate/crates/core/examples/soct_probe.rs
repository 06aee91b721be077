//! Occupation completion probe against a model. A canned endpoint answers
//! here; point `--endpoint` of the `soct` subcommand at a real server to
//! probe one.
//!
//!     cargo run --example soct_probe

use databias::llm::{ChatRequest, LlmEndpoint};
use databias::soct::{report, run_probe, SoctConfig};
use databias::wordlist::Lexicon;

fn main() -> databias::Result<()> {
    let lexicon = Lexicon::load_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/data/wordlists/gender"), "gender", None)?;
    let config = SoctConfig {
        runs_per_template: 10,
        ..Default::default()
    };
    let split = config.split();
    // Mostly women in the first half, mostly men in the second, with some
    // neutral answers that stay unclassified.
    let llm = LlmEndpoint::from_fn(move |req: &ChatRequest| {
        let mut parts = req.purpose.split(':').skip(1).map(|p| p.parse::<usize>().unwrap());
        let (t, r) = (parts.next().unwrap(), parts.next().unwrap());
        let text = match (t < split, r % 5) {
            (_, 4) => "professional who works long hours.",
            (true, 3) | (false, 0) => "man who loves the job.",
            (true, _) => "woman who cares for her patients.",
            (false, _) => "man who works with his hands.",
        };
        Ok(text.to_string())
    });

    let probe = run_probe(&config, &llm)?;
    let out = report(&probe, &config, &lexicon);
    for (name, half) in [("first half", &out.first_half), ("second half", &out.second_half)] {
        println!(
            "{name}: {:?} DR {:.3} direction {} unclassified {}",
            half.counts.counts, half.dr, half.direction, half.unclassified
        );
    }
    Ok(())
}
