//! Record-then-replay: every LLM exchange is written to a JSONL transcript
//! keyed by its request, and replay mode answers from the transcript
//! without touching the network.
//!
//!     cargo run --example transcript_replay

use std::sync::Arc;

use databias::llm::{ChatBackend, ChatRequest, LlmEndpoint, LlmError, Message, Transcript};

#[derive(Debug)]
struct Echo;

impl ChatBackend for Echo {
    fn complete(&self, req: &ChatRequest) -> Result<String, LlmError> {
        Ok(format!("echo: {}", req.last_user()))
    }
}

fn main() -> databias::Result<()> {
    let dir = std::env::temp_dir().join(format!("databias-transcript-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| databias::Error::io(&dir, e))?;
    let path = dir.join("transcript.jsonl");

    let request = ChatRequest::new("demo", vec![Message::user("hello")]).temperature(0.0);
    let recorder = LlmEndpoint::record(Arc::new(Echo), Arc::new(Transcript::open(&path)?));
    println!("recorded: {}", recorder.complete(&request)?);

    let replay = LlmEndpoint::replay(Arc::new(Transcript::open(&path)?));
    println!("replayed: {}", replay.complete(&request)?);

    let unseen = ChatRequest::new("demo", vec![Message::user("goodbye")]);
    match replay.complete(&unseen) {
        Err(e) => println!("unseen request: {e}"),
        Ok(text) => println!("unexpected answer: {text}"),
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
