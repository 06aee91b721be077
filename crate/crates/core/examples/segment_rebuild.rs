//! Split documents into sentences and put them back together, with and
//! without edits.
//!
//!     cargo run --example segment_rebuild

use databias::corpus::{build_debiased, segment_corpus, Document, Segmenter};

fn main() -> databias::Result<()> {
    let docs = vec![
        Document::new("a", "Mr. Smith arrived at noon.  He sat down.\nThen he left!"),
        Document::new("b", "He is a software developer. He likes \"quiet\" offices."),
    ];
    let mut entities = segment_corpus(&docs, &Segmenter::default());
    for e in &entities {
        println!("{}#{} [{}..{}] {:?}", e.doc_id, e.sent_id, e.char_start, e.char_end, e.text);
    }

    let untouched = build_debiased(&entities, &docs)?;
    assert_eq!(untouched, docs);
    println!("rebuild without edits is byte-identical");

    entities[1].metadata.remove_sentence = true;
    entities[3].metadata.text_cda = Some("She is a software developer.".into());
    for d in build_debiased(&entities, &docs)? {
        println!("{}: {:?}", d.doc_id, d.text);
    }
    Ok(())
}
