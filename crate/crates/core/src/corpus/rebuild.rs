use std::collections::HashMap;

use super::{Document, SentenceEntity};
use crate::error::{Error, Result};

/// Reassembles documents from their sentence entities.
///
/// Removed sentences are dropped together with the whitespace that preceded
/// them; sentences with `text_cda` are replaced; everything else, including
/// the original separators, is copied byte for byte. Documents without any
/// entity are emitted unchanged, documents whose entities were all removed
/// are emitted empty.
pub fn build_debiased(entities: &[SentenceEntity], corpus: &[Document]) -> Result<Vec<Document>> {
    let mut by_doc: HashMap<&str, Vec<&SentenceEntity>> = HashMap::new();
    for e in entities {
        by_doc.entry(e.doc_id.as_str()).or_default().push(e);
    }
    let mut out = Vec::with_capacity(corpus.len());
    for doc in corpus {
        let Some(mut ents) = by_doc.remove(doc.doc_id.as_str()) else {
            out.push(doc.clone());
            continue;
        };
        ents.sort_by_key(|e| e.sent_id);
        out.push(Document {
            doc_id: doc.doc_id.clone(),
            text: rebuild_text(doc, &ents)?,
        });
    }
    if let Some(unknown) = by_doc.keys().min() {
        return Err(Error::UnknownDocId(unknown.to_string()));
    }
    Ok(out)
}

fn rebuild_text(doc: &Document, ents: &[&SentenceEntity]) -> Result<String> {
    let src = &doc.text;
    let mut prev_end = 0;
    for e in ents {
        if e.char_start < prev_end || e.char_end < e.char_start || e.char_end > src.len() {
            return Err(Error::BadOffsets {
                doc_id: e.doc_id.clone(),
                sent_id: e.sent_id,
                start: e.char_start,
                end: e.char_end,
            });
        }
        prev_end = e.char_end;
    }

    let mut text = String::with_capacity(src.len());
    let mut emitted = false;
    let mut prev_end = 0;
    for e in ents {
        let separator = &src[prev_end..e.char_start];
        prev_end = e.char_end;
        let Some(body) = e.final_text() else {
            continue;
        };
        if emitted {
            text.push_str(separator);
        } else {
            // the first kept sentence inherits the document's leading bytes
            text.push_str(&src[..ents[0].char_start]);
        }
        text.push_str(body);
        emitted = true;
    }
    if emitted {
        text.push_str(&src[prev_end..]);
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::segment;

    fn doc(text: &str) -> Document {
        Document::new("d", text)
    }

    #[test]
    fn identity_without_flags() {
        let corpus = vec![doc("  A b.  C d!\nE f?  "), Document::new("e", "")];
        let ents: Vec<_> = corpus.iter().flat_map(segment).collect();
        assert_eq!(build_debiased(&ents, &corpus).unwrap(), corpus);
    }

    #[test]
    fn removed_middle_sentence() {
        let corpus = vec![doc("One here.  Two here.\tThree here.")];
        let mut ents = segment(&corpus[0]);
        ents[1].metadata.remove_sentence = true;
        let out = build_debiased(&ents, &corpus).unwrap();
        assert_eq!(out[0].text, "One here.\tThree here.");
    }

    #[test]
    fn removed_first_sentence_keeps_prefix() {
        let corpus = vec![doc(" One here. Two here.")];
        let mut ents = segment(&corpus[0]);
        ents[0].metadata.remove_sentence = true;
        let out = build_debiased(&ents, &corpus).unwrap();
        assert_eq!(out[0].text, " Two here.");
    }

    #[test]
    fn all_removed_is_empty() {
        let corpus = vec![doc("One here. Two here. ")];
        let mut ents = segment(&corpus[0]);
        for e in &mut ents {
            e.metadata.remove_sentence = true;
        }
        assert_eq!(build_debiased(&ents, &corpus).unwrap()[0].text, "");
    }

    #[test]
    fn counterfactual_replaces_text() {
        let corpus = vec![doc("He is here. Bye.")];
        let mut ents = segment(&corpus[0]);
        ents[0].metadata.text_cda = Some("She is here.".into());
        assert_eq!(
            build_debiased(&ents, &corpus).unwrap()[0].text,
            "She is here. Bye."
        );
    }

    #[test]
    fn unknown_doc_is_an_error() {
        let corpus = vec![doc("x.")];
        let mut ents = segment(&corpus[0]);
        ents[0].doc_id = "zzz".into();
        assert!(matches!(
            build_debiased(&ents, &corpus),
            Err(Error::UnknownDocId(id)) if id == "zzz"
        ));
    }

    #[test]
    fn bad_offsets_are_rejected() {
        let corpus = vec![doc("short.")];
        let mut ents = segment(&corpus[0]);
        ents[0].char_end = 100;
        assert!(matches!(
            build_debiased(&ents, &corpus),
            Err(Error::BadOffsets { .. })
        ));
    }
}
