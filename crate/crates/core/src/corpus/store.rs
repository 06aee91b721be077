//! JSONL metadata store: one [`SentenceEntity`] per line, sorted by
//! `(doc_id, sent_id)`.

use std::fs;
use std::path::Path;

use super::SentenceEntity;
use crate::error::{Error, Result};

pub(crate) fn store_bytes(entities: &[SentenceEntity]) -> Result<Vec<u8>> {
    let mut order: Vec<&SentenceEntity> = entities.iter().collect();
    order.sort_by(|a, b| a.key().cmp(&b.key()));
    let mut out = Vec::new();
    for e in order {
        serde_json::to_writer(&mut out, e)?;
        out.push(b'\n');
    }
    Ok(out)
}

/// Writes the store atomically (temp file + rename) so an interrupted stage
/// never leaves a truncated checkpoint behind.
pub fn write_store(path: impl AsRef<Path>, entities: &[SentenceEntity]) -> Result<()> {
    let path = path.as_ref();
    let bytes = store_bytes(entities)?;
    let tmp = path.with_extension("jsonl.tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_store(path: impl AsRef<Path>) -> Result<Vec<SentenceEntity>> {
    let path = path.as_ref();
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_store(&raw)
}

pub(crate) fn parse_store(raw: &str) -> Result<Vec<SentenceEntity>> {
    raw.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::StoreCorrupt {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{segment, Document, SkipReason};

    #[test]
    fn sorted_and_optionals_absent() {
        let mut ents = segment(&Document::new("b", "One. Two."));
        ents.extend(segment(&Document::new("a", "Three.")));
        ents[1].metadata.skip_reason = Some(SkipReason::Year);
        let text = String::from_utf8(store_bytes(&ents).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with(r#"{"doc_id":"a""#));
        assert!(!text.contains("null"));
        assert!(!lines[0].contains("score_scsc"));
        assert!(lines[2].contains(r#""skip_reason":"year""#));
        let back = parse_store(&text).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back[2], ents[1]);
    }

    #[test]
    fn corrupt_line_is_reported() {
        let ents = segment(&Document::new("a", "One. Two."));
        let mut text = String::from_utf8(store_bytes(&ents).unwrap()).unwrap();
        text.push_str("{not json\n");
        match parse_store(&text) {
            Err(Error::StoreCorrupt { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
