use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{read_store, SentenceEntity};
use crate::error::Result;
use crate::repbias::{compute_dr, GroupCounts};
use crate::wordlist::AttributeSpec;

/// Overview of one attribute across the pipeline, read from the metadata
/// store. DR values are `None` when no group word occurs at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub attribute: String,
    pub documents: usize,
    pub sentences: usize,
    pub relevant_sentences: u64,
    pub occurrences: BTreeMap<String, u64>,
    pub dr: Option<f64>,
    pub potential_stereotypes: usize,
    pub scored: usize,
    pub removed: usize,
    pub substituted: usize,
    pub skip_reasons: BTreeMap<String, usize>,
    pub occurrences_after: BTreeMap<String, u64>,
    pub dr_after: Option<f64>,
}

fn dr_or_none(c: &GroupCounts) -> Option<f64> {
    (!c.no_observations()).then(|| compute_dr(c))
}

fn to_map(c: &GroupCounts) -> BTreeMap<String, u64> {
    c.counts.iter().map(|(g, n)| (g.clone(), *n)).collect()
}

pub fn report_summary(spec: &AttributeSpec, entities: &[SentenceEntity]) -> Summary {
    let before = GroupCounts::from_entities(spec, entities);
    let after = GroupCounts::from_final(spec, entities);
    let mut docs: Vec<&str> = entities.iter().map(|e| e.doc_id.as_str()).collect();
    docs.dedup();
    let mut skip_reasons = BTreeMap::new();
    for r in entities.iter().filter_map(|e| e.metadata.skip_reason) {
        *skip_reasons.entry(r.as_str().to_string()).or_insert(0) += 1;
    }
    let count = |f: &dyn Fn(&SentenceEntity) -> bool| entities.iter().filter(|e| f(e)).count();
    Summary {
        attribute: spec.attribute.clone(),
        documents: docs.len(),
        sentences: entities.len(),
        relevant_sentences: before.relevant_sentences,
        occurrences: to_map(&before),
        dr: dr_or_none(&before),
        potential_stereotypes: count(&|e| e.metadata.potential_stereotype),
        scored: count(&|e| e.metadata.score_scsc.is_some()),
        removed: count(&|e| e.metadata.remove_sentence),
        substituted: count(&|e| e.metadata.text_cda.is_some()),
        skip_reasons,
        occurrences_after: to_map(&after),
        dr_after: dr_or_none(&after),
    }
}

/// Summary of the store at `path`.
pub fn summarize_store(spec: &AttributeSpec, path: impl AsRef<Path>) -> Result<Summary> {
    Ok(report_summary(spec, &read_store(path)?))
}

fn fmt_dr(dr: Option<f64>) -> String {
    dr.map(|d| format!("{d:.4}")).unwrap_or_else(|| "n/a".into())
}

impl Summary {
    /// Plain-text table with one row per attribute.
    pub fn table(&self) -> String {
        let groups: Vec<String> = self
            .occurrences
            .iter()
            .map(|(g, n)| format!("{g}={n}"))
            .collect();
        let header = [
            "attribute",
            "relevant sentences",
            "occurrences per group",
            "DR",
            "filtered stereotypes",
            "modified sentences",
            "DR after CDA",
        ];
        let row = [
            self.attribute.clone(),
            self.relevant_sentences.to_string(),
            groups.join(" "),
            fmt_dr(self.dr),
            self.removed.to_string(),
            self.substituted.to_string(),
            fmt_dr(self.dr_after),
        ];
        let widths: Vec<usize> = header
            .iter()
            .zip(&row)
            .map(|(h, r)| h.len().max(r.len()))
            .collect();
        let mut out = String::new();
        for cells in [header.map(String::from).to_vec(), row.to_vec()] {
            let line: Vec<String> = cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect();
            writeln!(out, "{}", line.join(" | ").trim_end()).unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> AttributeSpec {
        AttributeSpec::new("gender", vec!["female".into(), "male".into()]).unwrap()
    }

    fn entity(sent: usize, f: u64, m: u64) -> SentenceEntity {
        let mut e = SentenceEntity {
            doc_id: "d".into(),
            sent_id: sent,
            char_start: 0,
            char_end: 0,
            text: String::new(),
            metadata: Default::default(),
        };
        e.metadata.counts_per_group = BTreeMap::from([("female".into(), f), ("male".into(), m)]);
        e.metadata.relevant_sentence = f + m > 0;
        e
    }

    #[test]
    fn empty_store() {
        let s = report_summary(&spec(), &[]);
        assert_eq!((s.sentences, s.relevant_sentences, s.removed, s.substituted), (0, 0, 0, 0));
        assert_eq!(s.occurrences["female"], 0);
        assert_eq!(s.dr, None);
        assert!(s.table().contains("n/a"));
    }

    #[test]
    fn removals_and_substitutions() {
        let mut ents: Vec<_> = (0..5).map(|i| entity(i, 0, 1)).collect();
        ents[0].metadata.remove_sentence = true;
        ents[1].metadata.remove_sentence = true;
        ents[2].metadata.text_cda = Some("she".into());
        ents[2].metadata.counts_per_group_cda = Some(BTreeMap::from([("female".into(), 1), ("male".into(), 0)]));
        let s = report_summary(&spec(), &ents);
        assert_eq!((s.removed, s.substituted), (2, 1));
        assert_eq!(s.occurrences_after["female"], 1);
        assert_eq!(s.occurrences_after["male"], 2);
        assert_eq!(s.dr, Some(0.5));
    }
}
