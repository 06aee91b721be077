use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::SentenceEntity;
use crate::wordlist::{AttributeSpec, WordList};

use super::dr::{compute_dr, dr_from_counts, dr_max, GroupCounts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrReport {
    pub attribute: String,
    pub counts: GroupCounts,
    pub dr: f64,
    pub dr_max: f64,
    pub majority_group: String,
    pub minority_group: String,
    pub no_observations: bool,
    pub per_document: BTreeMap<String, f64>,
}

impl DrReport {
    pub fn from_counts(counts: GroupCounts, per_document: BTreeMap<String, f64>) -> Self {
        DrReport {
            attribute: counts.attribute.clone(),
            dr: compute_dr(&counts),
            dr_max: dr_max(counts.m()),
            majority_group: counts.majority().unwrap_or_default().to_string(),
            minority_group: counts.minority().unwrap_or_default().to_string(),
            no_observations: counts.no_observations(),
            per_document,
            counts,
        }
    }
}

/// Aggregates matched entities into a report with a DR value per document.
pub fn emit_report(spec: &AttributeSpec, entities: &[SentenceEntity]) -> DrReport {
    let counts = GroupCounts::from_entities(spec, entities);
    let mut per_doc: BTreeMap<&str, GroupCounts> = BTreeMap::new();
    for e in entities {
        per_doc
            .entry(&e.doc_id)
            .or_insert_with(|| GroupCounts::zero(spec))
            .add(&e.metadata.counts_per_group);
    }
    let per_document = per_doc
        .into_iter()
        .map(|(doc, c)| (doc.to_string(), compute_dr(&c)))
        .collect();
    DrReport::from_counts(counts, per_document)
}

/// One point of a cumulative-DR series: DR using the top `length` entries
/// of every group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativePoint {
    pub length: usize,
    pub dr: f64,
}

/// Orders entries by descending frequency, ties lexicographically.
pub fn sort_by_frequency(list: &WordList, freqs: &HashMap<String, u64>) -> Vec<String> {
    let mut entries = list.entries.clone();
    entries.sort_by(|a, b| {
        let fa = freqs.get(a).copied().unwrap_or(0);
        let fb = freqs.get(b).copied().unwrap_or(0);
        fb.cmp(&fa).then_with(|| a.cmp(b))
    });
    entries
}

/// DR as each group's list grows one entry at a time. `lists` must already
/// be in the order entries should be added (see [`sort_by_frequency`]);
/// groups with shorter lists stay at their full list.
pub fn cumulative_dr(lists: &[WordList], freqs: &HashMap<String, u64>) -> Vec<CumulativePoint> {
    let longest = lists.iter().map(|l| l.entries.len()).max().unwrap_or(0);
    let mut sums = vec![0u64; lists.len()];
    let mut out = Vec::with_capacity(longest);
    for i in 0..longest {
        for (sum, list) in sums.iter_mut().zip(lists) {
            if let Some(word) = list.entries.get(i) {
                *sum += freqs.get(word).copied().unwrap_or(0);
            }
        }
        out.push(CumulativePoint {
            length: i + 1,
            dr: dr_from_counts(&sums),
        });
    }
    out
}

pub fn write_cumulative_csv(mut w: impl Write, series: &[CumulativePoint]) -> std::io::Result<()> {
    writeln!(w, "length,dr")?;
    for p in series {
        writeln!(w, "{},{}", p.length, p.dr)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entity(doc: &str, sent: usize, f: u64, m: u64) -> SentenceEntity {
        let mut e = SentenceEntity {
            doc_id: doc.into(),
            sent_id: sent,
            char_start: 0,
            char_end: 0,
            text: String::new(),
            metadata: Default::default(),
        };
        e.metadata.counts_per_group = BTreeMap::from([("female".into(), f), ("male".into(), m)]);
        e
    }

    #[test]
    fn report_fields() {
        let spec = AttributeSpec::new("gender", vec!["female".into(), "male".into()]).unwrap();
        let ents = vec![entity("a", 0, 1, 3), entity("a", 1, 0, 0), entity("b", 0, 1, 0)];
        let r = emit_report(&spec, &ents);
        assert_eq!(r.counts.get("female"), 2);
        assert_eq!(r.counts.relevant_sentences, 2);
        assert_eq!(r.majority_group, "male");
        assert_eq!(r.minority_group, "female");
        assert_eq!(r.per_document["a"], 0.25);
        assert_eq!(r.per_document["b"], 0.5);
        assert!((r.dr - 0.1).abs() < 1e-12);
    }

    #[test]
    fn all_zero_report() {
        let spec = AttributeSpec::new("gender", vec!["female".into(), "male".into()]).unwrap();
        let r = emit_report(&spec, &[entity("a", 0, 0, 0)]);
        assert!(r.no_observations);
        assert_eq!(r.dr, r.dr_max);
    }

    #[test]
    fn cumulative_series() {
        let f = WordList::new("g", "f", vec!["she".into(), "her".into(), "zz".into()]);
        let m = WordList::new("g", "m", vec!["he".into()]);
        let freqs = HashMap::from([("she".into(), 2), ("her".into(), 2), ("he".into(), 4)]);
        let s = cumulative_dr(&[f, m], &freqs);
        assert_eq!(s.len(), 3);
        assert!((s[0].dr - dr_from_counts(&[2, 4])).abs() < 1e-12);
        assert_eq!(s[1].dr, 0.0);
        assert_eq!(s[2].dr, s[1].dr);
        let mut csv = Vec::new();
        write_cumulative_csv(&mut csv, &s).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("length,dr\n1,"));
    }
}
