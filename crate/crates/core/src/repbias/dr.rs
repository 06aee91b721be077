use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::corpus::SentenceEntity;
use crate::wordlist::AttributeSpec;

/// Largest attainable DR for `m` groups: all mass on a single group.
pub fn dr_max(m: usize) -> f64 {
    assert!(m >= 1, "need at least one group");
    (m as f64 - 1.0) / m as f64
}

/// Half the L1 distance between the observed group distribution and the
/// uniform one. An all-zero vector has no distribution and is assigned
/// [`dr_max`].
pub fn dr_from_counts(counts: &[u64]) -> f64 {
    let m = counts.len();
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return dr_max(m);
    }
    let uniform = 1.0 / m as f64;
    let total = total as f64;
    0.5 * counts
        .iter()
        .map(|&c| (c as f64 / total - uniform).abs())
        .sum::<f64>()
}

/// Occurrence counts of every group of one attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub attribute: String,
    pub counts: IndexMap<String, u64>,
    pub relevant_sentences: u64,
}

impl GroupCounts {
    pub fn zero(spec: &AttributeSpec) -> Self {
        GroupCounts {
            attribute: spec.attribute.clone(),
            counts: spec.groups.iter().map(|g| (g.clone(), 0)).collect(),
            relevant_sentences: 0,
        }
    }

    /// Builds counts from explicit `(group, count)` pairs, in order.
    pub fn from_pairs<S: Into<String>>(
        attribute: impl Into<String>,
        pairs: impl IntoIterator<Item = (S, u64)>,
    ) -> Self {
        GroupCounts {
            attribute: attribute.into(),
            counts: pairs.into_iter().map(|(g, c)| (g.into(), c)).collect(),
            relevant_sentences: 0,
        }
    }

    /// Adds one sentence's per-group counts. Groups unknown to `self` are
    /// ignored.
    pub fn add(&mut self, per_group: &BTreeMap<String, u64>) {
        let mut any = false;
        for (group, c) in per_group {
            if let Some(slot) = self.counts.get_mut(group) {
                *slot += c;
                any |= *c > 0;
            }
        }
        if any {
            self.relevant_sentences += 1;
        }
    }

    pub fn merge(mut self, other: &GroupCounts) -> Self {
        for (group, c) in &other.counts {
            *self.counts.entry(group.clone()).or_insert(0) += c;
        }
        self.relevant_sentences += other.relevant_sentences;
        self
    }

    /// Counts over the original sentences, as matched.
    pub fn from_entities(spec: &AttributeSpec, entities: &[SentenceEntity]) -> Self {
        use rayon::prelude::*;
        entities
            .par_iter()
            .fold(
                || GroupCounts::zero(spec),
                |mut acc, e| {
                    acc.add(&e.metadata.counts_per_group);
                    acc
                },
            )
            .reduce(|| GroupCounts::zero(spec), |a, b| a.merge(&b))
    }

    /// Counts over the sentences that survive into the debiased corpus,
    /// using the counterfactual counts where a substitution was made.
    pub fn from_final(spec: &AttributeSpec, entities: &[SentenceEntity]) -> Self {
        let mut acc = GroupCounts::zero(spec);
        for e in entities.iter().filter(|e| !e.metadata.remove_sentence) {
            match &e.metadata.counts_per_group_cda {
                Some(c) if e.metadata.text_cda.is_some() => acc.add(c),
                _ => acc.add(&e.metadata.counts_per_group),
            }
        }
        acc
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, group: &str) -> u64 {
        self.counts.get(group).copied().unwrap_or(0)
    }

    pub fn no_observations(&self) -> bool {
        self.total() == 0
    }

    pub fn values(&self) -> Vec<u64> {
        self.counts.values().copied().collect()
    }

    /// Group with the largest count; ties go to the lexicographically
    /// smallest name.
    pub fn majority(&self) -> Option<&str> {
        self.counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(g, _)| g.as_str())
    }

    /// Group with the smallest count; ties go to the lexicographically
    /// smallest name.
    pub fn minority(&self) -> Option<&str> {
        self.counts
            .iter()
            .min_by(|a, b| a.1.cmp(b.1).then_with(|| a.0.cmp(b.0)))
            .map(|(g, _)| g.as_str())
    }
}

pub fn compute_dr(counts: &GroupCounts) -> f64 {
    dr_from_counts(&counts.values())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn published_counts() {
        assert_abs_diff_eq!(dr_from_counts(&[235461, 592243]), 0.2155, epsilon = 5e-4);
        assert_abs_diff_eq!(dr_from_counts(&[42281, 6977, 12101]), 0.3557, epsilon = 5e-4);
        assert_abs_diff_eq!(
            dr_from_counts(&[377, 16725, 724, 5416, 4227]),
            0.4089,
            epsilon = 5e-4
        );
    }

    #[test]
    fn uniform_and_degenerate() {
        assert_eq!(dr_from_counts(&[10, 10, 10]), 0.0);
        assert_eq!(dr_from_counts(&[0, 0]), 0.5);
        assert_eq!(dr_from_counts(&[0, 7, 0]), dr_max(3));
    }

    #[test]
    fn majority_minority_ties() {
        let c = GroupCounts::from_pairs("x", [("b", 3), ("a", 3), ("c", 1), ("d", 1)]);
        assert_eq!(c.majority(), Some("a"));
        assert_eq!(c.minority(), Some("c"));
    }

    #[test]
    fn add_tracks_relevant_sentences() {
        let spec = AttributeSpec::new("g", vec!["f".into(), "m".into()]).unwrap();
        let mut c = GroupCounts::zero(&spec);
        c.add(&BTreeMap::from([("f".to_string(), 2), ("m".to_string(), 0)]));
        c.add(&BTreeMap::from([("f".to_string(), 0), ("m".to_string(), 0)]));
        assert_eq!(c.relevant_sentences, 1);
        assert_eq!(c.get("f"), 2);
    }
}
