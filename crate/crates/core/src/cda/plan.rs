use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::repbias::GroupCounts;

/// How many occurrences to move away from the majority group and how many
/// each other group should receive. `remaining_*` start as copies and are
/// decremented as substitutions are committed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubstitutionPlan {
    pub attribute: String,
    pub excess: IndexMap<String, u64>,
    pub deficit: IndexMap<String, u64>,
    pub remaining_excess: IndexMap<String, u64>,
    pub remaining_deficit: IndexMap<String, u64>,
}

impl SubstitutionPlan {
    fn new(attribute: &str, excess: IndexMap<String, u64>, deficit: IndexMap<String, u64>) -> Self {
        SubstitutionPlan {
            attribute: attribute.to_string(),
            remaining_excess: excess.clone(),
            remaining_deficit: deficit.clone(),
            excess,
            deficit,
        }
    }

    pub fn empty(attribute: &str) -> Self {
        Self::new(attribute, IndexMap::new(), IndexMap::new())
    }

    pub fn is_empty(&self) -> bool {
        self.total_excess() == 0
    }

    pub fn total_excess(&self) -> u64 {
        self.excess.values().sum()
    }

    pub fn remaining(&self) -> u64 {
        self.remaining_excess.values().sum()
    }

    /// Group with the largest remaining deficit, ties lexicographic.
    pub fn next_target(&self) -> Option<&str> {
        self.remaining_deficit
            .iter()
            .filter(|(_, &d)| d > 0)
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
            .map(|(g, _)| g.as_str())
    }

    /// Largest number of occurrences that may move from `from` to `to` now.
    pub fn capacity(&self, from: &str, to: &str) -> u64 {
        let e = self.remaining_excess.get(from).copied().unwrap_or(0);
        let d = self.remaining_deficit.get(to).copied().unwrap_or(0);
        e.min(d)
    }

    pub fn commit(&mut self, from: &str, to: &str, n: u64) {
        assert!(n <= self.capacity(from, to), "commit beyond plan");
        *self.remaining_excess.get_mut(from).unwrap() -= n;
        *self.remaining_deficit.get_mut(to).unwrap() -= n;
    }
}

/// Moves the majority group's excess over the balanced share `ceil(total / M)`
/// to the other groups in equal parts, the remainder going to the
/// lexicographically first groups. For two groups this is
/// `floor((max - min) / 2)`.
pub fn plan_targets(counts: &GroupCounts) -> SubstitutionPlan {
    let total = counts.total();
    let m = counts.m() as u64;
    let Some(majority) = counts.majority() else {
        return SubstitutionPlan::empty(&counts.attribute);
    };
    if total == 0 || m < 2 {
        return SubstitutionPlan::empty(&counts.attribute);
    }
    let target = total.div_ceil(m);
    let excess = counts.get(majority).saturating_sub(target);
    if excess == 0 {
        return SubstitutionPlan::empty(&counts.attribute);
    }
    let mut others: Vec<&str> = counts
        .counts
        .keys()
        .map(String::as_str)
        .filter(|g| *g != majority)
        .collect();
    others.sort();
    let share = excess / (m - 1);
    let extra = (excess % (m - 1)) as usize;
    let deficit: IndexMap<String, u64> = others
        .iter()
        .enumerate()
        .map(|(i, g)| (g.to_string(), share + u64::from(i < extra)))
        .filter(|(_, d)| *d > 0)
        .collect();
    SubstitutionPlan::new(
        &counts.attribute,
        IndexMap::from([(majority.to_string(), excess)]),
        deficit,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_plan() {
        let c = GroupCounts::from_pairs("gender", [("female", 235461), ("male", 592243)]);
        let p = plan_targets(&c);
        assert_eq!(p.excess["male"], 178391);
        assert_eq!(p.deficit["female"], 178391);
        assert_eq!((592243u64 - 235461) / 2, 178391);
    }

    #[test]
    fn multi_group_plan() {
        let c = GroupCounts::from_pairs("x", [("a", 10), ("b", 1), ("c", 1)]);
        let p = plan_targets(&c);
        assert_eq!(p.excess["a"], 6);
        assert_eq!(p.deficit["b"], 3);
        assert_eq!(p.deficit["c"], 3);
    }

    #[test]
    fn remainder_goes_to_first_groups() {
        // total 18, target ceil(18 / 4) = 5, excess 10 over 3 groups: 4, 3, 3
        let c = GroupCounts::from_pairs("x", [("d", 1), ("maj", 15), ("b", 1), ("c", 1)]);
        let p = plan_targets(&c);
        assert_eq!(p.excess["maj"], 10);
        assert_eq!(p.deficit["b"], 4);
        assert_eq!(p.deficit["c"], 3);
        assert_eq!(p.deficit["d"], 3);
    }

    #[test]
    fn balanced_and_empty() {
        assert!(plan_targets(&GroupCounts::from_pairs("x", [("a", 5), ("b", 5), ("c", 5)])).is_empty());
        assert!(plan_targets(&GroupCounts::from_pairs("x", [("a", 0), ("b", 0)])).is_empty());
        assert!(plan_targets(&GroupCounts::from_pairs("x", [("a", 3), ("b", 2)])).is_empty());
    }

    #[test]
    fn targets_and_commits() {
        let c = GroupCounts::from_pairs("x", [("a", 10), ("b", 1), ("c", 1)]);
        let mut p = plan_targets(&c);
        assert_eq!(p.next_target(), Some("b"));
        p.commit("a", "b", 2);
        assert_eq!(p.next_target(), Some("c"));
        assert_eq!(p.capacity("a", "c"), 3);
        assert_eq!(p.remaining(), 4);
    }
}
