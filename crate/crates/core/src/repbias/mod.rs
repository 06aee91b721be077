//! Representation bias: tokenization, word-list matching, group counts and
//! the DR score.
//!
//! DR is half the L1 distance between the observed share of each group and
//! the uniform share `1/M`. It is 0 for perfectly balanced counts and
//! `(M-1)/M` when a single group takes every occurrence.

mod dr;
mod matcher;
mod report;
mod tokenize;

pub use dr::{compute_dr, dr_from_counts, dr_max, GroupCounts};
pub use matcher::{match_sentence, Matcher, Occurrence};
pub use report::{
    cumulative_dr, emit_report, sort_by_frequency, write_cumulative_csv, CumulativePoint, DrReport,
};
pub use tokenize::{tokenize, Token, Tokenizer};


use crate::corpus::SentenceEntity;

/// Matches every entity in parallel.
pub fn match_all(matcher: &Matcher, entities: &mut [SentenceEntity]) {
    use rayon::prelude::*;
    entities.par_iter_mut().for_each(|e| matcher.match_sentence(e));
}
