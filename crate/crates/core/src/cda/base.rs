use rand::seq::IndexedRandom;
use rand::Rng;

use crate::corpus::SentenceEntity;
use crate::repbias::GroupCounts;

use super::swap::{render, splice};
use super::{entity_rng, CdaConfig, SwapContext};

/// With probability `probability`, swaps every occurrence of the `majority`
/// group in `text` for a word of the `minority` group: the counterpart
/// when there is one, otherwise a random minority entry. Returns `None`
/// when the coin says no or nothing changed.
pub fn substitute_base<R: Rng>(
    text: &str,
    ctx: &SwapContext<'_>,
    majority: usize,
    minority: usize,
    probability: f64,
    rng: &mut R,
) -> Option<String> {
    let occurrences: Vec<_> = ctx
        .matcher
        .find(text)
        .into_iter()
        .filter(|o| o.group == majority)
        .collect();
    if occurrences.is_empty() || !rng.random_bool(probability) {
        return None;
    }
    let pool = &ctx.lexicon.lists[minority].entries;
    let mut replacements = Vec::new();
    for occ in &occurrences {
        let word = match ctx.preferred(text, occ, minority) {
            Some(w) => w,
            None => match pool.choose(rng) {
                Some(w) => w.clone(),
                None => {
                    log::warn!("no {} candidate for {:?}", ctx.lexicon.spec.groups[minority], occ.surface);
                    continue;
                }
            },
        };
        replacements.push((occ.start, occ.end, render(&text[occ.start..occ.end], &word)));
    }
    let out = splice(text, &replacements);
    (out != text).then_some(out)
}

/// Base mode over all entities. Returns (eligible, substituted).
pub(super) fn run(
    entities: &mut [SentenceEntity],
    passing: &[bool],
    ctx: &SwapContext<'_>,
    counts: &GroupCounts,
    config: &CdaConfig,
) -> (usize, usize) {
    let spec = &ctx.lexicon.spec;
    let (Some(maj), Some(min)) = (counts.majority(), counts.minority()) else {
        return (0, 0);
    };
    let majority = spec.index_of(maj).expect("counts follow the spec");
    let minority = spec.index_of(min).expect("counts follow the spec");
    if majority == minority || counts.get(maj) == counts.get(min) {
        return (0, 0);
    }
    let mut eligible = 0;
    let mut substituted = 0;
    for (e, _) in entities.iter_mut().zip(passing).filter(|(_, &p)| p) {
        if e.metadata.counts_per_group.get(maj).copied().unwrap_or(0) == 0 {
            continue;
        }
        eligible += 1;
        let mut rng = entity_rng(config.rng_seed, &e.doc_id, e.sent_id);
        if let Some(text) = substitute_base(&e.text, ctx, majority, minority, config.substitution_probability, &mut rng) {
            e.metadata.counts_per_group_cda = Some(ctx.matcher.counts(&text));
            e.metadata.text_cda = Some(text);
            substituted += 1;
        }
    }
    (eligible, substituted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repbias::Matcher;
    use crate::wordlist::Lexicon;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gender() -> Lexicon {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/wordlists/gender");
        Lexicon::load_dir(dir, "gender", None).unwrap()
    }

    fn swap(text: &str, from: &str, to: &str) -> Option<String> {
        let lex = gender();
        let matcher = Matcher::new(&lex);
        let ctx = SwapContext { lexicon: &lex, matcher: &matcher };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        substitute_base(
            text,
            &ctx,
            lex.spec.index_of(from).unwrap(),
            lex.spec.index_of(to).unwrap(),
            1.0,
            &mut rng,
        )
    }

    #[test]
    fn pronoun_swaps() {
        assert_eq!(swap("He is a software developer.", "male", "female").unwrap(), "She is a software developer.");
        assert_eq!(swap("I saw her yesterday.", "female", "male").unwrap(), "I saw him yesterday.");
        assert_eq!(swap("her book is new", "female", "male").unwrap(), "his book is new");
        assert_eq!(swap("HE said it was hers.", "male", "female").unwrap(), "SHE said it was hers.");
    }

    #[test]
    fn counterparts_keep_case() {
        assert_eq!(swap("The Bride smiled.", "female", "male").unwrap(), "The Groom smiled.");
        assert_eq!(swap("The sky is blue.", "female", "male"), None);
    }

    #[test]
    fn coin_zero_never_swaps() {
        let lex = gender();
        let matcher = Matcher::new(&lex);
        let ctx = SwapContext { lexicon: &lex, matcher: &matcher };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(substitute_base("He left.", &ctx, 1, 0, 0.0, &mut rng), None);
    }
}
