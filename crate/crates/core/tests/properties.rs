mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use databias::cda::{plan_targets, precheck, run_cda, CdaConfig, CdaEndpoints, CdaMode, Precheck, PrecheckLists};
use databias::corpus::{build_debiased, read_store, segment_corpus, write_store, Document, Segmenter};
use databias::llm::{ChatRequest, LlmEndpoint, Message, Transcript};
use databias::prompts::PromptCatalog;
use databias::repbias::{dr_from_counts, dr_max, GroupCounts, Matcher, Tokenizer};
use databias::stereotype::{
    filter, Generalization, GramForm, IndicatorRecord, LingForm, Polarity, ScoreModel, Situation, StereotypeConfig,
    TargetType, YesNo,
};
use databias::wordlist::AttributeSpec;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn counts_vec() -> impl Strategy<Value = Vec<u64>> {
    (2usize..7).prop_flat_map(|m| prop::collection::vec(0u64..1_000_000, m))
}

fn doc_strategy() -> impl Strategy<Value = Document> {
    any::<u64>().prop_map(|seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Document::new("doc", random_text(&mut rng))
    })
}

fn group_counts(values: &[u64]) -> GroupCounts {
    GroupCounts::from_pairs("attr", values.iter().enumerate().map(|(i, &c)| (format!("g{i}"), c)))
}

fn pick<T: Copy>(all: &[T], i: usize) -> T {
    all[i % all.len()]
}

fn record(ix: [usize; 8]) -> IndicatorRecord {
    IndicatorRecord {
        has_category_label: pick(YesNo::ALL, ix[0]),
        full_label: "label".into(),
        target_type: pick(TargetType::ALL, ix[1]),
        connotation: pick(Polarity::ALL, ix[2]),
        gram_form: pick(GramForm::ALL, ix[3]),
        ling_form: pick(LingForm::ALL, ix[4]),
        information: "info".into(),
        situation: pick(Situation::ALL, ix[5]),
        situation_evaluation: pick(Polarity::ALL, ix[6]),
        generalization: pick(Generalization::ALL, ix[7]),
    }
}

fn gendered_sentence() -> impl Strategy<Value = String> {
    let word = prop::sample::select(MALE.iter().chain(FEMALE).copied().collect::<Vec<_>>());
    let filler = prop::sample::select(vec!["walked", "home", "today", "the", "market", "quietly", "and"]);
    prop::collection::vec(prop_oneof![3 => word, 2 => filler], 1..10).prop_map(|ws| {
        let mut s = ws.join(" ");
        s.push('.');
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn dr_stays_within_bounds(values in counts_vec()) {
        let dr = dr_from_counts(&values);
        prop_assert!((0.0..=dr_max(values.len()) + 1e-12).contains(&dr));
    }

    #[test]
    fn dr_is_scale_invariant(values in counts_vec(), k in 2u64..50) {
        prop_assume!(values.iter().any(|&v| v > 0));
        let scaled: Vec<u64> = values.iter().map(|v| v * k).collect();
        prop_assert!((dr_from_counts(&values) - dr_from_counts(&scaled)).abs() < 1e-12);
    }

    #[test]
    fn dr_ignores_group_order(mut values in counts_vec()) {
        let dr = dr_from_counts(&values);
        values.reverse();
        prop_assert!((dr - dr_from_counts(&values)).abs() < 1e-12);
    }

    #[test]
    fn majority_and_minority_are_extremes(values in counts_vec()) {
        let c = group_counts(&values);
        let max = *values.iter().max().unwrap();
        let min = *values.iter().min().unwrap();
        let first_max = values.iter().position(|&v| v == max).unwrap();
        let first_min = values.iter().position(|&v| v == min).unwrap();
        prop_assert_eq!(c.majority().unwrap(), format!("g{first_max}"));
        prop_assert_eq!(c.minority().unwrap(), format!("g{first_min}"));
    }

    #[test]
    fn plan_is_balanced(values in counts_vec()) {
        let c = group_counts(&values);
        let plan = plan_targets(&c);
        let excess: u64 = plan.excess.values().sum();
        let deficit: u64 = plan.deficit.values().sum();
        prop_assert_eq!(excess, deficit);
        if let Some(majority) = c.majority() {
            let after = c.get(majority) - plan.excess.get(majority).copied().unwrap_or(0);
            let share = c.total().div_ceil(values.len() as u64);
            prop_assert!(excess == 0 || after == share);
        }
        let shares: Vec<u64> = plan.deficit.values().copied().collect();
        if let (Some(hi), Some(lo)) = (shares.iter().max(), shares.iter().min()) {
            prop_assert!(hi - lo <= 1);
        }
    }

    #[test]
    fn segmentation_round_trips(doc in doc_strategy()) {
        let entities = segment_corpus(std::slice::from_ref(&doc), &Segmenter::default());
        let rebuilt = build_debiased(&entities, std::slice::from_ref(&doc)).unwrap();
        prop_assert_eq!(&rebuilt[0].text, &doc.text);
    }

    #[test]
    fn sentence_spans_are_ordered_slices(doc in doc_strategy()) {
        let entities = segment_corpus(std::slice::from_ref(&doc), &Segmenter::default());
        let mut prev_end = 0;
        for (i, e) in entities.iter().enumerate() {
            prop_assert_eq!(e.sent_id, i);
            prop_assert!(e.char_start >= prev_end && e.char_start <= e.char_end);
            prop_assert_eq!(&doc.text[e.char_start..e.char_end], e.text.as_str());
            prop_assert!(!e.text.trim().is_empty());
            prev_end = e.char_end;
        }
    }

    #[test]
    fn removed_sentences_vanish(doc in doc_strategy(), mask in any::<u32>()) {
        let mut entities = segment_corpus(std::slice::from_ref(&doc), &Segmenter::default());
        for (i, e) in entities.iter_mut().enumerate() {
            e.metadata.remove_sentence = mask >> (i % 32) & 1 == 1;
        }
        let rebuilt = &build_debiased(&entities, std::slice::from_ref(&doc)).unwrap()[0].text;
        let mut rest = rebuilt.as_str();
        for e in entities.iter().filter(|e| !e.metadata.remove_sentence) {
            let at = rest.find(e.text.as_str());
            prop_assert!(at.is_some(), "kept sentence {:?} missing", e.text);
            rest = &rest[at.unwrap() + e.text.len()..];
        }
        let kept: usize = entities.iter().filter(|e| !e.metadata.remove_sentence).map(|e| e.text.len()).sum();
        prop_assert!(rebuilt.len() >= kept);
    }

    #[test]
    fn matching_fills_consistent_metadata(text in gendered_sentence()) {
        let lexicon = gender();
        let (_, entities) = segmented(&[Document::new("d", text)], &lexicon);
        for e in &entities {
            prop_assert!(e.metadata.check().is_ok());
            prop_assert_eq!(e.metadata.counts_per_group.len(), 2);
        }
    }

    #[test]
    fn tokens_are_lowercase_source_spans(doc in doc_strategy()) {
        for t in Tokenizer::default().tokens(&doc.text) {
            prop_assert_eq!(t.text.clone(), doc.text[t.start..t.end].to_lowercase());
            prop_assert!(!t.text.is_empty());
        }
    }

    #[test]
    fn store_round_trips(doc in doc_strategy()) {
        let lexicon = gender();
        let (_, entities) = segmented(&[doc], &lexicon);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.jsonl");
        write_store(&path, &entities).unwrap();
        prop_assert_eq!(read_store(&path).unwrap(), entities);
    }

    #[test]
    fn base_swaps_are_one_sided_and_conserving(sentences in prop::collection::vec(gendered_sentence(), 1..30), seed in any::<u64>()) {
        let lexicon = gender();
        let docs: Vec<Document> = sentences.iter().enumerate().map(|(i, s)| Document::new(format!("d{i:02}"), s.clone())).collect();
        let (matcher, mut entities) = segmented(&docs, &lexicon);
        let counts = GroupCounts::from_entities(&lexicon.spec, &entities);
        let config = CdaConfig { mode: CdaMode::Base, rng_seed: seed, ..Default::default() };
        run_cda(&mut entities, &lexicon, &matcher, &config, &PrecheckLists::default(), None, &PromptCatalog::default()).unwrap();
        let (maj, min) = (counts.majority().unwrap().to_string(), counts.minority().unwrap().to_string());
        for e in &entities {
            let Some(new) = &e.metadata.text_cda else { continue };
            let before = &e.metadata.counts_per_group;
            let after = matcher.counts(new);
            prop_assert_eq!(after[&maj], 0);
            prop_assert_eq!(after[&min], before[&min] + before[&maj]);
            prop_assert_eq!(e.metadata.counts_per_group_cda.as_ref().unwrap(), &after);
        }
    }

    #[test]
    fn gc_never_touches_prechecked_sentences(sentences in prop::collection::vec(gendered_sentence(), 1..30), tags in prop::collection::vec(0u8..4, 30), seed in any::<u64>()) {
        let lexicon = gender();
        let suffix = ["", " after the election", " in the civil war", " in 1999"];
        let docs: Vec<Document> = sentences
            .iter()
            .enumerate()
            .map(|(i, s)| Document::new(format!("d{i:02}"), format!("{}{}.", s.trim_end_matches('.'), suffix[tags[i] as usize])))
            .collect();
        let (matcher, mut entities) = segmented(&docs, &lexicon);
        let config = CdaConfig { mode: CdaMode::Gc, rng_seed: seed, ..Default::default() };
        let llm = approving_stub();
        run_cda(&mut entities, &lexicon, &matcher, &config, &PrecheckLists::default(), Some(CdaEndpoints::shared(&llm)), &PromptCatalog::default()).unwrap();
        let lists = PrecheckLists::default();
        for e in &entities {
            let tagged = ["election", "civil war", "1999"].iter().any(|k| e.text.contains(k));
            if tagged {
                prop_assert!(e.metadata.text_cda.is_none(), "prechecked sentence modified: {}", e.text);
            }
            if e.metadata.text_cda.is_some() {
                prop_assert_eq!(precheck(e, CdaMode::Gc, &lists, matcher.tokenizer()), Precheck::Pass);
            }
        }
    }

    #[test]
    fn gc_never_overshoots(sentences in prop::collection::vec(gendered_sentence(), 1..40), seed in any::<u64>()) {
        let lexicon = gender();
        let docs: Vec<Document> = sentences.iter().enumerate().map(|(i, s)| Document::new(format!("d{i:02}"), s.clone())).collect();
        let (matcher, mut entities) = segmented(&docs, &lexicon);
        let before = GroupCounts::from_entities(&lexicon.spec, &entities);
        let config = CdaConfig { mode: CdaMode::Gc, rng_seed: seed, ..Default::default() };
        let llm = approving_stub();
        let report = run_cda(&mut entities, &lexicon, &matcher, &config, &PrecheckLists::default(), Some(CdaEndpoints::shared(&llm)), &PromptCatalog::default()).unwrap();
        prop_assert_eq!(report.counts_after.total(), before.total());
        prop_assert!(report.dr_after <= report.dr_before + 1e-12);
        let plan = report.plan.unwrap();
        for (g, e) in &plan.excess {
            prop_assert!(before.get(g) - report.counts_after.get(g) <= *e);
        }
    }

    #[test]
    fn scores_are_clamped(ix in prop::array::uniform8(0usize..4)) {
        let s = ScoreModel::default().score(&record(ix));
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn higher_thresholds_remove_subsets(recs in prop::collection::vec(prop::array::uniform8(0usize..4), 1..30), t1 in 0.0f64..1.0, t2 in 0.0f64..1.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let docs: Vec<Document> = (0..recs.len()).map(|i| Document::new(format!("d{i:02}"), "She left.")).collect();
        let (_, mut entities) = segmented(&docs, &gender());
        for (e, ix) in entities.iter_mut().zip(&recs) {
            e.metadata.potential_stereotype = true;
            e.metadata.linguistic_indicators = Some(record(*ix));
        }
        let model = ScoreModel::default();
        let removed = |t: f64, ents: &mut Vec<_>| {
            filter(ents, &model, &StereotypeConfig { threshold: t, ..Default::default() }).unwrap();
            ents.iter().map(|e: &databias::corpus::SentenceEntity| e.metadata.remove_sentence).collect::<Vec<_>>()
        };
        let low = removed(lo, &mut entities);
        let high = removed(hi, &mut entities);
        for (l, h) in low.iter().zip(&high) {
            prop_assert!(!h || *l);
        }
    }

    #[test]
    fn transcript_replays_what_was_recorded(prompts in prop::collection::vec("[a-z ]{0,40}", 1..10)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let backend = |r: &ChatRequest| -> Result<String, databias::llm::LlmError> {
            Ok(format!("{}|{}", r.purpose, r.last_user().len()))
        };
        let requests: Vec<ChatRequest> = prompts.iter().map(|p| ChatRequest::new("p", vec![Message::user(p.clone())])).collect();
        let recorder = LlmEndpoint::record(Arc::new(backend), Arc::new(Transcript::open(&path).unwrap()));
        let recorded: Vec<String> = requests.iter().map(|r| recorder.complete(r).unwrap()).collect();
        let replay = LlmEndpoint::replay(Arc::new(Transcript::open(&path).unwrap()));
        for (r, want) in requests.iter().zip(&recorded) {
            prop_assert_eq!(&replay.complete(r).unwrap(), want);
        }
    }
}

#[test]
fn all_zero_counts_report_no_observations() {
    let spec = AttributeSpec::new("gender", vec!["female".into(), "male".into()]).unwrap();
    let c = GroupCounts::zero(&spec);
    assert!(c.no_observations());
    assert_eq!(dr_from_counts(&c.values()), dr_max(2));
}

#[test]
fn matcher_counts_agree_with_plain_lookup() {
    let female = raw_entries("gender", "female");
    let male = raw_entries("gender", "male");
    let lexicon = gender();
    let matcher = Matcher::new(&lexicon);
    let text = "She and her sister met the king, his sons and a boy.";
    let mut expect: BTreeMap<String, u64> = BTreeMap::from([("female".into(), 0), ("male".into(), 0)]);
    for w in text.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
        let w = w.to_lowercase();
        if female.contains(&w) {
            *expect.get_mut("female").unwrap() += 1;
        } else if male.contains(&w) {
            *expect.get_mut("male").unwrap() += 1;
        }
    }
    assert_eq!(matcher.counts(text), expect);
}
