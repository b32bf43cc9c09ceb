//! Property tests for the core invariants.

use std::collections::BTreeSet;

use proptest::prelude::*;

use hhi_core::captioner::sample_weight;
use hhi_core::distill::{filter_pseudo_label, split_folds};
use hhi_core::extract::{harvest_captions, HarvestConfig};
use hhi_core::inflect::to_present_continuous;
use hhi_core::metrics::{diversity, topk_aggregate, Direction, VerbMode};
use hhi_core::names::{fill_names, mask_names, NamePool, NAME_TOKEN};
use hhi_core::types::{LabeledSample, MaskedCaption, Source};

fn word() -> impl Strategy<Value = String> {
    "[a-z]{1,8}"
}

/// A masked text with up to 10 slots: words and slots joined by spaces.
fn masked_text() -> impl Strategy<Value = String> {
    proptest::collection::vec(prop_oneof![3 => word(), 1 => Just(NAME_TOKEN.to_string())], 1..20)
        .prop_filter("at most 10 slots", |tokens| {
            tokens.iter().filter(|t| *t == NAME_TOKEN).count() <= 10
        })
        .prop_map(|tokens| tokens.join(" "))
}

fn pool() -> NamePool {
    NamePool::ordered(
        ["Alex", "Bailey", "Carol", "David", "Emma", "Frank", "Grace", "Henry", "Irene", "Jack"],
        0,
    )
    .unwrap()
}

proptest! {
    /// mask_names after fill_names recovers the original masked text.
    #[test]
    fn fill_then_mask_is_identity(text in masked_text()) {
        let masked = MaskedCaption::new(text, Source::WhosWaldo);
        let (filled, record) = fill_names(&masked, &pool()).unwrap();
        let spans: Vec<(usize, usize)> = record.iter().map(|(_, s)| *s).collect();
        let remasked = mask_names(&filled, &spans, Source::WhosWaldo).unwrap();
        prop_assert_eq!(remasked.text(), masked.text());
    }

    /// fill_names is a function of its inputs.
    #[test]
    fn fill_is_deterministic(text in masked_text()) {
        let masked = MaskedCaption::new(text, Source::CcNews);
        let a = fill_names(&masked, &pool()).unwrap();
        let b = fill_names(&masked, &pool()).unwrap();
        prop_assert_eq!(a, b);
    }

    /// Inflection output always ends in "ing" and never contains whitespace.
    #[test]
    fn inflection_shape(lemma in "[a-z]{1,12}") {
        let ing = to_present_continuous(&lemma).unwrap();
        prop_assert!(ing.ends_with("ing"));
        prop_assert!(!ing.contains(char::is_whitespace));
    }

    /// Harvested lines respect the length bound and carry no strip pattern.
    #[test]
    fn harvest_output_is_clean(lines in proptest::collection::vec(".{0,120}", 0..20)) {
        let cfg = HarvestConfig::default();
        let refs: Vec<&str> = lines.iter().map(String::as_str).collect();
        for kept in harvest_captions(refs.iter().copied(), &cfg) {
            prop_assert!(kept.chars().count() <= cfg.max_chars);
            prop_assert!(!kept.contains("(AP Photo"));
            prop_assert!(!kept.contains("Getty Images"));
            prop_assert!(!kept.contains(", left,"));
        }
    }

    /// Accepted pseudo-labels match the label grammar.
    #[test]
    fn accepted_labels_match_grammar(text in ".{0,80}") {
        let (accepted, reason) = filter_pseudo_label(&text);
        if accepted {
            prop_assert!(reason.is_none());
            let tokens: Vec<&str> = text.split_whitespace().collect();
            prop_assert_eq!(tokens[0], NAME_TOKEN);
            prop_assert!(tokens[1].ends_with("ing"));
            let tail: usize = tokens[2..].iter().map(|t| t.matches(NAME_TOKEN).count()).sum();
            prop_assert_eq!(tail, 1);
            for banned in ["photo", "image", "picture"] {
                prop_assert!(!text.contains(banned));
            }
        } else {
            prop_assert!(reason.is_some());
        }
    }

    /// Folds are pairwise disjoint and cover the input.
    #[test]
    fn folds_partition(len in 2usize..60, k in 2usize..6, seed in any::<u64>()) {
        prop_assume!(k <= len);
        let items: Vec<usize> = (0..len).collect();
        let folds = split_folds(&items, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = BTreeSet::new();
        for fold in &folds {
            for item in fold {
                prop_assert!(seen.insert(*item), "duplicate across folds");
            }
        }
        prop_assert_eq!(seen.len(), len);
        let (min, max) = folds.iter().fold((usize::MAX, 0), |(lo, hi), f| {
            (lo.min(f.len()), hi.max(f.len()))
        });
        prop_assert!(max - min <= 1);
    }

    /// Best-of-prefix grows monotonically with k.
    #[test]
    fn topk_monotone_in_k(scores in proptest::collection::vec(-1.0f64..1.0, 1..32)) {
        let mut best_high = f64::NEG_INFINITY;
        let mut best_low = f64::INFINITY;
        for k in 1..=scores.len() {
            let high = topk_aggregate(&scores, k, Direction::HigherBetter).unwrap();
            let low = topk_aggregate(&scores, k, Direction::LowerBetter).unwrap();
            prop_assert!(high >= best_high);
            prop_assert!(low <= best_low);
            best_high = high;
            best_low = low;
        }
    }

    /// Diversity satisfies n_v <= n_i <= N.
    #[test]
    fn diversity_bounds(predictions in proptest::collection::vec("[a-z ]{0,24}", 0..40)) {
        let stats = diversity(&predictions, VerbMode::SlotFormat, None).unwrap();
        prop_assert!(stats.n_v <= stats.n_i);
        prop_assert!(stats.n_i <= predictions.len());
    }

    /// Weight formula agrees with an explicit nested-square-root route.
    #[test]
    fn weight_matches_sqrt_route(cl in 1u64..=1000, cc in 1u64..=1000) {
        let weight = sample_weight(cl, cc).unwrap();
        let oracle = 1.0 / ((cl as f64).sqrt().sqrt() * cc as f64);
        prop_assert!((weight - oracle).abs() <= 1e-12);
    }
}

/// JSONL-style serde round-trip preserves every field of the dataset row.
#[test]
fn labeled_sample_serde_round_trip() {
    let sample = LabeledSample {
        id: "s-1".into(),
        image_ref: "img/s-1.jpg".into(),
        caption: MaskedCaption::new("[NAME] greets [NAME], left, warmly", Source::Coco),
        face_count: 4,
        datetime_meta: Some("2013-03-25T10:00:00".into()),
        label: Some("[NAME] greeting [NAME]".to_string().try_into().unwrap()),
        split: hhi_core::types::Split::Dev,
    };
    let json = serde_json::to_string(&sample).unwrap();
    let back: LabeledSample = serde_json::from_str(&json).unwrap();
    assert_eq!(back, sample);
}
