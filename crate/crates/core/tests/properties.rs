use dialogforge_core::generator::DialogActMap;
use dialogforge_core::remediator::{bootstrap_ci, BootstrapConfig};
use dialogforge_core::schema::BotDefinition;
use dialogforge_core::simulator::{match_dialog_act, token_set_similarity};
use proptest::prelude::*;
use proptest::sample::subsequence;

const WORDS: &[&str] = &["your", "email", "order", "number", "is", "what", "thanks", "goodbye", "case", "right"];
const ACTS: &[&str] = &["request_Email", "request_OrderNumber", "confirm_CaseNumber", "say", "dialog_success_message"];

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 1..6).prop_map(|w| w.join(" "))
}

fn fixture_bytes() -> Vec<u8> {
    std::fs::read(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/template_bot.json")).unwrap()
}

proptest! {
    #[test]
    fn match_ignores_candidate_order(
        (entries, shuffled) in prop::collection::vec((prop::sample::select(ACTS), sentence()), 1..10)
            .prop_flat_map(|e| (Just(e.clone()), Just(e).prop_shuffle())),
        message in sentence(),
    ) {
        let build = |entries: &[(&str, String)]| {
            let mut m = DialogActMap::empty("D");
            for (act, c) in entries {
                m.add(act, c.clone());
            }
            m
        };
        let a = match_dialog_act::<f64>(&message, &build(&entries), 0.5);
        let b = match_dialog_act::<f64>(&message, &build(&shuffled), 0.5);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn similarity_is_bounded_and_exact_on_identity(a in sentence(), b in sentence()) {
        let s = token_set_similarity::<f64>(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(token_set_similarity::<f64>(&a, &a), 1.0);
    }

    #[test]
    fn bootstrap_interval_contains_point(
        items in prop::collection::vec(0u8..2, 1..60),
        seed in any::<u64>(),
    ) {
        let cfg = BootstrapConfig { iterations: 200, level: 0.95, seed };
        let mean = |s: &[&u8]| s.iter().map(|x| **x as f64).sum::<f64>() / s.len() as f64;
        let ci = bootstrap_ci(&items, mean, &cfg);
        prop_assert!(ci.low <= ci.point && ci.point <= ci.high);
        prop_assert!(ci.low >= 0.0 && ci.high <= 1.0);
        prop_assert_eq!(ci, bootstrap_ci(&items, mean, &cfg));
    }

    #[test]
    fn subsets_of_fixture_intents_round_trip(keep in subsequence((0..6).collect::<Vec<usize>>(), 1..=6)) {
        let mut def = BotDefinition::from_slice(&fixture_bytes()).unwrap();
        def.intents = keep.iter().map(|i| def.intents[*i].clone()).collect();
        let again = BotDefinition::from_slice(def.to_json_pretty().as_bytes()).unwrap();
        prop_assert_eq!(again, def);
    }
}

#[test]
fn constant_sample_gives_degenerate_interval() {
    let ones = vec![1u8; 40];
    let ci = bootstrap_ci(&ones, |s: &[&u8]| s.iter().map(|x| **x as f64).sum::<f64>() / s.len() as f64, &BootstrapConfig::default());
    assert_eq!((ci.low, ci.point, ci.high), (1.0, 1.0, 1.0));
}

#[test]
fn wildcard_absorbs_exactly_one_word() {
    assert_eq!(token_set_similarity::<f64>("your case {*} is open", "your case 42 is open"), 1.0);
    assert!(token_set_similarity::<f64>("your case {*} is open", "your case 42 7 is open") < 1.0);
}

#[test]
fn fixture_round_trips_through_pretty_json() {
    let def = BotDefinition::from_slice(&fixture_bytes()).unwrap();
    assert_eq!(BotDefinition::from_slice(def.to_json_pretty().as_bytes()).unwrap(), def);
}

#[test]
fn unknown_fields_are_rejected() {
    let mut v: serde_json::Value = serde_json::from_slice(&fixture_bytes()).unwrap();
    v["surprise"] = serde_json::json!(1);
    assert!(BotDefinition::from_slice(v.to_string().as_bytes()).is_err());
}
