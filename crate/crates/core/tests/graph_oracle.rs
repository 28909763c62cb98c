mod support;

use std::collections::BTreeSet;

use dialogforge_core::generator::{aggregate_map, build_graph};
use dialogforge_core::remediator::enumerate_paths;
use dialogforge_core::schema::BotDefinition;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture() -> BotDefinition {
    BotDefinition::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/template_bot.json")).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn aggregation_matches_exhaustive_union(seed in any::<u64>(), n_success in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = support::random_graph(&mut rng, 7);
        let n = g.vertices.len();
        let success: BTreeSet<String> = (0..n_success.min(n)).map(|i| format!("v{}", n - 1 - i)).collect();
        for v in &g.vertices {
            let got = aggregate_map(&g, &v.name, &success);
            match support::brute_force_union(&g, &v.name, &success) {
                None => prop_assert!(got.is_err()),
                Some(want) => {
                    let got = got.unwrap();
                    prop_assert_eq!(support::as_sets(&got), want);
                    prop_assert!(!support::has_duplicates(&got));
                    // the dialog's own candidates lead each list
                    for (act, own) in &v.local.entries {
                        let list = &got.entries[act];
                        let mut seen = BTreeSet::new();
                        let uniq: Vec<_> = own.iter().filter(|c| seen.insert(*c)).collect();
                        prop_assert_eq!(&list[..uniq.len()].iter().collect::<Vec<_>>(), &uniq);
                    }
                }
            }
        }
    }

    #[test]
    fn path_enumeration_matches_brute_force(seed in any::<u64>(), max_len in proptest::option::of(0usize..5), cap in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = support::random_graph(&mut rng, 6);
        for s in &g.vertices {
            for t in &g.vertices {
                let got = enumerate_paths(&g, &s.name, &t.name, max_len, cap).unwrap();
                let (want, truncated) = support::brute_force_paths(&g, &s.name, &t.name, max_len, cap);
                let got_paths: Vec<Vec<String>> = got.paths.iter().map(|p| p.vertices.clone()).collect();
                prop_assert_eq!(&got_paths, &want);
                prop_assert_eq!(got.truncated, truncated);
                for p in &got.paths {
                    prop_assert_eq!(p.length, p.vertices.len() - 1);
                }
            }
        }
    }
}

#[test]
fn fixture_paths_match_brute_force() {
    let g = build_graph(&fixture());
    for s in &g.vertices {
        for t in &g.vertices {
            let got = enumerate_paths(&g, &s.name, &t.name, None, 1000).unwrap();
            let (want, _) = support::brute_force_paths(&g, &s.name, &t.name, None, 1000);
            let got: Vec<Vec<String>> = got.paths.into_iter().map(|p| p.vertices).collect();
            assert_eq!(got, want, "{} -> {}", s.name, t.name);
        }
    }
}

#[test]
fn path_to_self_is_single_vertex() {
    let g = build_graph(&fixture());
    let e = enumerate_paths(&g, "End_Chat", "End_Chat", None, 10).unwrap();
    assert_eq!(e.paths.len(), 1);
    assert_eq!(e.paths[0].vertices, vec!["End_Chat"]);
    assert_eq!(e.paths[0].length, 0);
}

#[test]
fn unknown_vertex_is_an_error() {
    let g = build_graph(&fixture());
    assert!(enumerate_paths(&g, "Nope", "End_Chat", None, 10).is_err());
}

#[test]
fn case_lookup_failure_route_reaches_success_through_agent() {
    let g = build_graph(&fixture());
    let e = enumerate_paths(&g, "Check_Issue_Status", "End_Chat", None, 10).unwrap();
    let routes: Vec<Vec<String>> = e.paths.into_iter().map(|p| p.vertices).collect();
    assert_eq!(
        routes,
        vec![
            vec!["Check_Issue_Status", "Case_Lookup", "End_Chat"],
            vec!["Check_Issue_Status", "Case_Lookup", "Transfer_To_Agent", "End_Chat"],
        ]
    );
}
