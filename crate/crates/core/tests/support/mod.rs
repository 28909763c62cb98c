//! Independent oracles and random inputs shared by the integration tests
//! and the acceptance harness.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use dialogforge_core::generator::{ConversationGraph, DialogActMap, Edge, Vertex};
use dialogforge_core::schema::Condition;
use rand::Rng;

const ACTS: &[&str] = &["say", "request_Email", "request_Order", "confirm_Email"];
const TEXTS: &[&str] = &["hello", "what is your email?", "order number?", "thanks", "is {*} right?", "bye now"];

/// A graph of 1..=max_vertices named vertices `v0..`, random edges
/// (self-loops and parallel edges included), and small local maps drawn
/// from a shared candidate pool so unions overlap.
pub fn random_graph(rng: &mut impl Rng, max_vertices: usize) -> ConversationGraph {
    let n = rng.random_range(1..=max_vertices);
    let vertices = (0..n)
        .map(|i| {
            let name = format!("v{i}");
            let mut local = DialogActMap::empty(&name);
            for _ in 0..rng.random_range(0..4) {
                let act = ACTS[rng.random_range(0..ACTS.len())];
                let text = TEXTS[rng.random_range(0..TEXTS.len())];
                local.add(act, format!("{text} ({})", rng.random_range(0..3)));
            }
            Vertex { name, local }
        })
        .collect();
    let p = rng.random_range(0.1..0.6);
    let mut edges = Vec::new();
    for s in 0..n {
        for t in 0..n {
            if rng.random_bool(p) {
                let condition = [Condition::Always, Condition::OnSuccess, Condition::OnFailure][rng.random_range(0..3)];
                edges.push(Edge { source: format!("v{s}"), target: format!("v{t}"), condition });
                if rng.random_bool(0.1) {
                    edges.push(Edge { source: format!("v{s}"), target: format!("v{t}"), condition: Condition::Always });
                }
            }
        }
    }
    ConversationGraph { vertices, edges }
}

fn has_edge(g: &ConversationGraph, s: &str, t: &str) -> bool {
    g.edges.iter().any(|e| e.source == s && e.target == t)
}

/// Every simple path starting at `source`, found by trying every ordered
/// selection of distinct vertices and keeping those whose consecutive pairs
/// are edges.
pub fn all_simple_paths_from(g: &ConversationGraph, source: &str) -> Vec<Vec<String>> {
    let names: Vec<String> = g.vertices.iter().map(|v| v.name.clone()).collect();
    let mut out = Vec::new();
    fn arrangements(pool: &[String], prefix: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        out.push(prefix.clone());
        for v in pool {
            if !prefix.contains(v) {
                prefix.push(v.clone());
                arrangements(pool, prefix, out);
                prefix.pop();
            }
        }
    }
    let mut candidates = Vec::new();
    arrangements(&names, &mut vec![source.to_owned()], &mut candidates);
    for c in candidates {
        if c.windows(2).all(|w| has_edge(g, &w[0], &w[1])) {
            out.push(c);
        }
    }
    out
}

/// act → candidate set over every vertex on a simple path from `dialog` to
/// a success vertex; `None` when no such path exists.
pub fn brute_force_union(
    g: &ConversationGraph,
    dialog: &str,
    success: &BTreeSet<String>,
) -> Option<BTreeMap<String, BTreeSet<String>>> {
    let paths: Vec<Vec<String>> =
        all_simple_paths_from(g, dialog).into_iter().filter(|p| success.contains(p.last().unwrap())).collect();
    if paths.is_empty() {
        return None;
    }
    let on_path: BTreeSet<&String> = paths.iter().flatten().collect();
    let mut union: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for v in &g.vertices {
        if on_path.contains(&v.name) {
            for (act, cands) in &v.local.entries {
                union.entry(act.clone()).or_default().extend(cands.iter().cloned());
            }
        }
    }
    Some(union)
}

pub fn as_sets(map: &DialogActMap) -> BTreeMap<String, BTreeSet<String>> {
    map.entries.iter().map(|(a, c)| (a.clone(), c.iter().cloned().collect())).collect()
}

pub fn has_duplicates(map: &DialogActMap) -> bool {
    map.entries.values().any(|c| c.iter().collect::<BTreeSet<_>>().len() != c.len())
}

/// Simple paths from `source` to `target` with at most `max_length` edges,
/// sorted by vertex-name sequence, first `max_paths` kept.
pub fn brute_force_paths(
    g: &ConversationGraph,
    source: &str,
    target: &str,
    max_length: Option<usize>,
    max_paths: usize,
) -> (Vec<Vec<String>>, bool) {
    let mut paths: Vec<Vec<String>> = all_simple_paths_from(g, source)
        .into_iter()
        .filter(|p| p.last().map(String::as_str) == Some(target))
        .filter(|p| max_length.is_none_or(|m| p.len() - 1 <= m))
        .collect();
    paths.sort();
    let truncated = paths.len() > max_paths;
    paths.truncate(max_paths);
    (paths, truncated)
}
