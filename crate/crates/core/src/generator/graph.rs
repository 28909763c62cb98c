//! Conversation graph: dialogs are vertices carrying their local act maps,
//! transitions are edges. Aggregated maps and the success-message heuristic
//! are computed from simple paths over this graph.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::act_map::{local_map, push_unique, DialogActMap};
use super::GeneratorError;
use crate::schema::{BotDefinition, Condition};
use crate::text;

/// Upper bound on recorded simple paths per (dialog, success dialog) pair.
pub const MAX_PATHS_PER_TARGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub name: String,
    pub local: DialogActMap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub source: String,
    pub target: String,
    pub condition: Condition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
}

/// One vertex per dialog, one edge per transition rule.
pub fn build_graph(def: &BotDefinition) -> ConversationGraph {
    let vertices = def
        .dialogs
        .iter()
        .map(|d| Vertex { name: d.name.clone(), local: local_map(d) })
        .collect();
    let edges = def
        .dialogs
        .iter()
        .flat_map(|d| {
            d.transitions.iter().map(move |t| Edge {
                source: d.name.clone(),
                target: t.target.clone(),
                condition: t.condition,
            })
        })
        .collect();
    ConversationGraph { vertices, edges }
}

impl ConversationGraph {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    /// Successor lists in edge declaration order, parallel edges collapsed.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            if let (Some(s), Some(t)) = (self.index_of(&e.source), self.index_of(&e.target)) {
                if !adj[s].contains(&t) {
                    adj[s].push(t);
                }
            }
        }
        adj
    }

    /// Adjacency with successors sorted by vertex name.
    pub fn sorted_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = self.adjacency();
        for succ in &mut adj {
            succ.sort_by(|a, b| self.vertices[*a].name.cmp(&self.vertices[*b].name));
        }
        adj
    }

    /// Simple paths from `dialog` to any success dialog, each as a list of
    /// vertex indices. Paths may pass through a success dialog on the way to
    /// another one. Returns the paths and whether any target hit the cap.
    pub fn success_paths(
        &self,
        dialog: &str,
        success: &BTreeSet<String>,
    ) -> Result<(Vec<Vec<usize>>, bool), GeneratorError> {
        let source = self
            .index_of(dialog)
            .ok_or_else(|| GeneratorError::UnknownDialog(dialog.to_owned()))?;
        let is_target: Vec<bool> =
            self.vertices.iter().map(|v| success.contains(&v.name)).collect();
        let adj = self.adjacency();
        let mut per_target = vec![0usize; self.vertices.len()];
        let mut truncated = false;
        let mut paths = Vec::new();
        walk_simple_paths(&adj, source, None, &mut |path| {
            let last = *path.last().expect("non-empty path");
            if is_target[last] {
                if per_target[last] < MAX_PATHS_PER_TARGET {
                    per_target[last] += 1;
                    paths.push(path.to_vec());
                } else {
                    truncated = true;
                }
            }
            let all_capped = is_target
                .iter()
                .enumerate()
                .filter(|(_, t)| **t)
                .all(|(i, _)| per_target[i] >= MAX_PATHS_PER_TARGET);
            if all_capped {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(true)
            }
        });
        if truncated {
            log::warn!(
                "path enumeration from {dialog:?} capped at {MAX_PATHS_PER_TARGET} paths per success dialog"
            );
        }
        Ok((paths, truncated))
    }
}

/// Depth-first enumeration of simple paths from `source`. `visit` is called
/// for every path prefix (including `[source]`); returning
/// `Continue(false)` stops extending that prefix, `Break` stops the walk.
/// `max_edges` bounds the path length in edges.
pub(crate) fn walk_simple_paths(
    adj: &[Vec<usize>],
    source: usize,
    max_edges: Option<usize>,
    visit: &mut dyn FnMut(&[usize]) -> ControlFlow<(), bool>,
) {
    fn go(
        adj: &[Vec<usize>],
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        max_edges: Option<usize>,
        visit: &mut dyn FnMut(&[usize]) -> ControlFlow<(), bool>,
    ) -> ControlFlow<()> {
        let extend = visit(path)?;
        if !extend || max_edges.is_some_and(|m| path.len() > m) {
            return ControlFlow::Continue(());
        }
        let here = *path.last().expect("non-empty path");
        for &next in &adj[here] {
            if on_path[next] {
                continue;
            }
            on_path[next] = true;
            path.push(next);
            let flow = go(adj, path, on_path, max_edges, visit);
            path.pop();
            on_path[next] = false;
            flow?;
        }
        ControlFlow::Continue(())
    }

    let mut on_path = vec![false; adj.len()];
    on_path[source] = true;
    let mut path = vec![source];
    let _ = go(adj, &mut path, &mut on_path, max_edges, visit);
}

/// Unions the local maps of every vertex lying on a simple path from
/// `dialog` to a success dialog (endpoints included). Candidates keep the
/// order in which their vertices are first reached.
///
/// The returned map has empty special-act lists; see
/// [`infer_success_acts`].
pub fn aggregate_map(
    graph: &ConversationGraph,
    dialog: &str,
    success: &BTreeSet<String>,
) -> Result<DialogActMap, GeneratorError> {
    let (paths, _) = graph.success_paths(dialog, success)?;
    if paths.is_empty() {
        return Err(GeneratorError::NoPath(dialog.to_owned()));
    }
    let mut order = Vec::new();
    let mut seen = vec![false; graph.vertices.len()];
    for v in paths.iter().flatten() {
        if !seen[*v] {
            seen[*v] = true;
            order.push(*v);
        }
    }
    let mut out = DialogActMap::empty(dialog);
    for v in order {
        for (act, cands) in &graph.vertices[v].local.entries {
            let list = out.entries.entry(act.clone()).or_default();
            for c in cands {
                push_unique(list, c.clone());
            }
        }
    }
    Ok(out)
}

/// The two golden-label acts inferred by the first/last-message heuristic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuccessActs {
    pub intent_success: Vec<String>,
    pub dialog_success: Vec<String>,
}

/// Takes the first message of the entry dialog as the intent-success label
/// and the last message of the terminal success dialog as the
/// dialog-success label, per success path.
///
/// When the entry dialog has no steps, the first stepful dialog along each
/// path supplies the intent-success message; symmetrically the last stepful
/// dialog supplies the dialog-success message.
pub fn infer_success_acts(
    def: &BotDefinition,
    graph: &ConversationGraph,
    dialog: &str,
) -> Result<SuccessActs, GeneratorError> {
    let success: BTreeSet<String> = def.success_dialogs.iter().cloned().collect();
    let (paths, _) = graph.success_paths(dialog, &success)?;
    if paths.is_empty() {
        return Err(GeneratorError::NoPath(dialog.to_owned()));
    }
    let steps_of = |v: usize| {
        def.dialog(&graph.vertices[v].name)
            .map(|d| d.steps.as_slice())
            .unwrap_or_default()
    };
    let mut intent_success = Vec::new();
    let mut dialog_success = Vec::new();
    for path in &paths {
        if let Some(first) = path.iter().find_map(|v| steps_of(*v).first()) {
            push_unique(&mut intent_success, text::strip_placeholders(&first.text));
        }
        if let Some(last) = path.iter().rev().find_map(|v| steps_of(*v).last()) {
            push_unique(&mut dialog_success, text::strip_placeholders(&last.text));
        }
    }
    if intent_success.is_empty() || dialog_success.is_empty() {
        return Err(GeneratorError::HeuristicUnavailable(dialog.to_owned()));
    }
    Ok(SuccessActs { intent_success, dialog_success })
}

/// Aggregated, heuristically labelled maps for every intent entry dialog.
pub fn build_act_maps(
    def: &BotDefinition,
    graph: &ConversationGraph,
) -> Result<BTreeMap<String, DialogActMap>, GeneratorError> {
    let success: BTreeSet<String> = def.success_dialogs.iter().cloned().collect();
    let mut out = BTreeMap::new();
    for intent in &def.intents {
        if out.contains_key(&intent.entry_dialog) {
            continue;
        }
        let mut map = aggregate_map(graph, &intent.entry_dialog, &success)?;
        let acts = infer_success_acts(def, graph, &intent.entry_dialog)?;
        map.intent_success_message = acts.intent_success;
        map.dialog_success_message = acts.dialog_success;
        out.insert(intent.entry_dialog.clone(), map);
    }
    Ok(out)
}
