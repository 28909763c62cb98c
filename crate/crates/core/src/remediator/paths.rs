use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::RemediationError;
use crate::generator::graph::walk_simple_paths;
use crate::generator::ConversationGraph;

pub const DEFAULT_MAX_PATHS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DialogPath {
    pub vertices: Vec<String>,
    /// Number of edges.
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathEnumeration {
    pub source: String,
    pub target: String,
    pub paths: Vec<DialogPath>,
    pub truncated: bool,
}

/// Simple paths from `source` to `target` of at most `max_length` edges,
/// in lexicographic order of their vertex names, cut off after
/// `max_paths`. A path from a vertex to itself is the single zero-length
/// path.
pub fn enumerate_paths(
    graph: &ConversationGraph,
    source: &str,
    target: &str,
    max_length: Option<usize>,
    max_paths: usize,
) -> Result<PathEnumeration, RemediationError> {
    let s = graph.index_of(source).ok_or_else(|| RemediationError::UnknownVertex(source.to_owned()))?;
    let t = graph.index_of(target).ok_or_else(|| RemediationError::UnknownVertex(target.to_owned()))?;
    let mut paths = Vec::new();
    let mut truncated = false;
    let adj = graph.sorted_adjacency();
    walk_simple_paths(&adj, s, max_length, &mut |path| {
        if *path.last().expect("non-empty path") != t {
            return ControlFlow::Continue(true);
        }
        if paths.len() == max_paths {
            truncated = true;
            return ControlFlow::Break(());
        }
        paths.push(DialogPath {
            vertices: path.iter().map(|&i| graph.vertices[i].name.clone()).collect(),
            length: path.len() - 1,
        });
        ControlFlow::Continue(false)
    });
    Ok(PathEnumeration { source: source.to_owned(), target: target.to_owned(), paths, truncated })
}
