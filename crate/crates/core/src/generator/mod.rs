//! Turns a bot definition into simulation inputs: aggregated dialog-act maps,
//! the entity ontology, paraphrased intent queries and simulation goals.

pub mod act_map;
pub mod goals;
pub mod graph;
pub mod ontology;
pub mod paraphrase;
pub mod revision;

use thiserror::Error;

pub use act_map::{parse_local_maps, ActKind, DialogActMap, DIALOG_SUCCESS, INTENT_SUCCESS, SAY};
pub use goals::{generate_goals, GoalConfig, IntentQueries, Query, SimulationGoal};
pub use graph::{aggregate_map, build_act_maps, build_graph, infer_success_acts, ConversationGraph, Edge, SuccessActs, Vertex};
pub use ontology::{extract_ontology, Ontology, OntologyConfig};
pub use paraphrase::{
    generate_paraphrases, ingest_paraphrases, Lexicon, ParaphraseConfig, ParaphraseFile, ParaphraseSet, Provenance,
};
pub use revision::{apply_revision_document, apply_revisions, DialogRevision, RevisionDocument};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeneratorError {
    #[error("unknown dialog {0:?}")]
    UnknownDialog(String),
    #[error("no success dialog is reachable from {0:?}")]
    NoPath(String),
    #[error("dialog {0:?} and every reachable success dialog have no steps")]
    HeuristicUnavailable(String),
    #[error("revision references unknown {0}")]
    UnknownTarget(String),
    #[error("invalid revision: {0}")]
    InvalidRevision(String),
    #[error("rule-based paraphrasing needs a non-empty lexicon")]
    EmptyLexicon,
    #[error("ontology has no values for {entity:?} in dialog {dialog:?}")]
    MissingOntologyValue { dialog: String, entity: String },
    #[error("dialog-act map for {0:?} has not been revised")]
    UnrevisedMap(String),
}
