//! Agenda-based user simulation over a chat channel.

pub mod agenda;
pub mod client;
pub mod episode;
pub mod nlg;
pub mod nlu;
pub mod runner;

pub use agenda::{AgendaState, OtherErrorCause, Outcome, PolicyError, UserActKind, UserDialogAct};
pub use client::{BotReply, ChatClient, TransportError};
pub use episode::{read_jsonl, to_jsonl, write_jsonl, EpisodeRecord, Turn, EPISODE_SCHEMA_VERSION};
pub use nlg::{realize, NlgError, ResponseTemplateSet};
pub use nlu::{act_priority, match_dialog_act, token_set_similarity, DialogMatcher, DEFAULT_THRESHOLD, UNMATCHED};
pub use runner::{run_episode, run_simulation, SimError, SimulationConfig, SimulationContext};
