use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::agenda::{OtherErrorCause, Outcome, UserDialogAct};
use super::nlu::NluMatch;
use crate::generator::SimulationGoal;

pub const EPISODE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub index: usize,
    /// Bot messages this turn responds to; empty on the opening turn.
    pub bot_messages: Vec<String>,
    pub matches: Vec<NluMatch<f64>>,
    pub user_acts: Vec<UserDialogAct>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user_utterance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub schema_version: u32,
    pub goal_id: String,
    pub goal: SimulationGoal,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_turn: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted_intent: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other_cause: Option<OtherErrorCause>,
    pub turns: Vec<Turn>,
    /// Agenda (bottom first) after each turn.
    pub agenda_trace: Vec<Vec<UserDialogAct>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport_error: Option<String>,
}

impl EpisodeRecord {
    pub fn new(goal: &SimulationGoal) -> Self {
        Self {
            schema_version: EPISODE_SCHEMA_VERSION,
            goal_id: goal.goal_id.clone(),
            goal: goal.clone(),
            outcome: Outcome::InProgress,
            error_turn: None,
            predicted_intent: None,
            other_cause: None,
            turns: Vec::new(),
            agenda_trace: Vec::new(),
            transport_error: None,
        }
    }

    pub fn is_aborted(&self) -> bool {
        self.outcome == Outcome::Aborted
    }

    /// Last NLU match of the episode, if any.
    pub fn last_match(&self) -> Option<&NluMatch<f64>> {
        self.turns.iter().rev().find_map(|t| t.matches.last())
    }

    pub fn turn(&self, index: usize) -> Option<&Turn> {
        self.turns.iter().find(|t| t.index == index)
    }
}

pub fn write_jsonl<W: Write>(mut w: W, episodes: &[EpisodeRecord]) -> io::Result<()> {
    for e in episodes {
        serde_json::to_writer(&mut w, e)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn to_jsonl(episodes: &[EpisodeRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, episodes).expect("writing to a Vec cannot fail");
    buf
}

pub fn read_jsonl<R: BufRead>(r: R) -> io::Result<Vec<EpisodeRecord>> {
    let mut out = Vec::new();
    for (n, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", n + 1)))?;
        out.push(rec);
    }
    Ok(out)
}
