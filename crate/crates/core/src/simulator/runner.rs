use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::agenda::{AgendaState, Outcome, UserDialogAct};
use super::client::{ChatClient, TransportError};
use super::episode::{EpisodeRecord, Turn};
use super::nlg::{realize, NlgError, ResponseTemplateSet};
use super::nlu::{DialogMatcher, NluMatch, DEFAULT_THRESHOLD};
use crate::generator::{DialogActMap, SimulationGoal};
use crate::schema::BotDefinition;
use crate::text::derive_seed;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimError {
    #[error("dialog-act map for {0:?} has not been revised")]
    UnrevisedMap(String),
    #[error("no dialog-act map for dialog {0:?}")]
    MissingMap(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Nlg(#[from] NlgError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub threshold: f64,
    pub max_turns: usize,
    pub parallelism: usize,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self { threshold: DEFAULT_THRESHOLD, max_turns: 20, parallelism: 1, seed: 0 }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(SimError::InvalidConfig(format!("threshold {} not in (0, 1]", self.threshold)));
        }
        if self.max_turns == 0 {
            return Err(SimError::InvalidConfig("max_turns must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(SimError::InvalidConfig("parallelism must be at least 1".into()));
        }
        Ok(())
    }
}

/// Everything an episode needs besides the goal and the client.
pub struct SimulationContext {
    matchers: BTreeMap<String, DialogMatcher>,
    /// dialog → intent, used to name the owner of a foreign intent match.
    dialog_intents: BTreeMap<String, String>,
    templates: ResponseTemplateSet,
}

impl SimulationContext {
    pub fn new(
        maps: &BTreeMap<String, DialogActMap>,
        dialog_intents: BTreeMap<String, String>,
        templates: ResponseTemplateSet,
    ) -> Result<Self, SimError> {
        if let Some(m) = maps.values().find(|m| !m.revised) {
            return Err(SimError::UnrevisedMap(m.dialog.clone()));
        }
        templates.validate()?;
        let matchers = maps
            .iter()
            .map(|(dialog, map)| (dialog.clone(), DialogMatcher::new(map, maps.values())))
            .collect();
        Ok(Self { matchers, dialog_intents, templates })
    }

    pub fn from_definition(
        def: &BotDefinition,
        maps: &BTreeMap<String, DialogActMap>,
        templates: ResponseTemplateSet,
    ) -> Result<Self, SimError> {
        let dialog_intents = def.intents.iter().map(|i| (i.entry_dialog.clone(), i.name.clone())).collect();
        Self::new(maps, dialog_intents, templates)
    }

    fn matcher(&self, dialog: &str) -> Result<&DialogMatcher, SimError> {
        self.matchers.get(dialog).ok_or_else(|| SimError::MissingMap(dialog.to_owned()))
    }
}

fn realize_all(acts: &[UserDialogAct], ctx: &SimulationContext, seed: u64, goal_id: &str, turn: usize) -> Result<String, NlgError> {
    let turn = turn.to_string();
    let parts = acts
        .iter()
        .enumerate()
        .map(|(i, a)| realize(a, &ctx.templates, derive_seed(seed, &[goal_id, &turn, &i.to_string()])))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(parts.join(" "))
}

fn abort(mut rec: EpisodeRecord, err: TransportError) -> EpisodeRecord {
    rec.outcome = Outcome::Aborted;
    rec.error_turn = None;
    rec.transport_error = Some(err.to_string());
    rec
}

/// Runs one goal against the bot until a terminal outcome.
pub fn run_episode(
    goal: &SimulationGoal,
    ctx: &SimulationContext,
    client: &dyn ChatClient,
    config: &SimulationConfig,
) -> Result<EpisodeRecord, SimError> {
    let matcher = ctx.matcher(&goal.dialog)?;
    let mut rec = EpisodeRecord::new(goal);
    let session = match client.start_session(&goal.goal_id) {
        Ok(s) => s,
        Err(e) => return Ok(abort(rec, e)),
    };
    let result = drive(goal, ctx, matcher, client, config, &session, &mut rec);
    if let Err(e) = client.end(&session) {
        log::debug!("ending session {session} failed: {e}");
    }
    match result {
        Ok(()) => Ok(rec),
        Err(Interrupted::Transport(e)) => Ok(abort(rec, e)),
        Err(Interrupted::Sim(e)) => Err(e),
    }
}

enum Interrupted {
    Transport(TransportError),
    Sim(SimError),
}

impl From<NlgError> for Interrupted {
    fn from(e: NlgError) -> Self {
        Interrupted::Sim(e.into())
    }
}

fn drive(
    goal: &SimulationGoal,
    ctx: &SimulationContext,
    matcher: &DialogMatcher,
    client: &dyn ChatClient,
    config: &SimulationConfig,
    session: &str,
    rec: &mut EpisodeRecord,
) -> Result<(), Interrupted> {
    let (acts, state) = AgendaState::new(goal.clone(), config.max_turns).open();
    let utterance = realize_all(&acts, ctx, config.seed, &goal.goal_id, 0)?;
    rec.turns.push(Turn {
        index: 0,
        bot_messages: vec![],
        matches: vec![],
        user_acts: acts,
        user_utterance: Some(utterance.clone()),
    });
    let mut reply = client.send(session, &utterance).map_err(Interrupted::Transport)?;
    let mut state = state.close_turn(true, false);
    rec.agenda_trace.push(state.agenda.clone());

    loop {
        let index = state.turn_index;
        let mut acts = Vec::new();
        let mut matches = Vec::new();
        // Messages are handled in order; the first terminal match ends the turn.
        'messages: for msg in &reply.messages {
            let m: NluMatch<f64> = matcher.match_message(msg, config.threshold, !state.intent_confirmed());
            let mut pending = vec![m.clone()];
            if !m.is_unmatched() && m.owner.is_none() {
                pending.extend(matcher.co_owned_acts(&m).into_iter().map(|act| NluMatch { act, ..m.clone() }));
            }
            for m in pending {
                let owner_intent = m.owner.as_deref().and_then(|d| ctx.dialog_intents.get(d)).map(String::as_str);
                let (emitted, next) = state
                    .next_user_acts(&m, owner_intent)
                    .expect("policy is only consulted while the episode is in progress");
                state = next;
                acts.extend(emitted);
                matches.push(m);
                if state.outcome.is_terminal() {
                    break 'messages;
                }
            }
        }
        state = state.close_turn(!acts.is_empty(), reply.closed);
        let utterance = if acts.is_empty() { None } else { Some(realize_all(&acts, ctx, config.seed, &goal.goal_id, index)?) };
        rec.turns.push(Turn {
            index,
            bot_messages: reply.messages.clone(),
            matches,
            user_acts: acts,
            user_utterance: utterance.clone(),
        });
        rec.agenda_trace.push(state.agenda.clone());
        if state.outcome.is_terminal() {
            break;
        }
        let text = utterance.expect("an in-progress turn always emits acts");
        reply = client.send(session, &text).map_err(Interrupted::Transport)?;
    }

    rec.outcome = state.outcome;
    rec.error_turn = state.error_turn;
    rec.predicted_intent = state.predicted_intent;
    rec.other_cause = state.other_cause;
    Ok(())
}

/// Runs every goal, up to `parallelism` at a time. Output order follows
/// `goals`; transport failures abort single episodes, never the batch.
pub fn run_simulation(
    goals: &[SimulationGoal],
    ctx: &SimulationContext,
    client: &dyn ChatClient,
    config: &SimulationConfig,
) -> Result<Vec<EpisodeRecord>, SimError> {
    config.validate()?;
    if let Some(g) = goals.iter().find(|g| !ctx.matchers.contains_key(&g.dialog)) {
        return Err(SimError::MissingMap(g.dialog.clone()));
    }
    if config.parallelism == 1 {
        return goals.iter().map(|g| run_episode(g, ctx, client, config)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    pool.install(|| goals.par_iter().map(|g| run_episode(g, ctx, client, config)).collect())
}
