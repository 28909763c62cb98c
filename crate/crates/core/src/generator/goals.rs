use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{index, IndexedRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::act_map::DialogActMap;
use super::ontology::Ontology;
use super::paraphrase::ParaphraseSet;
use super::GeneratorError;
use crate::schema::BotDefinition;
use crate::text::derive_seed;

/// One test case: an intent query plus the slot values the simulated user
/// supplies when asked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationGoal {
    pub goal_id: String,
    pub intent: String,
    pub dialog: String,
    pub intent_query: String,
    pub inform_slots: BTreeMap<String, String>,
    #[serde(default)]
    pub request_slots: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin_utterance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub text: String,
    pub origin: Option<String>,
}

/// Candidate intent queries per intent.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IntentQueries(pub BTreeMap<String, Vec<Query>>);

impl IntentQueries {
    /// The training utterances themselves.
    pub fn from_training(def: &BotDefinition) -> Self {
        Self(
            def.intents
                .iter()
                .map(|i| {
                    let qs = i.training_utterances.iter().map(|u| Query { text: u.clone(), origin: None }).collect();
                    (i.name.clone(), qs)
                })
                .collect(),
        )
    }

    /// Every paraphrase, remembering the utterance it came from.
    pub fn from_paraphrases(set: &ParaphraseSet) -> Self {
        Self(
            set.intents
                .iter()
                .map(|(intent, origins)| {
                    let qs = origins
                        .iter()
                        .flat_map(|(origin, paras)| {
                            paras.iter().map(|p| Query { text: p.clone(), origin: Some(origin.clone()) })
                        })
                        .collect();
                    (intent.clone(), qs)
                })
                .collect(),
        )
    }

    /// Plain utterance lists, e.g. a held-out evaluation set.
    pub fn from_utterances(map: &BTreeMap<String, Vec<String>>) -> Self {
        Self(
            map.iter()
                .map(|(intent, us)| {
                    (intent.clone(), us.iter().map(|u| Query { text: u.clone(), origin: None }).collect())
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalConfig {
    pub per_intent_cap: Option<usize>,
    pub seed: u64,
}


/// Builds one goal per selected query. When an intent has more queries than
/// the cap, a seeded uniform sample (kept in pool order) is used. Slot values
/// are drawn uniformly from the ontology for every `request_<Entity>` act of
/// the intent's dialog.
pub fn generate_goals(
    def: &BotDefinition,
    maps: &BTreeMap<String, DialogActMap>,
    ontology: &Ontology,
    queries: &IntentQueries,
    config: &GoalConfig,
) -> Result<Vec<SimulationGoal>, GeneratorError> {
    let mut goals = Vec::new();
    for (intent_name, pool) in &queries.0 {
        let intent = def
            .intent(intent_name)
            .ok_or_else(|| GeneratorError::UnknownTarget(format!("intent {intent_name:?}")))?;
        let dialog = &intent.entry_dialog;
        let map = maps.get(dialog).ok_or_else(|| GeneratorError::UnknownDialog(dialog.clone()))?;
        if !map.revised {
            return Err(GeneratorError::UnrevisedMap(dialog.clone()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, &["goals", intent_name]));
        let selected: Vec<&Query> = match config.per_intent_cap {
            Some(cap) if cap < pool.len() => {
                let mut idx = index::sample(&mut rng, pool.len(), cap).into_vec();
                idx.sort_unstable();
                idx.into_iter().map(|i| &pool[i]).collect()
            }
            _ => pool.iter().collect(),
        };
        let slots: Vec<&str> = map.requested_slots().collect();
        for (n, q) in selected.into_iter().enumerate() {
            let mut inform_slots = BTreeMap::new();
            for slot in &slots {
                let value = ontology
                    .values(dialog, slot)
                    .and_then(|vals| vals.choose(&mut rng))
                    .ok_or_else(|| GeneratorError::MissingOntologyValue {
                        dialog: dialog.clone(),
                        entity: (*slot).to_owned(),
                    })?;
                inform_slots.insert((*slot).to_owned(), value.clone());
            }
            goals.push(SimulationGoal {
                goal_id: format!("{intent_name}-{n:05}"),
                intent: intent_name.clone(),
                dialog: dialog.clone(),
                intent_query: q.text.clone(),
                inform_slots,
                request_slots: BTreeSet::new(),
                origin_utterance: q.origin.clone(),
            });
        }
    }
    Ok(goals)
}

/// Checks that the goal's inform slots are all requested by `map`.
pub fn goal_fits_map(goal: &SimulationGoal, map: &DialogActMap) -> bool {
    let requested: BTreeSet<&str> = map.requested_slots().collect();
    !goal.intent_query.trim().is_empty() && goal.inform_slots.keys().all(|s| requested.contains(s.as_str()))
}
