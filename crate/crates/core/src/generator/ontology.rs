use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::act_map::DialogActMap;
use crate::schema::{BotDefinition, EntityDefinition, EntityKind};
use crate::text::derive_seed;

/// Candidate entity values per dialog, used to fill goal slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ontology {
    pub seed: u64,
    pub dialogs: BTreeMap<String, BTreeMap<String, Vec<String>>>,
}

impl Ontology {
    pub fn values(&self, dialog: &str, entity: &str) -> Option<&[String]> {
        self.dialogs.get(dialog)?.get(entity).map(Vec::as_slice)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("ontology serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OntologyConfig {
    pub values_per_entity: usize,
    pub number_min: u64,
    pub number_max: u64,
    pub id_length: usize,
}

impl Default for OntologyConfig {
    fn default() -> Self {
        Self { values_per_entity: 5, number_min: 10_000, number_max: 99_999, id_length: 8 }
    }
}

const FREE_TEXT_SAMPLES: &[&str] = &[
    "my device will not turn on",
    "the screen keeps flickering",
    "I was charged twice for the same item",
    "the package arrived damaged",
    "I cannot log in to my account",
    "the app crashes when I open settings",
    "my refund has not arrived yet",
    "the battery drains very quickly",
];

const ID_ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

/// Lists every requested entity of each aggregated map with randomly
/// initialised values. Generation is seeded per (dialog, entity).
pub fn extract_ontology(
    def: &BotDefinition,
    maps: &BTreeMap<String, DialogActMap>,
    seed: u64,
    config: &OntologyConfig,
) -> Ontology {
    let slot_types = def.collected_slot_types();
    let mut dialogs = BTreeMap::new();
    for (dialog, map) in maps {
        let mut entities = BTreeMap::new();
        for slot in map.requested_slots() {
            let entity = slot_types
                .get(slot)
                .and_then(|ty| def.entity(ty))
                .or_else(|| def.entity(slot));
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[dialog, slot]));
            let values = match entity {
                Some(e) => generate_values(e, config, &mut rng),
                None => free_text_values(config.values_per_entity, &mut rng),
            };
            entities.insert(slot.to_owned(), values);
        }
        dialogs.insert(dialog.clone(), entities);
    }
    Ontology { seed, dialogs }
}

pub fn generate_values(entity: &EntityDefinition, config: &OntologyConfig, rng: &mut impl Rng) -> Vec<String> {
    let k = config.values_per_entity.max(1);
    match entity.kind {
        EntityKind::Enumeration => entity.values.clone().unwrap_or_default(),
        EntityKind::Email => distinct(k, rng, |rng| format!("user{}@example.com", rng.random_range(1..=9999u32))),
        EntityKind::Number => {
            let (lo, hi) = (config.number_min, config.number_max.max(config.number_min));
            let k = k.min(usize::try_from(hi - lo + 1).unwrap_or(usize::MAX));
            distinct(k, rng, |rng| rng.random_range(lo..=hi).to_string())
        }
        EntityKind::AlphanumericId => {
            let len = config.id_length.max(4);
            distinct(k, rng, |rng| {
                (0..len)
                    .map(|_| char::from(ID_ALPHABET[rng.random_range(0..ID_ALPHABET.len())]))
                    .collect()
            })
        }
        EntityKind::FreeText => free_text_values(k, rng),
    }
}

fn free_text_values(k: usize, rng: &mut impl Rng) -> Vec<String> {
    let mut pool: Vec<&str> = FREE_TEXT_SAMPLES.to_vec();
    pool.shuffle(rng);
    (0..k)
        .map(|i| match pool.get(i) {
            Some(s) => (*s).to_owned(),
            None => format!("{} ({})", pool[i % pool.len()], i / pool.len() + 1),
        })
        .collect()
}

fn distinct<R: Rng>(k: usize, rng: &mut R, mut draw: impl FnMut(&mut R) -> String) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(k);
    let mut attempts = 0;
    while out.len() < k && attempts < k * 1000 {
        attempts += 1;
        let v = draw(rng);
        if seen.insert(v.clone()) {
            out.push(v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use regex::Regex;

    fn entity(kind: EntityKind, values: Option<Vec<&str>>) -> EntityDefinition {
        EntityDefinition {
            name: "E".into(),
            kind,
            values: values.map(|v| v.into_iter().map(str::to_owned).collect()),
        }
    }

    #[test]
    fn enumeration_passes_through() {
        let e = entity(EntityKind::Enumeration, Some(vec!["Open", "Closed"]));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(generate_values(&e, &OntologyConfig::default(), &mut rng), vec!["Open", "Closed"]);
    }

    #[test]
    fn kinds_conform() {
        let cfg = OntologyConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let emails = generate_values(&entity(EntityKind::Email, None), &cfg, &mut rng);
        let re = Regex::new(r"^user\d+@example\.com$").unwrap();
        assert_eq!(emails.len(), 5);
        assert!(emails.iter().all(|e| re.is_match(e)));
        let ids = generate_values(&entity(EntityKind::AlphanumericId, None), &cfg, &mut rng);
        let re = Regex::new(r"^[A-Z0-9]{8}$").unwrap();
        assert!(ids.iter().all(|e| re.is_match(e)));
        let nums = generate_values(&entity(EntityKind::Number, None), &cfg, &mut rng);
        assert!(nums.iter().all(|n| (10_000..=99_999).contains(&n.parse::<u64>().unwrap())));
        let texts = generate_values(&entity(EntityKind::FreeText, None), &cfg, &mut rng);
        assert_eq!(texts.iter().collect::<BTreeSet<_>>().len(), 5);
    }

    #[test]
    fn narrow_number_range_caps_k() {
        let cfg = OntologyConfig { number_min: 1, number_max: 3, ..Default::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let nums = generate_values(&entity(EntityKind::Number, None), &cfg, &mut rng);
        assert_eq!(nums.len(), 3);
    }
}
