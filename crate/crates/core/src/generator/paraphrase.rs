//! Paraphrase generation for intent queries.
//!
//! The rule-based provider composes synonym substitution, stopword deletion,
//! clause reordering and leading phrases. Externally produced paraphrases
//! (e.g. from a neural paraphraser) can be ingested instead.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::GeneratorError;
use crate::schema::IntentDefinition;
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    RuleBased,
    Ingested,
}

/// Per intent: original utterance → paraphrases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphraseSet {
    pub provenance: Provenance,
    pub intents: BTreeMap<String, BTreeMap<String, Vec<String>>>,
}

impl ParaphraseSet {
    pub fn len(&self) -> usize {
        self.intents.values().flat_map(BTreeMap::values).map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Ingestion file layout: intent → origin utterance → paraphrases.
pub type ParaphraseFile = BTreeMap<String, BTreeMap<String, Vec<String>>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lexicon {
    pub synonyms: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub stopwords: Vec<String>,
    #[serde(default)]
    pub leading_phrases: Vec<String>,
}

const BUNDLED_LEXICON: &str = include_str!("../../data/lexicon.json");

impl Lexicon {
    pub fn bundled() -> Self {
        serde_json::from_str(BUNDLED_LEXICON).expect("bundled lexicon is valid JSON")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaphraseConfig {
    pub max_variants: usize,
    pub lexicon: Lexicon,
}

impl Default for ParaphraseConfig {
    fn default() -> Self {
        Self { max_variants: 10, lexicon: Lexicon::bundled() }
    }
}

/// Rule-based paraphrases for every training utterance of every intent.
pub fn generate_paraphrases(
    intents: &[IntentDefinition],
    config: &ParaphraseConfig,
) -> Result<ParaphraseSet, GeneratorError> {
    if config.lexicon.synonyms.is_empty() {
        return Err(GeneratorError::EmptyLexicon);
    }
    let intents = intents
        .iter()
        .map(|intent| {
            let per_origin = intent
                .training_utterances
                .iter()
                .map(|u| (u.clone(), paraphrase_utterance(u, config)))
                .filter(|(_, v)| !v.is_empty())
                .collect();
            (intent.name.clone(), per_origin)
        })
        .collect();
    Ok(ParaphraseSet { provenance: Provenance::RuleBased, intents })
}

/// Takes external paraphrases as given, dropping entries that normalize to
/// their origin or to an earlier paraphrase of the same origin.
pub fn ingest_paraphrases(file: &ParaphraseFile) -> ParaphraseSet {
    let intents = file
        .iter()
        .map(|(intent, origins)| {
            let per_origin = origins
                .iter()
                .map(|(origin, paras)| (origin.clone(), dedup_against(origin, paras.iter().cloned())))
                .filter(|(_, v)| !v.is_empty())
                .collect();
            (intent.clone(), per_origin)
        })
        .collect();
    ParaphraseSet { provenance: Provenance::Ingested, intents }
}

fn dedup_against(origin: &str, candidates: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut seen = BTreeSet::from([text::normalize(origin)]);
    candidates
        .into_iter()
        .map(|c| c.split_whitespace().collect::<Vec<_>>().join(" "))
        .filter(|c| !c.is_empty() && seen.insert(text::normalize(c)))
        .collect()
}

/// Up to `max_variants` paraphrases of one utterance.
///
/// Candidates come from several rule families that are interleaved
/// round-robin so a small budget still mixes rule types.
pub fn paraphrase_utterance(utterance: &str, config: &ParaphraseConfig) -> Vec<String> {
    let lex = &config.lexicon;
    let words: Vec<&str> = utterance.split_whitespace().collect();
    if words.is_empty() {
        return Vec::new();
    }
    let stop: BTreeSet<String> = lex.stopwords.iter().map(|s| s.to_lowercase()).collect();

    let synonyms = synonym_variants(&words, lex);
    let stripped = remove_stopwords(&words, &stop);
    let reordered = reorder_clauses(utterance);
    let leading = |s: &str| -> Vec<String> {
        lex.leading_phrases.iter().map(|p| format!("{p} {}", lower_first(s))).collect()
    };

    let families: Vec<Vec<String>> = vec![
        synonyms.clone(),
        stripped.iter().cloned().collect(),
        reordered.into_iter().collect(),
        leading(utterance),
        synonyms.iter().flat_map(|s| leading(s)).collect(),
        synonyms
            .iter()
            .filter_map(|s| {
                let w: Vec<&str> = s.split_whitespace().collect();
                remove_stopwords(&w, &stop)
            })
            .collect(),
        double_synonym_variants(&words, lex),
        stripped.iter().flat_map(|s| leading(s)).collect(),
    ];

    let mut ordered = Vec::new();
    let longest = families.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..longest {
        for f in &families {
            if let Some(v) = f.get(i) {
                ordered.push(v.clone());
            }
        }
    }
    let mut out = dedup_against(utterance, ordered);
    out.truncate(config.max_variants);
    out
}

fn key(word: &str) -> String {
    word.chars().filter(|c| c.is_alphanumeric()).flat_map(char::to_lowercase).collect()
}

/// Punctuation trailing the word, kept when it is replaced.
fn trailing_punct(word: &str) -> &str {
    let end = word.trim_end_matches(|c: char| !c.is_alphanumeric());
    &word[end.len()..]
}

fn substitute(words: &[&str], subs: &[(usize, &str)]) -> String {
    words
        .iter()
        .enumerate()
        .map(|(i, w)| match subs.iter().find(|(j, _)| *j == i) {
            Some((_, s)) => format!("{s}{}", trailing_punct(w)),
            None => (*w).to_owned(),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn synonym_variants(words: &[&str], lex: &Lexicon) -> Vec<String> {
    let mut out = Vec::new();
    for (i, w) in words.iter().enumerate() {
        if let Some(syns) = lex.synonyms.get(&key(w)) {
            for s in syns {
                out.push(substitute(words, &[(i, s)]));
            }
        }
    }
    out
}

fn double_synonym_variants(words: &[&str], lex: &Lexicon) -> Vec<String> {
    let hits: Vec<(usize, &Vec<String>)> = words
        .iter()
        .enumerate()
        .filter_map(|(i, w)| lex.synonyms.get(&key(w)).map(|s| (i, s)))
        .collect();
    let mut out = Vec::new();
    for (a, (i, si)) in hits.iter().enumerate() {
        for (j, sj) in &hits[a + 1..] {
            for (x, y) in si.iter().zip(sj.iter().cycle()) {
                out.push(substitute(words, &[(*i, x), (*j, y)]));
            }
        }
    }
    out
}

fn remove_stopwords(words: &[&str], stop: &BTreeSet<String>) -> Option<String> {
    let kept: Vec<&str> = words.iter().copied().filter(|w| !stop.contains(&key(w))).collect();
    (!kept.is_empty() && kept.len() < words.len()).then(|| kept.join(" "))
}

fn reorder_clauses(utterance: &str) -> Option<String> {
    let (a, b) = utterance.split_once(',')?;
    let (a, b) = (a.trim(), b.trim().trim_end_matches(['.', '?', '!']));
    (!a.is_empty() && !b.is_empty()).then(|| format!("{}, {}", b, lower_first(a)))
}

fn lower_first(s: &str) -> String {
    // keep the pronoun "I" capitalized
    if s.starts_with("I ") || s == "I" {
        return s.to_owned();
    }
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_lowercase().chain(c).collect(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(synonyms: &[(&str, &[&str])], stopwords: &[&str], max: usize) -> ParaphraseConfig {
        ParaphraseConfig {
            max_variants: max,
            lexicon: Lexicon {
                synonyms: synonyms
                    .iter()
                    .map(|(k, v)| ((*k).to_owned(), v.iter().map(|s| (*s).to_owned()).collect()))
                    .collect(),
                stopwords: stopwords.iter().map(|s| (*s).to_owned()).collect(),
                leading_phrases: vec!["please".into(), "I want to".into()],
            },
        }
    }

    #[test]
    fn only_leading_phrases_when_other_rules_are_vacuous() {
        let cfg = config(&[("zzz", &["yyy"])], &["the"], 5);
        let out = paraphrase_utterance("Check order status", &cfg);
        assert_eq!(out, vec!["please check order status", "I want to check order status"]);
    }

    #[test]
    fn all_families_contribute() {
        let cfg = config(&[("order", &["package"])], &["my"], 20);
        let out = paraphrase_utterance("Where is my order, I need it", &cfg);
        assert!(out.contains(&"Where is my package, I need it".to_string()));
        assert!(out.contains(&"Where is order, I need it".to_string()));
        assert!(out.contains(&"I need it, where is my order".to_string()));
        assert!(out.contains(&"please where is my order, I need it".to_string()));
    }

    #[test]
    fn outputs_are_distinct_from_origin_and_each_other() {
        let cfg = ParaphraseConfig::default();
        for u in ["check my order status", "I want to talk to an agent", "please end the chat"] {
            let out = paraphrase_utterance(u, &cfg);
            assert!(!out.is_empty());
            assert!(out.len() <= cfg.max_variants);
            let norm: BTreeSet<_> = out.iter().map(|s| text::normalize(s)).collect();
            assert_eq!(norm.len(), out.len());
            assert!(!norm.contains(&text::normalize(u)));
        }
    }

    #[test]
    fn empty_lexicon_is_an_error() {
        let cfg = config(&[], &[], 3);
        let intents = vec![IntentDefinition {
            name: "X".into(),
            entry_dialog: "D".into(),
            training_utterances: vec!["hi".into()],
        }];
        assert!(matches!(generate_paraphrases(&intents, &cfg), Err(GeneratorError::EmptyLexicon)));
    }

    #[test]
    fn ingestion_filters_normalized_duplicates() {
        let paras: Vec<String> = (0..10)
            .map(|i| format!("where is my parcel {}", i % 8))
            .chain(["Where  is my ORDER".to_string()])
            .collect();
        let file: ParaphraseFile =
            [("CO".to_string(), [("where is my order".to_string(), paras)].into())].into();
        let set = ingest_paraphrases(&file);
        assert_eq!(set.provenance, Provenance::Ingested);
        let got = &set.intents["CO"]["where is my order"];
        assert_eq!(got.len(), 8);
        assert_eq!(got[0], "where is my parcel 0");
    }
}
