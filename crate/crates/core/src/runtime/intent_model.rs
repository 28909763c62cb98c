//! TF-IDF nearest-centroid intent classifier.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::schema::IntentDefinition;
use crate::text;

pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum IntentModelError {
    #[error("intent {0:?} has no training utterances")]
    EmptyTrainingSet(String),
    #[error("no intents to train on")]
    NoIntents,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar"))]
pub struct IntentModel<S> {
    /// Sorted intent names; row order of `centroids`.
    pub intents: Vec<String>,
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<S>,
    /// Weight of a term absent from training (df = 0).
    pub oov_idf: S,
    /// L2-normalized, one per intent, dense over the vocabulary.
    pub centroids: Vec<Vec<S>>,
    pub confidence_threshold: S,
    /// Normalized training utterance → intent. Exact hits bypass the
    /// centroids so every training utterance classifies to its intent.
    pub memory: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Classification<S> {
    Intent { intent: String, confidence: S },
    Fallback { best: Option<String>, confidence: S },
}

impl<S: Scalar> Classification<S> {
    pub fn intent(&self) -> Option<&str> {
        match self {
            Classification::Intent { intent, .. } => Some(intent),
            Classification::Fallback { .. } => None,
        }
    }
}

fn key(utterance: &str) -> String {
    text::words(utterance).join(" ")
}

fn term_counts(utterance: &str) -> BTreeMap<String, usize> {
    let mut tf = BTreeMap::new();
    for w in text::words(utterance) {
        *tf.entry(w).or_insert(0) += 1;
    }
    tf
}

fn l2_normalize<S: Scalar>(v: &mut [S]) {
    let norm = v.iter().map(|x| *x * *x).sum::<S>().sqrt();
    if norm > S::zero() {
        v.iter_mut().for_each(|x| *x = *x / norm);
    }
}

pub fn train_intent_model<S: Scalar>(
    intents: &[IntentDefinition],
    confidence_threshold: S,
) -> Result<IntentModel<S>, IntentModelError> {
    if intents.is_empty() {
        return Err(IntentModelError::NoIntents);
    }
    let mut by_name: BTreeMap<&str, &IntentDefinition> = BTreeMap::new();
    for i in intents {
        if i.training_utterances.is_empty() {
            return Err(IntentModelError::EmptyTrainingSet(i.name.clone()));
        }
        by_name.insert(&i.name, i);
    }

    let docs: Vec<(usize, BTreeMap<String, usize>)> = by_name
        .values()
        .enumerate()
        .flat_map(|(k, i)| i.training_utterances.iter().map(move |u| (k, term_counts(u))))
        .collect();
    let vocab_set: BTreeSet<&String> = docs.iter().flat_map(|(_, tf)| tf.keys()).collect();
    let vocabulary: BTreeMap<String, usize> = vocab_set.into_iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();

    let mut df = vec![0usize; vocabulary.len()];
    for (_, tf) in &docs {
        for t in tf.keys() {
            df[vocabulary[t]] += 1;
        }
    }
    let n = S::from_count(docs.len());
    let idf: Vec<S> = df.iter().map(|&d| ((S::one() + n) / (S::one() + S::from_count(d))).ln() + S::one()).collect();

    let mut centroids = vec![vec![S::zero(); vocabulary.len()]; by_name.len()];
    for (k, tf) in &docs {
        let v = weigh(tf, &vocabulary, &idf);
        for (i, x) in v {
            centroids[*k][i] = centroids[*k][i] + x;
        }
    }
    centroids.iter_mut().for_each(|c| l2_normalize(c));

    let mut memory: BTreeMap<String, String> = BTreeMap::new();
    let mut warnings = Vec::new();
    for (name, intent) in &by_name {
        for u in &intent.training_utterances {
            let k = key(u);
            match memory.get(&k) {
                Some(prev) if prev != name => {
                    // by_name iterates in order, so `prev` is the lexicographic winner
                    warnings.push(format!("utterance {u:?} appears in intents {prev:?} and {name:?}; {prev:?} wins"));
                }
                Some(_) => {}
                None => {
                    memory.insert(k, (*name).to_owned());
                }
            }
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    Ok(IntentModel {
        intents: by_name.keys().map(|s| (*s).to_owned()).collect(),
        vocabulary,
        idf,
        oov_idf: (S::one() + n).ln() + S::one(),
        centroids,
        confidence_threshold,
        memory,
        warnings,
    })
}

/// Sparse, L2-normalized tf-idf vector over known terms.
fn weigh<S: Scalar>(tf: &BTreeMap<String, usize>, vocab: &BTreeMap<String, usize>, idf: &[S]) -> Vec<(usize, S)> {
    let mut v: Vec<(usize, S)> = tf
        .iter()
        .filter_map(|(t, c)| vocab.get(t).map(|&i| (i, S::from_count(*c) * idf[i])))
        .collect();
    let norm = v.iter().map(|(_, x)| *x * *x).sum::<S>().sqrt();
    if norm > S::zero() {
        v.iter_mut().for_each(|(_, x)| *x = *x / norm);
    }
    v
}

impl<S: Scalar> IntentModel<S> {
    /// Cosine similarity of the query to each centroid, in `intents` order.
    ///
    /// Terms never seen in training keep the idf of a df = 0 term in the
    /// query norm, so unfamiliar wording lowers confidence instead of being
    /// silently dropped.
    pub fn scores(&self, query: &str) -> Vec<S> {
        let tf = term_counts(query);
        let mut q: Vec<(usize, S)> = Vec::with_capacity(tf.len());
        let mut norm_sq = S::zero();
        for (t, c) in &tf {
            let idf = match self.vocabulary.get(t) {
                Some(&i) => {
                    let w = S::from_count(*c) * self.idf[i];
                    q.push((i, w));
                    w
                }
                None => S::from_count(*c) * self.oov_idf,
            };
            norm_sq = norm_sq + idf * idf;
        }
        let norm = norm_sq.sqrt();
        if norm > S::zero() {
            q.iter_mut().for_each(|(_, x)| *x = *x / norm);
        }
        self.centroids
            .iter()
            .map(|c| q.iter().map(|(i, x)| *x * c[*i]).sum())
            .collect()
    }

    pub fn classify(&self, query: &str) -> Classification<S> {
        if let Some(intent) = self.memory.get(&key(query)) {
            return Classification::Intent { intent: intent.clone(), confidence: S::one() };
        }
        let scores = self.scores(query);
        // first maximum → lexicographically smallest intent on ties
        let mut best: Option<(usize, S)> = None;
        for (i, s) in scores.iter().enumerate() {
            if best.is_none_or(|(_, b)| *s > b) {
                best = Some((i, *s));
            }
        }
        match best {
            Some((i, s)) if s > S::zero() && s >= self.confidence_threshold => {
                Classification::Intent { intent: self.intents[i].clone(), confidence: s }
            }
            Some((i, s)) if s > S::zero() => {
                Classification::Fallback { best: Some(self.intents[i].clone()), confidence: s }
            }
            _ => Classification::Fallback { best: None, confidence: S::zero() },
        }
    }
}
