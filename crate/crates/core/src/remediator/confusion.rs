use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::simulator::EpisodeRecord;

/// Column label for episodes where no intent was recognized.
pub const FALLBACK: &str = "fallback";

/// Rows: true intents. Columns: the same intents, then one fallback column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>) -> Self {
        let n = labels.len();
        Self { labels, counts: vec![vec![0; n + 1]; n] }
    }

    pub fn index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn fallback_column(&self) -> usize {
        self.labels.len()
    }

    /// Row/column of one episode; `None` for aborted episodes or unknown
    /// true intents. Unknown predictions land in the fallback column.
    pub fn cell_of(&self, e: &EpisodeRecord) -> Option<(usize, usize)> {
        if e.is_aborted() {
            return None;
        }
        let row = self.index(&e.goal.intent)?;
        let col = e.predicted_intent.as_deref().and_then(|p| self.index(p)).unwrap_or(self.fallback_column());
        Some((row, col))
    }

    /// Builds a matrix over `labels`, or over every goal and predicted
    /// intent seen when `labels` is `None`.
    pub fn from_episodes(episodes: &[EpisodeRecord], labels: Option<Vec<String>>) -> Self {
        let labels = labels.unwrap_or_else(|| {
            let mut l: Vec<String> = episodes
                .iter()
                .flat_map(|e| std::iter::once(e.goal.intent.clone()).chain(e.predicted_intent.clone()))
                .collect();
            l.sort();
            l.dedup();
            l
        });
        let mut m = Self::new(labels);
        for e in episodes {
            if let Some((r, c)) = m.cell_of(e) {
                m.counts[r][c] += 1;
            }
        }
        m
    }

    pub fn from_cells(labels: Vec<String>, cells: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut m = Self::new(labels);
        for (r, c) in cells {
            m.counts[r][c] += 1;
        }
        m
    }

    pub fn support(&self, i: usize) -> usize {
        self.counts[i].iter().sum()
    }

    pub fn predicted(&self, j: usize) -> usize {
        self.counts.iter().map(|r| r[j]).sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    /// Off-diagonal mass outside the fallback column.
    pub fn misrouted(&self) -> usize {
        let fb = self.fallback_column();
        (0..self.labels.len())
            .flat_map(|i| (0..fb).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| self.counts[i][j])
            .sum()
    }

    pub fn fallback_mass(&self) -> usize {
        let fb = self.fallback_column();
        self.counts.iter().map(|r| r[fb]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar"))]
pub struct IntentScore<S> {
    pub precision: S,
    pub recall: S,
    pub f1: S,
    pub support: usize,
    pub predicted: usize,
    pub true_positives: usize,
    /// No support and no predictions: every score is 0 by convention.
    pub degenerate: bool,
}

pub fn f1_of<S: Scalar>(precision: S, recall: S) -> S {
    let sum = precision + recall;
    if sum > S::zero() {
        (S::one() + S::one()) * precision * recall / sum
    } else {
        S::zero()
    }
}

/// Per-intent precision, recall and F1. Zero denominators give zero.
pub fn intent_scores<S: Scalar>(m: &ConfusionMatrix) -> BTreeMap<String, IntentScore<S>> {
    m.labels
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let tp = m.counts[i][i];
            let support = m.support(i);
            let predicted = m.predicted(i);
            let precision = S::ratio(tp, predicted);
            let recall = S::ratio(tp, support);
            let score = IntentScore {
                precision,
                recall,
                f1: f1_of(precision, recall),
                support,
                predicted,
                true_positives: tp,
                degenerate: support == 0 && predicted == 0,
            };
            (label.clone(), score)
        })
        .collect()
}

pub fn macro_f1<S: Scalar>(scores: &BTreeMap<String, IntentScore<S>>) -> S {
    let live: Vec<S> = scores.values().filter(|s| !s.degenerate).map(|s| s.f1).collect();
    if live.is_empty() {
        S::zero()
    } else {
        live.iter().copied().sum::<S>() / S::from_count(live.len())
    }
}
