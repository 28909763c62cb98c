use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;
use crate::simulator::{EpisodeRecord, Outcome};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar"))]
pub struct OutcomeCounts<S> {
    /// Non-aborted episodes.
    pub episodes: usize,
    pub successes: usize,
    pub intent_errors: usize,
    pub ner_errors: usize,
    pub other_errors: usize,
    pub max_turns_exceeded: usize,
    /// Transport failures; excluded from `episodes` and the rate.
    pub aborted: usize,
    pub completion_rate: S,
}

impl<S: Scalar> OutcomeCounts<S> {
    fn add(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Aborted => {
                self.aborted += 1;
                return;
            }
            Outcome::Success => self.successes += 1,
            Outcome::IntentError => self.intent_errors += 1,
            Outcome::NerError => self.ner_errors += 1,
            Outcome::OtherError => self.other_errors += 1,
            Outcome::MaxTurnsExceeded => self.max_turns_exceeded += 1,
            Outcome::InProgress => {
                log::warn!("episode without a terminal outcome counted as other_error");
                self.other_errors += 1;
            }
        }
        self.episodes += 1;
    }

    fn finish(&mut self) {
        self.completion_rate = S::ratio(self.successes, self.episodes);
    }

    pub fn errors(&self) -> usize {
        self.intent_errors + self.ner_errors + self.other_errors + self.max_turns_exceeded
    }
}

/// Outcome counts per evaluated dialog and overall.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar"))]
pub struct SessionMetrics<S> {
    pub dialogs: BTreeMap<String, OutcomeCounts<S>>,
    pub totals: OutcomeCounts<S>,
}

pub fn aggregate<S: Scalar>(episodes: &[EpisodeRecord]) -> SessionMetrics<S> {
    let mut m = SessionMetrics {
        dialogs: BTreeMap::new(),
        totals: OutcomeCounts { completion_rate: S::zero(), ..Default::default() },
    };
    for e in episodes {
        m.totals.add(e.outcome);
        m.dialogs
            .entry(e.goal.dialog.clone())
            .or_insert_with(|| OutcomeCounts { completion_rate: S::zero(), ..Default::default() })
            .add(e.outcome);
    }
    m.totals.finish();
    m.dialogs.values_mut().for_each(OutcomeCounts::finish);
    m
}

/// Fraction of non-aborted episodes that succeeded.
pub fn completion_rate<S: Scalar>(episodes: &[&EpisodeRecord]) -> S {
    let live = episodes.iter().filter(|e| !e.is_aborted()).count();
    let ok = episodes.iter().filter(|e| e.outcome == Outcome::Success).count();
    S::ratio(ok, live)
}
