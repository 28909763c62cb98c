use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_many, BootstrapConfig, Interval};
use super::confusion::{intent_scores, macro_f1, ConfusionMatrix};
use crate::scalar::Scalar;
use crate::simulator::EpisodeRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar"))]
pub struct IntentScoreCi<S> {
    pub precision: Interval<S>,
    pub recall: Interval<S>,
    pub f1: Interval<S>,
    pub support: usize,
    pub predicted: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar"))]
pub struct IntentReport<S> {
    pub intents: BTreeMap<String, IntentScoreCi<S>>,
    pub macro_f1: Interval<S>,
    pub episodes: usize,
    pub bootstrap: BootstrapConfig,
}

/// Per-intent precision/recall/F1 with bootstrap intervals. Resampling is
/// over non-aborted episodes.
pub fn intent_report<S: Scalar>(
    episodes: &[EpisodeRecord],
    labels: Vec<String>,
    config: &BootstrapConfig,
) -> IntentReport<S> {
    let base = ConfusionMatrix::new(labels.clone());
    let cells: Vec<(usize, usize)> = episodes.iter().filter_map(|e| base.cell_of(e)).collect();
    let k = labels.len();

    let statistic = |sample: &[&(usize, usize)]| -> Vec<S> {
        let m = ConfusionMatrix::from_cells(labels.clone(), sample.iter().map(|c| **c));
        let scores = intent_scores::<S>(&m);
        let mut out = Vec::with_capacity(3 * k + 1);
        for l in &labels {
            let s = &scores[l];
            out.extend([s.precision, s.recall, s.f1]);
        }
        out.push(macro_f1(&scores));
        out
    };
    let intervals = if cells.is_empty() {
        statistic(&[]).into_iter().map(Interval::exact).collect()
    } else {
        bootstrap_many(&cells, statistic, config)
    };

    let full = ConfusionMatrix::from_cells(labels.clone(), cells.iter().copied());
    let points = intent_scores::<S>(&full);
    let intents = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let p = &points[l];
            let ci = IntentScoreCi {
                precision: intervals[3 * i],
                recall: intervals[3 * i + 1],
                f1: intervals[3 * i + 2],
                support: p.support,
                predicted: p.predicted,
                degenerate: p.degenerate,
            };
            (l.clone(), ci)
        })
        .collect();
    IntentReport { intents, macro_f1: intervals[3 * k], episodes: cells.len(), bootstrap: *config }
}
