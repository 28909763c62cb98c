use serde::{Deserialize, Serialize};

use super::confusion::ConfusionMatrix;
use crate::scalar::Scalar;

pub const DEFAULT_MERGE_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "S: Scalar"))]
pub struct IntentCluster<S> {
    pub intents: Vec<String>,
    /// Symmetric confusion mass at the last merge that formed the cluster.
    pub mass: S,
}

/// Cross-cluster confusion in both directions over the clusters' support.
fn mass<S: Scalar>(m: &ConfusionMatrix, a: &[usize], b: &[usize]) -> S {
    let cross: usize = a.iter().flat_map(|&i| b.iter().map(move |&j| m.counts[i][j] + m.counts[j][i])).sum();
    let support: usize = a.iter().chain(b).map(|&i| m.support(i)).sum();
    S::ratio(cross, support)
}

/// Greedy agglomerative merging of intents that confuse each other.
/// Only clusters with two or more intents are returned. A threshold of 1
/// or more disables merging.
pub fn cluster_confusion<S: Scalar>(m: &ConfusionMatrix, threshold: S) -> Vec<IntentCluster<S>> {
    if threshold >= S::one() {
        return Vec::new();
    }
    let mut clusters: Vec<(Vec<usize>, S)> = (0..m.labels.len()).map(|i| (vec![i], S::zero())).collect();
    loop {
        let mut best: Option<(usize, usize, S)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let x: S = mass(m, &clusters[a].0, &clusters[b].0);
                // strict: earlier pairs (in label order) win ties
                if x >= threshold && x > S::zero() && best.is_none_or(|(_, _, y)| x > y) {
                    best = Some((a, b, x));
                }
            }
        }
        let Some((a, b, x)) = best else { break };
        let (members, _) = clusters.remove(b);
        clusters[a].0.extend(members);
        clusters[a].0.sort_unstable();
        clusters[a].1 = x;
    }
    clusters
        .into_iter()
        .filter(|(c, _)| c.len() > 1)
        .map(|(c, x)| IntentCluster { intents: c.iter().map(|&i| m.labels[i].clone()).collect(), mass: x })
        .collect()
}
