//! Fuzzy-matching NLU: maps bot messages to dialog acts by token-set
//! similarity against the candidates of a dialog-act map.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::generator::{ActKind, DialogActMap, DIALOG_SUCCESS, INTENT_SUCCESS};
use crate::scalar::Scalar;
use crate::text::{self, Token};

pub const UNMATCHED: &str = "unmatched";
pub const DEFAULT_THRESHOLD: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NluMatch<S> {
    pub act: String,
    pub score: S,
    pub matched_candidate: String,
    pub bot_message: String,
    /// Dialog owning a foreign `intent_success_message` candidate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<String>,
}

impl<S> NluMatch<S> {
    pub fn is_unmatched(&self) -> bool {
        self.act == UNMATCHED
    }
}

/// Token-set Jaccard similarity between a candidate (which may contain
/// wildcards) and a bot message. Each wildcard absorbs one message word not
/// otherwise matched.
pub fn token_set_similarity<S: Scalar>(candidate: &str, message: &str) -> S {
    similarity_of(&CandidateTokens::new(candidate), &message_words(message))
}

struct CandidateTokens {
    words: BTreeSet<String>,
    wildcards: usize,
}

impl CandidateTokens {
    fn new(candidate: &str) -> Self {
        let mut words = BTreeSet::new();
        let mut wildcards = 0;
        for t in text::tokens(candidate) {
            match t {
                Token::Word(w) => {
                    words.insert(w);
                }
                Token::Wildcard => wildcards += 1,
            }
        }
        Self { words, wildcards }
    }
}

fn message_words(message: &str) -> BTreeSet<String> {
    text::words(message).into_iter().collect()
}

fn similarity_of<S: Scalar>(cand: &CandidateTokens, msg: &BTreeSet<String>) -> S {
    let exact = cand.words.intersection(msg).count();
    let leftover = msg.len() - exact;
    let absorbed = cand.wildcards.min(leftover);
    let inter = exact + absorbed;
    let union = cand.words.len() + cand.wildcards + msg.len() - inter;
    S::ratio(inter, union)
}

/// Tie-break rank; larger wins at equal score.
pub fn act_priority(act: &str, foreign: bool) -> u8 {
    match ActKind::parse(act) {
        ActKind::DialogSuccess => 4,
        ActKind::IntentSuccess if foreign => 2,
        ActKind::IntentSuccess => 3,
        ActKind::Request(_) | ActKind::Confirm(_) => 1,
        ActKind::Say | ActKind::Other(_) => 0,
    }
}

struct Candidate {
    act: String,
    owner: Option<String>,
    text: String,
    tokens: CandidateTokens,
    priority: u8,
}

/// Pre-tokenized candidates of one dialog's map, plus the intent-success
/// candidates of every other dialog (used to detect misrouted intents).
pub struct DialogMatcher {
    own: Vec<Candidate>,
    foreign: Vec<Candidate>,
}

impl DialogMatcher {
    pub fn new<'a>(map: &DialogActMap, others: impl IntoIterator<Item = &'a DialogActMap>) -> Self {
        let own = map
            .candidates()
            .map(|(act, c)| Candidate {
                act: act.to_owned(),
                owner: None,
                text: c.to_owned(),
                tokens: CandidateTokens::new(c),
                priority: act_priority(act, false),
            })
            .collect();
        let foreign = others
            .into_iter()
            .filter(|m| m.dialog != map.dialog)
            .flat_map(|m| {
                m.intent_success_message.iter().map(move |c| Candidate {
                    act: INTENT_SUCCESS.to_owned(),
                    owner: Some(m.dialog.clone()),
                    text: c.clone(),
                    tokens: CandidateTokens::new(c),
                    priority: act_priority(INTENT_SUCCESS, true),
                })
            })
            .collect();
        Self { own, foreign }
    }

    /// Best match for `message`. Foreign intent-success candidates are only
    /// considered when `include_foreign` is set.
    pub fn match_message<S: Scalar>(&self, message: &str, threshold: S, include_foreign: bool) -> NluMatch<S> {
        let words = message_words(message);
        let pool = self.own.iter().chain(self.foreign.iter().filter(|_| include_foreign));
        let mut best: Option<(S, &Candidate)> = None;
        for cand in pool {
            let score: S = similarity_of(&cand.tokens, &words);
            let better = match &best {
                None => true,
                Some((bs, bc)) => rank(score, cand, *bs, bc) == Ordering::Greater,
            };
            if better {
                best = Some((score, cand));
            }
        }
        match best {
            Some((score, cand)) if score >= threshold => NluMatch {
                act: cand.act.clone(),
                score,
                matched_candidate: cand.text.clone(),
                bot_message: message.to_owned(),
                owner: cand.owner.clone(),
            },
            Some((score, cand)) => NluMatch {
                act: UNMATCHED.to_owned(),
                score,
                matched_candidate: cand.text.clone(),
                bot_message: message.to_owned(),
                owner: None,
            },
            None => NluMatch {
                act: UNMATCHED.to_owned(),
                score: S::zero(),
                matched_candidate: String::new(),
                bot_message: message.to_owned(),
                owner: None,
            },
        }
    }

    /// Acts other than `primary` whose candidate list holds `candidate`
    /// verbatim (e.g. a first message that is also a `Collect` prompt).
    pub fn co_owned_acts(&self, primary: &NluMatch<impl Scalar>) -> Vec<String> {
        self.own
            .iter()
            .filter(|c| c.text == primary.matched_candidate && c.act != primary.act && c.priority == 1)
            .map(|c| c.act.clone())
            .collect()
    }
}

/// Orders (score, priority, then reverse act/owner/text) so that the
/// maximum is the winner. Independent of candidate declaration order.
fn rank<S: Scalar>(sa: S, a: &Candidate, sb: S, b: &Candidate) -> Ordering {
    sa.partial_cmp(&sb)
        .unwrap_or(Ordering::Equal)
        .then(a.priority.cmp(&b.priority))
        .then_with(|| b.act.cmp(&a.act))
        .then_with(|| b.owner.cmp(&a.owner))
        .then_with(|| b.text.cmp(&a.text))
}

/// Matches one bot message against a single map.
pub fn match_dialog_act<S: Scalar>(bot_message: &str, map: &DialogActMap, threshold: S) -> NluMatch<S> {
    DialogMatcher::new(map, std::iter::empty()).match_message(bot_message, threshold, false)
}

pub fn is_dialog_success(m: &NluMatch<impl Scalar>) -> bool {
    m.act == DIALOG_SUCCESS
}
