//! Text normalization shared by the NLU matcher, the mock intent model and the
//! paraphraser.

/// Marker left in a candidate message where a `{placeholder}` was stripped.
pub const WILDCARD: &str = "{*}";

/// One normalized token.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Word(String),
    /// Matches any single word.
    Wildcard,
}

/// Lowercases, deletes punctuation and splits on whitespace.
///
/// Punctuation is removed rather than replaced, so `e-mail` and `email`
/// normalize to the same word.
pub fn words(text: &str) -> Vec<String> {
    let cleaned: String = text
        .chars()
        .filter(|c| c.is_alphanumeric() || c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect();
    cleaned.split_whitespace().map(str::to_owned).collect()
}

/// Tokenizes text that may contain [`WILDCARD`] markers.
pub fn tokens(text: &str) -> Vec<Token> {
    let mut out = Vec::new();
    for (i, piece) in text.split(WILDCARD).enumerate() {
        if i > 0 {
            out.push(Token::Wildcard);
        }
        out.extend(words(piece).into_iter().map(Token::Word));
    }
    out
}

/// Lowercase + whitespace collapse, used for duplicate detection.
pub fn normalize(text: &str) -> String {
    text.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Replaces every `{name}` span with [`WILDCARD`].
pub fn strip_placeholders(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        match rest[open..].find('}') {
            Some(close) => {
                out.push_str(&rest[..open]);
                out.push_str(WILDCARD);
                rest = &rest[open + close + 1..];
            }
            None => break,
        }
    }
    out.push_str(rest);
    out
}

/// Names of the `{name}` placeholders in a template, in order of appearance.
pub fn placeholders(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let Some(close) = rest[open..].find('}') else {
            break;
        };
        out.push(&rest[open + 1..open + close]);
        rest = &rest[open + close + 1..];
    }
    out
}

/// Substitutes `{name}` placeholders using `lookup`; unknown names are kept.
pub fn fill_placeholders<'a>(text: &str, lookup: impl Fn(&str) -> Option<&'a str>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let Some(close) = rest[open..].find('}') else {
            break;
        };
        let name = &rest[open + 1..open + close];
        out.push_str(&rest[..open]);
        match lookup(name) {
            Some(v) => out.push_str(v),
            None => out.push_str(&rest[open..open + close + 1]),
        }
        rest = &rest[open + close + 1..];
    }
    out.push_str(rest);
    out
}

/// 64-bit FNV-1a. Used to derive per-item seeds that do not depend on
/// iteration or thread order.
pub fn stable_hash(parts: &[&str]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for (i, part) in parts.iter().enumerate() {
        if i > 0 {
            h ^= 0x1f;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        for b in part.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Mixes a master seed with a stable key.
pub fn derive_seed(seed: u64, parts: &[&str]) -> u64 {
    let mut x = seed ^ stable_hash(parts);
    // splitmix64 finalizer
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
