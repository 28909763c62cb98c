use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BotReply {
    pub messages: Vec<String>,
    pub closed: bool,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TransportError {
    #[error("bot unreachable: {0}")]
    Unreachable(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("session {0} is closed")]
    SessionClosed(String),
    #[error("protocol error: {0}")]
    Protocol(String),
}

/// Conversation channel to a bot. Implementations must allow concurrent
/// use across distinct sessions.
pub trait ChatClient: Send + Sync {
    /// Opens a session. `hint` identifies the episode (its goal id) and may
    /// be used by the bot to seed per-session randomness.
    fn start_session(&self, hint: &str) -> Result<String, TransportError>;
    fn send(&self, session: &str, text: &str) -> Result<BotReply, TransportError>;
    fn end(&self, session: &str) -> Result<(), TransportError>;
}
