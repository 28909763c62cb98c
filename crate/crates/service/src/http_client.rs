//! Chat-protocol client over HTTP.

use std::time::Duration;

use dialogforge_core::simulator::{BotReply, ChatClient, TransportError};
use serde::Deserialize;
use serde_json::json;
use ureq::Agent;

#[derive(Deserialize)]
struct SessionCreated {
    session_id: String,
}

/// Talks to any bot serving `POST /v1/sessions`,
/// `POST /v1/sessions/{id}/messages` and `DELETE /v1/sessions/{id}`.
pub struct HttpChatClient {
    base: String,
    agent: Agent,
}

impl HttpChatClient {
    pub fn new(base_url: &str) -> Self {
        Self::with_timeout(base_url, Duration::from_secs(30))
    }

    pub fn with_timeout(base_url: &str, timeout: Duration) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { base: base_url.trim_end_matches('/').to_owned(), agent }
    }

    fn check(
        &self,
        session: &str,
        resp: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
    ) -> Result<ureq::http::Response<ureq::Body>, TransportError> {
        let resp = resp.map_err(|e| match e {
            ureq::Error::StatusCode(c) => TransportError::Protocol(format!("status {c}")),
            other => TransportError::Unreachable(other.to_string()),
        })?;
        match resp.status().as_u16() {
            200..=299 => Ok(resp),
            404 => Err(TransportError::UnknownSession(session.to_owned())),
            409 | 410 => Err(TransportError::SessionClosed(session.to_owned())),
            c => Err(TransportError::Protocol(format!("unexpected status {c}"))),
        }
    }
}

fn protocol(e: impl std::fmt::Display) -> TransportError {
    TransportError::Protocol(e.to_string())
}

impl ChatClient for HttpChatClient {
    fn start_session(&self, hint: &str) -> Result<String, TransportError> {
        let resp = self.agent.post(format!("{}/v1/sessions", self.base)).send_json(json!({ "hint": hint }));
        let mut resp = self.check("", resp)?;
        let created: SessionCreated = resp.body_mut().read_json().map_err(protocol)?;
        Ok(created.session_id)
    }

    fn send(&self, session: &str, text: &str) -> Result<BotReply, TransportError> {
        let resp = self
            .agent
            .post(format!("{}/v1/sessions/{session}/messages", self.base))
            .send_json(json!({ "text": text }));
        let mut resp = self.check(session, resp)?;
        resp.body_mut().read_json().map_err(protocol)
    }

    fn end(&self, session: &str) -> Result<(), TransportError> {
        let resp = self.agent.delete(format!("{}/v1/sessions/{session}", self.base)).call();
        self.check(session, resp).map(|_| ())
    }
}
