//! CLI, HTTP services and session store around `dialogforge-core`.

pub mod api;
pub mod artifacts;
pub mod bot_server;
pub mod cli;
pub mod config;
pub mod error;
pub mod http_client;
pub mod pipeline;
pub mod serve;
pub mod store;

pub use config::PipelineConfig;
pub use error::PipelineError;
