//! Reference bot platform used as the system under test.

pub mod bot;
pub mod intent_model;

pub use bot::{
    ErrorInjectionConfig, InProcessClient, InjectionEvent, MockBotRuntime, RuntimeError, RuntimeSession,
    FALLBACK_MESSAGE,
};
pub use intent_model::{train_intent_model, Classification, IntentModel, IntentModelError, DEFAULT_CONFIDENCE_THRESHOLD};
