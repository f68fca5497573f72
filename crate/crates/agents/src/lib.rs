//! LLM annotation agents: roster configuration, provider request shapes,
//! rate limiting, retries and a persistent response cache.

pub mod agent;
pub mod cache;
pub mod config;
pub mod limiter;
pub mod provider;

pub use agent::{Agent, AgentError, Invocation};
pub use cache::{prompt_hash, sha256_hex, CacheError, CacheKey, ResponseCache};
pub use config::{AgentConfig, ConfigError, Roster, RosterFile, TemplateConfig};
pub use limiter::RateLimiter;
pub use provider::{media_type_for, ImageAttachment, Provider};
