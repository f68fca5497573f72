//! Agent roster configuration (TOML).
//!
//! ```toml
//! [[agents]]
//! name = "gpt4o"
//! provider = "openai"
//! endpoint_url = "https://api.openai.com/v1/chat/completions"
//! model_id = "gpt-4o"
//! api_key_env = "OPENAI_API_KEY"
//! role = "annotator"
//!
//! [[templates]]
//! id = "annotation-short"
//! phase = "annotation"
//! body_file = "prompts/short.txt"
//! ```

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use memelabel_core::annotation::{AgentRole, RosterEntry};
use memelabel_core::prompt::{Phase, PromptTemplate, ANNOTATION_TEMPLATE_ID, CONSOLIDATION_TEMPLATE_ID};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provider::Provider;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("agent `{agent}`: {message}")]
    Agent { agent: String, message: String },
    #[error("agent `{agent}`: environment variable {var} is not set")]
    MissingCredential { agent: String, var: String },
    #[error("{0}")]
    Roster(String),
    #[error("template `{id}`: {message}")]
    Template { id: String, message: String },
}

fn default_timeout() -> f64 {
    60.0
}
fn default_retries() -> u32 {
    3
}
fn default_rate() -> u32 {
    60
}
fn default_parallel() -> usize {
    4
}
fn default_backoff() -> u64 {
    1000
}
fn default_max_tokens() -> u32 {
    512
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub name: String,
    #[serde(default)]
    pub provider: Provider,
    pub endpoint_url: String,
    pub model_id: String,
    #[serde(default)]
    pub api_key_env: Option<String>,
    pub role: AgentRole,
    /// Defaults to the canonical template for the role.
    #[serde(default)]
    pub prompt_template_id: Option<String>,
    /// Seconds.
    #[serde(default = "default_timeout")]
    pub request_timeout: f64,
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Requests per minute.
    #[serde(default = "default_rate")]
    pub rate_limit: u32,
    #[serde(default = "default_parallel")]
    pub max_parallel: usize,
    #[serde(default)]
    pub temperature: f64,
    #[serde(default = "default_backoff")]
    pub backoff_base_ms: u64,
    #[serde(default = "default_max_tokens")]
    pub max_tokens: u32,
}

impl AgentConfig {
    /// A config with defaults for everything optional.
    pub fn new(
        name: impl Into<String>,
        endpoint_url: impl Into<String>,
        model_id: impl Into<String>,
        role: AgentRole,
    ) -> Self {
        AgentConfig {
            name: name.into(),
            provider: Provider::default(),
            endpoint_url: endpoint_url.into(),
            model_id: model_id.into(),
            api_key_env: None,
            role,
            prompt_template_id: None,
            request_timeout: default_timeout(),
            max_retries: default_retries(),
            rate_limit: default_rate(),
            max_parallel: default_parallel(),
            temperature: 0.0,
            backoff_base_ms: default_backoff(),
            max_tokens: default_max_tokens(),
        }
    }

    pub fn template_id(&self) -> &str {
        match (&self.prompt_template_id, self.role) {
            (Some(id), _) => id,
            (None, AgentRole::Annotator) => ANNOTATION_TEMPLATE_ID,
            (None, AgentRole::Consolidator) => CONSOLIDATION_TEMPLATE_ID,
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.request_timeout)
    }

    pub fn roster_entry(&self) -> RosterEntry {
        RosterEntry { name: self.name.clone(), model_id: self.model_id.clone(), role: self.role }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |message: String| ConfigError::Agent { agent: self.name.clone(), message };
        if self.name.trim().is_empty() {
            return Err(ConfigError::Roster("agent with empty name".into()));
        }
        if matches!(self.name.as_str(), "consolidated" | "human") || self.name.starts_with("human:") {
            return Err(fail("name is reserved".into()));
        }
        if self.model_id.trim().is_empty() {
            return Err(fail("model_id is empty".into()));
        }
        let url = reqwest::Url::parse(&self.endpoint_url)
            .map_err(|e| fail(format!("endpoint_url `{}`: {e}", self.endpoint_url)))?;
        if !matches!(url.scheme(), "http" | "https") {
            return Err(fail(format!("endpoint_url scheme `{}` is not http(s)", url.scheme())));
        }
        if !(self.request_timeout.is_finite() && self.request_timeout > 0.0) {
            return Err(fail("request_timeout must be positive".into()));
        }
        if self.rate_limit == 0 {
            return Err(fail("rate_limit must be at least 1".into()));
        }
        if self.max_parallel == 0 {
            return Err(fail("max_parallel must be at least 1".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(fail("temperature must be non-negative".into()));
        }
        Ok(())
    }

    /// Reads the credential named by `api_key_env`, if any.
    pub fn credential(&self) -> Result<Option<String>, ConfigError> {
        let Some(var) = &self.api_key_env else {
            return Ok(None);
        };
        match std::env::var(var) {
            Ok(v) if !v.is_empty() => Ok(Some(v)),
            _ => Err(ConfigError::MissingCredential { agent: self.name.clone(), var: var.clone() }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateConfig {
    pub id: String,
    pub phase: Phase,
    #[serde(default)]
    pub body: Option<String>,
    /// Relative to the config file.
    #[serde(default)]
    pub body_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterFile {
    #[serde(default)]
    pub agents: Vec<AgentConfig>,
    #[serde(default)]
    pub templates: Vec<TemplateConfig>,
}

/// A validated roster: agents plus every template they reference.
#[derive(Debug, Clone)]
pub struct Roster {
    pub agents: Vec<AgentConfig>,
    pub templates: BTreeMap<String, PromptTemplate>,
}

impl Roster {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let file: RosterFile = toml::from_str(&text)
            .map_err(|e| ConfigError::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_file(file, &base)
    }

    pub fn from_file(file: RosterFile, base: &Path) -> Result<Self, ConfigError> {
        let mut templates = BTreeMap::new();
        for builtin in [PromptTemplate::canonical_annotation(), PromptTemplate::canonical_consolidation()] {
            templates.insert(builtin.id.clone(), builtin);
        }
        for t in file.templates {
            let body = match (t.body, t.body_file) {
                (Some(body), None) => body,
                (None, Some(rel)) => {
                    let path = base.join(rel);
                    std::fs::read_to_string(&path).map_err(|source| ConfigError::Io { path, source })?
                }
                _ => {
                    return Err(ConfigError::Template {
                        id: t.id,
                        message: "exactly one of `body` and `body_file` is required".into(),
                    })
                }
            };
            let template = PromptTemplate::new(t.id.clone(), t.phase, body)
                .map_err(|e| ConfigError::Template { id: t.id.clone(), message: e.to_string() })?;
            if templates.insert(t.id.clone(), template).is_some() {
                return Err(ConfigError::Template {
                    id: t.id,
                    message: "defined twice or shadows a built-in template".into(),
                });
            }
        }
        Self::new(file.agents, templates)
    }

    pub fn new(agents: Vec<AgentConfig>, templates: BTreeMap<String, PromptTemplate>) -> Result<Self, ConfigError> {
        let mut seen = HashSet::new();
        for agent in &agents {
            agent.validate()?;
            if !seen.insert(agent.name.as_str()) {
                return Err(ConfigError::Roster(format!("agent name `{}` used twice", agent.name)));
            }
            let id = agent.template_id();
            let template = templates.get(id).ok_or_else(|| ConfigError::Agent {
                agent: agent.name.clone(),
                message: format!("unknown prompt template `{id}`"),
            })?;
            let expected = match agent.role {
                AgentRole::Annotator => Phase::Annotation,
                AgentRole::Consolidator => Phase::Consolidation,
            };
            if template.phase != expected {
                return Err(ConfigError::Agent {
                    agent: agent.name.clone(),
                    message: format!("template `{id}` is a {} template", template.phase),
                });
            }
        }
        if agents.iter().filter(|a| a.role == AgentRole::Consolidator).count() > 1 {
            return Err(ConfigError::Roster("at most one consolidator may be configured".into()));
        }
        Ok(Roster { agents, templates })
    }

    pub fn annotators(&self) -> impl Iterator<Item = &AgentConfig> {
        self.agents.iter().filter(|a| a.role == AgentRole::Annotator)
    }

    pub fn consolidator(&self) -> Option<&AgentConfig> {
        self.agents.iter().find(|a| a.role == AgentRole::Consolidator)
    }

    pub fn template_for(&self, agent: &AgentConfig) -> &PromptTemplate {
        &self.templates[agent.template_id()]
    }

    /// Checks every credential before any request is made.
    pub fn check_credentials(&self) -> Result<(), ConfigError> {
        for agent in &self.agents {
            agent.credential()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[[agents]]
name = "a1"
endpoint_url = "http://127.0.0.1:9/v1"
model_id = "m1"
role = "annotator"

[[agents]]
name = "judge"
provider = "anthropic"
endpoint_url = "https://example.invalid/v1/messages"
model_id = "m2"
role = "consolidator"
api_key_env = "MEMELABEL_TEST_UNSET_KEY"
rate_limit = 10

[[templates]]
id = "short"
phase = "annotation"
body = "Label this: {{meme_text}} {{image}}"
"#;

    fn parse(text: &str) -> Result<Roster, ConfigError> {
        Roster::from_file(toml::from_str(text).map_err(|e| ConfigError::Roster(e.to_string()))?, Path::new("."))
    }

    #[test]
    fn sample_loads_with_defaults() {
        let roster = parse(SAMPLE).unwrap();
        let a1 = &roster.agents[0];
        assert_eq!(a1.provider, Provider::Generic);
        assert_eq!(a1.template_id(), ANNOTATION_TEMPLATE_ID);
        assert_eq!(a1.max_parallel, 4);
        assert_eq!(a1.temperature, 0.0);
        assert_eq!(roster.consolidator().unwrap().rate_limit, 10);
        assert!(roster.templates.contains_key("short"));
    }

    #[test]
    fn missing_credential_is_reported_by_name() {
        let roster = parse(SAMPLE).unwrap();
        let err = roster.check_credentials().unwrap_err();
        assert!(err.to_string().contains("MEMELABEL_TEST_UNSET_KEY"), "{err}");
    }

    #[test]
    fn invalid_rosters() {
        let dup = SAMPLE.replace("name = \"judge\"", "name = \"a1\"");
        assert!(parse(&dup).is_err());
        let phase =
            SAMPLE.replace("role = \"annotator\"", "role = \"annotator\"\nprompt_template_id = \"consolidation-v1\"");
        assert!(parse(&phase).unwrap_err().to_string().contains("consolidation template"));
        let unknown = SAMPLE.replace("rate_limit = 10", "rate_limt = 10");
        assert!(parse(&unknown).is_err());
        let zero = SAMPLE.replace("rate_limit = 10", "rate_limit = 0");
        assert!(parse(&zero).is_err());
        let url = SAMPLE.replace("http://127.0.0.1:9/v1", "not a url");
        assert!(parse(&url).is_err());
        let reserved = SAMPLE.replace("name = \"a1\"", "name = \"consolidated\"");
        assert!(parse(&reserved).is_err());
    }
}
