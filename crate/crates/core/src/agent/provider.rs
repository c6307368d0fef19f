//! Chat-completion provider seam and the scripted mock used offline.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Which call of which session a request belongs to. The mock provider
/// keys its script on this; real providers ignore it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestTag {
    pub session: String,
    pub step: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub system: String,
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub tag: RequestTag,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub text: String,
    pub usage: TokenUsage,
    pub latency: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProviderError {
    #[error("no scripted response for session `{session}` step `{step}`")]
    NoScript { session: String, step: String },
    #[error("provider transport error: {0}")]
    Transport(String),
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("provider call timed out")]
    Timeout,
    #[error("unreadable provider response: {0}")]
    Decode(String),
}

impl ProviderError {
    /// Worth another attempt with the same request.
    pub fn is_transient(&self) -> bool {
        match self {
            ProviderError::Transport(_) | ProviderError::Timeout => true,
            ProviderError::Status { status, .. } => *status == 429 || *status >= 500,
            ProviderError::NoScript { .. } | ProviderError::Decode(_) => false,
        }
    }
}

pub trait ChatProvider: Send + Sync {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError>;
}

impl<P: ChatProvider + ?Sized> ChatProvider for &P {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        (**self).complete(request)
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for std::sync::Arc<P> {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        (**self).complete(request)
    }
}

/// `session → step → response`.
pub type Script = BTreeMap<String, BTreeMap<String, String>>;

/// Replays responses from a script.
///
/// Lookup order for `(session, step)`: the exact pair, then `(session,
/// "kind.*")` where `kind` is the step prefix before the first dot, then the
/// same two keys under the `"*"` session.
#[derive(Debug, Clone, Default)]
pub struct MockProvider {
    script: Script,
}

#[derive(Debug, Error)]
pub enum ScriptError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}

impl MockProvider {
    pub fn new(script: Script) -> Self {
        MockProvider { script }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        Ok(MockProvider::new(serde_json::from_str(text)?))
    }

    /// Reads one script file, or every `*.json` file of a directory in name
    /// order, later files overriding earlier ones step by step.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScriptError> {
        let path = path.as_ref();
        let io = |source| ScriptError::Io {
            path: path.display().to_string(),
            source,
        };
        let mut files = Vec::new();
        if path.is_dir() {
            for entry in std::fs::read_dir(path).map_err(io)? {
                let p = entry.map_err(io)?.path();
                if p.extension().is_some_and(|e| e == "json") {
                    files.push(p);
                }
            }
            files.sort();
        } else {
            files.push(path.to_path_buf());
        }
        let mut mock = MockProvider::default();
        for file in files {
            let text = std::fs::read_to_string(&file).map_err(|source| ScriptError::Io {
                path: file.display().to_string(),
                source,
            })?;
            let script: Script =
                serde_json::from_str(&text).map_err(|source| ScriptError::Json {
                    path: file.display().to_string(),
                    source,
                })?;
            mock.merge(script);
        }
        Ok(mock)
    }

    /// [`MockProvider::load`] over several paths, later ones overriding
    /// earlier ones step by step.
    pub fn load_layered<P: AsRef<Path>>(paths: &[P]) -> Result<Self, ScriptError> {
        let mut mock = MockProvider::default();
        for path in paths {
            for (session, steps) in MockProvider::load(path)?.script {
                mock.script.entry(session).or_default().extend(steps);
            }
        }
        Ok(mock)
    }

    pub fn merge(&mut self, script: Script) {
        for (session, steps) in script {
            self.script.entry(session).or_default().extend(steps);
        }
    }

    pub fn insert(&mut self, session: &str, step: &str, response: &str) {
        self.script
            .entry(session.to_string())
            .or_default()
            .insert(step.to_string(), response.to_string());
    }

    pub fn lookup(&self, session: &str, step: &str) -> Option<&str> {
        let wildcard = format!("{}.*", step.split('.').next().unwrap_or(step));
        [session, "*"].iter().find_map(|s| {
            let steps = self.script.get(*s)?;
            steps
                .get(step)
                .or_else(|| steps.get(&wildcard))
                .map(String::as_str)
        })
    }
}

impl ChatProvider for MockProvider {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let RequestTag { session, step } = &request.tag;
        let text = self
            .lookup(session, step)
            .ok_or_else(|| ProviderError::NoScript {
                session: session.clone(),
                step: step.clone(),
            })?;
        Ok(ProviderResponse {
            text: text.to_string(),
            usage: TokenUsage::default(),
            latency: Duration::ZERO,
        })
    }
}
