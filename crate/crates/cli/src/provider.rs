//! OpenAI-compatible chat-completions client.

use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;
use whatif_core::agent::{
    ChatProvider, ProviderError, ProviderRequest, ProviderResponse, ProviderSettings, Role,
    TokenUsage,
};

use crate::config::KEY_VAR;

pub struct HttpProvider {
    settings: ProviderSettings,
    key: String,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct Usage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

fn role_name(role: Role) -> &'static str {
    match role {
        Role::System => "system",
        Role::User => "user",
        Role::Assistant => "assistant",
    }
}

impl HttpProvider {
    pub fn new(settings: ProviderSettings, key: impl Into<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(settings.call_timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        HttpProvider {
            settings,
            key: key.into(),
            agent,
        }
    }

    /// Reads the key from `EOR_PROVIDER_KEY`.
    pub fn from_env(settings: ProviderSettings) -> anyhow::Result<Self> {
        let key = std::env::var(KEY_VAR)
            .map_err(|_| anyhow::anyhow!("{KEY_VAR} is not set; use --mock for offline runs"))?;
        Ok(HttpProvider::new(settings, key))
    }

    fn body(&self, request: &ProviderRequest) -> serde_json::Value {
        let mut messages = Vec::new();
        if !request.system.is_empty() {
            messages.push(json!({"role": "system", "content": request.system}));
        }
        for m in &request.messages {
            messages.push(json!({"role": role_name(m.role), "content": m.content}));
        }
        json!({
            "model": self.settings.model,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        })
    }
}

impl ChatProvider for HttpProvider {
    fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let started = Instant::now();
        let result = self
            .agent
            .post(&self.settings.endpoint)
            .header("Authorization", &format!("Bearer {}", self.key))
            .send_json(self.body(request));
        let mut response = match result {
            Ok(r) => r,
            Err(ureq::Error::Timeout(_)) => return Err(ProviderError::Timeout),
            Err(e) => return Err(ProviderError::Transport(e.to_string())),
        };
        let status = response.status().as_u16();
        if status >= 400 {
            let body = response.body_mut().read_to_string().unwrap_or_default();
            return Err(ProviderError::Status { status, body });
        }
        let completion: Completion = response
            .body_mut()
            .read_json()
            .map_err(|e| ProviderError::Decode(e.to_string()))?;
        let text = completion
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::Decode("response has no message content".into()))?;
        Ok(ProviderResponse {
            text,
            usage: completion
                .usage
                .map(|u| TokenUsage {
                    prompt_tokens: u.prompt_tokens,
                    completion_tokens: u.completion_tokens,
                })
                .unwrap_or_default(),
            latency: started.elapsed(),
        })
    }
}
