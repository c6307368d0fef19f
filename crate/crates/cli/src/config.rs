//! Workbench configuration file (TOML).

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use whatif_core::agent::{AgentConfig, ProviderSettings};

/// Environment variable holding the provider API key.
pub const KEY_VAR: &str = "EOR_PROVIDER_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeSettings {
    /// Fields left out keep the judge defaults, not the writer ones.
    #[serde(deserialize_with = "judge_provider")]
    pub provider: ProviderSettings,
    /// Method label the judge sees for this workbench's explanations.
    pub label: String,
}

impl Default for JudgeSettings {
    fn default() -> Self {
        JudgeSettings {
            provider: ProviderSettings {
                model: "gpt-4o".into(),
                ..ProviderSettings::default()
            },
            label: "whatif".into(),
        }
    }
}

fn judge_provider<'de, D: serde::Deserializer<'de>>(d: D) -> Result<ProviderSettings, D::Error> {
    use serde::de::Error;
    let overlay = serde_json::Map::<String, serde_json::Value>::deserialize(d)?;
    let mut merged =
        serde_json::to_value(JudgeSettings::default().provider).map_err(D::Error::custom)?;
    let fields = merged.as_object_mut().expect("settings serialize to a map");
    for (k, v) in overlay {
        if !fields.contains_key(&k) {
            return Err(D::Error::unknown_field(
                &k,
                &["endpoint", "model", "call_timeout_secs", "retries"],
            ));
        }
        fields.insert(k, v);
    }
    serde_json::from_value(merged).map_err(D::Error::custom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceSettings {
    pub host: String,
    pub port: u16,
    /// Directory for per-session append-only journals.
    pub journal_dir: Option<PathBuf>,
}

impl Default for ServiceSettings {
    fn default() -> Self {
        ServiceSettings {
            host: "127.0.0.1".into(),
            port: 8080,
            journal_dir: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkbenchConfig {
    pub agent: AgentConfig,
    pub judge: JudgeSettings,
    pub service: ServiceSettings,
}

impl WorkbenchConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
