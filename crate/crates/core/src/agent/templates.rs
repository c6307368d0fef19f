//! Prompt templates and placeholder substitution.

use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

pub const WRITER_SYSTEM: &str = include_str!("../../templates/writer_system.txt");
pub const CODE_PROMPT: &str = include_str!("../../templates/code_prompt.txt");
pub const DEBUG_PROMPT: &str = include_str!("../../templates/debug_prompt.txt");
pub const INTERPRETER_PROMPT: &str = include_str!("../../templates/interpreter_prompt.txt");
pub const SAFEGUARD_SYSTEM: &str = include_str!("../../templates/safeguard_system.txt");
pub const SAFEGUARD_PROMPT: &str = include_str!("../../templates/safeguard_prompt.txt");
pub const JUDGE_PROMPT: &str = include_str!("../../templates/judge.txt");
/// Model-language reference passed as `{doc_str}`.
pub const DOC_STR: &str = include_str!("../../templates/doc_str.txt");
/// Worked example used in one-shot mode when none is configured.
pub const DEFAULT_EXAMPLE_QA: &str = include_str!("../../templates/example_qa.txt");

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([a-z_]+)\}").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("template placeholder `{{{0}}}` has no value")]
pub struct MissingPlaceholder(pub String);

/// Placeholder names of a template, in order of first appearance.
pub fn placeholders(template: &str) -> Vec<&str> {
    let mut out: Vec<&str> = Vec::new();
    for cap in PLACEHOLDER.captures_iter(template) {
        let name = cap.get(1).unwrap().as_str();
        if !out.contains(&name) {
            out.push(name);
        }
    }
    out
}

/// Fills every `{name}` in one pass; values are never rescanned.
pub fn render(template: &str, values: &[(&str, &str)]) -> Result<String, MissingPlaceholder> {
    for name in placeholders(template) {
        if !values.iter().any(|(k, _)| *k == name) {
            return Err(MissingPlaceholder(name.to_string()));
        }
    }
    Ok(PLACEHOLDER
        .replace_all(template, |cap: &regex::Captures| {
            let name = &cap[1];
            values
                .iter()
                .find(|(k, _)| *k == name)
                .map_or("", |(_, v)| v)
                .to_string()
        })
        .into_owned())
}
