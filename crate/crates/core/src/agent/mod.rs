//! The Commander / Writer / Safeguard workflow as an explicit state machine.
//!
//! One call to [`commander_run`] handles one what-if query: the Writer
//! proposes a patch, the Safeguard vets it, failures loop back through a
//! debug prompt, and a successful patch is applied, solved, measured and
//! explained.

mod extract;
mod provider;
pub mod templates;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

pub use extract::{extract_patch, extract_rating, split_explanation, SplitExplanation};
pub use provider::{
    ChatMessage, ChatProvider, MockProvider, ProviderError, ProviderRequest, ProviderResponse,
    RequestTag, Role, Script, ScriptError, TokenUsage,
};

use crate::graph::{decision_information, GedReport};
use crate::model::{parse_model, LinearModel};
use crate::patch::{apply_patch, check_snippets, PatchViolation, QueryPatch, ViolationKind};
use crate::solver::{BranchAndBound, ModelSolver, Solution, SolveStatus};
use templates::render;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShotMode {
    #[default]
    Zero,
    One,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderSettings {
    /// Chat-completions endpoint URL.
    pub endpoint: String,
    pub model: String,
    pub call_timeout_secs: u64,
    /// Extra attempts on transient provider errors.
    pub retries: u32,
}

impl Default for ProviderSettings {
    fn default() -> Self {
        ProviderSettings {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4-turbo".into(),
            call_timeout_secs: 60,
            retries: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AgentConfig {
    pub shot_mode: ShotMode,
    pub debug_limit: u32,
    /// One-shot worked example; the bundled one is used when absent.
    pub example_qa: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub session_timeout_secs: u64,
    pub provider: ProviderSettings,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig {
            shot_mode: ShotMode::Zero,
            debug_limit: 3,
            example_qa: None,
            temperature: 0.0,
            max_tokens: 2048,
            session_timeout_secs: 300,
            provider: ProviderSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    AwaitQuery,
    WriterPatch,
    SafeguardCheck,
    Debug,
    Solve,
    Interpret,
    Done,
    Failed,
}

impl Phase {
    /// The workflow edge set.
    pub fn can_advance_to(self, next: Phase) -> bool {
        use Phase::*;
        matches!(
            (self, next),
            (AwaitQuery, WriterPatch)
                | (AwaitQuery, Failed)
                | (WriterPatch | Debug, SafeguardCheck | Debug | Failed)
                | (SafeguardCheck, Solve | Debug | Failed)
                | (Solve, Interpret | Debug | Failed)
                | (Interpret, Done | Failed)
        )
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Done | Phase::Failed)
    }
}

/// Outcome categories for queries that did not produce the right answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureCategory {
    PatchFormat,
    LogicError,
    IncompleteModel,
    ApplyError,
    ParseError,
    SolveError,
}

impl FailureCategory {
    pub const ALL: [FailureCategory; 6] = [
        FailureCategory::PatchFormat,
        FailureCategory::LogicError,
        FailureCategory::IncompleteModel,
        FailureCategory::ApplyError,
        FailureCategory::ParseError,
        FailureCategory::SolveError,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FailureCategory::PatchFormat => "patch-format",
            FailureCategory::LogicError => "logic-error",
            FailureCategory::IncompleteModel => "incomplete-model",
            FailureCategory::ApplyError => "apply-error",
            FailureCategory::ParseError => "parse-error",
            FailureCategory::SolveError => "solve-error",
        }
    }

    /// Category of a patch violation met while extracting or applying.
    pub fn of_violation(kind: ViolationKind) -> Self {
        match kind {
            ViolationKind::UnknownKey | ViolationKind::MalformedDocument => {
                FailureCategory::PatchFormat
            }
            ViolationKind::DeleteTargetMissing => FailureCategory::ApplyError,
            ViolationKind::SnippetParseError
            | ViolationKind::NewVariableIntroduced
            | ViolationKind::MarkerCorruption => FailureCategory::ParseError,
        }
    }
}

impl std::fmt::Display for FailureCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionFailure {
    pub category: FailureCategory,
    pub detail: String,
    /// The provider failed or the session ran out of time.
    #[serde(default)]
    pub provider_error: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentRole {
    Writer,
    Safeguard,
    Interpreter,
}

/// One provider exchange. No timing data, so transcripts of scripted runs
/// are byte-identical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub role: AgentRole,
    pub step: String,
    pub system: String,
    pub prompt: String,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseEvent {
    pub phase: Phase,
    pub retry_count: u32,
}

/// Live state of one query.
#[derive(Debug, Clone)]
pub struct SessionState {
    pub phase: Phase,
    pub retry_count: u32,
    pub query: String,
    pub original_source: String,
    pub updated_source: Option<String>,
    pub history: Vec<Phase>,
    pub transcript: Vec<TranscriptEntry>,
}

impl SessionState {
    fn new(query: &str, source: &str) -> Self {
        SessionState {
            phase: Phase::AwaitQuery,
            retry_count: 0,
            query: query.to_string(),
            original_source: source.to_string(),
            updated_source: None,
            history: vec![Phase::AwaitQuery],
            transcript: Vec::new(),
        }
    }

    fn advance(&mut self, next: Phase) {
        assert!(
            self.phase.can_advance_to(next),
            "illegal workflow transition {:?} -> {next:?}",
            self.phase
        );
        self.phase = next;
        self.history.push(next);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeStatus {
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub status: OutcomeStatus,
    pub query: String,
    pub original_source: String,
    /// Last patch that parsed, applied or not.
    pub patch: Option<QueryPatch>,
    pub updated_source: Option<String>,
    pub original_solution: Solution,
    pub updated_solution: Option<Solution>,
    pub ged_report: Option<GedReport>,
    pub explanation_correctness: Option<String>,
    pub explanation_results: Option<String>,
    /// The interpreter answer carried both part headers.
    pub explanation_split: bool,
    pub impact_rating: Option<u8>,
    pub failure: Option<SessionFailure>,
    pub retry_count: u32,
    pub phases: Vec<Phase>,
    pub transcript: Vec<TranscriptEntry>,
}

impl SessionOutcome {
    pub fn is_done(&self) -> bool {
        self.status == OutcomeStatus::Done
    }

    /// Updated objective rounded to the nearest integer.
    pub fn rounded_objective(&self) -> Option<f64> {
        self.updated_solution.as_ref()?.objective.map(f64::round)
    }
}

/// SAFE or DANGER with the reason for a DANGER verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Safe,
    Danger(String),
}

/// Static gate independent of any provider: every snippet line must be a
/// blank, a comment or a statement allowed in its target region.
pub fn local_gate(patch: &QueryPatch) -> Verdict {
    match check_snippets(patch) {
        Ok(()) => Verdict::Safe,
        Err(v) => Verdict::Danger(format!("local gate: {}", v.detail)),
    }
}

/// SAFE only when the answer names SAFE and never DANGER or UNSAFE.
pub fn parse_verdict(response: &str) -> Verdict {
    let upper = response.to_uppercase();
    let words: Vec<&str> = upper
        .split(|c: char| !c.is_ascii_alphanumeric() && c != '_')
        .filter(|w| !w.is_empty())
        .collect();
    if words
        .iter()
        .any(|w| *w == "DANGER" || *w == "UNSAFE" || *w == "DANGEROUS")
    {
        Verdict::Danger(format!("safeguard answered: {}", response.trim()))
    } else if words.contains(&"SAFE") {
        Verdict::Safe
    } else {
        Verdict::Danger(format!("unreadable safeguard answer: {}", response.trim()))
    }
}

enum Step {
    Retry {
        error_type: String,
        detail: String,
        category: FailureCategory,
    },
    Fail(SessionFailure),
}

struct Commander<'a> {
    model: &'a LinearModel,
    config: &'a AgentConfig,
    provider: &'a dyn ChatProvider,
    session: &'a str,
    state: SessionState,
    started: Instant,
    observer: &'a mut dyn FnMut(&PhaseEvent),
}

impl Commander<'_> {
    fn advance(&mut self, next: Phase) {
        self.state.advance(next);
        (self.observer)(&PhaseEvent {
            phase: next,
            retry_count: self.state.retry_count,
        });
    }

    fn call(
        &mut self,
        role: AgentRole,
        step: String,
        system: &str,
        messages: &[ChatMessage],
    ) -> Result<String, SessionFailure> {
        let provider_failure = |detail: String| SessionFailure {
            category: FailureCategory::SolveError,
            detail,
            provider_error: true,
        };
        let request = ProviderRequest {
            system: system.to_string(),
            messages: messages.to_vec(),
            temperature: self.config.temperature,
            max_tokens: self.config.max_tokens,
            tag: RequestTag {
                session: self.session.to_string(),
                step: step.clone(),
            },
        };
        let limit = Duration::from_secs(self.config.session_timeout_secs);
        let mut attempt = 0;
        let response = loop {
            if self.started.elapsed() > limit {
                return Err(provider_failure(format!(
                    "session exceeded its {}s time limit",
                    self.config.session_timeout_secs
                )));
            }
            match self.provider.complete(&request) {
                Ok(r) => break r,
                Err(e) if e.is_transient() && attempt < self.config.provider.retries => {
                    attempt += 1
                }
                Err(e) => return Err(provider_failure(format!("provider failure at {step}: {e}"))),
            }
        };
        self.state.transcript.push(TranscriptEntry {
            role,
            step,
            system: request.system,
            prompt: messages
                .last()
                .map(|m| m.content.clone())
                .unwrap_or_default(),
            response: response.text.clone(),
        });
        Ok(response.text)
    }

    fn writer_system(&self, original: &Solution) -> String {
        let example = match self.config.shot_mode {
            ShotMode::Zero => "None.".to_string(),
            ShotMode::One => self
                .config
                .example_qa
                .clone()
                .unwrap_or_else(|| templates::DEFAULT_EXAMPLE_QA.to_string()),
        };
        render(
            templates::WRITER_SYSTEM,
            &[
                ("description", &self.model.description),
                ("source_code", &self.model.source_text),
                ("doc_str", templates::DOC_STR),
                ("example_qa", &example),
                ("execution_result", &original.summary()),
            ],
        )
        .expect("writer template placeholders are all supplied")
    }

    fn safeguard(&mut self, patch: &QueryPatch) -> Result<Verdict, SessionFailure> {
        if let Verdict::Danger(reason) = local_gate(patch) {
            return Ok(Verdict::Danger(reason));
        }
        let system = render(
            templates::SAFEGUARD_SYSTEM,
            &[("source_code", &self.model.source_text)],
        )
        .expect("safeguard system placeholders are all supplied");
        let snippets: serde_json::Map<String, serde_json::Value> = patch
            .snippets()
            .into_iter()
            .enumerate()
            .map(|(i, (_, text))| (format!("snippet_{}", i + 1), text.into()))
            .collect();
        let json = serde_json::to_string_pretty(&snippets).expect("string map serializes");
        let prompt = render(templates::SAFEGUARD_PROMPT, &[("json_data", &json)])
            .expect("safeguard prompt placeholders are all supplied");
        let step = format!("safeguard.{}", self.state.retry_count);
        let answer = self.call(
            AgentRole::Safeguard,
            step,
            &system,
            &[ChatMessage::user(prompt)],
        )?;
        Ok(parse_verdict(&answer))
    }

    fn run(mut self) -> SessionOutcome {
        let solver = BranchAndBound::default();
        let original_solution = solver.solve(self.model);
        let system = self.writer_system(&original_solution);
        let code_prompt = render(templates::CODE_PROMPT, &[("query", &self.state.query)])
            .expect("code prompt placeholders are all supplied");
        let mut messages = vec![ChatMessage::user(code_prompt)];

        let mut outcome = SessionOutcome {
            status: OutcomeStatus::Failed,
            query: self.state.query.clone(),
            original_source: self.model.source_text.clone(),
            patch: None,
            updated_source: None,
            original_solution: original_solution.clone(),
            updated_solution: None,
            ged_report: None,
            explanation_correctness: None,
            explanation_results: None,
            explanation_split: false,
            impact_rating: None,
            failure: None,
            retry_count: 0,
            phases: Vec::new(),
            transcript: Vec::new(),
        };

        self.advance(Phase::WriterPatch);
        let mut response = match self.call(AgentRole::Writer, "patch.0".into(), &system, &messages)
        {
            Ok(r) => r,
            Err(f) => return self.finish(outcome, Some(f)),
        };

        loop {
            let step = self.attempt(&response, &mut outcome);
            let (error_type, detail, category) = match step {
                None => {
                    // applied and solved; explain
                    self.advance(Phase::Interpret);
                    messages.push(ChatMessage::assistant(response));
                    let failure = self.interpret(&mut outcome, &system, &mut messages).err();
                    return self.finish(outcome, failure);
                }
                Some(Step::Fail(f)) => return self.finish(outcome, Some(f)),
                Some(Step::Retry {
                    error_type,
                    detail,
                    category,
                }) => (error_type, detail, category),
            };
            if self.state.retry_count >= self.config.debug_limit {
                self.advance(Phase::Failed);
                let failure = SessionFailure {
                    category,
                    detail,
                    provider_error: false,
                };
                return self.finish(outcome, Some(failure));
            }
            self.state.retry_count += 1;
            self.advance(Phase::Debug);
            let debug_prompt = render(
                templates::DEBUG_PROMPT,
                &[("error_type", &error_type), ("error_message", &detail)],
            )
            .expect("debug prompt placeholders are all supplied");
            messages.push(ChatMessage::assistant(response));
            messages.push(ChatMessage::user(debug_prompt));
            let step = format!("debug.{}", self.state.retry_count);
            response = match self.call(AgentRole::Writer, step, &system, &messages) {
                Ok(r) => r,
                Err(f) => return self.finish(outcome, Some(f)),
            };
        }
    }

    /// Extract, vet, apply and solve one Writer answer. `None` means the
    /// session may move on to interpretation.
    fn attempt(&mut self, response: &str, outcome: &mut SessionOutcome) -> Option<Step> {
        let retry = |v: PatchViolation| Step::Retry {
            error_type: v.kind.as_str().to_string(),
            category: FailureCategory::of_violation(v.kind),
            detail: v.detail,
        };
        let patch = match extract_patch(response) {
            Ok(p) => p,
            Err(v) => return Some(retry(v)),
        };
        outcome.patch = Some(patch.clone());

        self.advance(Phase::SafeguardCheck);
        match self.safeguard(&patch) {
            Err(f) => return Some(Step::Fail(f)),
            Ok(Verdict::Danger(reason)) => {
                let category = if reason.starts_with("local gate") {
                    FailureCategory::ParseError
                } else {
                    FailureCategory::ApplyError
                };
                return Some(Step::Retry {
                    error_type: "safeguard-danger".into(),
                    detail: reason,
                    category,
                });
            }
            Ok(Verdict::Safe) => {}
        }

        self.advance(Phase::Solve);
        let updated_source = match apply_patch(&self.model.source_text, &patch) {
            Ok(s) => s,
            Err(v) => return Some(retry(v)),
        };
        let updated = parse_model(&updated_source).expect("apply_patch output parses");
        let solution = BranchAndBound::default().solve(&updated);
        self.state.updated_source = Some(updated_source.clone());
        outcome.updated_source = Some(updated_source);
        outcome.ged_report = Some(decision_information(self.model, &updated));
        let limit = solution.status == SolveStatus::Limit;
        outcome.updated_solution = Some(solution);
        if limit {
            return Some(Step::Fail(SessionFailure {
                category: FailureCategory::SolveError,
                detail: "the updated model exhausted the solver budget".into(),
                provider_error: false,
            }));
        }
        None
    }

    fn interpret(
        &mut self,
        outcome: &mut SessionOutcome,
        system: &str,
        messages: &mut Vec<ChatMessage>,
    ) -> Result<(), SessionFailure> {
        let report = outcome
            .ged_report
            .as_ref()
            .expect("set before interpretation")
            .summary();
        let updated = outcome
            .updated_solution
            .as_ref()
            .expect("set before interpretation");
        let prompt = render(
            templates::INTERPRETER_PROMPT,
            &[
                ("source_code", &self.model.source_text),
                (
                    "new_code",
                    outcome.updated_source.as_deref().unwrap_or_default(),
                ),
                (
                    "json_data",
                    &outcome
                        .patch
                        .as_ref()
                        .expect("set before interpretation")
                        .raw,
                ),
                (
                    "original_execution_result",
                    &outcome.original_solution.summary(),
                ),
                ("execution_rst", &updated.summary()),
                ("different_model", &report),
            ],
        )
        .expect("interpreter placeholders are all supplied");
        messages.push(ChatMessage::user(prompt));
        let answer = self.call(AgentRole::Interpreter, "interpret".into(), system, messages)?;
        let parts = split_explanation(&answer);
        outcome.explanation_correctness = Some(parts.correctness);
        outcome.explanation_results = Some(parts.results);
        outcome.explanation_split = parts.split;
        outcome.impact_rating = extract_rating(&answer);
        Ok(())
    }

    fn finish(
        mut self,
        mut outcome: SessionOutcome,
        failure: Option<SessionFailure>,
    ) -> SessionOutcome {
        match failure {
            None => {
                self.advance(Phase::Done);
                outcome.status = OutcomeStatus::Done;
            }
            Some(f) => {
                if self.state.phase != Phase::Failed {
                    self.advance(Phase::Failed);
                }
                outcome.status = OutcomeStatus::Failed;
                outcome.failure = Some(f);
            }
        }
        outcome.retry_count = self.state.retry_count;
        outcome.phases = self.state.history;
        outcome.transcript = self.state.transcript;
        outcome
    }
}

/// Runs one what-if query end to end. Never panics on provider or patch
/// failures; those end in a `Failed` outcome.
pub fn commander_run(
    model: &LinearModel,
    query: &str,
    config: &AgentConfig,
    provider: &dyn ChatProvider,
) -> SessionOutcome {
    commander_run_observed(model, query, "default", config, provider, &mut |_| {})
}

/// [`commander_run`] with a session tag for the provider and a phase
/// observer.
pub fn commander_run_observed(
    model: &LinearModel,
    query: &str,
    session: &str,
    config: &AgentConfig,
    provider: &dyn ChatProvider,
    observer: &mut dyn FnMut(&PhaseEvent),
) -> SessionOutcome {
    Commander {
        model,
        config,
        provider,
        session,
        state: SessionState::new(query, &model.source_text),
        started: Instant::now(),
        observer,
    }
    .run()
}
