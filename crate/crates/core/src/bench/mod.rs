//! Dataset runs: modeling accuracy, failure categories and judge scores.

mod judge;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agent::{
    commander_run_observed, AgentConfig, ChatProvider, FailureCategory, SessionOutcome,
};
use crate::model::parse::{classify_line, LineKind};
use crate::model::{parse_model, LinearModel, ModelError};
use crate::patch::PATCH_KEYS;

pub use judge::{
    judge_explanations, judge_run, outcome_explanation, parse_judge_response, render_judge_prompt,
    JudgeError, JudgeFailure, JudgeScores, JudgeSummary, MeanScores, MethodScore, MAX_SCORE,
};

/// The bundled airline problem with its ten queries.
pub const BUNDLED_DATASET: &str = include_str!("../../data/aircraft.eorb");
/// Mock script answering every bundled query correctly.
pub const BUNDLED_SCRIPT: &str = include_str!("../../data/scripts/aircraft.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkQuery {
    pub text: String,
    pub truth_label: f64,
    /// Patch keys the query needs, repeated once per statement it needs
    /// under that key.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_patch_keys: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkProblem {
    pub id: String,
    pub description: String,
    #[serde(rename = "model")]
    pub model_source: String,
    pub base_truth: f64,
    pub queries: Vec<BenchmarkQuery>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("dataset is not a problem document or a list of them: {0}")]
    Json(#[from] serde_json::Error),
    #[error("problem `{id}`: model does not parse: {source}")]
    Model { id: String, source: ModelError },
    #[error("problem `{id}`: {what} is not finite")]
    NotFinite { id: String, what: String },
    #[error("problem `{id}`: unknown patch key `{key}` in query {query}")]
    UnknownKey {
        id: String,
        query: usize,
        key: String,
    },
    #[error("duplicate problem id `{0}`")]
    DuplicateId(String),
}

impl BenchmarkProblem {
    pub fn parsed_model(&self) -> Result<LinearModel, DatasetError> {
        parse_model(&self.model_source).map_err(|source| DatasetError::Model {
            id: self.id.clone(),
            source,
        })
    }

    /// Mock-script session name of a query, 1-based: `aircraft/q5`.
    pub fn session_name(&self, query_index: usize) -> String {
        format!("{}/q{}", self.id, query_index + 1)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        self.parsed_model()?;
        let bad = |what: String| DatasetError::NotFinite {
            id: self.id.clone(),
            what,
        };
        if !self.base_truth.is_finite() {
            return Err(bad("base_truth".into()));
        }
        for (i, q) in self.queries.iter().enumerate() {
            if !q.truth_label.is_finite() {
                return Err(bad(format!("truth label of query {}", i + 1)));
            }
            for key in q.expected_patch_keys.iter().flatten() {
                if !PATCH_KEYS.contains(&key.as_str()) {
                    return Err(DatasetError::UnknownKey {
                        id: self.id.clone(),
                        query: i + 1,
                        key: key.clone(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// One problem document or a JSON list of them, validated.
pub fn parse_dataset(text: &str) -> Result<Vec<BenchmarkProblem>, DatasetError> {
    let problems: Vec<BenchmarkProblem> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text)?
    } else {
        vec![serde_json::from_str(text)?]
    };
    let mut ids = std::collections::HashSet::new();
    for p in &problems {
        p.validate()?;
        if !ids.insert(p.id.as_str()) {
            return Err(DatasetError::DuplicateId(p.id.clone()));
        }
    }
    Ok(problems)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<BenchmarkProblem>, DatasetError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset(&text)
}

/// Runs one query in an isolated session.
pub trait SessionRunner: Sync {
    fn run(&self, model: &LinearModel, query: &str, session: &str) -> SessionOutcome;
}

impl<F> SessionRunner for F
where
    F: Fn(&LinearModel, &str, &str) -> SessionOutcome + Sync,
{
    fn run(&self, model: &LinearModel, query: &str, session: &str) -> SessionOutcome {
        self(model, query, session)
    }
}

/// The commander workflow bound to a provider.
pub struct CommanderRunner<P> {
    pub config: AgentConfig,
    pub provider: P,
}

impl<P: ChatProvider> SessionRunner for CommanderRunner<P> {
    fn run(&self, model: &LinearModel, query: &str, session: &str) -> SessionOutcome {
        commander_run_observed(
            model,
            query,
            session,
            &self.config,
            &self.provider,
            &mut |_| {},
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryStatus {
    Correct,
    WrongResult,
    Failed,
}

impl QueryStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            QueryStatus::Correct => "correct",
            QueryStatus::WrongResult => "wrong-result",
            QueryStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub problem_id: String,
    /// 0-based position within the problem.
    pub query_index: usize,
    pub session: String,
    pub query: String,
    pub status: QueryStatus,
    pub objective: Option<f64>,
    pub truth_label: f64,
    /// Set exactly when the status is not `Correct`.
    pub category: Option<FailureCategory>,
    pub detail: Option<String>,
    pub outcome: Option<SessionOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub results: Vec<QueryResult>,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub category_counts: BTreeMap<FailureCategory, usize>,
}

impl EvalResult {
    fn from_results(results: Vec<QueryResult>) -> Self {
        let total = results.len();
        let correct = results
            .iter()
            .filter(|r| r.status == QueryStatus::Correct)
            .count();
        let mut category_counts: BTreeMap<FailureCategory, usize> =
            FailureCategory::ALL.iter().map(|c| (*c, 0)).collect();
        for c in results.iter().filter_map(|r| r.category) {
            *category_counts.get_mut(&c).unwrap() += 1;
        }
        EvalResult {
            results,
            correct,
            total,
            accuracy: if total == 0 {
                0.0
            } else {
                correct as f64 / total as f64
            },
            category_counts,
        }
    }

    pub fn status_count(&self, status: QueryStatus) -> usize {
        self.results.iter().filter(|r| r.status == status).count()
    }

    pub fn result(&self, session: &str) -> Option<&QueryResult> {
        self.results.iter().find(|r| r.session == session)
    }
}

fn rounded_eq(a: f64, b: f64) -> bool {
    a.round() == b.round()
}

/// Statement lines per patch key, comments and blanks ignored.
fn statement_counts(outcome: &SessionOutcome) -> BTreeMap<&'static str, usize> {
    let mut counts = BTreeMap::new();
    if let Some(patch) = &outcome.patch {
        for (key, snippet) in patch.snippets() {
            let n = snippet
                .lines()
                .filter(|l| !matches!(classify_line(l), LineKind::Blank | LineKind::Comment))
                .count();
            *counts.entry(key).or_insert(0) += n;
        }
    }
    counts
}

/// Category of a query outcome that did not reproduce the truth label.
///
/// Workflow failures keep their own category. A solved model whose patch
/// has fewer statements under some key than the query annotations ask for
/// is `incomplete-model`; any other wrong answer is `logic-error`.
pub fn classify_failure(outcome: &SessionOutcome, query: &BenchmarkQuery) -> FailureCategory {
    if let Some(f) = &outcome.failure {
        return f.category;
    }
    let Some(expected) = &query.expected_patch_keys else {
        return FailureCategory::LogicError;
    };
    let have = statement_counts(outcome);
    let mut need: BTreeMap<&str, usize> = BTreeMap::new();
    for k in expected {
        *need.entry(k.as_str()).or_insert(0) += 1;
    }
    if need
        .iter()
        .any(|(k, n)| have.get(k).copied().unwrap_or(0) < *n)
    {
        FailureCategory::IncompleteModel
    } else {
        FailureCategory::LogicError
    }
}

fn score_query(
    problem: &BenchmarkProblem,
    model: &Result<LinearModel, String>,
    qi: usize,
    runner: &dyn SessionRunner,
) -> QueryResult {
    let query = &problem.queries[qi];
    let session = problem.session_name(qi);
    let mut result = QueryResult {
        problem_id: problem.id.clone(),
        query_index: qi,
        session: session.clone(),
        query: query.text.clone(),
        status: QueryStatus::Failed,
        objective: None,
        truth_label: query.truth_label,
        category: Some(FailureCategory::ParseError),
        detail: None,
        outcome: None,
    };
    let model = match model {
        Ok(m) => m,
        Err(e) => {
            result.detail = Some(e.clone());
            return result;
        }
    };
    let outcome = runner.run(model, &query.text, &session);
    result.objective = outcome.rounded_objective();
    if !outcome.is_done() {
        result.category = Some(classify_failure(&outcome, query));
        result.detail = outcome.failure.as_ref().map(|f| f.detail.clone());
    } else if result
        .objective
        .is_some_and(|o| rounded_eq(o, query.truth_label))
    {
        result.status = QueryStatus::Correct;
        result.category = None;
    } else {
        result.status = QueryStatus::WrongResult;
        result.category = Some(classify_failure(&outcome, query));
    }
    result.outcome = Some(outcome);
    result
}

/// Runs every query of every problem, up to `parallelism` at a time.
///
/// Results come back in dataset order whatever the scheduling.
pub fn run_accuracy(
    dataset: &[BenchmarkProblem],
    runner: &dyn SessionRunner,
    parallelism: usize,
) -> EvalResult {
    let models: Vec<Result<LinearModel, String>> = dataset
        .iter()
        .map(|p| p.parsed_model().map_err(|e| e.to_string()))
        .collect();
    let jobs: Vec<(usize, usize)> = dataset
        .iter()
        .enumerate()
        .flat_map(|(pi, p)| (0..p.queries.len()).map(move |qi| (pi, qi)))
        .collect();
    let slots: Mutex<Vec<Option<QueryResult>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let workers = parallelism.clamp(1, jobs.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let j = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(pi, qi)) = jobs.get(j) else { break };
                let r = score_query(&dataset[pi], &models[pi], qi, runner);
                slots.lock().unwrap()[j] = Some(r);
            });
        }
    });
    let results = slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect();
    EvalResult::from_results(results)
}

/// Structured evaluation document: accuracy plus optional judge means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub eval: EvalResult,
    pub judge: Option<JudgeSummary>,
}

fn fmt_objective(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{}", v.round()),
        None => "-".into(),
    }
}

impl BenchReport {
    /// Human-readable table.
    pub fn to_table(&self) -> String {
        let e = &self.eval;
        let mut out = format!(
            "accuracy {}/{} ({:.2}%)\n\n",
            e.correct,
            e.total,
            e.accuracy * 100.0
        );
        let width = e
            .results
            .iter()
            .map(|r| r.session.len())
            .max()
            .unwrap_or(5)
            .max(5);
        out += &format!(
            "{:<width$}  {:<12}  {:>12}  {:>12}  category\n",
            "query", "status", "objective", "truth"
        );
        for r in &e.results {
            out += &format!(
                "{:<width$}  {:<12}  {:>12}  {:>12}  {}\n",
                r.session,
                r.status.as_str(),
                fmt_objective(r.objective),
                fmt_objective(Some(r.truth_label)),
                r.category.map_or("-", |c| c.as_str())
            );
        }
        out += "\nfailures";
        for (c, n) in &e.category_counts {
            out += &format!("  {c} {n}");
        }
        out.push('\n');
        if let Some(j) = &self.judge {
            out.push('\n');
            out += &j.to_table();
        }
        out
    }
}

#[cfg(test)]
mod tests;
