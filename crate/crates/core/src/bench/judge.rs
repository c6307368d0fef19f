//! Explanation scoring with a judge provider.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EvalResult, QueryStatus};
use crate::agent::templates::{render, JUDGE_PROMPT};
use crate::agent::{
    ChatMessage, ChatProvider, ProviderError, ProviderRequest, RequestTag, SessionOutcome,
};

/// Highest score the judge may give.
pub const MAX_SCORE: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodScore {
    pub ec: u8,
    pub er: u8,
    pub overall: u8,
}

/// Scores per method label, in the order the labels were given.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeScores(pub IndexMap<String, MethodScore>);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JudgeError {
    #[error("nothing to judge: no method labels")]
    NoMethods,
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("judge response is not a score document: {0}")]
    Unparseable(String),
    #[error("method `{method}`: {problem}")]
    BadScores { method: String, problem: String },
    #[error("judge scored {found:?}, expected {expected:?}")]
    LabelMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
}

fn count_word(n: usize) -> String {
    const WORDS: [&str; 11] = [
        "zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
    ];
    WORDS
        .get(n)
        .map_or_else(|| n.to_string(), |w| w.to_string())
}

fn method_list(labels: &[&str]) -> String {
    let quoted: Vec<String> = labels.iter().map(|l| format!("`{l}`")).collect();
    match quoted.len() {
        0 => String::new(),
        1 => quoted[0].clone(),
        2 => format!("{} and {}", quoted[0], quoted[1]),
        n => format!("{}, and {}", quoted[..n - 1].join(", "), quoted[n - 1]),
    }
}

/// The judge prompt for one query and any number of labelled explanations.
pub fn render_judge_prompt(query: &str, explanations: &IndexMap<String, String>) -> String {
    let labels: Vec<&str> = explanations.keys().map(String::as_str).collect();
    let block: Vec<String> = explanations
        .iter()
        .map(|(label, text)| {
            let body = text.trim().lines().collect::<Vec<_>>().join("\n      ");
            format!("    - Explanations by {label}: {body}")
        })
        .collect();
    render(
        JUDGE_PROMPT,
        &[
            ("method_count", &count_word(labels.len())),
            ("method_list", &method_list(&labels)),
            ("query", query.trim()),
            ("explanations", &block.join("\n")),
        ],
    )
    .expect("judge template placeholders are all supplied")
}

fn score_document(text: &str) -> &str {
    let t = text.trim();
    if let Some(rest) = t.strip_prefix("```") {
        let body = rest.split_once('\n').map_or("", |(_, b)| b);
        if let Some(inner) = body.trim_end().strip_suffix("```") {
            return inner.trim();
        }
    }
    t
}

/// Reads `{label: [ec, er, overall], …}`. The document must be the whole
/// answer (a single fenced block is allowed), name exactly `labels`, and
/// hold three integers from 0 to 10 per label.
pub fn parse_judge_response(text: &str, labels: &[&str]) -> Result<JudgeScores, JudgeError> {
    let doc: IndexMap<String, serde_json::Value> = serde_json::from_str(score_document(text))
        .map_err(|e| JudgeError::Unparseable(e.to_string()))?;
    let mut expected: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
    let mut found: Vec<String> = doc.keys().cloned().collect();
    expected.sort();
    found.sort();
    if expected != found {
        return Err(JudgeError::LabelMismatch { expected, found });
    }
    let mut out = IndexMap::new();
    for label in labels {
        let bad = |problem: String| JudgeError::BadScores {
            method: label.to_string(),
            problem,
        };
        let values = doc[*label]
            .as_array()
            .ok_or_else(|| bad("scores are not a list".into()))?;
        if values.len() != 3 {
            return Err(bad(format!("{} scores instead of three", values.len())));
        }
        let mut s = [0u8; 3];
        for (slot, v) in s.iter_mut().zip(values) {
            let n = v
                .as_u64()
                .ok_or_else(|| bad(format!("{v} is not a whole number")))?;
            if n > MAX_SCORE {
                return Err(bad(format!("{n} is outside 0-{MAX_SCORE}")));
            }
            *slot = n as u8;
        }
        out.insert(
            label.to_string(),
            MethodScore {
                ec: s[0],
                er: s[1],
                overall: s[2],
            },
        );
    }
    Ok(JudgeScores(out))
}

/// Scores labelled explanations of one query.
pub fn judge_explanations(
    query: &str,
    explanations: &IndexMap<String, String>,
    provider: &dyn ChatProvider,
    tag: RequestTag,
) -> Result<JudgeScores, JudgeError> {
    if explanations.is_empty() {
        return Err(JudgeError::NoMethods);
    }
    let request = ProviderRequest {
        system: String::new(),
        messages: vec![ChatMessage::user(render_judge_prompt(query, explanations))],
        temperature: 0.0,
        max_tokens: 512,
        tag,
    };
    let response = provider.complete(&request)?;
    let labels: Vec<&str> = explanations.keys().map(String::as_str).collect();
    parse_judge_response(&response.text, &labels)
}

/// Both explanation parts of an outcome as one text for the judge.
pub fn outcome_explanation(outcome: &SessionOutcome) -> Option<String> {
    let ec = outcome.explanation_correctness.as_deref()?;
    let er = outcome.explanation_results.as_deref()?;
    Some(if outcome.explanation_split {
        format!("Explanation of Updated Code: {ec}\nExplanation of the Query on Results: {er}")
    } else {
        ec.to_string()
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanScores {
    pub ec: f64,
    pub er: f64,
    pub overall: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeFailure {
    pub session: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeSummary {
    pub means: IndexMap<String, MeanScores>,
    pub judged: usize,
    /// Incorrect outcomes, never sent to the judge.
    pub skipped: usize,
    pub failures: Vec<JudgeFailure>,
    pub scores: IndexMap<String, JudgeScores>,
}

impl JudgeSummary {
    fn from_scores(
        scores: IndexMap<String, JudgeScores>,
        skipped: usize,
        failures: Vec<JudgeFailure>,
    ) -> Self {
        let mut sums: IndexMap<String, (u64, u64, u64, usize)> = IndexMap::new();
        for s in scores.values() {
            for (label, m) in &s.0 {
                let e = sums.entry(label.clone()).or_default();
                e.0 += m.ec as u64;
                e.1 += m.er as u64;
                e.2 += m.overall as u64;
                e.3 += 1;
            }
        }
        let means = sums
            .into_iter()
            .map(|(label, (ec, er, ov, n))| {
                let d = n as f64;
                (
                    label,
                    MeanScores {
                        ec: ec as f64 / d,
                        er: er as f64 / d,
                        overall: ov as f64 / d,
                        count: n,
                    },
                )
            })
            .collect();
        JudgeSummary {
            means,
            judged: scores.len(),
            skipped,
            failures,
            scores,
        }
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "judge: {} judged, {} skipped, {} failed\n",
            self.judged,
            self.skipped,
            self.failures.len()
        );
        let width = self.means.keys().map(String::len).max().unwrap_or(6).max(6);
        out += &format!(
            "{:<width$}  {:>6}  {:>6}  {:>7}\n",
            "method", "EC", "ER", "Overall"
        );
        for (label, m) in &self.means {
            out += &format!(
                "{label:<width$}  {:>6.2}  {:>6.2}  {:>7.2}\n",
                m.ec, m.er, m.overall
            );
        }
        for f in &self.failures {
            out += &format!("judge failure {}: {}\n", f.session, f.error);
        }
        out
    }
}

/// Judges the explanation of every correct query under `label`; each call
/// is tagged with the query's session and step `judge`.
pub fn judge_run(eval: &EvalResult, provider: &dyn ChatProvider, label: &str) -> JudgeSummary {
    let mut scores = IndexMap::new();
    let mut failures = Vec::new();
    let mut skipped = 0;
    for r in &eval.results {
        if r.status != QueryStatus::Correct {
            skipped += 1;
            continue;
        }
        let Some(text) = r.outcome.as_ref().and_then(outcome_explanation) else {
            failures.push(JudgeFailure {
                session: r.session.clone(),
                error: "outcome carries no explanation".into(),
            });
            continue;
        };
        let explanations = IndexMap::from([(label.to_string(), text)]);
        let tag = RequestTag {
            session: r.session.clone(),
            step: "judge".into(),
        };
        match judge_explanations(&r.query, &explanations, provider, tag) {
            Ok(s) => {
                scores.insert(r.session.clone(), s);
            }
            Err(e) => failures.push(JudgeFailure {
                session: r.session.clone(),
                error: e.to_string(),
            }),
        }
    }
    JudgeSummary::from_scores(scores, skipped, failures)
}
