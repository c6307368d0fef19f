//! Reading structure out of free-form provider text.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::patch::{parse_patch, PatchViolation, QueryPatch, ViolationKind};

static FENCE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)```[A-Za-z0-9_-]*[ \t]*\r?\n(.*?)```").unwrap());

/// Top-level balanced `{…}` spans, string literals respected.
pub(crate) fn brace_objects(text: &str) -> Vec<&str> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] != b'{' {
            i += 1;
            continue;
        }
        let (mut depth, mut in_str, mut escaped) = (0usize, false, false);
        let mut end = None;
        for (k, &b) in bytes.iter().enumerate().skip(i) {
            if in_str {
                match b {
                    _ if escaped => escaped = false,
                    b'\\' => escaped = true,
                    b'"' => in_str = false,
                    _ => {}
                }
                continue;
            }
            match b {
                b'"' => in_str = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        end = Some(k);
                        break;
                    }
                }
                _ => {}
            }
        }
        match end {
            Some(k) => {
                out.push(&text[i..=k]);
                i = k + 1;
            }
            None => break,
        }
    }
    out
}

/// First well-formed patch document in a response, fenced blocks first.
///
/// When no candidate is accepted, the violation of the first candidate that
/// was at least a JSON object is returned.
pub fn extract_patch(response: &str) -> Result<QueryPatch, PatchViolation> {
    let mut candidates: Vec<&str> = FENCE
        .captures_iter(response)
        .map(|c| c.get(1).unwrap().as_str().trim())
        .collect();
    candidates.extend(brace_objects(response));
    let mut first_error = None;
    let mut json_error = None;
    for candidate in candidates.into_iter().filter(|c| c.starts_with('{')) {
        if let Err(e) = serde_json::from_str::<serde_json::Value>(candidate) {
            json_error.get_or_insert_with(|| e.to_string());
            continue;
        }
        match parse_patch(candidate) {
            Ok(p) => return Ok(p),
            Err(v) => {
                first_error.get_or_insert(v);
            }
        }
    }
    Err(first_error.unwrap_or_else(|| PatchViolation {
        kind: ViolationKind::MalformedDocument,
        detail: match json_error {
            Some(e) => format!("the patch document is not valid JSON: {e}"),
            None => "the response contains no JSON patch document".into(),
        },
    }))
}

static CORRECTNESS_HEADER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?im)^[ \t>#*(\d).\-]*explanation of (?:the )?updated code[ \t*:]*$").unwrap()
});
static RESULTS_HEADER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?im)^[ \t>#*(\d).\-]*explanation of (?:the )?query on (?:the )?results[ \t*:]*$")
        .unwrap()
});

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitExplanation {
    pub correctness: String,
    pub results: String,
    /// Both headers were found; otherwise each part holds the full text.
    pub split: bool,
}

/// Splits an interpreter answer at its two part headers.
pub fn split_explanation(text: &str) -> SplitExplanation {
    let first = CORRECTNESS_HEADER.find(text);
    let second = RESULTS_HEADER.find(text);
    match (first, second) {
        (Some(a), Some(b)) if a.end() <= b.start() => SplitExplanation {
            correctness: text[a.end()..b.start()].trim().to_string(),
            results: text[b.end()..].trim().to_string(),
            split: true,
        },
        _ => SplitExplanation {
            correctness: text.trim().to_string(),
            results: text.trim().to_string(),
            split: false,
        },
    }
}

static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[$€£]?\d[\d,]*(?:\.\d+)?").unwrap());
static RATING_CONTEXT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)scale|rat(?:e|ed|ing)|score|impact|quantif").unwrap());
static LEAD_IN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?i)(?:around|about|approximately|roughly|at|as|of|is|be|an|a|:|\*\*)\s*$")
        .unwrap()
});
static RANGE_END: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:from|between)\s*$").unwrap());
static RANGE_START: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*(?:to|-|–|and)\s*\d").unwrap());
static OUT_OF: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*(?:/|out of)\s*10\b").unwrap());
static RANGE_TAIL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:to|-|–|and)\s*$").unwrap());

/// Extracts a 1–10 impact rating such as "around an 8" or "7/10", ignoring
/// the "1 to 10" scale description itself.
pub fn extract_rating(text: &str) -> Option<u8> {
    for sentence in text.split_inclusive(['.', '\n', '!', '?']) {
        if !RATING_CONTEXT.is_match(sentence) {
            continue;
        }
        for m in NUMBER.find_iter(sentence) {
            let token = m.as_str();
            let Ok(v) = token.parse::<u8>() else { continue };
            if !(1..=10).contains(&v) {
                continue;
            }
            let before = &sentence[..m.start()];
            let after = &sentence[m.end()..];
            if OUT_OF.is_match(after) {
                return Some(v);
            }
            if RANGE_END.is_match(before)
                || RANGE_START.is_match(after)
                || RANGE_TAIL.is_match(before)
            {
                continue;
            }
            if after.starts_with(['%', ',']) && after[1..].starts_with(|c: char| c.is_ascii_digit())
            {
                continue;
            }
            if LEAD_IN.is_match(before) {
                return Some(v);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG_PATCH: &str = r##"{
    "ADD CONSTRAINT": "# Constraint: Limit number of Type A and Type B aircraft\nMaxTypeA: A <= 15\nMaxTypeB: B <= 30"
}"##;

    #[test]
    fn bare_and_fenced() {
        let p = extract_patch(FIG_PATCH).unwrap();
        assert!(p.add_constraint.unwrap().contains("MaxTypeB: B <= 30"));
        let fenced = format!("Here are the changes:\n```json\n{FIG_PATCH}\n```\nDone.");
        assert!(extract_patch(&fenced).is_ok());
        let noisy = format!("Use {{braces}} carefully. {FIG_PATCH} trailing }}");
        assert!(extract_patch(&noisy).is_ok());
    }

    #[test]
    fn prose_only_fails() {
        let e = extract_patch("I would add a limit on type A aircraft.").unwrap_err();
        assert_eq!(e.kind, ViolationKind::MalformedDocument);
    }

    #[test]
    fn violations_surface() {
        let e = extract_patch(r#"{"UPDATE OBJECTIVE": "minimize: A"}"#).unwrap_err();
        assert_eq!(e.kind, ViolationKind::UnknownKey);
    }

    #[test]
    fn strings_with_braces() {
        let text = r##"{"ADD DATA": "# note } {\nparam demand = 12000"}"##;
        assert_eq!(
            extract_patch(text).unwrap().add_data.unwrap(),
            "# note } {\nparam demand = 12000"
        );
    }

    #[test]
    fn split_at_bold_headers() {
        let text = "**Explanation of Updated Code:**\nTwo limits were added.\n\n**Explanation of the Query on Results:**\nCost rose to $215,000.";
        let s = split_explanation(text);
        assert!(s.split);
        assert_eq!(s.correctness, "Two limits were added.");
        assert_eq!(s.results, "Cost rose to $215,000.");
        let numbered =
            "(1) Explanation of the Updated code\nA\n(2) Explanation of the Query on Results\nB";
        assert_eq!(split_explanation(numbered).results, "B");
    }

    #[test]
    fn missing_headers_keep_full_text() {
        let s = split_explanation("Costs went up.");
        assert!(!s.split);
        assert_eq!(s.correctness, s.results);
    }

    #[test]
    fn ratings() {
        let fig = "The query's impact on the results is substantial, as illustrated by a $15,000 increase in operational costs. If rated on a scale from 1 to 10, the impact could be quantified around an 8. This rating reflects significant changes.";
        assert_eq!(extract_rating(fig), Some(8));
        assert_eq!(extract_rating("Impact rating: 6/10"), Some(6));
        assert_eq!(
            extract_rating("I would rate the impact 3 out of 10."),
            Some(3)
        );
        assert_eq!(extract_rating("Impact: **7**"), Some(7));
        assert_eq!(
            extract_rating("On a scale from 1 to 10 the change matters."),
            None
        );
        assert_eq!(extract_rating("Costs rose by 15,000 dollars."), None);
        assert_eq!(extract_rating("No rating here, only 4 aircraft."), None);
    }
}
