//! The three-key patch protocol: `DELETE CONSTRAINT`, `ADD CONSTRAINT` and
//! `ADD DATA`, applied to the marker regions of a model source.

use std::fmt;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::model::parse::{classify_line, LineKind};
use crate::model::{
    parse_model, LinearModel, ModelError, CONSTRAINT_BEGIN, CONSTRAINT_END, DATA_BEGIN, DATA_END,
};

pub const DELETE_CONSTRAINT: &str = "DELETE CONSTRAINT";
pub const ADD_CONSTRAINT: &str = "ADD CONSTRAINT";
pub const ADD_DATA: &str = "ADD DATA";

/// The only keys a patch document may carry, in application order.
pub const PATCH_KEYS: [&str; 3] = [DELETE_CONSTRAINT, ADD_CONSTRAINT, ADD_DATA];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryPatch {
    pub delete_constraint: Option<String>,
    pub add_constraint: Option<String>,
    pub add_data: Option<String>,
    /// The document as received.
    pub raw: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    UnknownKey,
    MalformedDocument,
    SnippetParseError,
    NewVariableIntroduced,
    DeleteTargetMissing,
    MarkerCorruption,
}

impl ViolationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationKind::UnknownKey => "unknown-key",
            ViolationKind::MalformedDocument => "malformed-document",
            ViolationKind::SnippetParseError => "snippet-parse-error",
            ViolationKind::NewVariableIntroduced => "new-variable-introduced",
            ViolationKind::DeleteTargetMissing => "delete-target-missing",
            ViolationKind::MarkerCorruption => "marker-corruption",
        }
    }
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{kind}: {detail}")]
pub struct PatchViolation {
    pub kind: ViolationKind,
    pub detail: String,
}

impl PatchViolation {
    fn new(kind: ViolationKind, detail: impl Into<String>) -> Self {
        PatchViolation {
            kind,
            detail: detail.into(),
        }
    }
}

/// Top-level object entries in document order, duplicates kept.
struct Entries(Vec<(String, serde_json::Value)>);

impl<'de> Deserialize<'de> for Entries {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Entries;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Entries, A::Error> {
                let mut out = Vec::new();
                while let Some(entry) = map.next_entry()? {
                    out.push(entry);
                }
                Ok(Entries(out))
            }
        }
        d.deserialize_map(V)
    }
}

impl QueryPatch {
    pub fn new(
        delete_constraint: Option<&str>,
        add_constraint: Option<&str>,
        add_data: Option<&str>,
    ) -> Self {
        let mut p = QueryPatch {
            delete_constraint: delete_constraint.map(str::to_string),
            add_constraint: add_constraint.map(str::to_string),
            add_data: add_data.map(str::to_string),
            raw: String::new(),
        };
        p.raw = p.to_document();
        p
    }

    /// Present snippets as `(key, text)` in application order.
    pub fn snippets(&self) -> Vec<(&'static str, &str)> {
        [
            (DELETE_CONSTRAINT, &self.delete_constraint),
            (ADD_CONSTRAINT, &self.add_constraint),
            (ADD_DATA, &self.add_data),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }

    pub fn keys(&self) -> Vec<&'static str> {
        self.snippets().into_iter().map(|(k, _)| k).collect()
    }

    /// Canonical JSON rendering, keys in application order.
    pub fn to_document(&self) -> String {
        let mut map = serde_json::Map::new();
        for (k, v) in self.snippets() {
            map.insert(k.to_string(), serde_json::Value::String(v.to_string()));
        }
        serde_json::to_string_pretty(&serde_json::Value::Object(map))
            .expect("string map serializes")
    }
}

/// Strictly parses a patch document. Whitespace-only values count as absent.
pub fn parse_patch(document: &str) -> Result<QueryPatch, PatchViolation> {
    let malformed = |d: String| PatchViolation::new(ViolationKind::MalformedDocument, d);
    let Entries(entries) = serde_json::from_str(document.trim())
        .map_err(|e| malformed(format!("not a JSON object: {e}")))?;
    let mut patch = QueryPatch {
        delete_constraint: None,
        add_constraint: None,
        add_data: None,
        raw: document.to_string(),
    };
    let mut seen: Vec<&str> = Vec::new();
    for (key, value) in &entries {
        let slot = match key.as_str() {
            DELETE_CONSTRAINT => &mut patch.delete_constraint,
            ADD_CONSTRAINT => &mut patch.add_constraint,
            ADD_DATA => &mut patch.add_data,
            other => {
                return Err(PatchViolation::new(
                    ViolationKind::UnknownKey,
                    format!("`{other}` is not one of {PATCH_KEYS:?}"),
                ))
            }
        };
        if seen.contains(&key.as_str()) {
            return Err(malformed(format!("key `{key}` appears twice")));
        }
        seen.push(key);
        let serde_json::Value::String(text) = value else {
            return Err(malformed(format!("value of `{key}` is not a string")));
        };
        if !text.trim().is_empty() {
            *slot = Some(text.clone());
        }
    }
    if patch.snippets().is_empty() {
        return Err(malformed("the patch carries no changes".into()));
    }
    Ok(patch)
}

fn normalize(line: &str) -> String {
    line.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn code_part(line: &str) -> String {
    normalize(line.split('#').next().unwrap_or(""))
}

fn snippet_lines(text: &str) -> Vec<&str> {
    let mut lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    while lines.first().is_some_and(|l| l.trim().is_empty()) {
        lines.remove(0);
    }
    lines
}

fn check_snippet(key: &str, text: &str, allowed: LineKind) -> Result<(), PatchViolation> {
    for (n, line) in snippet_lines(text).into_iter().enumerate() {
        match classify_line(line) {
            LineKind::Blank | LineKind::Comment => {}
            LineKind::Marker => {
                return Err(PatchViolation::new(
                    ViolationKind::MarkerCorruption,
                    format!("{key} line {} is a marker line", n + 1),
                ))
            }
            kind if kind == allowed => {}
            _ => {
                let expected = if allowed == LineKind::Param {
                    "a param"
                } else {
                    "a constraint"
                };
                return Err(PatchViolation::new(
                    ViolationKind::SnippetParseError,
                    format!(
                        "{key} line {} is not {expected} statement: `{}`",
                        n + 1,
                        line.trim()
                    ),
                ));
            }
        }
    }
    Ok(())
}

/// Checks that every snippet line is blank, a comment, or a statement of
/// the kind its key targets.
pub fn check_snippets(patch: &QueryPatch) -> Result<(), PatchViolation> {
    if let Some(d) = &patch.delete_constraint {
        check_snippet(DELETE_CONSTRAINT, d, LineKind::Constraint)?;
    }
    if let Some(c) = &patch.add_constraint {
        check_snippet(ADD_CONSTRAINT, c, LineKind::Constraint)?;
    }
    if let Some(d) = &patch.add_data {
        check_snippet(ADD_DATA, d, LineKind::Param)?;
    }
    Ok(())
}

/// Source split into lines that keep their terminators, plus marker positions.
struct Layout<'a> {
    lines: Vec<&'a str>,
    data_end: usize,
    con_begin: usize,
    con_end: usize,
}

fn layout(source: &str) -> Result<Layout<'_>, PatchViolation> {
    let lines: Vec<&str> = source.split_inclusive('\n').collect();
    let find = |marker: &str| {
        let hits: Vec<usize> = (0..lines.len())
            .filter(|&i| lines[i].trim() == marker)
            .collect();
        match hits.as_slice() {
            [i] => Ok(*i),
            _ => Err(PatchViolation::new(
                ViolationKind::MarkerCorruption,
                format!("`{marker}` must appear exactly once, found {}", hits.len()),
            )),
        }
    };
    let data_begin = find(DATA_BEGIN)?;
    let data_end = find(DATA_END)?;
    let con_begin = find(CONSTRAINT_BEGIN)?;
    let con_end = find(CONSTRAINT_END)?;
    if !(data_begin < data_end && data_end < con_begin && con_begin < con_end) {
        return Err(PatchViolation::new(
            ViolationKind::MarkerCorruption,
            "markers out of order",
        ));
    }
    Ok(Layout {
        lines,
        data_end,
        con_begin,
        con_end,
    })
}

/// Lines strictly inside the data region and the constraint region.
pub fn region_lines(source: &str) -> Result<(Vec<String>, Vec<String>), PatchViolation> {
    let l = layout(source)?;
    let data_begin = l
        .lines
        .iter()
        .position(|x| x.trim() == DATA_BEGIN)
        .unwrap_or(0);
    let strip = |s: &&str| s.trim_end_matches(['\n', '\r']).to_string();
    Ok((
        l.lines[data_begin + 1..l.data_end]
            .iter()
            .map(strip)
            .collect(),
        l.lines[l.con_begin + 1..l.con_end]
            .iter()
            .map(strip)
            .collect(),
    ))
}

/// Region line indices removed by a deletion snippet.
///
/// The whole snippet is first matched as a contiguous block (blank lines
/// ignored). Failing that, only its statement lines are matched, in order,
/// comments on either side ignored.
fn deletion_targets(region: &[(usize, &str)], snippet: &str) -> Result<Vec<usize>, PatchViolation> {
    let wanted: Vec<String> = snippet_lines(snippet)
        .into_iter()
        .filter(|l| !l.trim().is_empty())
        .map(normalize)
        .collect();
    let present: Vec<(usize, String)> = region
        .iter()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|&(i, l)| (i, normalize(l)))
        .collect();
    let missing = |d: String| PatchViolation::new(ViolationKind::DeleteTargetMissing, d);
    if wanted.is_empty() {
        return Err(missing("the deletion snippet is empty".into()));
    }
    if let Some(start) = present
        .windows(wanted.len())
        .position(|w| w.iter().map(|(_, l)| l).eq(wanted.iter()))
    {
        return Ok(present[start..start + wanted.len()]
            .iter()
            .map(|(i, _)| *i)
            .collect());
    }

    let statements: Vec<String> = snippet_lines(snippet)
        .into_iter()
        .filter(|l| classify_line(l) == LineKind::Constraint)
        .map(code_part)
        .collect();
    if statements.is_empty() {
        return Err(missing("the deletion snippet matches no constraint".into()));
    }
    let mut hits = Vec::new();
    let mut cursor = 0;
    for want in &statements {
        let found = region[cursor..]
            .iter()
            .position(|(_, l)| classify_line(l) == LineKind::Constraint && code_part(l) == *want);
        match found {
            Some(off) => {
                hits.push(region[cursor + off].0);
                cursor += off + 1;
            }
            None => {
                return Err(missing(format!(
                    "`{want}` is not in the editable constraint region"
                )))
            }
        }
    }
    Ok(hits)
}

fn push_snippet(out: &mut String, text: &str) {
    for line in snippet_lines(text) {
        out.push_str(line);
        out.push('\n');
    }
}

fn parse_error(e: ModelError) -> PatchViolation {
    let kind = match e {
        ModelError::Marker(_) => ViolationKind::MarkerCorruption,
        _ => ViolationKind::SnippetParseError,
    };
    PatchViolation::new(kind, e.to_string())
}

/// Applies `patch` to `source`: deletion first, then `ADD CONSTRAINT` before
/// the constraint end marker and `ADD DATA` before the data end marker.
/// Text outside the marker regions is left byte-identical.
pub fn apply_patch(source: &str, patch: &QueryPatch) -> Result<String, PatchViolation> {
    let original = parse_model(source).map_err(|e| {
        let mut v = parse_error(e);
        v.detail = format!("source does not parse: {}", v.detail);
        v
    })?;
    check_snippets(patch)?;

    let l = layout(source)?;
    let removed = match &patch.delete_constraint {
        Some(snippet) => {
            let region: Vec<(usize, &str)> = (l.con_begin + 1..l.con_end)
                .map(|i| (i, l.lines[i]))
                .collect();
            deletion_targets(&region, snippet)?
        }
        None => Vec::new(),
    };

    let mut out = String::with_capacity(source.len() + 256);
    for (i, line) in l.lines.iter().enumerate() {
        if i == l.data_end {
            if let Some(d) = &patch.add_data {
                push_snippet(&mut out, d);
            }
        }
        if i == l.con_end {
            if let Some(c) = &patch.add_constraint {
                push_snippet(&mut out, c);
            }
        }
        if !removed.contains(&i) {
            out.push_str(line);
        }
    }

    let updated = parse_model(&out).map_err(parse_error)?;
    if let Some(v) = validate_patch(&original, &updated).into_iter().next() {
        return Err(v);
    }
    Ok(out)
}

/// Violations of the fixed-variable assumption between two models.
pub fn validate_patch(original: &LinearModel, updated: &LinearModel) -> Vec<PatchViolation> {
    let mut out = Vec::new();
    let v = |d: String| PatchViolation::new(ViolationKind::NewVariableIntroduced, d);
    for var in &updated.variables {
        match original.variable(&var.name) {
            None => out.push(v(format!("new variable `{}`", var.name))),
            Some(o) if o.is_integer != var.is_integer => {
                out.push(v(format!("integrality of `{}` changed", var.name)))
            }
            Some(_) => {}
        }
    }
    for var in &original.variables {
        if updated.variable(&var.name).is_none() {
            out.push(v(format!("variable `{}` removed", var.name)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::solve_milp;
    use crate::AIRCRAFT_MODEL;

    fn objective(src: &str) -> f64 {
        solve_milp(&parse_model(src).unwrap(), 10_000)
            .objective
            .unwrap()
            .round()
    }

    #[test]
    fn figure_patch_parses() {
        let p =
            parse_patch(r#"{"ADD CONSTRAINT": "MaxTypeA: A <= 15\nMaxTypeB: B <= 30"}"#).unwrap();
        assert_eq!(
            p.add_constraint.as_deref(),
            Some("MaxTypeA: A <= 15\nMaxTypeB: B <= 30")
        );
        assert_eq!(p.keys(), vec![ADD_CONSTRAINT]);
        assert!(p.raw.starts_with('{'));
    }

    #[test]
    fn strict_document_rules() {
        let kind = |d: &str| parse_patch(d).unwrap_err().kind;
        assert_eq!(
            kind(r#"{"UPDATE OBJECTIVE": "x"}"#),
            ViolationKind::UnknownKey
        );
        assert_eq!(kind("{}"), ViolationKind::MalformedDocument);
        assert_eq!(kind(r#"["ADD DATA"]"#), ViolationKind::MalformedDocument);
        assert_eq!(kind(r#"{"ADD DATA": 3}"#), ViolationKind::MalformedDocument);
        assert_eq!(
            kind(r#"{"ADD DATA": "param a = 1", "ADD DATA": "param a = 2"}"#),
            ViolationKind::MalformedDocument
        );
        assert_eq!(
            kind(r#"{"ADD DATA": "  "}"#),
            ViolationKind::MalformedDocument
        );
        assert_eq!(kind("not json"), ViolationKind::MalformedDocument);
        let p = parse_patch(r#"{"ADD DATA": "param a = 1", "DELETE CONSTRAINT": ""}"#).unwrap();
        assert_eq!(p.keys(), vec![ADD_DATA]);
    }

    #[test]
    fn figure_patch_applies() {
        let p = QueryPatch::new(None, Some("MaxTypeA: A <= 15\nMaxTypeB: B <= 30"), None);
        let out = apply_patch(AIRCRAFT_MODEL, &p).unwrap();
        assert_eq!(parse_model(&out).unwrap().constraints.len(), 4);
        assert_eq!(objective(&out), 215000.0);
        assert!(out.contains("MaxTypeB: B <= 30\n# EOR CONSTRAINT END"));
    }

    #[test]
    fn add_data_shadows() {
        let p = QueryPatch::new(None, None, Some("param costA = 8000"));
        let out = apply_patch(AIRCRAFT_MODEL, &p).unwrap();
        assert!(out.contains("# EOR DATA BEGIN\nparam costA = 8000\n# EOR DATA END"));
        assert_eq!(objective(&out), 160000.0);
    }

    #[test]
    fn deletion_is_region_scoped() {
        let fixed = AIRCRAFT_MODEL.replace("subject to:\n", "subject to:\nFleet: A + B <= 60\n");
        parse_model(&fixed).unwrap();
        let p = QueryPatch::new(Some("Fleet: A + B <= 60"), None, None);
        assert_eq!(
            apply_patch(&fixed, &p).unwrap_err().kind,
            ViolationKind::DeleteTargetMissing
        );
    }

    #[test]
    fn deletion_tolerates_whitespace_and_comments() {
        let p = QueryPatch::new(Some("  Operational:  A + B <=   maxAircraft "), None, None);
        let out = apply_patch(AIRCRAFT_MODEL, &p).unwrap();
        assert!(parse_model(&out)
            .unwrap()
            .constraint("Operational")
            .is_none());
        assert!(out.contains("# The total number of aircraft cannot exceed"));

        let p = QueryPatch::new(
            Some("# The total number of aircraft cannot exceed the maximum allowed\nOperational: A + B <= maxAircraft"),
            None,
            None,
        );
        let out = apply_patch(AIRCRAFT_MODEL, &p).unwrap();
        assert!(!out.contains("cannot exceed"));

        let p = QueryPatch::new(
            Some("# removing the limit\nOperational: A + B <= maxAircraft"),
            None,
            None,
        );
        let out = apply_patch(AIRCRAFT_MODEL, &p).unwrap();
        assert!(parse_model(&out)
            .unwrap()
            .constraint("Operational")
            .is_none());
    }

    #[test]
    fn undeclared_variable_is_a_parse_error() {
        let p = QueryPatch::new(None, Some("MaxC: C <= 3"), None);
        let v = apply_patch(AIRCRAFT_MODEL, &p).unwrap_err();
        assert_eq!(v.kind, ViolationKind::SnippetParseError);
        assert!(v.detail.contains("`C`"));
    }

    #[test]
    fn snippets_are_statement_checked() {
        let kind = |p: QueryPatch| apply_patch(AIRCRAFT_MODEL, &p).unwrap_err().kind;
        assert_eq!(
            kind(QueryPatch::new(None, Some("param x = 1"), None)),
            ViolationKind::SnippetParseError
        );
        assert_eq!(
            kind(QueryPatch::new(None, None, Some("Cap: A <= 3"))),
            ViolationKind::SnippetParseError
        );
        assert_eq!(
            kind(QueryPatch::new(None, Some("import os"), None)),
            ViolationKind::SnippetParseError
        );
        assert_eq!(
            kind(QueryPatch::new(
                None,
                Some("# EOR CONSTRAINT END\nX: A <= 1"),
                None
            )),
            ViolationKind::MarkerCorruption
        );
    }

    #[test]
    fn variable_set_is_fixed() {
        let base = parse_model(AIRCRAFT_MODEL).unwrap();
        assert!(validate_patch(&base, &base).is_empty());
        let relaxed = parse_model(&AIRCRAFT_MODEL.replace("integers: A B", "integers: A")).unwrap();
        let v = validate_patch(&base, &relaxed);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::NewVariableIntroduced);
        let with_param = apply_patch(
            AIRCRAFT_MODEL,
            &QueryPatch::new(None, None, Some("param fuel = 3")),
        )
        .unwrap();
        assert!(validate_patch(&base, &parse_model(&with_param).unwrap()).is_empty());
    }

    #[test]
    fn add_then_delete_restores_semantics() {
        let snippet = "# cap on A\nMaxA: A <= 15";
        let added =
            apply_patch(AIRCRAFT_MODEL, &QueryPatch::new(None, Some(snippet), None)).unwrap();
        let back = apply_patch(&added, &QueryPatch::new(Some(snippet), None, None)).unwrap();
        assert_eq!(back, AIRCRAFT_MODEL);
    }

    #[test]
    fn region_extraction() {
        let p = QueryPatch::new(None, Some("MaxA: A <= 15"), Some("param demand = 12000"));
        let out = apply_patch(AIRCRAFT_MODEL, &p).unwrap();
        let (data, cons) = region_lines(&out).unwrap();
        assert_eq!(data, vec!["param demand = 12000"]);
        assert_eq!(cons.last().unwrap(), "MaxA: A <= 15");
    }

    #[test]
    fn document_round_trip() {
        let p = QueryPatch::new(
            Some("Operational: A + B <= maxAircraft"),
            Some("X: A <= 2"),
            None,
        );
        let q = parse_patch(&p.to_document()).unwrap();
        assert_eq!(q, p);
    }
}
