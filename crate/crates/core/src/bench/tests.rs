use super::*;
use crate::agent::{MockProvider, OutcomeStatus};
use crate::AIRCRAFT_MODEL;

const TRUTH: [f64; 10] = [
    160000.0, 200000.0, 184000.0, 220000.0, 215000.0, 226000.0, 170000.0, 210000.0, 240000.0,
    200000.0,
];

fn bundled() -> Vec<BenchmarkProblem> {
    parse_dataset(BUNDLED_DATASET).unwrap()
}

fn runner(mock: MockProvider) -> CommanderRunner<MockProvider> {
    CommanderRunner {
        config: AgentConfig::default(),
        provider: mock,
    }
}

fn scripted(overrides: &[&str]) -> MockProvider {
    let mut mock = MockProvider::from_json(BUNDLED_SCRIPT).unwrap();
    for o in overrides {
        mock.merge(serde_json::from_str(o).unwrap());
    }
    mock
}

#[test]
fn bundled_dataset_shape() {
    let ds = bundled();
    assert_eq!(ds.len(), 1);
    let p = &ds[0];
    assert_eq!(p.model_source, AIRCRAFT_MODEL);
    assert_eq!(p.base_truth, 200000.0);
    let labels: Vec<f64> = p.queries.iter().map(|q| q.truth_label).collect();
    assert_eq!(labels, TRUTH);
    assert!(p.queries[3].text.ends_with("10%?"));
    assert_eq!(p.session_name(4), "aircraft/q5");
}

#[test]
fn dataset_validation() {
    let mut p = bundled().remove(0);
    p.queries[0].expected_patch_keys = Some(vec!["UPDATE OBJECTIVE".into()]);
    assert!(matches!(
        p.validate(),
        Err(DatasetError::UnknownKey { query: 1, .. })
    ));
    p.queries[0].expected_patch_keys = None;
    p.model_source = "minimize: x\nsubject to:\nc: x + y >= 1\n".into();
    assert!(matches!(p.validate(), Err(DatasetError::Model { .. })));
    let twice = format!("[{BUNDLED_DATASET}, {BUNDLED_DATASET}]");
    assert!(matches!(
        parse_dataset(&twice),
        Err(DatasetError::DuplicateId(_))
    ));
    assert!(matches!(
        parse_dataset("{\"id\": 1}"),
        Err(DatasetError::Json(_))
    ));
}

#[test]
fn all_correct_script() {
    let eval = run_accuracy(&bundled(), &runner(scripted(&[])), 4);
    assert_eq!((eval.correct, eval.total), (10, 10));
    assert_eq!(eval.accuracy, 1.0);
    for (r, t) in eval.results.iter().zip(TRUTH) {
        assert_eq!(r.objective, Some(t), "{}", r.session);
        assert_eq!(r.category, None);
    }
    assert!(eval.category_counts.values().all(|n| *n == 0));
}

#[test]
fn wrong_bound_is_logic_error() {
    let fault = include_str!("../../data/faults/wrong_bound.json");
    let eval = run_accuracy(&bundled(), &runner(scripted(&[fault])), 2);
    assert_eq!(eval.correct, 9);
    assert_eq!(eval.accuracy, 0.9);
    let r = eval.result("aircraft/q5").unwrap();
    assert_eq!(r.status, QueryStatus::WrongResult);
    assert_eq!(r.objective, Some(220000.0));
    assert_eq!(r.category, Some(FailureCategory::LogicError));
    assert_eq!(eval.category_counts[&FailureCategory::LogicError], 1);
}

#[test]
fn missing_change_is_incomplete() {
    let fault = include_str!("../../data/faults/missing_change.json");
    let eval = run_accuracy(&bundled(), &runner(scripted(&[fault])), 1);
    let r = eval.result("aircraft/q3").unwrap();
    assert_eq!(r.status, QueryStatus::WrongResult);
    assert_eq!(r.category, Some(FailureCategory::IncompleteModel));
}

#[test]
fn malformed_patch_fails_as_format() {
    let fault = include_str!("../../data/faults/malformed.json");
    let eval = run_accuracy(&bundled(), &runner(scripted(&[fault])), 3);
    let r = eval.result("aircraft/q1").unwrap();
    assert_eq!(r.status, QueryStatus::Failed);
    assert_eq!(r.category, Some(FailureCategory::PatchFormat));
    assert_eq!(r.outcome.as_ref().unwrap().retry_count, 3);
    assert_eq!(eval.status_count(QueryStatus::Correct), 9);
}

#[test]
fn unannotated_queries_fall_back_to_logic_error() {
    let fault = include_str!("../../data/faults/missing_change.json");
    let mut ds = bundled();
    ds[0].queries[2].expected_patch_keys = None;
    let eval = run_accuracy(&ds, &runner(scripted(&[fault])), 1);
    assert_eq!(
        eval.result("aircraft/q3").unwrap().category,
        Some(FailureCategory::LogicError)
    );
}

#[test]
fn unparseable_model_fails_every_query() {
    let mut ds = bundled();
    ds[0].model_source = "minimize: x +".into();
    let eval = run_accuracy(&ds, &runner(scripted(&[])), 2);
    assert_eq!(eval.total, 10);
    assert!(eval
        .results
        .iter()
        .all(|r| r.category == Some(FailureCategory::ParseError)));
}

#[test]
fn closures_are_runners() {
    let mock = scripted(&[]);
    let f = |m: &LinearModel, q: &str, s: &str| {
        let mut o = commander_run_observed(m, q, s, &AgentConfig::default(), &mock, &mut |_| {});
        o.status = OutcomeStatus::Failed;
        o.failure = Some(crate::agent::SessionFailure {
            category: FailureCategory::SolveError,
            detail: "forced".into(),
            provider_error: false,
        });
        o
    };
    let eval = run_accuracy(&bundled(), &f, 2);
    assert_eq!(eval.category_counts[&FailureCategory::SolveError], 10);
}

#[test]
fn judge_document_parsing() {
    let three = r#"{"whatif":[9,9,9],"baseline":[1,8,6],"Standard":[0,7,5]}"#;
    let s = parse_judge_response(three, &["whatif", "baseline", "Standard"]).unwrap();
    assert_eq!(
        s.0["baseline"],
        MethodScore {
            ec: 1,
            er: 8,
            overall: 6
        }
    );
    let one = parse_judge_response("```json\n{\"whatif\": [7, 8, 7]}\n```", &["whatif"]).unwrap();
    assert_eq!(one.0.len(), 1);
    assert!(matches!(
        parse_judge_response(r#"{"whatif":[11,9,9]}"#, &["whatif"]),
        Err(JudgeError::BadScores { .. })
    ));
    assert!(matches!(
        parse_judge_response(r#"{"whatif":[9,9]}"#, &["whatif"]),
        Err(JudgeError::BadScores { .. })
    ));
    assert!(matches!(
        parse_judge_response(r#"{"whatif":[9,9,8.5]}"#, &["whatif"]),
        Err(JudgeError::BadScores { .. })
    ));
    assert!(matches!(
        parse_judge_response(r#"{"whatif":[9,9,9]}"#, &["whatif", "Standard"]),
        Err(JudgeError::LabelMismatch { .. })
    ));
    assert!(matches!(
        parse_judge_response("Scores: whatif 9/9/9", &["whatif"]),
        Err(JudgeError::Unparseable(_))
    ));
}

#[test]
fn judge_prompt_lists_labels() {
    let ex = indexmap::IndexMap::from([
        ("whatif".to_string(), "first\nsecond".to_string()),
        ("Standard".to_string(), "plain".to_string()),
    ]);
    let p = render_judge_prompt("Why?", &ex);
    assert!(p.contains("provided by two different models: `whatif` and `Standard`."));
    assert!(p.contains("    - Explanations by whatif: first\n      second"));
    assert!(p.contains("User Query: Why?"));
    assert!(!p.contains('{') || !p.contains("{method_list}"));
}

#[test]
fn judge_means_echo_fixed_scores() {
    let mock = scripted(&[]);
    let eval = run_accuracy(&bundled(), &runner(mock.clone()), 4);
    let summary = judge_run(&eval, &mock, "whatif");
    assert_eq!(summary.judged, 10);
    assert!(summary.failures.is_empty());
    let m = summary.means["whatif"];
    assert_eq!((m.ec, m.er, m.overall, m.count), (9.0, 8.0, 9.0, 10));
}

#[test]
fn judge_skips_incorrect_and_records_failures() {
    let fault = include_str!("../../data/faults/wrong_bound.json");
    let mut mock = scripted(&[fault]);
    mock.insert("aircraft/q2", "judge", r#"{"whatif": [12, 9, 9]}"#);
    let eval = run_accuracy(&bundled(), &runner(mock.clone()), 4);
    let summary = judge_run(&eval, &mock, "whatif");
    assert_eq!(summary.skipped, 1);
    assert_eq!(summary.judged, 8);
    assert_eq!(summary.failures.len(), 1);
    assert_eq!(summary.failures[0].session, "aircraft/q2");
}

#[test]
fn report_table() {
    let mock = scripted(&[]);
    let eval = run_accuracy(&bundled(), &runner(mock.clone()), 4);
    let judge = Some(judge_run(&eval, &mock, "whatif"));
    let table = BenchReport { eval, judge }.to_table();
    assert!(table.starts_with("accuracy 10/10 (100.00%)\n"));
    assert!(table.contains("aircraft/q5   correct             215000        215000  -"));
    assert!(table.contains("failures  patch-format 0  logic-error 0"));
    assert!(table.contains("whatif    9.00    8.00     9.00"));
}
